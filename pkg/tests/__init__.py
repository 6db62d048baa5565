# SecClass Test Suite
