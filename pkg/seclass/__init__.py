"""
SecClass - Paragraph Security Classification
Classifies diplomatic-cable paragraphs as U / C / S, either with one
global classifier, with topic-purity pruning of the training set, or
with per-cluster classifiers routed by text similarity.

Released under MIT License.
"""

__version__ = "0.1.0"

from seclass.corpus import DataSplit, Document, Paragraph, ParagraphId, SecurityClass
from seclass.errors import ConfigError, DataError, MethodError, SecClassError
from seclass.features import VectorizerConfig, Vocabulary
from seclass.metrics import EvalReport
from seclass.models import GridSpec, TrainedClassifier
from seclass.acess import AcessConfig, AcessEngine
from seclass.topics import PruneConfig

__all__ = [
    "SecurityClass",
    "ParagraphId",
    "Paragraph",
    "Document",
    "DataSplit",
    "SecClassError",
    "ConfigError",
    "DataError",
    "MethodError",
    "VectorizerConfig",
    "Vocabulary",
    "EvalReport",
    "GridSpec",
    "TrainedClassifier",
    "AcessConfig",
    "AcessEngine",
    "PruneConfig",
]
