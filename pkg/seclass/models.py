"""
SecClass - Linear Models
Multinomial Naive Bayes, one-vs-one logistic regression fitted by
nonlinear conjugate gradient, one-vs-rest linear SVM trained by
subgradient descent, and validation-set grid search.

Every trainer takes a CSR matrix (or a list of SparseVector) and a
list of SecurityClass labels; every trainer is deterministic given its
inputs and seed.

MIT License - SecClass contributors, 2026
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import expit
from sklearn.naive_bayes import MultinomialNB

from seclass.corpus import SecurityClass
from seclass.errors import (
    AllTrainingsFailed,
    ConfigError,
    DataError,
    DimensionMismatch,
    EmptyValidation,
    MethodError,
    NonFiniteLoss,
    SingleClass,
)
from seclass.features import (
    SparseVector,
    VectorizerConfig,
    Vocabulary,
    as_matrix,
    build_vocabulary,
    vectorize_many,
)
from seclass.metrics import macro_f1_score

logger = logging.getLogger(__name__)

MODEL_SCHEMA = "seclass/model-v1"
MODEL_KINDS = ("naive_bayes", "logreg_ovo", "linear_svm")

# Grid axis holding each kind's own hyperparameter.
HYPERPARAMETER_AXIS = {
    "naive_bayes": "nb_alpha",
    "logreg_ovo": "logreg_strength",
    "linear_svm": "svm_cost",
}

ClassWeights = Optional[Union[str, Mapping[SecurityClass, float]]]


@dataclass(eq=False)
class TrainedClassifier:
    """
    A fitted linear model.

    weights has one row per class (naive_bayes, linear_svm) or per
    class pair (logreg_ovo); a constant predictor has no rows.
    """
    kind: str
    classes: Tuple[SecurityClass, ...]
    weights: np.ndarray
    bias: np.ndarray
    pairs: Tuple[Tuple[SecurityClass, SecurityClass], ...] = ()
    class_weights: Dict[SecurityClass, float] = field(default_factory=dict)
    vectorizer_config: Optional[VectorizerConfig] = None
    vocabulary: Optional[Vocabulary] = None
    seed: int = 0
    constant: Optional[SecurityClass] = None
    hyperparameters: Dict[str, Any] = field(default_factory=dict)
    grid_provenance: List[Dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"Unknown model kind {self.kind!r}")
        if not self.classes:
            raise DataError("A classifier needs at least one class")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.vocabulary is not None and self.weights.shape[1] != self.vocabulary.dim:
            raise DimensionMismatch(
                f"Weights have {self.weights.shape[1]} columns, vocabulary has {self.vocabulary.dim} terms"
            )

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def decision_function(self, X) -> np.ndarray:
        X = as_matrix(X, self.dim)
        return np.asarray(X @ self.weights.T) + self.bias

    def predict_indices(self, X) -> np.ndarray:
        """Predicted class values as an int array. A constant model accepts any width."""
        if self.constant is not None:
            return np.full(as_matrix(X).shape[0], int(self.constant), dtype=np.int64)
        X = as_matrix(X, self.dim)
        scores = self.decision_function(X)
        if self.kind == "logreg_ovo":
            scores = _pairwise_votes(scores, self.classes, self.pairs)
        order = np.array([int(c) for c in self.classes], dtype=np.int64)
        return order[_argmax_prefer_last(scores)]

    def to_dict(self) -> dict:
        return {
            "schema": MODEL_SCHEMA,
            "kind": self.kind,
            "classes": [c.name for c in self.classes],
            "pairs": [[a.name, b.name] for a, b in self.pairs],
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "dim": self.dim,
            "class_weights": {c.name: w for c, w in sorted(self.class_weights.items())},
            "vectorizer_config": self.vectorizer_config.to_dict() if self.vectorizer_config else None,
            "vocabulary": self.vocabulary.to_dict() if self.vocabulary else None,
            "seed": self.seed,
            "constant": self.constant.name if self.constant is not None else None,
            "hyperparameters": dict(self.hyperparameters),
            "grid_provenance": list(self.grid_provenance),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrainedClassifier":
        if data.get("schema") != MODEL_SCHEMA:
            raise DataError(f"Unsupported model schema {data.get('schema')!r}")
        dim = int(data["dim"])
        weights = np.array(data["weights"], dtype=np.float64).reshape(-1, dim) if dim else np.zeros((0, 0))
        return cls(
            kind=data["kind"],
            classes=tuple(SecurityClass.parse(c) for c in data["classes"]),
            weights=weights,
            bias=np.array(data["bias"], dtype=np.float64),
            pairs=tuple((SecurityClass.parse(a), SecurityClass.parse(b)) for a, b in data["pairs"]),
            class_weights={SecurityClass.parse(c): float(w) for c, w in data["class_weights"].items()},
            vectorizer_config=(
                VectorizerConfig.from_dict(data["vectorizer_config"]) if data.get("vectorizer_config") else None
            ),
            vocabulary=Vocabulary.from_dict(data["vocabulary"]) if data.get("vocabulary") else None,
            seed=int(data.get("seed", 0)),
            constant=SecurityClass.parse(data["constant"]) if data.get("constant") else None,
            hyperparameters=dict(data.get("hyperparameters", {})),
            grid_provenance=list(data.get("grid_provenance", [])),
        )


def _argmax_prefer_last(scores: np.ndarray) -> np.ndarray:
    """Row argmax; ties go to the highest column (the higher class)."""
    m = scores.shape[1]
    return m - 1 - np.argmax(scores[:, ::-1], axis=1)


def _pairwise_votes(decisions: np.ndarray, classes, pairs) -> np.ndarray:
    position = {c: i for i, c in enumerate(classes)}
    votes = np.zeros((decisions.shape[0], len(classes)), dtype=np.float64)
    for p, (a, b) in enumerate(pairs):
        wins_b = decisions[:, p] >= 0
        votes[wins_b, position[b]] += 1
        votes[~wins_b, position[a]] += 1
    return votes


def _prepare(X, y: Sequence[SecurityClass]) -> Tuple[sp.csr_matrix, np.ndarray]:
    X = as_matrix(X)
    labels = np.array([int(SecurityClass(label)) for label in y], dtype=np.int64)
    if X.shape[0] != labels.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} vectors but {labels.shape[0]} labels")
    if labels.shape[0] < 1:
        raise DataError("Cannot train on an empty set")
    return X, labels


def _present_classes(labels: np.ndarray) -> Tuple[SecurityClass, ...]:
    return tuple(SecurityClass(int(c)) for c in np.unique(labels))


def constant_classifier(kind: str, cls: SecurityClass, dim: int, seed: int, **extra) -> TrainedClassifier:
    return TrainedClassifier(
        kind=kind,
        classes=(cls,),
        weights=np.zeros((0, dim)),
        bias=np.zeros(0),
        seed=seed,
        constant=cls,
        **extra,
    )


def balanced_class_weights(y: Sequence[SecurityClass]) -> Dict[SecurityClass, float]:
    """weight(c) = n_samples / (n_classes * n_c) over the classes present."""
    labels = [SecurityClass(label) for label in y]
    if not labels:
        return {}
    present = sorted(set(labels))
    n, k = len(labels), len(present)
    return {c: n / (k * labels.count(c)) for c in present}


def _resolve_class_weights(class_weights: ClassWeights, y) -> Dict[SecurityClass, float]:
    if class_weights is None:
        return {}
    if class_weights == "balanced":
        return balanced_class_weights(y)
    if isinstance(class_weights, str):
        raise ConfigError(f"Unknown class weighting {class_weights!r}")
    return {SecurityClass(c): float(w) for c, w in class_weights.items()}


def _sample_weights(labels: np.ndarray, weights: Mapping[SecurityClass, float]) -> np.ndarray:
    return np.array([weights.get(SecurityClass(int(c)), 1.0) for c in labels], dtype=np.float64)


# -- Naive Bayes ---------------------------------------------------------------

def train_naive_bayes(X, y: Sequence[SecurityClass], alpha: float = 1.0, seed: int = 0) -> TrainedClassifier:
    """
    Multinomial Naive Bayes with additive smoothing alpha.

    Class priors are the empirical training frequencies; class weights
    are not applied.
    """
    if not alpha > 0:
        raise ConfigError(f"NB smoothing must be > 0, got {alpha}")
    X, labels = _prepare(X, y)
    classes = _present_classes(labels)
    if len(classes) == 1:
        return constant_classifier("naive_bayes", classes[0], X.shape[1], seed, hyperparameters={"nb_alpha": alpha})

    nb = MultinomialNB(alpha=alpha, fit_prior=True, force_alpha=True).fit(X, labels)
    return TrainedClassifier(
        kind="naive_bayes",
        classes=classes,
        weights=nb.feature_log_prob_,
        bias=nb.class_log_prior_,
        seed=seed,
        hyperparameters={"nb_alpha": alpha},
    )


# -- Logistic regression -------------------------------------------------------

def logistic_loss_and_grad(
    params: np.ndarray,
    X: sp.csr_matrix,
    targets: np.ndarray,
    sample_weight: np.ndarray,
    strength: float,
) -> Tuple[float, np.ndarray]:
    """
    Weighted negative log-likelihood with an L2 penalty on the weights.

    params is [w, b]; targets are +1 / -1; the bias is not penalized.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    margin = -targets * z
    loss = float(np.sum(sample_weight * np.logaddexp(0.0, margin)) + 0.5 * strength * w.dot(w))
    g = -sample_weight * targets * expit(margin)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ g + strength * w
    grad[-1] = g.sum()
    return loss, grad


def train_logreg_cg(
    X, y: Sequence[SecurityClass], strength: float = 1e-2,
    class_weights: ClassWeights = None, seed: int = 0,
    max_iter: int = 500, tol: float = 1e-6,
) -> TrainedClassifier:
    """
    One-vs-one L2 logistic regression, one binary model per class pair
    (a < b, target +1 for b), each fitted by nonlinear conjugate
    gradient until the gradient norm falls below tol.

    Raises:
        SingleClass: fewer than two classes in y.
        NonFiniteLoss: the objective became NaN or infinite.
    """
    if strength < 0:
        raise ConfigError(f"Regularization strength must be >= 0, got {strength}")
    X, labels = _prepare(X, y)
    classes = _present_classes(labels)
    if len(classes) < 2:
        raise SingleClass(f"Logistic regression needs two classes, got {[c.name for c in classes]}")
    weights_by_class = _resolve_class_weights(class_weights, [SecurityClass(int(c)) for c in labels])

    pairs = tuple(itertools.combinations(classes, 2))
    d = X.shape[1]
    W = np.zeros((len(pairs), d))
    B = np.zeros(len(pairs))
    for p, (a, b) in enumerate(pairs):
        mask = (labels == int(a)) | (labels == int(b))
        Xp = X[mask]
        targets = np.where(labels[mask] == int(b), 1.0, -1.0)
        sw = _sample_weights(labels[mask], weights_by_class)

        def objective(params):
            loss, grad = logistic_loss_and_grad(params, Xp, targets, sw, strength)
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise NonFiniteLoss(f"Non-finite logistic loss for pair {a.name}/{b.name}")
            return loss, grad

        result = minimize(
            objective, np.zeros(d + 1), jac=True, method="CG",
            options={"gtol": tol, "maxiter": max_iter, "norm": 2},
        )
        if not result.success:
            logger.debug("CG for pair %s/%s stopped: %s", a.name, b.name, result.message)
        W[p], B[p] = result.x[:-1], result.x[-1]

    return TrainedClassifier(
        kind="logreg_ovo",
        classes=classes,
        weights=W,
        bias=B,
        pairs=pairs,
        class_weights=weights_by_class,
        seed=seed,
        hyperparameters={"logreg_strength": strength},
    )


# -- Linear SVM ----------------------------------------------------------------

def svm_objective(
    w: np.ndarray, X: sp.csr_matrix, targets: np.ndarray, sample_weight: np.ndarray, lam: float,
) -> float:
    """lam/2 |w|^2 + mean(s_i * max(0, 1 - t_i w.x_i)); X carries the bias column."""
    hinge = np.maximum(0.0, 1.0 - targets * (X @ w))
    return float(0.5 * lam * w.dot(w) + np.sum(sample_weight * hinge) / X.shape[0])


def _with_bias_column(X: sp.csr_matrix) -> sp.csr_matrix:
    return sp.hstack([X, np.ones((X.shape[0], 1))], format="csr")


def _pegasos(
    Xa: sp.csr_matrix, targets: np.ndarray, sw: np.ndarray, lam: float,
    epochs: int, batch_size: Optional[int], rng: np.random.Generator,
) -> np.ndarray:
    n, d = Xa.shape
    w = np.zeros(d)
    best_w, best_obj = w.copy(), svm_objective(w, Xa, targets, sw, lam)
    # The optimum lies inside this ball: lam/2 |w*|^2 <= objective(0).
    radius = np.sqrt(2.0 * best_obj / lam) if best_obj > 0 else 0.0
    size = n if batch_size is None else max(1, min(batch_size, n))
    t = 0
    for _ in range(epochs):
        order = np.arange(n) if size == n else rng.permutation(n)
        for start in range(0, n, size):
            batch = order[start:start + size]
            t += 1
            eta = 1.0 / (lam * t)
            Xb = Xa[batch]
            active = targets[batch] * (Xb @ w) < 1.0
            step = Xb[active].T @ (sw[batch][active] * targets[batch][active])
            w = (1.0 - eta * lam) * w + (eta / len(batch)) * step
            norm = np.linalg.norm(w)
            if norm > radius > 0:
                w *= radius / norm
        obj = svm_objective(w, Xa, targets, sw, lam)
        if not np.isfinite(obj):
            raise NonFiniteLoss("Non-finite SVM objective")
        if obj < best_obj:
            best_w, best_obj = w.copy(), obj
    return best_w


def train_linear_svm(
    X, y: Sequence[SecurityClass], cost: float = 1.0,
    class_weights: ClassWeights = None, seed: int = 0,
    epochs: int = 100, batch_size: Optional[int] = 64,
) -> TrainedClassifier:
    """
    One-vs-rest L2-regularized hinge-loss models.

    Each binary model minimizes lam/2 |w|^2 + (1/n) sum s_i hinge_i with
    lam = 1 / (cost * n), by subgradient steps of size 1/(lam t) over a
    seeded shuffle, for a fixed number of epochs. The best end-of-epoch
    iterate (the zero vector included) is kept. A single-class training
    set yields a constant predictor.
    """
    if not cost > 0:
        raise ConfigError(f"SVM cost must be > 0, got {cost}")
    X, labels = _prepare(X, y)
    classes = _present_classes(labels)
    weights_by_class = _resolve_class_weights(class_weights, [SecurityClass(int(c)) for c in labels])
    hyper = {"svm_cost": cost}
    if len(classes) == 1:
        return constant_classifier("linear_svm", classes[0], X.shape[1], seed,
                         class_weights=weights_by_class, hyperparameters=hyper)

    n = X.shape[0]
    lam = 1.0 / (cost * n)
    Xa = _with_bias_column(X)
    sw = _sample_weights(labels, weights_by_class)
    W = np.zeros((len(classes), X.shape[1]))
    B = np.zeros(len(classes))
    for row, c in enumerate(classes):
        targets = np.where(labels == int(c), 1.0, -1.0)
        w = _pegasos(Xa, targets, sw, lam, epochs, batch_size, np.random.default_rng([seed, row]))
        W[row], B[row] = w[:-1], w[-1]

    return TrainedClassifier(
        kind="linear_svm",
        classes=classes,
        weights=W,
        bias=B,
        class_weights=weights_by_class,
        seed=seed,
        hyperparameters=hyper,
    )


TRAINERS: Dict[str, Callable[..., TrainedClassifier]] = {
    "naive_bayes": lambda X, y, h, cw, seed: train_naive_bayes(X, y, alpha=h, seed=seed),
    "logreg_ovo": lambda X, y, h, cw, seed: train_logreg_cg(X, y, strength=h, class_weights=cw, seed=seed),
    "linear_svm": lambda X, y, h, cw, seed: train_linear_svm(X, y, cost=h, class_weights=cw, seed=seed),
}


def train(kind: str, X, y, hyperparameter: float, class_weights: ClassWeights = None,
          seed: int = 0) -> TrainedClassifier:
    if kind not in TRAINERS:
        raise ConfigError(f"Unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return TRAINERS[kind](X, y, hyperparameter, class_weights, seed)


# -- Prediction ----------------------------------------------------------------

def predict(model: TrainedClassifier, x: SparseVector) -> SecurityClass:
    if model.is_constant:
        return model.constant
    if x.dim != model.dim:
        raise DimensionMismatch(f"Vector has {x.dim} dimensions, model expects {model.dim}")
    return SecurityClass(int(model.predict_indices(x.to_csr())[0]))


def predict_many(model: TrainedClassifier, X) -> List[SecurityClass]:
    return [SecurityClass(int(c)) for c in model.predict_indices(X)]


def predict_texts(model: TrainedClassifier, texts: Sequence[str]) -> List[SecurityClass]:
    """Vectorize texts in the model's own feature space, then predict."""
    if model.is_constant:
        return [model.constant] * len(texts)
    if model.vocabulary is None or model.vectorizer_config is None:
        raise ConfigError("Model carries no vocabulary; vectorize the texts yourself")
    if not texts:
        return []
    return predict_many(model, vectorize_many(texts, model.vocabulary, model.vectorizer_config))


# -- Grid search ---------------------------------------------------------------

@dataclass(frozen=True)
class GridPoint:
    max_features: Optional[int]
    normalization: str
    hyperparameter: float
    axis: str

    def as_dict(self) -> Dict[str, Any]:
        return {
            "max_features": self.max_features,
            "normalization": self.normalization,
            self.axis: self.hyperparameter,
        }


@dataclass(frozen=True)
class GridSpec:
    """Candidate values per axis. None in max_features means unlimited."""
    svm_cost: Tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    logreg_strength: Tuple[float, ...] = (1e-4, 1e-2, 1.0)
    nb_alpha: Tuple[float, ...] = (0.1, 1.0)
    max_features: Tuple[Optional[int], ...] = (1000, 5000, None)
    normalization: Tuple[str, ...] = ("none", "l1", "l2")

    def __post_init__(self):
        for name in ("svm_cost", "logreg_strength", "nb_alpha", "max_features", "normalization"):
            values = tuple(getattr(self, name))
            object.__setattr__(self, name, values)
            if not values:
                raise ConfigError(f"Grid axis {name} is empty")
        for name in ("svm_cost", "nb_alpha"):
            if any(not (np.isfinite(v) and v > 0) for v in getattr(self, name)):
                raise ConfigError(f"Grid axis {name} needs finite positive values")
        if any(not (np.isfinite(v) and v >= 0) for v in self.logreg_strength):
            raise ConfigError("Grid axis logreg_strength needs finite non-negative values")
        if any(m is not None and int(m) < 1 for m in self.max_features):
            raise ConfigError("Grid axis max_features needs values >= 1 or None")

    def points(self, kind: str) -> List[GridPoint]:
        """Lexicographic enumeration over (max_features, normalization, hyperparameter)."""
        if kind not in HYPERPARAMETER_AXIS:
            raise ConfigError(f"Unknown model kind {kind!r}")
        axis = HYPERPARAMETER_AXIS[kind]
        return [
            GridPoint(mf, norm, float(h), axis)
            for mf, norm, h in itertools.product(self.max_features, self.normalization, getattr(self, axis))
        ]

    def to_dict(self) -> dict:
        return {
            "svm_cost": list(self.svm_cost),
            "logreg_strength": list(self.logreg_strength),
            "nb_alpha": list(self.nb_alpha),
            "max_features": [m if m is not None else "all" for m in self.max_features],
            "normalization": list(self.normalization),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "GridSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown grid keys: {sorted(unknown)}")
        values = dict(data)
        if "max_features" in values:
            values["max_features"] = tuple(
                None if m in (None, "all") else int(m) for m in values["max_features"]
            )
        return cls(**{k: tuple(v) for k, v in values.items()})


class GridResult(NamedTuple):
    best_point: GridPoint
    best_model: TrainedClassifier


def _texts_and_labels(items) -> Tuple[List[str], List[SecurityClass]]:
    return [item.text for item in items], [SecurityClass(item.label) for item in items]


def fit_grid_point(
    train_items: Sequence,
    point: GridPoint,
    kind: str,
    base_config: VectorizerConfig,
    seed: int = 0,
    class_weights: ClassWeights = "balanced",
    vocabulary: Optional[Vocabulary] = None,
) -> TrainedClassifier:
    """Build the point's feature space on train_items and train one model."""
    texts, labels = _texts_and_labels(train_items)
    config = base_config.with_changes(max_features=point.max_features, normalization=point.normalization)
    vocab = vocabulary or build_vocabulary(texts, config)
    model = train(kind, vectorize_many(texts, vocab, config), labels, point.hyperparameter, class_weights, seed)
    model.vectorizer_config = config
    model.vocabulary = vocab
    model.hyperparameters = point.as_dict()
    return model


def grid_search(
    train: Sequence,
    validation: Sequence,
    grid: GridSpec,
    model_kind: str,
    base_config: Optional[VectorizerConfig] = None,
    metric: Callable[[Sequence[SecurityClass], Sequence[SecurityClass]], float] = macro_f1_score,
    seed: int = 0,
    class_weights: ClassWeights = "balanced",
    refit_on_validation: bool = False,
) -> GridResult:
    """
    Train one model per grid point on train, score each on validation
    and return the best. Ties keep the earlier point.

    train and validation hold items with .text and .label. Each point's
    score is recorded in best_model.grid_provenance. With
    refit_on_validation the winning configuration is retrained on
    train + validation.

    Raises:
        EmptyValidation: validation is empty.
        AllTrainingsFailed: no grid point produced a model.
    """
    if not validation:
        raise EmptyValidation("Grid search needs a non-empty validation set")
    base_config = base_config or VectorizerConfig()
    texts, labels = _texts_and_labels(train)
    val_texts, val_labels = _texts_and_labels(validation)

    vocabularies: Dict[Optional[int], Vocabulary] = {}
    trials: List[Dict[str, Any]] = []
    best: Optional[Tuple[float, GridPoint, TrainedClassifier]] = None

    for point in grid.points(model_kind):
        record: Dict[str, Any] = point.as_dict()
        try:
            if point.max_features not in vocabularies:
                vocabularies[point.max_features] = build_vocabulary(
                    texts, base_config.with_changes(max_features=point.max_features)
                )
            model = fit_grid_point(
                train, point, model_kind, base_config, seed, class_weights,
                vocabulary=vocabularies[point.max_features],
            )
            score = float(metric(val_labels, predict_texts(model, val_texts)))
        except (MethodError, DataError) as e:
            logger.warning("Grid point %s failed: %s", point.as_dict(), e)
            record.update(status="failed", error=type(e).__name__)
            trials.append(record)
            continue
        record.update(status="ok", score=score)
        trials.append(record)
        if best is None or score > best[0]:
            best = (score, point, model)

    if best is None:
        raise AllTrainingsFailed(f"All {len(trials)} grid points failed for {model_kind}")

    score, point, model = best
    if refit_on_validation:
        model = fit_grid_point(list(train) + list(validation), point, model_kind, base_config,
                               seed, class_weights)
    model.grid_provenance = trials
    logger.info("Grid search for %s picked %s (validation score %.4f over %d points)",
                model_kind, point.as_dict(), score, len(trials))
    return GridResult(point, model)
