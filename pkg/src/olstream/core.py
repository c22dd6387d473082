"""Domain types and the contracts shared by streams, learners, query
strategies, and drift detectors.

Every learner in this package follows the incremental-estimator protocol:
``fit`` performs the one-off pretraining on a labeled batch, ``partial_fit``
consumes a single labeled instance, ``predict``/``predict_proba`` are pure
reads.  Learners are scikit-learn estimators (``get_params``/``set_params``
work, ``sklearn.clone`` produces fresh unfitted copies), so they compose with
the wider ecosystem.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import ClassVar, Optional, Union

import numpy as np
from sklearn.base import BaseEstimator

CLASSIFICATION = "classification"
REGRESSION = "regression"

# Three-level detector output, shared with the drift module.
STABLE = "stable"
WARNING = "warning"
DRIFT = "drift"

Label = Union[int, float]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class OlstreamError(Exception):
    """Base class for all package errors."""


class SchemaError(OlstreamError):
    """Input does not match the stream schema (shape, range, finiteness)."""


class MissingLabelError(OlstreamError):
    """A training call received an unlabeled instance."""


class InvalidPretrainError(OlstreamError):
    """The pretraining batch is empty or the stream ended before it filled."""


class NotFittedError(OlstreamError):
    """predict/partial_fit called before fit."""


class UnsupportedError(OlstreamError):
    """Operation not available for this learner (e.g. proba on a regressor)."""


class NumericError(OlstreamError):
    """A learner update produced a non-finite value; the run must abort."""


class InvalidArgumentError(OlstreamError):
    """An argument violates a stated domain constraint."""


class ParseError(OlstreamError):
    """A CSV row failed to parse; carries the 1-based data row number."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class RegistryError(OlstreamError):
    """An unknown component name was requested from a registry."""


class ConfigError(OlstreamError):
    """An experiment configuration is malformed or violates a constraint."""


class EmptySeriesError(OlstreamError):
    """A metric or plot operation received no data points."""


# ---------------------------------------------------------------------------
# Reproducible randomness
# ---------------------------------------------------------------------------
#
# All randomness flows from numpy's PCG64 generator.  Sub-streams for
# individual components (one learner, one stream, one ensemble member) are
# derived by hashing the base seed together with the component's name, so
# concurrent jobs never share or race a generator.


def derive_seed(base_seed: int, *parts: Union[str, int]) -> int:
    """Derive a stable 64-bit sub-seed from a base seed and component names.

    The derivation is a SHA-256 hash, so it is identical on every platform
    and insensitive to hash randomization.
    """
    text = ":".join([str(int(base_seed))] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int) -> np.random.Generator:
    """Create the package-wide PCG64 generator for a seed."""
    return np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------


def check_features(x, n_features: Optional[int] = None) -> np.ndarray:
    """Validate a single feature vector: 1-D, finite, optionally fixed length."""
    if isinstance(x, np.ndarray) and x.dtype == np.float64:
        arr = x
    else:
        arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise SchemaError(f"expected a 1-D feature vector, got shape {arr.shape}")
    if n_features is not None and arr.shape[0] != n_features:
        raise SchemaError(f"expected {n_features} features, got {arr.shape[0]}")
    # Plain float checks beat numpy reductions for the short vectors that
    # dominate per-instance updates.
    if arr.shape[0] <= 16:
        for v in arr.tolist():
            if not math.isfinite(v):
                raise SchemaError("feature vector contains NaN or Inf")
    elif not np.all(np.isfinite(arr)):
        raise SchemaError("feature vector contains NaN or Inf")
    return arr


def check_matrix(X, n_features: Optional[int] = None) -> np.ndarray:
    """Validate a batch feature matrix: 2-D, finite, optionally fixed width."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise SchemaError(f"expected a 2-D feature matrix, got shape {arr.shape}")
    if n_features is not None and arr.shape[1] != n_features:
        raise SchemaError(f"expected {n_features} features, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError("feature matrix contains NaN or Inf")
    return arr


def check_class_label(y, n_classes: int) -> int:
    if y is None:
        raise MissingLabelError("instance has no label")
    label = int(y)
    if label != y or not (0 <= label < n_classes):
        raise SchemaError(f"label {y!r} is not a class index in [0, {n_classes})")
    return label


def check_target(y) -> float:
    if y is None:
        raise MissingLabelError("instance has no target value")
    value = float(y)
    if not np.isfinite(value):
        raise SchemaError(f"target {y!r} is not finite")
    return value


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StreamSchema:
    """Describes what a stream emits: feature layout and label regime."""

    n_features: int
    feature_names: tuple
    label_kind: str
    n_classes: int = 0
    class_names: tuple = ()

    def __post_init__(self):
        if self.n_features < 1:
            raise SchemaError("n_features must be positive")
        if len(self.feature_names) != self.n_features:
            raise SchemaError("feature_names length must equal n_features")
        if self.label_kind not in (CLASSIFICATION, REGRESSION):
            raise SchemaError(f"unknown label kind {self.label_kind!r}")
        if self.label_kind == CLASSIFICATION:
            if self.n_classes < 2:
                raise SchemaError("classification requires n_classes >= 2")
            if len(self.class_names) != self.n_classes:
                raise SchemaError("class_names length must equal n_classes")

    @classmethod
    def classification(cls, n_features, n_classes, feature_names=None, class_names=None):
        fnames = tuple(feature_names) if feature_names else tuple(f"f{i}" for i in range(n_features))
        cnames = tuple(class_names) if class_names else tuple(str(c) for c in range(n_classes))
        return cls(n_features, fnames, CLASSIFICATION, n_classes, cnames)

    @classmethod
    def regression(cls, n_features, feature_names=None):
        fnames = tuple(feature_names) if feature_names else tuple(f"f{i}" for i in range(n_features))
        return cls(n_features, fnames, REGRESSION)

    @property
    def is_classification(self) -> bool:
        return self.label_kind == CLASSIFICATION

    def check_instance(self, instance: "Instance") -> None:
        check_features(instance.features, self.n_features)
        if instance.label is None:
            return
        if self.is_classification:
            check_class_label(instance.label, self.n_classes)
        else:
            check_target(instance.label)


@dataclass
class Instance:
    """One stream element: a feature vector with its position and label.

    ``label`` is a class index for classification streams, a real target for
    regression streams, or ``None`` when the label was not (yet) revealed.
    """

    index: int
    features: np.ndarray
    label: Optional[Label] = None

    def __post_init__(self):
        if self.index < 0:
            raise SchemaError("instance index must be non-negative")
        self.features = check_features(self.features)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.index == other.index
            and self.label == other.label
            and np.array_equal(self.features, other.features)
        )


@dataclass(frozen=True)
class LearnerCaps:
    """Published capability flags, fixed per algorithm."""

    supports_multiclass: bool = True
    supports_regression: bool = False
    drift_adaptive: bool = False


def normalize_proba(proba) -> np.ndarray:
    """Clamp and renormalize a probability vector; zero mass becomes uniform."""
    p = np.asarray(proba, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 1:
        raise SchemaError(f"expected a 1-D probability vector, got shape {p.shape}")
    p = np.where(np.isfinite(p), p, 0.0)
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if total <= 0.0:
        return np.full(p.shape[0], 1.0 / p.shape[0])
    return p / total


def argmax_label(proba) -> int:
    """Index of the largest probability; ties go to the smallest class index."""
    return int(np.argmax(proba))


@dataclass(frozen=True)
class Prediction:
    """A predicted label plus, for classifiers, the full probability vector."""

    label: Label
    proba: Optional[np.ndarray] = None

    @classmethod
    def from_proba(cls, proba) -> "Prediction":
        p = normalize_proba(proba)
        return cls(label=argmax_label(p), proba=p)


# ---------------------------------------------------------------------------
# Learner contract
# ---------------------------------------------------------------------------


class BaseLearner(BaseEstimator):
    """Common behavior for incremental learners.

    Subclasses implement ``_fit``, ``_partial_fit`` and ``_predict_proba``
    (classifiers) or ``_predict_value`` (regressors).  This base class owns
    validation, the fitted flag, and the ``n_seen_`` counter; ``fit`` sets
    ``n_seen_`` to the batch length and every ``partial_fit`` increments it
    by exactly one.
    """

    caps: ClassVar[LearnerCaps] = LearnerCaps()

    @property
    def is_regressor(self) -> bool:
        return False

    @property
    def is_fitted(self) -> bool:
        return getattr(self, "n_seen_", None) is not None

    def _check_fitted(self):
        if not self.is_fitted:
            raise NotFittedError(f"{type(self).__name__} has not been fit")

    def _check_xy(self, x, y):
        x = check_features(x, getattr(self, "n_features_", None))
        if self.is_regressor:
            y = check_target(y)
        else:
            y = check_class_label(y, self.n_classes)
        return x, y

    def fit(self, X, y):
        """Pretrain on a fully labeled batch and mark the learner fitted."""
        X = check_matrix(X)
        if X.shape[0] == 0:
            raise InvalidPretrainError("pretraining batch is empty")
        y = list(y)
        if len(y) != X.shape[0]:
            raise SchemaError("X and y lengths differ")
        if self.is_regressor:
            labels = np.array([check_target(v) for v in y], dtype=np.float64)
        else:
            labels = np.array([check_class_label(v, self.n_classes) for v in y], dtype=np.int64)
        self.n_features_ = X.shape[1]
        self.n_seen_ = None
        self._fit(X, labels)
        self.n_seen_ = X.shape[0]
        return self

    def partial_fit(self, x, y):
        """Consume one labeled instance; the single-pass online update."""
        self._check_fitted()
        x, y = self._check_xy(x, y)
        self._partial_fit(x, y)
        self.n_seen_ += 1
        return self

    def predict(self, x):
        """Predicted label for one instance.  Pure read; never mutates state."""
        self._check_fitted()
        x = check_features(x, self.n_features_)
        if self.is_regressor:
            return float(self._predict_value(x))
        return argmax_label(self._predict_proba(x))

    def predict_proba(self, x) -> np.ndarray:
        """Per-class probability estimate.  Sums to one; pure read."""
        if self.is_regressor:
            raise UnsupportedError(f"{type(self).__name__} is a regressor")
        self._check_fitted()
        x = check_features(x, self.n_features_)
        return normalize_proba(self._predict_proba(x))

    # subclass hooks ------------------------------------------------------

    def _fit(self, X, y):
        raise NotImplementedError

    def _partial_fit(self, x, y):
        raise NotImplementedError

    def _predict_proba(self, x):
        raise NotImplementedError

    def _predict_value(self, x):
        raise UnsupportedError(f"{type(self).__name__} does not support regression")
