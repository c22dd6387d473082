"""Base incremental learners: majority-class baseline, online gradient
descent on softmax cross-entropy (optionally with one tanh hidden layer),
sliding-window k-nearest-neighbors, and a Hoeffding tree."""

from __future__ import annotations

import math
from typing import ClassVar, Optional

import numpy as np

from .core import (
    CLASSIFICATION,
    REGRESSION,
    BaseLearner,
    InvalidArgumentError,
    LearnerCaps,
    NotFittedError,
    NumericError,
    make_rng,
)


class MajorityClass(BaseLearner):
    """Predicts class frequencies observed so far; the no-information baseline."""

    caps: ClassVar[LearnerCaps] = LearnerCaps(supports_multiclass=True)

    def __init__(self, n_classes: int = 2):
        self.n_classes = n_classes

    def _fit(self, X, y):
        self.counts_ = np.zeros(self.n_classes, dtype=np.float64)
        for label in y:
            self.counts_[label] += 1

    def _partial_fit(self, x, y):
        self.counts_[y] += 1

    def _predict_proba(self, x):
        return self.counts_


class OnlineGradientClassifier(BaseLearner):
    """Softmax classifier trained by per-instance gradient descent.

    With ``hidden_units == 0`` this is plain softmax regression; otherwise a
    single tanh hidden layer is inserted.  Each update applies one step of
    gradient descent on the softmax cross-entropy loss plus an L2 penalty:
    ``theta <- theta - lr * (grad + l2 * theta)``.

    ``fit`` initializes the parameters (zeros for the linear model, small
    seeded random values for the hidden layer) and then runs ``n_epochs``
    sequential passes over the batch in order, so a fit with one epoch is
    exactly a replay of ``partial_fit`` over the batch.
    """

    caps: ClassVar[LearnerCaps] = LearnerCaps(supports_multiclass=True, drift_adaptive=True)

    def __init__(self, n_classes: int = 2, hidden_units: int = 0,
                 learning_rate: float = 0.05, l2: float = 0.0,
                 n_epochs: int = 10, seed: int = 0):
        self.n_classes = n_classes
        self.hidden_units = hidden_units
        self.learning_rate = learning_rate
        self.l2 = l2
        self.n_epochs = n_epochs
        self.seed = seed

    def _fit(self, X, y):
        d = X.shape[1]
        rng = make_rng(self.seed)
        if self.hidden_units > 0:
            self.V_ = rng.normal(0.0, 1.0 / math.sqrt(d), size=(self.hidden_units, d))
            self.c_ = np.zeros(self.hidden_units)
            width = self.hidden_units
        else:
            self.V_ = None
            self.c_ = None
            width = d
        self.W_ = np.zeros((self.n_classes, width))
        self.b_ = np.zeros(self.n_classes)
        for _ in range(self.n_epochs):
            for i in range(X.shape[0]):
                self._partial_fit(X[i], int(y[i]))

    def _forward(self, x):
        if self.V_ is not None:
            h = np.tanh(self.V_ @ x + self.c_)
        else:
            h = x
        z = self.W_ @ h + self.b_
        z = z - z.max()
        e = np.exp(z)
        return e / e.sum(), h

    def _loss(self, x, y) -> float:
        """Cross-entropy plus the L2 penalty; what the gradients descend."""
        proba, _ = self._forward(x)
        ce = -math.log(max(proba[y], 1e-300))
        reg = float(np.sum(self.W_ ** 2)) + float(np.sum(self.b_ ** 2))
        if self.V_ is not None:
            reg += float(np.sum(self.V_ ** 2)) + float(np.sum(self.c_ ** 2))
        return ce + 0.5 * self.l2 * reg

    def _gradients(self, x, y):
        """Analytic gradient of :meth:`_loss` for every parameter block."""
        proba, h = self._forward(x)
        dz = proba.copy()
        dz[y] -= 1.0
        grads = {
            "W": np.outer(dz, h) + self.l2 * self.W_,
            "b": dz + self.l2 * self.b_,
        }
        if self.V_ is not None:
            dh = self.W_.T @ dz
            dpre = dh * (1.0 - h ** 2)
            grads["V"] = np.outer(dpre, x) + self.l2 * self.V_
            grads["c"] = dpre + self.l2 * self.c_
        return grads

    def _partial_fit(self, x, y):
        grads = self._gradients(x, y)
        for g in grads.values():
            if not np.all(np.isfinite(g)):
                raise NumericError(
                    f"non-finite gradient after {self.n_seen_ or 0} instances")
        lr = self.learning_rate
        self.W_ -= lr * grads["W"]
        self.b_ -= lr * grads["b"]
        if self.V_ is not None:
            self.V_ -= lr * grads["V"]
            self.c_ -= lr * grads["c"]

    def _predict_proba(self, x):
        proba, _ = self._forward(x)
        return proba


class Knn(BaseLearner):
    """k-nearest-neighbors over a fixed-capacity sliding window.

    The window evicts strictly oldest-first.  Neighbors are the
    ``min(k, window size)`` closest points by squared Euclidean distance,
    with distance ties resolved in favor of older points.  Classification
    returns vote fractions as probabilities; regression returns the
    neighbor mean.
    """

    caps: ClassVar[LearnerCaps] = LearnerCaps(supports_multiclass=True, supports_regression=True)

    def __init__(self, n_classes: int = 2, k: int = 5, capacity: int = 1000,
                 task: str = CLASSIFICATION):
        self.n_classes = n_classes
        self.k = k
        self.capacity = capacity
        self.task = task

    @property
    def is_regressor(self) -> bool:
        return self.task == REGRESSION

    def _fit(self, X, y):
        if self.k < 1 or self.capacity < 1:
            raise InvalidArgumentError("k and capacity must be positive")
        d = X.shape[1]
        self.X_ = np.zeros((self.capacity, d))
        self.y_ = np.zeros(self.capacity, dtype=np.float64)
        self.seq_ = np.zeros(self.capacity, dtype=np.int64)
        self.inserted_ = 0
        for i in range(X.shape[0]):
            self._insert(X[i], float(y[i]))

    def _insert(self, x, y):
        slot = self.inserted_ % self.capacity
        self.X_[slot] = x
        self.y_[slot] = y
        self.seq_[slot] = self.inserted_
        self.inserted_ += 1

    def _partial_fit(self, x, y):
        self._insert(x, float(y))

    def _neighbor_labels(self, x):
        m = min(self.inserted_, self.capacity)
        if m == 0:
            raise NotFittedError("kNN window is empty")
        d2 = np.sum((self.X_[:m] - x) ** 2, axis=1)
        # Sort by distance, then by insertion order: older points win ties.
        order = np.lexsort((self.seq_[:m], d2))
        return self.y_[:m][order[: min(self.k, m)]]

    def _predict_proba(self, x):
        votes = self._neighbor_labels(x)
        counts = np.zeros(self.n_classes)
        for v in votes:
            counts[int(v)] += 1
        return counts

    def _predict_value(self, x):
        return float(np.mean(self._neighbor_labels(x)))


def hoeffding_bound(value_range: float, delta: float, n: int) -> float:
    """Confidence radius ``sqrt(R^2 ln(1/delta) / (2n))``.

    ``delta == 1`` is allowed and yields 0.
    """
    if value_range <= 0:
        raise InvalidArgumentError("value range must be positive")
    if not (0.0 < delta <= 1.0):
        raise InvalidArgumentError("delta must lie in (0, 1]")
    if n < 1:
        raise InvalidArgumentError("n must be at least 1")
    return math.sqrt(value_range * value_range * math.log(1.0 / delta) / (2.0 * n))


def _entropy(counts) -> float:
    total = sum(counts)
    if total <= 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def _phi(u: float) -> float:
    return 0.5 * (1.0 + math.erf(u / math.sqrt(2.0)))


class _HtNode:
    """Tree node: a leaf carries per-class Gaussian feature sketches, an
    internal node carries a binary threshold split and its frozen counts."""

    __slots__ = ("counts", "means", "m2s", "vmin", "vmax", "n_since_eval",
                 "split_feature", "split_value", "left", "right", "depth")

    def __init__(self, n_classes: int, n_features: int, depth: int):
        self.counts = [0.0] * n_classes
        self.means = [[0.0] * n_classes for _ in range(n_features)]
        self.m2s = [[0.0] * n_classes for _ in range(n_features)]
        self.vmin = [math.inf] * n_features
        self.vmax = [-math.inf] * n_features
        self.n_since_eval = 0
        self.split_feature = None
        self.split_value = None
        self.left = None
        self.right = None
        self.depth = depth

    @property
    def is_leaf(self) -> bool:
        return self.split_feature is None

    def update_stats(self, x, y: int) -> None:
        self.counts[y] += 1
        n = self.counts[y]
        means = self.means
        m2s = self.m2s
        for f in range(len(x)):
            v = x[f]
            if v < self.vmin[f]:
                self.vmin[f] = v
            if v > self.vmax[f]:
                self.vmax[f] = v
            delta = v - means[f][y]
            means[f][y] += delta / n
            m2s[f][y] += delta * (v - means[f][y])
        self.n_since_eval += 1

    def class_split_estimate(self, f: int, threshold: float):
        """Estimated per-class counts routed left of ``threshold`` on feature
        ``f``, from the Gaussian sketches."""
        left = []
        for c, n_c in enumerate(self.counts):
            if n_c <= 0:
                left.append(0.0)
                continue
            mu = self.means[f][c]
            var = self.m2s[f][c] / n_c
            if var <= 0.0:
                left.append(n_c if mu <= threshold else 0.0)
            else:
                left.append(n_c * _phi((threshold - mu) / math.sqrt(var)))
        return left

    def split_gain(self, f: int, threshold: float) -> float:
        """Information gain (bits) of splitting this leaf at ``x[f] <= t``."""
        left = self.class_split_estimate(f, threshold)
        right = [n_c - l for n_c, l in zip(self.counts, left)]
        total = sum(self.counts)
        nl, nr = sum(left), sum(right)
        gain = _entropy(self.counts)
        if nl > 0:
            gain -= (nl / total) * _entropy(left)
        if nr > 0:
            gain -= (nr / total) * _entropy(right)
        return gain


class HoeffdingTreeClassifier(BaseLearner):
    """Incremental decision tree with Hoeffding-bound split decisions.

    Numeric features are summarized per leaf by per-class Gaussian sketches;
    candidate splits are ``n_candidates`` evenly spaced thresholds between the
    observed minimum and maximum of each feature.  A leaf splits once the gain
    of its best feature beats the second-best feature's by more than the
    Hoeffding radius, or once that radius falls below ``tie_threshold``.
    Children start with empty statistics; predictions from a still-empty leaf
    back off to the nearest ancestor that has observed data.
    """

    caps: ClassVar[LearnerCaps] = LearnerCaps(supports_multiclass=True)

    def __init__(self, n_classes: int = 2, delta: float = 1e-7,
                 tie_threshold: float = 0.05, grace_period: int = 200,
                 max_depth: Optional[int] = None, n_candidates: int = 10):
        self.n_classes = n_classes
        self.delta = delta
        self.tie_threshold = tie_threshold
        self.grace_period = grace_period
        self.max_depth = max_depth
        self.n_candidates = n_candidates

    def _fit(self, X, y):
        if not (0.0 < self.delta < 1.0):
            raise InvalidArgumentError("delta must lie in (0, 1)")
        if self.tie_threshold <= 0 or self.grace_period < 1:
            raise InvalidArgumentError("tie_threshold and grace_period must be positive")
        self.root_ = _HtNode(self.n_classes, X.shape[1], depth=0)
        self.n_nodes_ = 1
        for i in range(X.shape[0]):
            self._partial_fit(X[i], int(y[i]))

    def _route(self, x) -> _HtNode:
        node = self.root_
        while not node.is_leaf:
            node = node.left if x[node.split_feature] <= node.split_value else node.right
        return node

    def _partial_fit(self, x, y):
        x = [float(v) for v in x]
        leaf = self._route(x)
        leaf.update_stats(x, y)
        if leaf.n_since_eval >= self.grace_period:
            self._try_split(leaf)

    def _try_split(self, leaf: _HtNode) -> bool:
        leaf.n_since_eval = 0
        if self.max_depth is not None and leaf.depth >= self.max_depth:
            return False
        n = sum(leaf.counts)
        if sum(1 for c in leaf.counts if c > 0) < 2:
            return False

        best_gain, second_gain = 0.0, 0.0
        best_feature, best_value = None, None
        for f in range(len(leaf.vmin)):
            lo, hi = leaf.vmin[f], leaf.vmax[f]
            if not (hi > lo):
                continue
            feature_best, feature_value = 0.0, None
            for i in range(1, self.n_candidates + 1):
                t = lo + (hi - lo) * i / (self.n_candidates + 1)
                gain = leaf.split_gain(f, t)
                if gain > feature_best:
                    feature_best, feature_value = gain, t
            if feature_best > best_gain:
                second_gain = best_gain
                best_gain, best_feature, best_value = feature_best, f, feature_value
            elif feature_best > second_gain:
                second_gain = feature_best

        if best_feature is None or best_gain <= 0.0:
            return False
        eps = hoeffding_bound(math.log2(self.n_classes), self.delta, int(n))
        if not (best_gain - second_gain > eps or eps < self.tie_threshold):
            return False

        leaf.split_feature = best_feature
        leaf.split_value = best_value
        d = len(leaf.vmin)
        leaf.left = _HtNode(self.n_classes, d, leaf.depth + 1)
        leaf.right = _HtNode(self.n_classes, d, leaf.depth + 1)
        # Sketches are no longer needed once the node is internal.
        leaf.means = None
        leaf.m2s = None
        self.n_nodes_ += 2
        return True

    def _predict_proba(self, x):
        node = self.root_
        counts = node.counts
        while not node.is_leaf:
            node = node.left if x[node.split_feature] <= node.split_value else node.right
            if sum(node.counts) > 0:
                counts = node.counts
        return np.asarray(counts, dtype=np.float64)
