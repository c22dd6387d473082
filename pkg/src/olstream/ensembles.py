"""Streaming ensembles: Oza-style online bagging, an adaptive random forest
with per-member drift detectors and background replacement (plus a random
subspace variant), and a chunk-trained accuracy-weighted ensemble."""

from __future__ import annotations

import math
from typing import ClassVar, List

import numpy as np
from sklearn.base import clone

from .core import (
    DRIFT,
    WARNING,
    BaseLearner,
    InvalidArgumentError,
    LearnerCaps,
    derive_seed,
    make_rng,
    normalize_proba,
)
from .drift import DdmDetector
from .learners import HoeffdingTreeClassifier


def poisson_draw(lam: float, rng: np.random.Generator) -> int:
    """Poisson sample by uniform inversion (Knuth), suitable for moderate
    rates.  Built on the raw uniform stream so the draw sequence is stable
    across platforms and numpy releases."""
    if lam <= 0:
        raise InvalidArgumentError("lambda must be positive")
    limit = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def ensemble_predict(probas, weights) -> np.ndarray:
    """Weighted average of member probability vectors, renormalized.

    All-zero weights fall back to the unweighted average.
    """
    P = np.asarray(probas, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] < 1:
        raise InvalidArgumentError("need at least one member probability vector")
    if w.shape != (P.shape[0],):
        raise InvalidArgumentError("one weight per member required")
    total = w.sum()
    if total <= 0:
        w = np.ones(P.shape[0])
        total = float(P.shape[0])
    return normalize_proba((w[:, None] * P).sum(axis=0) / total)


def _seeded_clone(prototype, seed: int):
    member = clone(prototype)
    if "seed" in member.get_params():
        member.set_params(seed=seed)
    return member


class OzaBagging(BaseLearner):
    """Online bagging: each member trains on each instance ``k`` times with
    ``k ~ Poisson(lam)``, simulating bootstrap resampling in a single pass."""

    caps: ClassVar[LearnerCaps] = LearnerCaps(supports_multiclass=True)

    def __init__(self, base=None, n_classes: int = 2, n_members: int = 10,
                 lam: float = 1.0, seed: int = 0):
        self.base = base
        self.n_classes = n_classes
        self.n_members = n_members
        self.lam = lam
        self.seed = seed

    def _prototype(self):
        return self.base if self.base is not None else HoeffdingTreeClassifier(
            n_classes=self.n_classes)

    def _fit(self, X, y):
        if self.n_members < 1:
            raise InvalidArgumentError("n_members must be at least 1")
        prototype = self._prototype()
        self.members_ = []
        self.rngs_ = []
        for i in range(self.n_members):
            member = _seeded_clone(prototype, derive_seed(self.seed, "member", i))
            member.fit(X, y)
            self.members_.append(member)
            self.rngs_.append(make_rng(derive_seed(self.seed, "poisson", i)))

    def _partial_fit(self, x, y):
        for member, rng in zip(self.members_, self.rngs_):
            k = poisson_draw(self.lam, rng)
            for _ in range(k):
                member.partial_fit(x, y)

    def _predict_proba(self, x):
        probas = [m.predict_proba(x) for m in self.members_]
        return ensemble_predict(probas, np.ones(len(probas)))


class _ArfMember:
    __slots__ = ("learner", "mask", "warning", "drift", "background",
                 "background_mask", "rng")

    def __init__(self, learner, mask, warning, drift, rng):
        self.learner = learner
        self.mask = mask
        self.warning = warning
        self.drift = drift
        self.background = None
        self.background_mask = None
        self.rng = rng


class AdaptiveRandomForest(BaseLearner):
    """Ensemble of Hoeffding trees over random feature subspaces with
    per-member warning/drift monitoring.

    Each member trains on each instance ``k ~ Poisson(lam)`` times and feeds
    its own prequential error bit to two error-rate detectors.  When the
    warning band is hit, a background tree (on a freshly drawn subspace)
    starts training alongside the member; when the drift band is hit, the
    member is replaced by its background tree, or by a fresh tree if no
    background exists, and its detectors reset.

    ``mode="srp"`` keeps the same machinery but draws larger resampled
    subspaces (``subspace_fraction`` of the features) and always replaces
    drifted members with fresh trees instead of promoting a background.
    """

    caps: ClassVar[LearnerCaps] = LearnerCaps(supports_multiclass=True, drift_adaptive=True)

    def __init__(self, n_classes: int = 2, n_members: int = 10, lam: float = 6.0,
                 mode: str = "arf", subspace_fraction: float = 0.6,
                 grace_period: int = 200, delta: float = 1e-7,
                 tie_threshold: float = 0.05, warning_level: float = 2.0,
                 drift_level: float = 3.0, detector_min_n: int = 30,
                 seed: int = 0):
        self.n_classes = n_classes
        self.n_members = n_members
        self.lam = lam
        self.mode = mode
        self.subspace_fraction = subspace_fraction
        self.grace_period = grace_period
        self.delta = delta
        self.tie_threshold = tie_threshold
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.detector_min_n = detector_min_n
        self.seed = seed

    def _mask_size(self, d: int) -> int:
        if self.mode == "srp":
            return max(1, round(self.subspace_fraction * d))
        return max(1, math.ceil(math.sqrt(d)))

    def _draw_mask(self, rng, d: int) -> np.ndarray:
        return np.sort(rng.choice(d, size=self._mask_size(d), replace=False))

    def _new_tree(self):
        return HoeffdingTreeClassifier(
            n_classes=self.n_classes, delta=self.delta,
            tie_threshold=self.tie_threshold, grace_period=self.grace_period)

    def _new_detector(self):
        return DdmDetector(min_n=self.detector_min_n,
                           warning_level=self.warning_level,
                           drift_level=self.drift_level)

    def _fit(self, X, y):
        if self.mode not in ("arf", "srp"):
            raise InvalidArgumentError(f"unknown mode {self.mode!r}")
        if self.n_members < 1:
            raise InvalidArgumentError("n_members must be at least 1")
        d = X.shape[1]
        self.members_ = []
        self.n_replacements_ = 0
        for i in range(self.n_members):
            rng = make_rng(derive_seed(self.seed, "member", i))
            mask = self._draw_mask(rng, d)
            tree = self._new_tree()
            tree.fit(X[:, mask], y)
            self.members_.append(_ArfMember(
                tree, mask, self._new_detector(), self._new_detector(), rng))

    def _partial_fit(self, x, y):
        d = self.n_features_
        for member in self.members_:
            xm = x[member.mask]
            error = int(member.learner.predict(xm) != y)
            k = poisson_draw(self.lam, member.rng)
            for _ in range(k):
                member.learner.partial_fit(xm, y)
            if member.background is not None:
                xb = x[member.background_mask]
                for _ in range(k):
                    member.background.partial_fit(xb, y)
            warning_level = member.warning.update(error)
            drift_level = member.drift.update(error)
            if drift_level == DRIFT:
                self._replace(member, x, y)
            elif (self.mode == "arf" and member.background is None
                  and warning_level in (WARNING, DRIFT)):
                member.background_mask = self._draw_mask(member.rng, d)
                member.background = self._new_tree()
                member.background.fit(x[member.background_mask].reshape(1, -1), [y])
                member.warning.reset()

    def _replace(self, member: _ArfMember, x, y) -> None:
        if self.mode == "arf" and member.background is not None:
            member.learner = member.background
            member.mask = member.background_mask
        else:
            member.mask = self._draw_mask(member.rng, self.n_features_)
            member.learner = self._new_tree()
            member.learner.fit(x[member.mask].reshape(1, -1), [y])
        member.background = None
        member.background_mask = None
        member.warning.reset()
        member.drift.reset()
        self.n_replacements_ += 1

    def _predict_proba(self, x):
        probas = [m.learner.predict_proba(x[m.mask]) for m in self.members_]
        return ensemble_predict(probas, np.ones(len(probas)))


class ChunkWeightedEnsemble(BaseLearner):
    """Chunk-trained ensemble weighted against the random-predictor reference.

    Instances are buffered into chunks of ``chunk_size``.  At each chunk
    boundary a new member is batch-trained on the chunk and every member is
    reweighted by ``max(0, mse_r - mse_i)``, where ``mse_i`` is the member's
    mean squared probability error on the chunk and ``mse_r = sum_c p(c) *
    (1 - p(c))`` is what a class-prior random predictor would score.  The
    lowest-weight member is evicted once ``max_members`` is exceeded.
    """

    caps: ClassVar[LearnerCaps] = LearnerCaps(supports_multiclass=True, drift_adaptive=True)

    WEIGHT_FLOOR = 1e-6

    def __init__(self, base=None, n_classes: int = 2, chunk_size: int = 500,
                 max_members: int = 10, seed: int = 0):
        self.base = base
        self.n_classes = n_classes
        self.chunk_size = chunk_size
        self.max_members = max_members
        self.seed = seed

    def _prototype(self):
        return self.base if self.base is not None else HoeffdingTreeClassifier(
            n_classes=self.n_classes)

    def _fit(self, X, y):
        if self.chunk_size < 1 or self.max_members < 1:
            raise InvalidArgumentError("chunk_size and max_members must be positive")
        self.n_trained_ = 0
        first = self._new_member()
        first.fit(X, y)
        self.members_ = [first]
        self.weights_ = [1.0]
        self._buffer_x: List[np.ndarray] = []
        self._buffer_y: List[int] = []

    def _new_member(self):
        member = _seeded_clone(self._prototype(),
                               derive_seed(self.seed, "chunk-member", self.n_trained_))
        self.n_trained_ += 1
        return member

    def _partial_fit(self, x, y):
        self._buffer_x.append(x)
        self._buffer_y.append(y)
        if len(self._buffer_x) >= self.chunk_size:
            self._commit_chunk()

    @staticmethod
    def _member_mse(member, X, y) -> float:
        errors = [
            (1.0 - float(member.predict_proba(X[i])[y[i]])) ** 2
            for i in range(X.shape[0])
        ]
        return float(np.mean(errors))

    def _commit_chunk(self) -> None:
        X = np.stack(self._buffer_x)
        y = np.array(self._buffer_y, dtype=np.int64)
        self._buffer_x.clear()
        self._buffer_y.clear()

        new_member = self._new_member()
        new_member.fit(X, y)
        self.members_.append(new_member)

        prior = np.bincount(y, minlength=self.n_classes) / y.shape[0]
        mse_r = float(np.sum(prior * (1.0 - prior)))
        self.weights_ = [
            max(0.0, mse_r - self._member_mse(m, X, y)) for m in self.members_
        ]
        # The freshly trained member always stays usable, even on a
        # single-class chunk where mse_r collapses to zero.
        self.weights_[-1] = max(self.weights_[-1], self.WEIGHT_FLOOR)

        if len(self.members_) > self.max_members:
            evict = int(np.argmin(self.weights_))
            del self.members_[evict]
            del self.weights_[evict]

    def _predict_proba(self, x):
        probas = [m.predict_proba(x) for m in self.members_]
        return ensemble_predict(probas, self.weights_)
