"""Drift detectors behind a uniform ``update(value) -> level`` contract.

Levels are the strings ``"stable"``, ``"warning"``, ``"drift"`` (re-exported
from :mod:`olstream.core`).  Detectors never reset themselves on drift; the
caller decides when to call :meth:`reset`, because an ensemble and a
standalone monitor want different reset semantics.
"""

from __future__ import annotations

import math

from .core import DRIFT, STABLE, WARNING, InvalidArgumentError


class DdmDetector:
    """Error-rate monitor with two-sigma warning and three-sigma drift bands.

    Tracks the running error rate ``p`` of a binary error stream and its
    standard deviation ``s = sqrt(p(1-p)/n)``, together with the joint
    minimum of ``p + s``.  Levels compare the current ``p + s`` against
    ``p_min + 2*s_min`` (warning) and ``p_min + 3*s_min`` (drift).  No level
    is reported during the first ``min_n`` observations, where ``s`` is too
    unstable to trust.
    """

    def __init__(self, min_n: int = 30, warning_level: float = 2.0,
                 drift_level: float = 3.0):
        self.min_n = min_n
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.reset()

    def reset(self) -> None:
        self.n_ = 0
        self.p_ = 0.0
        self.s_ = 0.0
        self.p_min_ = math.inf
        self.s_min_ = math.inf
        self.level_ = STABLE

    def update(self, error) -> str:
        if error not in (0, 1):
            raise InvalidArgumentError(f"error must be 0 or 1, got {error!r}")
        self.n_ += 1
        self.p_ += (error - self.p_) / self.n_
        self.s_ = math.sqrt(self.p_ * (1.0 - self.p_) / self.n_)
        if self.n_ < self.min_n:
            self.level_ = STABLE
            return self.level_
        if self.p_ + self.s_ < self.p_min_ + self.s_min_:
            self.p_min_ = self.p_
            self.s_min_ = self.s_
        threshold = self.p_ + self.s_
        if threshold >= self.p_min_ + self.drift_level * self.s_min_:
            self.level_ = DRIFT
        elif threshold >= self.p_min_ + self.warning_level * self.s_min_:
            self.level_ = WARNING
        else:
            self.level_ = STABLE
        return self.level_


class PageHinkleyDetector:
    """Page-Hinkley test for an upward shift in the mean of a real stream.

    Maintains the cumulative deviation ``m_t`` of the observations from their
    running mean (minus a slack ``delta``) and its running minimum ``M_t``;
    drift fires when ``m_t - M_t`` exceeds ``threshold``.  ``alpha`` applies
    exponential forgetting to the mean (1.0 keeps the plain mean).  There is
    no warning level.
    """

    def __init__(self, delta: float = 0.005, threshold: float = 50.0,
                 alpha: float = 1.0):
        if not (0.0 < alpha <= 1.0):
            raise InvalidArgumentError("alpha must lie in (0, 1]")
        if delta < 0 or threshold <= 0:
            raise InvalidArgumentError("delta must be >= 0 and threshold > 0")
        self.delta = delta
        self.threshold = threshold
        self.alpha = alpha
        self.reset()

    def reset(self) -> None:
        self.n_ = 0
        self._weight = 0.0
        self._weighted_sum = 0.0
        self.mean_ = 0.0
        self.m_ = 0.0
        self.m_min_ = math.inf
        self.level_ = STABLE

    def update(self, value) -> str:
        value = float(value)
        if not math.isfinite(value):
            raise InvalidArgumentError("value must be finite")
        self.n_ += 1
        self._weight = self.alpha * self._weight + 1.0
        self._weighted_sum = self.alpha * self._weighted_sum + value
        self.mean_ = self._weighted_sum / self._weight
        self.m_ += value - self.mean_ - self.delta
        if self.m_ < self.m_min_:
            self.m_min_ = self.m_
        self.level_ = DRIFT if (self.m_ - self.m_min_) > self.threshold else STABLE
        return self.level_
