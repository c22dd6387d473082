"""Active-learning query strategies: per-instance decisions on whether to
request the true label, under a lifetime labeling budget.

Budget accounting is the lifetime ratio ``queried / seen``.  The spend gate
counts the current instance as seen before comparing against the budget, so
after any query the spend never exceeds ``budget + 1/seen``.
"""

from __future__ import annotations

import numpy as np

from .core import InvalidArgumentError, make_rng


class QueryStrategy:
    """Base strategy: budget bookkeeping plus the spend gate."""

    def __init__(self, budget: float = 0.1):
        if not (0.0 <= budget <= 1.0):
            raise InvalidArgumentError("budget must lie in [0, 1]")
        self.budget = budget
        self.seen_ = 0
        self.queried_ = 0

    @property
    def spend(self) -> float:
        return self.queried_ / self.seen_ if self.seen_ else 0.0

    def _budget_left(self) -> bool:
        # seen_ already counts the current instance here.
        return self.queried_ / self.seen_ < self.budget

    def decide(self, proba=None) -> bool:
        """Decide whether to query the label for the current instance."""
        self.seen_ += 1
        queried = self._decide(proba)
        if queried:
            self.queried_ += 1
        return queried

    def _decide(self, proba) -> bool:
        raise NotImplementedError


class Supervised(QueryStrategy):
    """Queries every label; the fully supervised baseline."""

    def __init__(self):
        super().__init__(budget=1.0)

    def _decide(self, proba) -> bool:
        return True


class RandomQuery(QueryStrategy):
    """Queries uniformly at random with probability ``budget``."""

    def __init__(self, budget: float = 0.1, seed: int = 0):
        super().__init__(budget)
        self.seed = seed
        self._rng = make_rng(seed)

    def _decide(self, proba) -> bool:
        return self._budget_left() and self._rng.random() < self.budget


class FixedUncertainty(QueryStrategy):
    """Queries when the top posterior falls below a fixed threshold."""

    def __init__(self, budget: float = 0.1, threshold: float = 0.8):
        super().__init__(budget)
        if not (0.0 < threshold <= 1.0):
            raise InvalidArgumentError("threshold must lie in (0, 1]")
        self.threshold = threshold

    def _decide(self, proba) -> bool:
        return self._budget_left() and float(np.max(proba)) < self.threshold


class VariableUncertainty(QueryStrategy):
    """Uncertainty sampling with a self-adjusting threshold.

    While budget remains, an instance whose top posterior falls below the
    current threshold ``theta`` is queried and ``theta`` shrinks by the
    factor ``(1 - step)``; otherwise ``theta`` grows by ``(1 + step)``,
    capped at 1.  The threshold therefore seeks the level at which the
    query rate matches the budget.  A budget of 1 means every label is
    affordable, so the threshold machinery is bypassed and every instance
    is queried, which makes a budget-1 run reproduce the supervised runner
    exactly.
    """

    def __init__(self, budget: float = 0.1, theta: float = 1.0, step: float = 0.01):
        super().__init__(budget)
        if not (0.0 < theta <= 1.0):
            raise InvalidArgumentError("theta must lie in (0, 1]")
        if not (0.0 < step < 1.0):
            raise InvalidArgumentError("step must lie in (0, 1)")
        self.theta = theta
        self.step = step
        self.theta_ = theta

    def _decide(self, proba) -> bool:
        if self.budget >= 1.0:
            return True
        if not self._budget_left():
            return False
        if float(np.max(proba)) < self.theta_:
            self.theta_ *= 1.0 - self.step
            return True
        self.theta_ = min(1.0, self.theta_ * (1.0 + self.step))
        return False
