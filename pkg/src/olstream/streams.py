"""Data sources: synthetic drifting generators and CSV ingestion.

All streams are iterators of :class:`~olstream.core.Instance` with a fixed
:class:`~olstream.core.StreamSchema`.  Two streams built from the same
configuration and seed emit bit-identical sequences.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Optional

import numpy as np

from .core import (
    EmptySeriesError,
    Instance,
    ParseError,
    SchemaError,
    StreamSchema,
    make_rng,
)


@dataclass(frozen=True)
class SeaConcept:
    """One SEA labeling concept: sum-threshold rule plus label noise."""

    threshold: float = 8.0
    noise_rate: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.threshold < 20.0):
            raise SchemaError("SEA threshold must lie in (0, 20)")
        if not (0.0 <= self.noise_rate < 0.5):
            raise SchemaError("SEA noise rate must lie in [0, 0.5)")


@dataclass(frozen=True)
class HyperplaneConcept:
    """A separating hyperplane: weights and bias over the feature space."""

    weights: tuple
    bias: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] < 1:
            raise SchemaError("hyperplane weights must be a non-empty vector")
        if not np.any(w != 0.0):
            raise SchemaError("hyperplane weights must not all be zero")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))


@dataclass(frozen=True)
class DriftSchedule:
    """When and how fast the stream moves from one concept to another.

    ``width == 0`` means an abrupt switch at ``position``; otherwise the
    probability of drawing from ``concept_after`` follows a logistic curve
    centered at ``position`` with slope set by ``width``.
    """

    position: int
    width: int
    concept_before: object
    concept_after: object

    def __post_init__(self):
        if self.position < 0:
            raise SchemaError("drift position must be non-negative")
        if self.width < 0:
            raise SchemaError("drift width must be non-negative")


def concept_mix(t: int, schedule: DriftSchedule) -> float:
    """Probability of drawing from the post-drift concept at step ``t``."""
    if t < 0:
        raise SchemaError("t must be non-negative")
    if schedule.width == 0:
        return 0.0 if t < schedule.position else 1.0
    return 1.0 / (1.0 + math.exp(-4.0 * (t - schedule.position) / schedule.width))


def sea_label(f1: float, f2: float, threshold: float) -> int:
    """SEA concept rule: class 1 iff ``f1 + f2 <= threshold`` (inclusive)."""
    return 1 if f1 + f2 <= threshold else 0


def hyperplane_label(x, weights, bias: float) -> int:
    """Class 1 iff the point lies on or above the hyperplane (``w.x + b >= 0``)."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if x.shape != w.shape:
        raise SchemaError(f"dimension mismatch: x {x.shape} vs weights {w.shape}")
    return 1 if float(np.dot(w, x)) + bias >= 0.0 else 0


class Stream:
    """Iterator over instances with consecutive indexes starting at 0."""

    schema: StreamSchema

    def __iter__(self) -> Iterator[Instance]:
        return self

    def __next__(self) -> Instance:
        raise NotImplementedError

    def take(self, n: int) -> List[Instance]:
        """Pull the next ``n`` instances (raises StopIteration if exhausted)."""
        return [next(self) for _ in range(n)]


class SeaStream(Stream):
    """SEA generator: three features uniform on [0, 10], the first two
    informative, labeled by the sum-threshold rule.  The third feature
    exercises irrelevant-feature robustness."""

    N_FEATURES = 3

    def __init__(self, concept: Optional[SeaConcept] = None,
                 drift: Optional[DriftSchedule] = None, seed: int = 0):
        self.concept = concept or SeaConcept()
        self.drift = drift
        self.seed = seed
        self.schema = StreamSchema.classification(self.N_FEATURES, 2)
        self._rng = make_rng(seed)
        self._t = 0

    def _active_concept(self) -> SeaConcept:
        if self.drift is None:
            return self.concept
        p = concept_mix(self._t, self.drift)
        if self._rng.random() < p:
            return self.drift.concept_after
        return self.drift.concept_before

    def __next__(self) -> Instance:
        features = self._rng.random(3) * 10.0
        concept = self._active_concept()
        label = sea_label(features[0], features[1], concept.threshold)
        # Noise draw happens unconditionally to keep the stream alignment
        # independent of the noise rate.
        if self._rng.random() < concept.noise_rate:
            label = 1 - label
        instance = Instance(index=self._t, features=features, label=label)
        self._t += 1
        return instance


class HyperplaneStream(Stream):
    """Hyperplane generator: features uniform on [0, 1], labeled by which
    side of a (possibly drifting) hyperplane the point falls on."""

    def __init__(self, concept: Optional[HyperplaneConcept] = None,
                 n_features: int = 5, drift: Optional[DriftSchedule] = None,
                 seed: int = 0):
        if concept is None:
            concept = HyperplaneConcept(weights=(1.0,) * n_features, bias=-n_features / 2.0)
        self.concept = concept
        self.drift = drift
        self.seed = seed
        d = len(concept.weights)
        self.schema = StreamSchema.classification(d, 2)
        self._rng = make_rng(seed)
        self._t = 0

    def _active_concept(self) -> HyperplaneConcept:
        if self.drift is None:
            return self.concept
        p = concept_mix(self._t, self.drift)
        if self._rng.random() < p:
            return self.drift.concept_after
        return self.drift.concept_before

    def __next__(self) -> Instance:
        features = self._rng.random(self.schema.n_features)
        concept = self._active_concept()
        label = hyperplane_label(features, concept.weights, concept.bias)
        instance = Instance(index=self._t, features=features, label=label)
        self._t += 1
        return instance


class CsvStream(Stream):
    """Finite stream backed by a CSV file.

    The file is UTF-8, comma separated, with an optional single header row.
    The label column is named (when there is a header) or given as a column
    index.  Labels that are all integral become class indexes; anything else
    makes the stream a regression stream.
    """

    def __init__(self, path, label_column="label", has_header: bool = True,
                 shuffle_seed: Optional[int] = None):
        self.path = Path(path)
        self.label_column = label_column
        self.has_header = has_header
        self.shuffle_seed = shuffle_seed
        self._instances = self._load()
        self._pos = 0

    def _load(self) -> List[Instance]:
        with open(self.path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader if row]
        if not rows:
            raise ParseError(0, f"{self.path} is empty")

        if self.has_header:
            header = [name.strip() for name in rows[0]]
            rows = rows[1:]
        else:
            header = [f"c{i}" for i in range(len(rows[0]))]

        if isinstance(self.label_column, int):
            label_idx = self.label_column
            if not (0 <= label_idx < len(header)):
                raise SchemaError(f"label column index {label_idx} out of range")
        else:
            if self.label_column not in header:
                raise SchemaError(
                    f"label column {self.label_column!r} not found in {header}")
            label_idx = header.index(self.label_column)

        feature_names = [h for i, h in enumerate(header) if i != label_idx]
        n_features = len(feature_names)
        if n_features < 1:
            raise SchemaError("CSV must have at least one feature column")

        features = []
        labels = []
        for rownum, row in enumerate(rows, start=1):
            if len(row) != len(header):
                raise ParseError(rownum, f"expected {len(header)} fields, got {len(row)}")
            values = []
            for i, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(rownum, f"cannot parse {cell.strip()!r} as a real number") from None
                if not math.isfinite(value):
                    raise ParseError(rownum, f"non-finite value {cell.strip()!r}")
                if i == label_idx:
                    labels.append(value)
                else:
                    values.append(value)
            features.append(np.array(values, dtype=np.float64))

        if all(v == int(v) for v in labels):
            classes = sorted({int(v) for v in labels})
            n_classes = max(2, max(classes) + 1)
            if min(classes) < 0:
                raise SchemaError("class labels must be non-negative integers")
            self.schema = StreamSchema.classification(n_features, n_classes,
                                                      feature_names=feature_names)
            labels = [int(v) for v in labels]
        else:
            self.schema = StreamSchema.regression(n_features, feature_names=feature_names)

        order = list(range(len(features)))
        if self.shuffle_seed is not None:
            rng = make_rng(self.shuffle_seed)
            order = list(rng.permutation(len(features)))
        return [
            Instance(index=pos, features=features[src], label=labels[src])
            for pos, src in enumerate(order)
        ]

    def __len__(self) -> int:
        return len(self._instances)

    def __next__(self) -> Instance:
        if self._pos >= len(self._instances):
            raise StopIteration
        instance = self._instances[self._pos]
        self._pos += 1
        return instance


def format_value(value) -> str:
    """Exact round-trip text for a label or feature value."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_stream_csv(instances: Iterable[Instance], path) -> None:
    """Export instances as ``f0,...,f{n-1},label`` with exact float text."""
    instances = list(instances)
    if not instances:
        raise EmptySeriesError("no instances to export")
    n_features = len(instances[0].features)
    lines = [",".join([f"f{i}" for i in range(n_features)] + ["label"])]
    for inst in instances:
        fields = [format_value(v) for v in inst.features]
        fields.append(format_value(inst.label))
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
