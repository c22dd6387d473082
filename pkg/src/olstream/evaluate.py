"""Prequential experiment runner: component registries, the test-then-train
loop, and metric computation over the recorded (truth, prediction, queried)
log."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    CLASSIFICATION,
    REGRESSION,
    ConfigError,
    EmptySeriesError,
    InvalidArgumentError,
    InvalidPretrainError,
    LearnerCaps,
    RegistryError,
    StreamSchema,
    argmax_label,
    derive_seed,
)
from .ensembles import AdaptiveRandomForest, ChunkWeightedEnsemble, OzaBagging
from .learners import HoeffdingTreeClassifier, Knn, MajorityClass, OnlineGradientClassifier
from .drift import DdmDetector, PageHinkleyDetector
from .streams import (
    CsvStream,
    DriftSchedule,
    HyperplaneConcept,
    HyperplaneStream,
    SeaConcept,
    SeaStream,
)
from .strategies import FixedUncertainty, RandomQuery, Supervised, VariableUncertainty


# ---------------------------------------------------------------------------
# Records and metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrequentialRecord:
    """One test-then-train step: what was true, what was predicted, and
    whether the label was queried."""

    step: int
    true_label: object
    pred_label: object
    queried: int
    model: str
    stream: str
    round_index: int


@dataclass
class MetricSeries:
    """A per-step metric curve aligned with record steps."""

    steps: List[int]
    values: List[float]

    def __len__(self) -> int:
        return len(self.steps)


def _windowed(records: Sequence[PrequentialRecord], window: int, value_fn) -> MetricSeries:
    if window < 1:
        raise InvalidArgumentError("window must be at least 1")
    if not records:
        raise EmptySeriesError("no records")
    values = np.array([value_fn(r) for r in records], dtype=np.float64)
    n = len(values)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(n)
    lo = np.maximum(0, idx - window + 1)
    means = (csum[idx + 1] - csum[lo]) / (idx - lo + 1)
    return MetricSeries([r.step for r in records], [float(v) for v in means])


def windowed_accuracy(records: Sequence[PrequentialRecord], window: int) -> MetricSeries:
    """Trailing-window mean correctness at each recorded step."""
    return _windowed(records, window, lambda r: 1.0 if r.pred_label == r.true_label else 0.0)


def windowed_mae(records: Sequence[PrequentialRecord], window: int) -> MetricSeries:
    """Trailing-window mean absolute error (regression streams)."""
    return _windowed(records, window, lambda r: abs(float(r.pred_label) - float(r.true_label)))


def windowed_query_rate(records: Sequence[PrequentialRecord], window: int) -> MetricSeries:
    """Trailing-window fraction of queried labels."""
    return _windowed(records, window, lambda r: float(r.queried))


@dataclass
class ConfusionMatrix:
    """Rows are truth, columns are predictions."""

    counts: np.ndarray

    @classmethod
    def from_records(cls, records: Sequence[PrequentialRecord], n_classes: int) -> "ConfusionMatrix":
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        for r in records:
            counts[int(r.true_label), int(r.pred_label)] += 1
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1; a class with no precision and no
    recall contributes 0."""
    if cm.total < 1:
        raise InvalidArgumentError("confusion matrix is empty")
    counts = cm.counts
    scores = []
    for c in range(counts.shape[0]):
        tp = counts[c, c]
        p_den = counts[:, c].sum()
        r_den = counts[c, :].sum()
        precision = tp / p_den if p_den else 0.0
        recall = tp / r_den if r_den else 0.0
        if precision + recall > 0:
            scores.append(2.0 * precision * recall / (precision + recall))
        else:
            scores.append(0.0)
    return float(np.mean(scores))


# ---------------------------------------------------------------------------
# Registries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelEntry:
    factory: Callable
    caps: LearnerCaps
    summary: str


@dataclass(frozen=True)
class ComponentEntry:
    factory: Callable
    summary: str


def _base_prototype(schema, seed, name, params):
    if name not in MODEL_REGISTRY:
        raise RegistryError(
            f"unknown base model {name!r}; available: {', '.join(sorted(MODEL_REGISTRY))}")
    return MODEL_REGISTRY[name].factory(schema, seed, **params)


def _make_majority(schema, seed, **params):
    return MajorityClass(n_classes=schema.n_classes, **params)


def _make_ogd(schema, seed, **params):
    params.setdefault("hidden_units", 0)
    return OnlineGradientClassifier(n_classes=schema.n_classes, seed=seed, **params)


def _make_mlp(schema, seed, **params):
    params.setdefault("hidden_units", 16)
    return OnlineGradientClassifier(n_classes=schema.n_classes, seed=seed, **params)


def _make_knn(schema, seed, **params):
    return Knn(n_classes=schema.n_classes, task=CLASSIFICATION, **params)


def _make_knn_regressor(schema, seed, **params):
    return Knn(n_classes=2, task=REGRESSION, **params)


def _make_ht(schema, seed, **params):
    return HoeffdingTreeClassifier(n_classes=schema.n_classes, **params)


def _make_oza(schema, seed, base="HoeffdingTree", base_params=None, **params):
    prototype = _base_prototype(schema, seed, base, base_params or {})
    return OzaBagging(base=prototype, n_classes=schema.n_classes, seed=seed, **params)


def _make_arf(schema, seed, **params):
    params.setdefault("mode", "arf")
    return AdaptiveRandomForest(n_classes=schema.n_classes, seed=seed, **params)


def _make_srp(schema, seed, **params):
    params["mode"] = "srp"
    return AdaptiveRandomForest(n_classes=schema.n_classes, seed=seed, **params)


def _make_chunk(schema, seed, base="HoeffdingTree", base_params=None, **params):
    prototype = _base_prototype(schema, seed, base, base_params or {})
    return ChunkWeightedEnsemble(base=prototype, n_classes=schema.n_classes,
                                 seed=seed, **params)


MODEL_REGISTRY: Dict[str, ModelEntry] = {
    "ARF": ModelEntry(_make_arf, LearnerCaps(True, False, True),
                      "adaptive random forest with per-member detectors"),
    "ChunkEnsemble": ModelEntry(_make_chunk, LearnerCaps(True, False, True),
                                "chunk-trained accuracy-weighted ensemble"),
    "HoeffdingTree": ModelEntry(_make_ht, LearnerCaps(True, False, False),
                                "incremental decision tree"),
    "KNN": ModelEntry(_make_knn, LearnerCaps(True, False, False),
                      "sliding-window k-nearest-neighbors"),
    "KNNRegressor": ModelEntry(_make_knn_regressor, LearnerCaps(False, True, False),
                               "sliding-window k-nearest-neighbors (neighbor mean)"),
    "MLP": ModelEntry(_make_mlp, LearnerCaps(True, False, True),
                      "online gradient descent with one tanh hidden layer"),
    "MajorityClass": ModelEntry(_make_majority, LearnerCaps(True, False, False),
                                "class-frequency baseline"),
    "OGD": ModelEntry(_make_ogd, LearnerCaps(True, False, True),
                      "online gradient descent softmax classifier"),
    "OzaBagging": ModelEntry(_make_oza, LearnerCaps(True, False, False),
                             "online bagging with Poisson instance weights"),
    "SRP": ModelEntry(_make_srp, LearnerCaps(True, False, True),
                      "random-subspace variant of the adaptive forest"),
}


def _make_sea(seed, threshold=8.0, noise_rate=0.0, drift_at=None, drift_width=0,
              threshold_after=None, noise_rate_after=None):
    before = SeaConcept(threshold=threshold, noise_rate=noise_rate)
    drift = None
    if drift_at is not None:
        after = SeaConcept(
            threshold=threshold if threshold_after is None else threshold_after,
            noise_rate=noise_rate if noise_rate_after is None else noise_rate_after)
        drift = DriftSchedule(int(drift_at), int(drift_width), before, after)
    return SeaStream(concept=before, drift=drift, seed=seed)


def _make_hyperplane(seed, n_features=5, weights=None, bias=None,
                     drift_at=None, drift_width=0, weights_after=None,
                     bias_after=None):
    if weights is None:
        weights = (1.0,) * n_features
    if bias is None:
        bias = -sum(weights) / 2.0
    before = HyperplaneConcept(weights=tuple(weights), bias=float(bias))
    drift = None
    if drift_at is not None:
        after = HyperplaneConcept(
            weights=tuple(weights_after) if weights_after is not None else before.weights,
            bias=float(bias_after) if bias_after is not None else before.bias)
        drift = DriftSchedule(int(drift_at), int(drift_width), before, after)
    return HyperplaneStream(concept=before, drift=drift, seed=seed)


def _make_csv(seed, path, label_column="label", has_header=True, shuffle_seed=None):
    return CsvStream(path, label_column=label_column, has_header=has_header,
                     shuffle_seed=shuffle_seed)


STREAM_REGISTRY: Dict[str, ComponentEntry] = {
    "csv": ComponentEntry(_make_csv, "CSV file ingestion"),
    "hyperplane": ComponentEntry(_make_hyperplane, "hyperplane generator with optional drift"),
    "sea": ComponentEntry(_make_sea, "SEA sum-threshold generator with optional drift"),
}


STRATEGY_REGISTRY: Dict[str, ComponentEntry] = {
    "FixedUncertainty": ComponentEntry(
        lambda seed, **p: FixedUncertainty(**p), "query when confidence is below a fixed threshold"),
    "Random": ComponentEntry(
        lambda seed, **p: RandomQuery(seed=seed, **p), "query uniformly at the budget rate"),
    "Supervised": ComponentEntry(
        lambda seed, **p: Supervised(), "query every label"),
    "VariableUncertainty": ComponentEntry(
        lambda seed, **p: VariableUncertainty(**p), "query below a self-adjusting threshold"),
}


DETECTOR_REGISTRY: Dict[str, ComponentEntry] = {
    "DDM": ComponentEntry(lambda **p: DdmDetector(**p),
                          "error-rate monitor with warning and drift bands"),
    "PageHinkley": ComponentEntry(lambda **p: PageHinkleyDetector(**p),
                                  "cumulative mean-shift test"),
}


def _lookup(registry: Dict, name: str, kind: str):
    if name not in registry:
        raise RegistryError(
            f"unknown {kind} {name!r}; available: {', '.join(sorted(registry))}")
    return registry[name]


# ---------------------------------------------------------------------------
# Experiment configuration and resolution
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """A full comparison run: which models on which streams, for how long,
    how labels are queried, and where results go."""

    n_samples: int
    n_pretrain: int
    models: List[Tuple[str, dict]]
    streams: List[Tuple[str, dict]]
    strategy: Tuple[str, dict] = ("Supervised", {})
    n_rounds: int = 1
    seed: int = 42
    out_dir: Optional[Path] = None

    def validate(self) -> "ExperimentConfig":
        if self.n_samples < 2:
            raise ConfigError("n_samples must be at least 2")
        if self.n_pretrain < 1:
            raise ConfigError("n_pretrain must be at least 1")
        if not self.n_pretrain < self.n_samples:
            raise ConfigError("n_pretrain < n_samples is required")
        if self.n_rounds < 1:
            raise ConfigError("n_rounds must be at least 1")
        if not self.models:
            raise ConfigError("at least one model is required")
        if not self.streams:
            raise ConfigError("at least one stream is required")
        return self


@dataclass
class Job:
    """One resolved (model, stream, round) combination, ready to run."""

    index: int
    model: str
    stream: str
    round_index: int
    learner: object
    stream_obj: object
    strategy: object
    schema: StreamSchema


@dataclass
class JobResult:
    job: Job
    status: str
    records: List[PrequentialRecord]
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def resolve(config: ExperimentConfig) -> List[Job]:
    """Instantiate every (model, stream, round) job with derived sub-seeds.

    All models in a round share the stream's seed so comparisons see the
    same instance sequence; the strategy seed is independent of the
    strategy's name so budget-1 runs replay supervised runs exactly.
    """
    config.validate()
    strategy_name, strategy_params = config.strategy
    strategy_entry = _lookup(STRATEGY_REGISTRY, strategy_name, "strategy")

    jobs = []
    index = 0
    for mi, (model_name, model_params) in enumerate(config.models):
        entry = _lookup(MODEL_REGISTRY, model_name, "model")
        for si, (stream_name, stream_params) in enumerate(config.streams):
            stream_factory = _lookup(STREAM_REGISTRY, stream_name, "stream").factory
            for r in range(config.n_rounds):
                stream_seed = derive_seed(config.seed, "stream", si, stream_name, r)
                try:
                    stream_obj = stream_factory(stream_seed, **stream_params)
                except TypeError as exc:
                    raise ConfigError(f"stream {stream_name!r}: {exc}") from exc
                schema = stream_obj.schema
                if schema.label_kind == REGRESSION:
                    if not entry.caps.supports_regression:
                        raise ConfigError(
                            f"model {model_name!r} does not support regression streams")
                    if strategy_name != "Supervised":
                        raise ConfigError(
                            "regression streams require the supervised strategy")
                else:
                    if entry.caps.supports_regression and not entry.caps.supports_multiclass:
                        raise ConfigError(
                            f"model {model_name!r} requires a regression stream")
                    if not entry.caps.supports_multiclass and schema.n_classes > 2:
                        raise ConfigError(
                            f"model {model_name!r} does not support multi-class streams")
                learner_seed = derive_seed(config.seed, "model", mi, model_name, si, r)
                strategy_seed = derive_seed(config.seed, "strategy", mi, si, r)
                try:
                    learner = entry.factory(schema, learner_seed, **model_params)
                except TypeError as exc:
                    raise ConfigError(f"model {model_name!r}: {exc}") from exc
                strategy = strategy_entry.factory(strategy_seed, **strategy_params)
                jobs.append(Job(index, model_name, stream_name, r,
                                learner, stream_obj, strategy, schema))
                index += 1
    return jobs


# ---------------------------------------------------------------------------
# The prequential loop
# ---------------------------------------------------------------------------


def run_prequential(learner, stream, strategy, *, n_samples: int,
                    n_pretrain: int, model_name: str = "model",
                    stream_name: str = "stream", round_index: int = 0,
                    out_records: Optional[list] = None,
                    withhold_steps=None) -> List[PrequentialRecord]:
    """Pretrain, then test-then-train with strategy-gated label access.

    Each remaining instance is predicted first, recorded, and only then (if
    the strategy queried the label, or in supervised mode) used for the
    online update, so a record's prediction is never influenced by its own
    label.  ``withhold_steps`` suppresses the update at the given steps
    without touching the decision log; it exists so tests can prove that
    property.
    """
    records = out_records if out_records is not None else []
    schema = stream.schema
    classification = schema.is_classification

    pretrain = []
    for _ in range(n_pretrain):
        try:
            pretrain.append(next(stream))
        except StopIteration:
            raise InvalidPretrainError(
                f"stream {stream_name!r} ended after {len(pretrain)} of "
                f"{n_pretrain} pretraining instances") from None
    X = np.stack([inst.features for inst in pretrain])
    y = [inst.label for inst in pretrain]
    learner.fit(X, y)

    for step in range(n_pretrain, n_samples):
        try:
            instance = next(stream)
        except StopIteration:
            raise ConfigError(
                f"stream {stream_name!r} ended at step {step}, but "
                f"n_samples={n_samples} was requested") from None
        x = instance.features
        if classification:
            proba = learner.predict_proba(x)
            pred = argmax_label(proba)
        else:
            proba = None
            pred = learner.predict(x)
        queried = strategy.decide(proba)
        records.append(PrequentialRecord(
            step, instance.label, pred, int(queried),
            model_name, stream_name, round_index))
        if queried and not (withhold_steps and step in withhold_steps):
            learner.partial_fit(x, instance.label)
    return records


def run_job(job: Job, config: ExperimentConfig) -> JobResult:
    """Run one job; failures keep the partial record log."""
    records: List[PrequentialRecord] = []
    try:
        run_prequential(
            job.learner, job.stream_obj, job.strategy,
            n_samples=config.n_samples, n_pretrain=config.n_pretrain,
            model_name=job.model, stream_name=job.stream,
            round_index=job.round_index, out_records=records)
        return JobResult(job, "ok", records)
    except Exception as exc:  # noqa: BLE001 - sibling jobs must survive
        return JobResult(job, "failed", records, error=f"{type(exc).__name__}: {exc}")


def run_experiment(config: ExperimentConfig, n_jobs: int = 1) -> List[JobResult]:
    """Resolve and run every job; results come back in job-index order
    regardless of completion order."""
    jobs = resolve(config)
    if n_jobs <= 1:
        return [run_job(job, config) for job in jobs]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        futures = [pool.submit(run_job, job, config) for job in jobs]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------


@dataclass
class SummaryRow:
    """Aggregate of all rounds of one (model, stream) pair."""

    model: str
    stream: str
    rounds: int
    mean_score: float
    std_score: float
    mean_macro_f1: float
    spend: float
    label_kind: str = CLASSIFICATION


def summarize(results: Sequence[JobResult]) -> List[SummaryRow]:
    """Per-(model, stream) mean and population std of the per-round scores.

    The score is accuracy for classification streams and mean absolute
    error for regression streams; macro-F1 is 0 for regression rows.
    Failed jobs are excluded.
    """
    groups: Dict[Tuple[str, str], List[JobResult]] = {}
    for result in results:
        if not result.ok:
            continue
        groups.setdefault((result.job.model, result.job.stream), []).append(result)

    rows = []
    for (model, stream), group in groups.items():
        schema = group[0].job.schema
        scores = []
        f1s = []
        queried = 0
        total = 0
        for result in group:
            recs = result.records
            if schema.is_classification:
                scores.append(float(np.mean(
                    [1.0 if r.pred_label == r.true_label else 0.0 for r in recs])))
                f1s.append(macro_f1(ConfusionMatrix.from_records(recs, schema.n_classes)))
            else:
                scores.append(float(np.mean(
                    [abs(float(r.pred_label) - float(r.true_label)) for r in recs])))
                f1s.append(0.0)
            queried += sum(r.queried for r in recs)
            total += len(recs)
        rows.append(SummaryRow(
            model=model, stream=stream, rounds=len(group),
            mean_score=float(np.mean(scores)), std_score=float(np.std(scores)),
            mean_macro_f1=float(np.mean(f1s)),
            spend=queried / total if total else 0.0,
            label_kind=schema.label_kind))
    return rows
