"""olstream: incremental learners, drifting data streams, query strategies,
drift detectors, and a prequential experiment runner with comparison reports.
"""

from .core import (
    CLASSIFICATION,
    DRIFT,
    REGRESSION,
    STABLE,
    WARNING,
    BaseLearner,
    ConfigError,
    EmptySeriesError,
    Instance,
    InvalidArgumentError,
    InvalidPretrainError,
    LearnerCaps,
    MissingLabelError,
    NotFittedError,
    NumericError,
    OlstreamError,
    ParseError,
    Prediction,
    RegistryError,
    SchemaError,
    StreamSchema,
    UnsupportedError,
    derive_seed,
    make_rng,
)
from .drift import DdmDetector, PageHinkleyDetector
from .ensembles import (
    AdaptiveRandomForest,
    ChunkWeightedEnsemble,
    OzaBagging,
    ensemble_predict,
    poisson_draw,
)
from .evaluate import (
    ConfusionMatrix,
    ExperimentConfig,
    MetricSeries,
    PrequentialRecord,
    macro_f1,
    resolve,
    run_experiment,
    run_prequential,
    summarize,
    windowed_accuracy,
    windowed_mae,
    windowed_query_rate,
)
from .learners import (
    HoeffdingTreeClassifier,
    Knn,
    MajorityClass,
    OnlineGradientClassifier,
    hoeffding_bound,
)
from .report import (
    ComparisonSpec,
    read_records_csv,
    render_comparison_svg,
    write_records_csv,
    write_summary,
)
from .streams import (
    CsvStream,
    DriftSchedule,
    HyperplaneConcept,
    HyperplaneStream,
    SeaConcept,
    SeaStream,
    concept_mix,
    hyperplane_label,
    sea_label,
    write_stream_csv,
)
from .strategies import (
    FixedUncertainty,
    QueryStrategy,
    RandomQuery,
    Supervised,
    VariableUncertainty,
)

__version__ = "0.1.0"
