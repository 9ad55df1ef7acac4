"""presetsel: per-preset transcoding time prediction and live preset selection.

Predicts how long each x264 preset will take to transcode a video chunk from
header/metadata-derived features, then picks the slowest preset that fits the
live-streaming time budget, maximizing quality at fixed bitrate.
"""

from .presets import PRESETS, N_PRESETS, PRESET_OPTIONS, ordinal, preset_options
from .stats import (
    ChunkStats,
    FrameStats,
    StatsParseError,
    StreamMeta,
    make_frame,
    parse_chunk_stats,
    validate_chunk,
    write_chunk_stats,
)
from .features import (
    CategoricalCodebook,
    DEFAULT_CODEBOOK,
    FEATURE_NAMES,
    N_FEATURES,
    encode_categorical,
    extract_features,
    feature_names,
    load_codebook,
    mv_chunk_sum,
    mv_count,
    mv_magnitude,
    mv_mean,
)
from .dataset import (
    Dataset,
    DatasetFormatError,
    DatasetRecord,
    TranscodeError,
    assemble_dataset,
    generate_synthetic,
    load_dataset,
    measure_transcode,
    save_dataset,
    split_dataset,
    synthetic_time,
)
from .regression import (
    BundleFormatError,
    CVReport,
    FitError,
    Metrics,
    ModelSpec,
    PresetModelBundle,
    TrainedModel,
    compute_metrics,
    default_specs,
    evaluate_bundle,
    fit,
    kfold_cv,
    load_bundle,
    predict,
    save_bundle,
    select_best_model,
    train_all_presets,
)
from .featselect import (
    ImportanceReport,
    IndicatorTable,
    RfecvResult,
    cross_preset_indicator,
    feature_importance,
    retrain_with_selected,
    rfecv,
)
from .selector import (
    BudgetSpec,
    LatencyRecord,
    SelectionDecision,
    aggregate_chunk_results,
    compute_budget,
    decision_csv_row,
    predict_all_presets,
    select_preset,
)
from .simulate import (
    GroundTruthError,
    GroundTruthTable,
    SimulationReport,
    load_ground_truth,
    simulate,
)

__version__ = "0.1.0"
