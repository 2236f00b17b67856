"""Texture descriptors and two-stage mammogram patch classification."""

from .enhance import ClaheConfig, clahe, minmax_normalize, ts_clahe
from .dpselect import (
    DpRanking,
    SubsetSearchResult,
    class_stats,
    dp_scores,
    incremental_select,
    selection_report,
)
from .errors import (
    BundleFormatError,
    BundleVersionError,
    ConfigError,
    ImageDecodeError,
    ManifestError,
    SelectionError,
    StatsError,
    TexdescError,
    TrainingError,
)
from .evaluation import (
    ConfusionCounts,
    EvaluationReport,
    auc,
    cross_validate,
    emit_report,
    evaluate_grid,
    metrics,
    roc_points,
)
from .gabor import (
    GaborParams,
    ResponseField,
    build_bank,
    gabor_kernel,
    gabor_response,
    gradient_response,
)
from .hox import (
    FeatureVector,
    HistogramConfig,
    block_descriptor,
    cell_histograms,
    descriptor_length,
    extract_hog,
    extract_hot,
)
from .patchio import (
    Dataset,
    ImagePatch,
    PatchRecord,
    density_slice,
    load_manifest,
    save_dataset,
)
from .pbdct import BandMask, DctCoefficients, band_mask, dct2, extract_pbdct, idct2
from .pipeline import (
    ClassificationResult,
    DescriptorConfig,
    PipelineBundle,
    StageModel,
    classify,
    extract_features,
    extract_matrix,
    load_bundle,
    save_bundle,
    train_pipeline,
)
from .svm import DecisionScore, KernelSpec, SvmModel, decision, decision_values, train_svm

__version__ = "0.1.0"
