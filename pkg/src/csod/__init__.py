"""Coreset selection engine for multi-object detection datasets."""

from .model import (
    BoundingBox,
    Dataset,
    DatasetError,
    DatasetManifest,
    FeatureStore,
    ImageAnnotations,
    ObjectRecord,
    SelectionResult,
    cosine,
    load_dataset,
    save_dataset,
)
from .prototypes import (
    IMAGEWISE,
    OBJECTWISE,
    Prototype,
    PrototypeIndex,
    build_imagewise,
    build_objectwise,
    class_prototype,
    sizewise_prototypes,
    sizewise_similarity_report,
)
from .selection import (
    SelectionConfig,
    SelectionError,
    SelectionState,
    default_lambda,
    presample,
    select,
    sweep_lambda,
)
from .baselines import (
    ImageFeature,
    facility_location_greedy,
    herding,
    image_features,
    kcenter_greedy,
    random_annotation_max,
    random_annotation_range,
    random_full,
    random_ratio,
    random_uniform,
)
from .metrics import (
    SizeThresholds,
    SubsetReport,
    class_ratio_entropy,
    coverage_objective,
    kl_divergence,
    size_histogram,
    size_ratio,
    subset_report,
)
from .synth import SynthSpec, generate, generate_files, random_unit_centers

__version__ = "0.1.0"
