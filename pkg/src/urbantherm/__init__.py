"""Longitudinal urban thermal-image analysis.

Converts 16-bit radiometric counts to surface temperatures, applies
per-class emissivity correction through semantic masks, scores
predicted masks, extracts per-feature temperature statistics and
diurnal profiles, and tracks hot/cool spots across months of imagery.
"""

from .errors import (
    CatalogError,
    ConfigurationError,
    DegenerateResultError,
    DimensionMismatchError,
    EmptyInputError,
    FormatError,
    RangeError,
    StateError,
    UrbanthermError,
)
from .maskcore import (
    ALL_CLASSES,
    BACKGROUND,
    BUILDING,
    CLASS_NAMES,
    NUM_CLASSES,
    OFFSHORE,
    PALETTE,
    ROAD,
    SKY,
    TAXONOMY,
    VEGETATION,
    ClassTaxonomy,
    LabelMask,
    class_name,
    class_pixel_sets,
    read_mask,
    render_overlay,
    validate_mask_file,
    write_mask,
)
from .radiometric import (
    DEFAULT_EMISSIVITIES,
    MAX_COUNT,
    EmissivityTable,
    PlanckConstants,
    RadiometricFrame,
    TemperatureField,
    correct_emissivity,
    counts_to_temperature,
    forward_model,
)
from .segeval import (
    BatchReport,
    IoUReport,
    aggregate_reports,
    confusion_matrix,
    evaluate,
    evaluate_batch,
)
from .thermstats import (
    DEFAULT_BUCKET_HOURS,
    BucketSummary,
    FeatureStats,
    StatErrorRecord,
    compare_masks,
    diurnal_profile,
    extract_stats,
)
from .hotspot import (
    HotspotMap,
    PersistenceResult,
    SpotRegion,
    detect,
    longitudinal_compare,
    regions,
)
from .synthgen import HotPatch, SceneSpec, SceneSample, ThermalModel, demo_scene, generate, perturb_mask, write_scene
from .pipeline import (
    Catalog,
    CatalogEntry,
    QuarantineRecord,
    ReportBundle,
    RunConfig,
    build_catalog,
    run_analysis,
)
from .rasters import read_counts, read_pgm, write_counts, write_pgm

__version__ = "1.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]
