"""Success-rate estimation for raycasting target selection in VR scenes."""

from .geometry import (
    AngularEndpoint,
    AngularExtent,
    AngularFrame,
    CameraPose,
    Rect,
    Sphere,
    angular_extent_rect,
    angular_width_sphere,
    endpoint_to_angular,
    movement_frame,
    world_frame,
)
from .integrate import (
    Method,
    SuccessRate,
    UnreachableTargetRate,
    inverse_width,
    normal_cdf,
    sr_circle,
    sr_monte_carlo,
    sr_rect,
)
from .model import (
    BASELINE_CONSTANTS,
    DEFAULT_VALIDITY_RANGE,
    AmplitudeTerms,
    DistributionParams,
    ModelConstants,
    ModelSpec,
    ModelVariant,
    baseline_spec,
    distribution_params,
    model_from_document,
    model_to_document,
    per_axis_params,
    preset,
)
from .fitting import (
    CellStats,
    Condition,
    FitResult,
    TrialRecord,
    ValidationMetrics,
    evaluate,
    fit_linear,
    fit_model,
    ks_normality,
    loocv,
    mle_cell_stats,
    observed_sr,
    read_trials_csv,
    screen_outliers,
    validate_model,
)
from .scene import (
    EstimateReport,
    Scene,
    SceneOptions,
    SceneTarget,
    SchemaError,
    estimate_scene,
    parse_scene,
    report_to_document,
    scene_to_document,
    sweep,
)

__version__ = "0.1.0"
