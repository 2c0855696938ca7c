"""Open-set multi-class classification with per-class bounding hyperspheres.

Each training class is wrapped in a hypersphere (class mean, max distance
to the mean); queries outside every sphere are rejected as UNKNOWN, and
overlapping spheres are resolved by a closed-set classifier trained only
on the contested classes.  A softening parameter grows or shrinks the
boundaries, and the evaluation package implements leave-P-class-out
cross-validation with openness-aware f-measures.
"""

from .baselines import TwoStepModel, fit_envelope, train_ovr_baseline, train_two_step
from .classifiers import (
    ClosedSetClassifier,
    LinearModel,
    LinearSvmParams,
    LocalClassifierCache,
    NearestCentroidClassifier,
    OvRClassifier,
    hinge_objective,
    make_classifier_factory,
    train_linear_svm_binary,
    train_nearest_centroid,
    train_ovr,
)
from .core import (
    ADDITIVE,
    EUCLIDEAN,
    MANHATTAN,
    RADIUS_FLOOR,
    RELATIVE,
    GalaxyModel,
    HypersphereModel,
    PredictionResult,
    SofteningConfig,
    acceptance_score,
    classify,
    classify_batch,
    compute_centroid,
    compute_radius,
    distance,
    distances_to_centers,
    effective_radius,
    filter_labels,
    membership_decision_error,
    score_matrix,
    soft_acceptance_score,
    train_galaxy,
)
from .dataset import (
    UNKNOWN_LABEL,
    CsvSchema,
    LabeledDataset,
    load_csv,
    load_feature_csv,
    save_csv,
)
from .evaluation import (
    DEFAULT_DELTA_GRID,
    GALAXY,
    H_GALAXY,
    METHOD_NAMES,
    OVR,
    TWO_STEP,
    DeltaSweepResult,
    EvaluationReport,
    FoldRecord,
    LpcoConfig,
    MethodResult,
    MethodSettings,
    NormalizationStats,
    SweepPoint,
    delta_sweep,
    fit_min_max,
    leave_p_class_out_cv,
    min_max_normalize,
    openness,
    rejection_f_measure,
    run_benchmark,
    weighted_f_measure,
)
from .modelio import MODEL_FORMAT_VERSION, load_model, save_model
from .synth import SyntheticSpec, generate_synthetic, sample_constrained_centers

__version__ = "0.1.0"
