"""Scale-adaptive bounding-box similarity criteria and their analysis toolkit.

The core is the SIoU family: IoU raised to a size-dependent power so small
boxes can be scored more leniently (for evaluation) or more strictly (for
training losses), together with IoU, GIoU, alpha-IoU, NWD, loss gradients,
Monte Carlo and quadrature distribution analysis, detection mAP, and rating
statistics.
"""

from .criteria import (
    CriterionId,
    CriterionParams,
    DEFAULT_PARAMS,
    EVALUATION_PRESET,
    LOSS_PRESET,
    alpha_iou,
    evaluate,
    exponent_p,
    giou,
    gsiou,
    iou,
    nwd,
    siou,
    value_range,
)
from .errors import (
    DegenerateInput,
    EmptyCell,
    InsufficientSamples,
    NonDifferentiablePoint,
    ParseError,
    QuadratureNonConvergence,
    ScaleIoUError,
)
from .evaluation import (
    DetectionRecord,
    EvalConfig,
    GroundTruthRecord,
    MatchLabel,
    average_precision,
    count_ground_truths,
    map_report,
    match_detections,
)
from .geometry import (
    Box,
    SizeClass,
    area,
    enclosing_hull_area,
    intersection_area,
    size_class,
    union_area,
)
from .loss import (
    BoxGradient,
    finite_difference_gradient,
    loss_gradient,
    loss_value,
    reweight_gradient_ratio,
    reweight_loss_ratio,
)
from .rating import (
    RatingRecord,
    criterion_rating_correlation,
    group_means,
    kendall_tau,
    one_way_anova,
    relative_gap,
)
from .stats import (
    BoxSamplerConfig,
    DistributionSummary,
    PdfMethod,
    ShiftDirection,
    ShiftModel,
    empirical_pdf,
    moment_curve,
    order_preservation_rate,
    shift_curve,
    simulate_criterion,
    summarize,
)
from .theory import (
    TheorySetup,
    giou_pdf,
    moment_consistency_report,
    theoretical_moment,
    theoretical_variance,
)

__version__ = "0.1.0"
