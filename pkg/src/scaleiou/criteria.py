"""The six box similarity criteria: IoU, GIoU, alpha-IoU, NWD, SIoU, GSIoU.

SIoU raises IoU to a size-dependent power

    p = 1 - gamma * exp(-sqrt(w1*h1 + w2*h2) / (sqrt(2) * kappa))

so small boxes are scored more leniently (gamma > 0) or more strictly
(gamma < 0) than large ones, while the plain IoU behavior is recovered for
large boxes, for kappa -> 0, and exactly at IoU in {0, 1}. GSIoU applies the
same signed power to GIoU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import Box, enclosing_hull_area, intersection_area, union_area


class CriterionId(Enum):
    IOU = "iou"
    GIOU = "giou"
    ALPHA_IOU = "alpha-iou"
    NWD = "nwd"
    SIOU = "siou"
    GSIOU = "gsiou"


@dataclass(frozen=True)
class CriterionParams:
    """Parameters of the criteria family.

    gamma <= 1 and kappa > 0 guarantee the exponent p stays positive.
    alpha is the constant alpha-IoU power; nwd_constant the NWD normalizer.
    """

    gamma: float = 0.2
    kappa: float = 64.0
    alpha: float = 3.0
    nwd_constant: float = 32.0

    def __post_init__(self):
        for name in ("gamma", "kappa", "alpha", "nwd_constant"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"parameter {name!r} must be finite, got {v!r}")
        if self.gamma > 1:
            raise ValueError(f"gamma must be <= 1, got {self.gamma}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.nwd_constant <= 0:
            raise ValueError(f"nwd_constant must be > 0, got {self.nwd_constant}")


# Named presets: lenient setting for evaluation-style use, strict setting
# (p > 1, emphasizing small objects) for loss-style use.
EVALUATION_PRESET = CriterionParams(gamma=0.2, kappa=64.0)
LOSS_PRESET = CriterionParams(gamma=-3.0, kappa=16.0)

DEFAULT_PARAMS = EVALUATION_PRESET


def iou(b1: Box, b2: Box) -> float:
    """Intersection over union, in [0, 1]."""
    return intersection_area(b1, b2) / union_area(b1, b2)


def giou(b1: Box, b2: Box) -> float:
    """Generalized IoU: IoU - (hull - union)/hull, in (-1, 1]."""
    u = union_area(b1, b2)
    hull = enclosing_hull_area(b1, b2)
    return intersection_area(b1, b2) / u - (hull - u) / hull


def exponent_p(b1: Box, b2: Box, params: CriterionParams) -> float:
    """Scale-adaptive exponent p = 1 - gamma * exp(-sqrt(w1h1 + w2h2)/(sqrt(2) kappa))."""
    s = math.sqrt(b1.w * b1.h + b2.w * b2.h)
    return 1.0 - params.gamma * math.exp(-s / (math.sqrt(2.0) * params.kappa))


def signed_power(base: float, p: float) -> float:
    """sign(base) * |base|**p, with 0**p = 0 for p > 0."""
    if base == 0.0:
        return 0.0
    if p == 1.0:
        # exact identity so gamma = 0 reproduces IoU/GIoU bit-for-bit
        return base
    return math.copysign(math.exp(p * math.log(abs(base))), base)


def siou(b1: Box, b2: Box, params: CriterionParams) -> float:
    """Scale-adaptive IoU: IoU**p, in [0, 1]."""
    return signed_power(iou(b1, b2), exponent_p(b1, b2, params))


def gsiou(b1: Box, b2: Box, params: CriterionParams) -> float:
    """Signed-power extension of GIoU: sign(g) * |g|**p, in (-1, 1]."""
    return signed_power(giou(b1, b2), exponent_p(b1, b2, params))


def alpha_iou(b1: Box, b2: Box, params: CriterionParams) -> float:
    """IoU**alpha with a constant exponent, in [0, 1]."""
    return signed_power(iou(b1, b2), params.alpha)


def wasserstein_distance(b1: Box, b2: Box) -> float:
    """2-Wasserstein distance between the Gaussians N([x, y], diag(w^2/4, h^2/4))
    fitted on the two boxes."""
    d2 = (
        (b1.x - b2.x) ** 2
        + (b1.y - b2.y) ** 2
        + ((b1.w - b2.w) / 2) ** 2
        + ((b1.h - b2.h) / 2) ** 2
    )
    return math.sqrt(d2)


def nwd(b1: Box, b2: Box, params: CriterionParams) -> float:
    """Normalized Wasserstein distance exp(-W2 / C), in (0, 1]."""
    return math.exp(-wasserstein_distance(b1, b2) / params.nwd_constant)


def evaluate(cid: CriterionId, b1: Box, b2: Box, params: CriterionParams = DEFAULT_PARAMS) -> float:
    """Uniform dispatch over the criterion family."""
    if cid is CriterionId.IOU:
        return iou(b1, b2)
    if cid is CriterionId.GIOU:
        return giou(b1, b2)
    if cid is CriterionId.ALPHA_IOU:
        return alpha_iou(b1, b2, params)
    if cid is CriterionId.NWD:
        return nwd(b1, b2, params)
    if cid is CriterionId.SIOU:
        return siou(b1, b2, params)
    if cid is CriterionId.GSIOU:
        return gsiou(b1, b2, params)
    raise ValueError(f"unknown criterion {cid!r}")


def value_range(cid: CriterionId) -> tuple[float, float]:
    """Theoretical range of a criterion's values."""
    if cid in (CriterionId.GIOU, CriterionId.GSIOU):
        return (-1.0, 1.0)
    return (0.0, 1.0)
