import numpy as np
import pytest

from scaleiou import Box, giou, iou


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_box(rng, lo=1.0, hi=200.0, size_lo=5.0, size_hi=100.0):
    x, y = rng.uniform(lo, hi, 2)
    w, h = rng.uniform(size_lo, size_hi, 2)
    return Box(float(x), float(y), float(w), float(h))


def random_smooth_pair(rng, min_edge_gap=0.05, min_overlap=0.02):
    """A random pair away from gradient kinks: no near-coinciding edges, and
    IoU/GIoU bounded away from their own singular points."""
    while True:
        b1 = random_box(rng)
        b2 = random_box(rng)
        edges = [
            abs(e1 - e2)
            for e1 in (b1.x_min, b1.x_max)
            for e2 in (b2.x_min, b2.x_max)
        ] + [
            abs(e1 - e2)
            for e1 in (b1.y_min, b1.y_max)
            for e2 in (b2.y_min, b2.y_max)
        ]
        if min(edges) < min_edge_gap:
            continue
        u = iou(b1, b2)
        g = giou(b1, b2)
        if abs(g) < min_overlap or (0 < u < min_overlap):
            continue
        return b1, b2
