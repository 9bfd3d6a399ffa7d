"""Poincare-disk geodesic flow: metrics, Busemann functions, brackets, rectangles and lemma verifiers."""

from .geometry import (
    GX_TOL,
    BoundaryPoint,
    Geodesic,
    bracket,
    busemann,
    busemann_backward,
    distance_to_geodesic,
    foot_time,
    gx_distance,
    horocycle_shift,
    hyp_dist,
    is_strong_stable,
    is_strong_unstable,
    random_geodesic,
    rotate_about,
    v_time,
)
from .rectangles import (
    Arc,
    GoodRectangle,
    crosses_ball,
    make_rectangle,
    maximal_rectangle,
    proj_rect,
    rect_geodesic,
    return_time,
)
from .verify import LEMMAS, LemmaReport, VerifierConfig, estimate_L, verify, verify_all

__all__ = [
    "GX_TOL", "LEMMAS", "Arc", "BoundaryPoint", "Geodesic", "GoodRectangle", "LemmaReport", "VerifierConfig",
    "bracket", "busemann", "busemann_backward", "crosses_ball", "distance_to_geodesic", "estimate_L",
    "foot_time", "gx_distance", "horocycle_shift", "hyp_dist", "is_strong_stable", "is_strong_unstable",
    "make_rectangle", "maximal_rectangle", "proj_rect", "random_geodesic", "rect_geodesic", "return_time",
    "rotate_about", "v_time", "verify", "verify_all",
]
