"""Sampled section-family predicates over good rectangles in the disk."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from ..errors import PreconditionError, UncertifiedTransition
from ..hyperbolic.geometry import Geodesic, busemann, gx_distance
from ..hyperbolic.rectangles import Arc, GoodRectangle, maximal_rectangle, proj_rect, rect_geodesic
from ..hyperbolic.verify import FINE_GX_TOL, VerifierConfig, estimate_L
from .core import Report

INTERIOR_MARGIN = 1e-12


@dataclass(frozen=True, eq=False)
class HyperbolicBackend:
    """Geodesic flow on the disk; sampled checks draw from ``config.seed``."""

    config: VerifierConfig = field(default_factory=VerifierConfig)


@dataclass(frozen=True, eq=False)
class RectangleFamily:
    alpha: float
    pairs: tuple  # (B, D) good rectangles on a common center

    def __post_init__(self):
        for i, (b, d) in enumerate(self.pairs):
            if b.center != d.center or not _arc_inside(b.uminus, d.uminus) or not _arc_inside(b.uplus, d.uplus):
                raise PreconditionError(f"B_{i} must be a sub-rectangle of D_{i}")

    def __len__(self):
        return len(self.pairs)

    @property
    def B(self) -> list[GoodRectangle]:
        return [p[0] for p in self.pairs]

    @property
    def D(self) -> list[GoodRectangle]:
        return [p[1] for p in self.pairs]


def _arc_inside(a: Arc, b: Arc) -> bool:
    return bool(b.contains(a.lo) and b.contains(a.lo + a.width)) and a.width <= b.width + 1e-14


def chain_family(c: Geodesic, tau: float, alpha: float, count: int, spacing: float | None = None,
                 inner: float = 1.0) -> RectangleFamily:
    """Rectangles on ``g_{k spacing} c`` sharing one pair of arcs; ``B`` keeps the middle ``inner`` of each arc."""
    spacing = 0.9 * alpha if spacing is None else spacing
    centers = [c.flow(k * spacing) for k in range(count)]
    rects = [maximal_rectangle(x, tau) for x in centers]
    um, up = rects[0].uminus, rects[0].uplus
    for r in rects[1:]:
        um, up = um.intersect(r.uminus), up.intersect(r.uplus)
    lo, hi = (1 - inner) / 2, (1 + inner) / 2
    pairs = []
    for x in centers:
        d = GoodRectangle(x, tau, um, up)
        pairs.append((d.sub((lo, hi), (lo, hi)), d))
    return RectangleFamily(alpha, tuple(pairs))


# --- sampled geometry --------------------------------------------------------------------------------


def _hit(rect: GoodRectangle, eta: Geodesic, lo: float, hi: float, interior: bool = False):
    """Time in ``[lo, hi]`` at which ``eta`` crosses ``rect``, or None.

    ``interior`` demands endpoints at least ``INTERIOR_MARGIN`` inside the arcs;
    the result is ``"undecided"`` when an endpoint is within that margin.
    """
    inside = rect.holds(eta.theta_minus, eta.theta_plus)
    if interior:
        strict = (_margin(rect.uminus, eta.theta_minus) > INTERIOR_MARGIN
                  and _margin(rect.uplus, eta.theta_plus) > INTERIOR_MARGIN)
        if inside and not strict:
            return "undecided"
    if not inside:
        return None
    c = rect.center
    f = lambda s: busemann(c, eta.point(s))  # noqa: E731
    a, b = f(lo), f(hi)
    if a == 0:
        return lo
    if b == 0:
        return hi
    if not (a > 0 > b):
        return None
    return bisect(f, lo, hi, xtol=1e-13, maxiter=200)


def _margin(arc: Arc, theta: float) -> float:
    off = (theta - arc.lo) % (2 * math.pi)
    return min(off, arc.width - off) if off <= arc.width else -1.0


def _sample(rect: GoodRectangle, rng, n: int) -> list[Geodesic]:
    return rect.sample(rng, n)


def _next_section(family: RectangleFamily, eta: Geodesic, horizon: float, forward: bool = True):
    """(index, time) of the first ``B`` section met strictly after (or before) time 0."""
    best = None
    undecided = False
    for j, b in enumerate(family.B):
        t = _hit(b, eta, 1e-9, horizon, interior=True) if forward else \
            _hit(b, eta, -horizon, -1e-9, interior=True)
        if t == "undecided":
            undecided = True
            continue
        if t is not None and (best is None or (t < best[1] if forward else t > best[1])):
            best = (j, t)
    return best, undecided


# --- predicates -----------------------------------------------------------------------------------------


def _diameter(rect: GoodRectangle) -> float:
    fr = (0.0, 0.5, 1.0)
    etas = [rect_geodesic(rect, rect.uminus.lo + a * rect.uminus.width, rect.uplus.lo + b * rect.uplus.width)
            for a in fr for b in fr]
    return max(gx_distance(x, y, tol=FINE_GX_TOL) for i, x in enumerate(etas) for y in etas[i + 1:])


def check_proper_family(backend: HyperbolicBackend, family: RectangleFamily, sample_budget: int | None = None) -> Report:
    cfg = backend.config
    n = sample_budget or cfg.samples
    rng = np.random.default_rng([cfg.seed, 100])
    alpha = family.alpha
    rep = Report("proper_family")
    diam = max(_diameter(d) for d in family.D)
    rep.add("diameter", diam < alpha, f"sampled max diam(D_i) {diam:.6g} vs alpha {alpha:.6g}", diam)
    # coverage over phase points up to alpha before some D_i
    misses = 0
    witness = None
    for _ in range(n):
        i = int(rng.integers(len(family)))
        eta = family.D[i].sample(rng, 1)[0].flow(-alpha * rng.random())
        ok = any(isinstance(t, float) for t in (_hit(b, eta, 0.0, alpha, interior=True) for b in family.B))
        if not ok:
            misses += 1
            witness = witness or eta
    rep.add("coverage", misses == 0, f"{n - misses}/{n} sampled phase points reach some Int B_i within alpha",
            float(misses), witness)
    bad = None
    per = max(1, n // len(family))
    for i, d in enumerate(family.D):
        for eta in d.sample(rng, per):
            for j, dj in enumerate(family.D):
                if j == i:
                    continue
                ahead = _hit(dj, eta, 0.0, 4 * alpha)
                behind = _hit(dj, eta, -4 * alpha, 0.0)
                if ahead is not None and behind is not None:
                    bad = (i, j, eta)
                    break
            if bad:
                break
        if bad:
            break
    rep.add("disjoint_returns", bad is None,
            "no sampled D_i geodesic meets another D_j both within [0, 4a] and [-4a, 0]" if bad is None
            else f"a geodesic of D_{bad[0]} meets D_{bad[1]} within 4 alpha both ways", witness=bad)
    return rep


def check_pre_markov(backend: HyperbolicBackend, family: RectangleFamily) -> Report:
    cfg = backend.config
    rng = np.random.default_rng([cfg.seed, 101])
    alpha = family.alpha
    per = max(1, cfg.samples // len(family))
    rep = Report("pre_markov")
    pairs = 0
    for i, b in enumerate(family.B):
        etas = b.sample(rng, per)
        for j, bj in enumerate(family.B):
            if not any(_hit(bj, eta, -2 * alpha, 2 * alpha) is not None for eta in etas):
                continue
            pairs += 1
            for eta in etas:
                if _hit(family.D[j], eta, -3 * alpha, 3 * alpha) is None:
                    rep.add("containment", False, f"a geodesic of B_{i} misses the 3 alpha flow box of D_{j}",
                            witness=(i, j, eta))
                    return rep
    rep.add("containment", True, f"{pairs} sampled intersecting pairs contained in the flow boxes", float(pairs))
    return rep


def check_markov_property(backend: HyperbolicBackend, family: RectangleFamily) -> Report:
    cfg = backend.config
    rng = np.random.default_rng([cfg.seed, 102])
    per = max(1, cfg.samples // len(family))
    horizon = 4 * family.alpha
    rep = Report("markov")
    for forward, name in ((True, "forward"), (False, "backward")):
        bad = None
        for i, b in enumerate(family.B):
            for eta in b.sample(rng, per):
                # a second point of B_i with the same forward (backward) endpoint
                if forward:
                    other = rect_geodesic(b, float(b.uminus.sample(rng)), eta.theta_plus)
                else:
                    other = rect_geodesic(b, eta.theta_minus, float(b.uplus.sample(rng)))
                (h1, u1), (h2, u2) = (_next_section(family, x, horizon, forward) for x in (eta, other))
                if u1 or u2:
                    continue
                if (h1 and h1[0]) != (h2 and h2[0]):
                    bad = (i, eta, other, h1, h2)
                    break
            if bad:
                break
        side = "forward endpoint" if forward else "backward endpoint"
        rep.add(name, bad is None,
                f"sampled points sharing a {side} have the same {'next' if forward else 'previous'} section"
                if bad is None else f"B_{bad[0]}: two points sharing a {side} go to different sections",
                witness=bad)
    return rep


@dataclass(frozen=True, eq=False)
class SampledCoding:
    backend: object
    family: RectangleFamily
    matrix: np.ndarray
    roof: dict  # (i, j) -> mean observed return time
    roof_range: dict  # (i, j) -> (min, max)
    witnesses: dict  # (i, j) -> certified witness geodesic


def build_sigma(backend: HyperbolicBackend, family: RectangleFamily) -> SampledCoding:
    """Transitions witnessed by sampled geodesics; undecidable pairs raise ``UncertifiedTransition``."""
    cfg = backend.config
    rng = np.random.default_rng([cfg.seed, 103])
    per = max(1, cfg.samples // len(family))
    times: dict[tuple, list] = {}
    witnesses = {}
    undecided = set()
    for i, b in enumerate(family.B):
        for eta in b.sample(rng, per):
            hit, unsure = _next_section(family, eta, 4 * family.alpha)
            if unsure:
                undecided.add((i, hit[0] if hit else None))
                continue
            if hit is None:
                continue
            times.setdefault((i, hit[0]), []).append(hit[1])
            witnesses.setdefault((i, hit[0]), eta)
    pending = sorted(p for p in undecided if p not in times)
    if pending:
        raise UncertifiedTransition(pending)
    n = len(family)
    a = np.zeros((n, n), dtype=np.int8)
    for i, j in times:
        a[i, j] = 1
    # a finite family in the cover need not give an irreducible shift, so rows may be empty
    matrix = a
    roof = {k: float(np.mean(v)) for k, v in times.items()}
    ranges = {k: (float(min(v)), float(max(v))) for k, v in times.items()}
    return SampledCoding(backend, family, matrix, roof, ranges, witnesses)


def regularity_report(backend: HyperbolicBackend, coding: SampledCoding) -> Report:
    """Empirical Lipschitz constant of return times and Holder exponent of the projections."""
    cfg = backend.config
    family = coding.family
    rng = np.random.default_rng([cfg.seed, 104])
    L = estimate_L(cfg)
    bound = 2 * L * math.exp(family.alpha)
    rep = Report("regularity")
    worst = 0.0
    per = max(2, cfg.samples // max(1, len(family)))
    for i, b in enumerate(family.B):
        etas = b.sample(rng, per)
        for v, w in zip(etas[::2], etas[1::2]):
            hv, _ = _next_section(family, v, 4 * family.alpha)
            hw, _ = _next_section(family, w, 4 * family.alpha)
            if hv is None or hw is None or hv[0] != hw[0]:
                continue
            gx = gx_distance(v, w, tol=FINE_GX_TOL)
            if gx > 0:
                worst = max(worst, abs(hv[1] - hw[1]) / gx)
    rep.add("return_time", worst <= bound, f"return-time Lipschitz ratio {worst:.6g} vs 2 L C = {bound:.6g}", worst)
    xs, ys = [], []
    for d in family.D:
        for x in d.sample(rng, per):
            frac = 10 ** rng.uniform(-4, 0)
            tm = d.uminus.lo + min(max((x.theta_minus - d.uminus.lo) % (2 * math.pi)
                                       + frac * d.uminus.width * rng.uniform(-1, 1), 0), d.uminus.width)
            near = rect_geodesic(d, tm, x.theta_plus)
            y = near.flow(min(family.alpha / 2, 2 * gx_distance(x, near, tol=FINE_GX_TOL)) * rng.uniform(-1, 1))
            a_ = gx_distance(x, y, tol=FINE_GX_TOL)
            b_ = gx_distance(x, proj_rect(d, y, family.alpha), tol=FINE_GX_TOL)
            if a_ > 0 and b_ > 0:
                xs.append(a_)
                ys.append(b_)
    if len(xs) >= 2:
        beta = float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
        rep.add("projection", beta >= cfg.holder_min, f"projection Holder exponent {beta:.4g} by regression", beta)
    else:
        rep.add("projection", False, "too few projection samples")
    return rep
