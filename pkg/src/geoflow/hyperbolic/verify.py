"""Sampled numerical checks of the quantitative rectangle and flow estimates in the disk."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from ..errors import PreconditionError
from .geometry import (
    Geodesic,
    bracket,
    busemann,
    busemann_backward,
    gx_distance,
    horocycle_shift,
    hyp_dist,
    random_geodesic,
    rotate_about,
    v_time,
)
from .rectangles import GoodRectangle, maximal_rectangle, proj_rect, rect_geodesic, return_time

LEMMAS = (
    "distance_bounds",
    "busemann_wedge",
    "separation",
    "return_lipschitz",
    "proj_holder",
    "contraction",
    "flow_lipschitz",
    "shadow_close",
    "gx_bound",
    "bracket",
)
REPORT_HEADER = ["lemma_id", "samples", "worst_ratio", "bound", "estimated_constants", "pass"]
FINE_GX_TOL = 1e-12  # for pairs at distance well below the default tolerance


@dataclass(frozen=True)
class VerifierConfig:
    samples: int = 1000
    seed: int = 7
    tau: float = 10.0
    alpha: float = 0.1
    gx_tol: float = 1e-8
    grid: int = 9
    flow_T: float = 3.0
    contraction_times: tuple = tuple(range(1, 11))
    delta: float = 0.05
    holder_min: float = 0.45
    residual_tol: float = 1e-9
    L: float | None = None
    K: float | None = None

    def __post_init__(self):
        if self.samples < 1 or self.grid < 2:
            raise PreconditionError("samples must be >= 1 and grid >= 2")
        for name in ("tau", "alpha", "gx_tol", "flow_T", "delta", "holder_min", "residual_tol"):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be positive")
        if not self.alpha < 1:
            raise PreconditionError("alpha must be below 1")

    @property
    def C(self) -> float:
        return math.exp(self.alpha)

    def rng(self, lemma: str) -> np.random.Generator:
        """Independent stream per lemma, derived from the seed."""
        return np.random.default_rng([self.seed, LEMMAS.index(lemma)])


@dataclass
class LemmaReport:
    lemma_id: str
    samples: int
    worst_ratio: float
    bound: float
    constants: dict = field(default_factory=dict)
    passed: bool = False
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)

    def row(self) -> list:
        consts = ";".join(f"{k}={'%.15g' % v}" for k, v in self.constants.items())
        return [self.lemma_id, self.samples, self.worst_ratio, self.bound, consts, self.passed]


# --- samplers ------------------------------------------------------------------------------------


def _rectangle(cfg: VerifierConfig, rng) -> GoodRectangle:
    return maximal_rectangle(random_geodesic(rng), cfg.tau, cfg.grid)


def _rect_groups(cfg: VerifierConfig, rng, per: int = 100):
    """``samples`` geodesics spread over ``ceil(samples / per)`` random maximal rectangles."""
    left = cfg.samples
    while left > 0:
        rect = _rectangle(cfg, rng)
        n = min(per, left)
        yield rect, rect.sample(rng, n)
        left -= n


def _perturb(c: Geodesic, rng, scale: float) -> Geodesic:
    """A random nearby geodesic: flow, horocycle and rotation moves of size ``~scale``."""
    kind = rng.integers(4)
    u = scale * rng.uniform(-1, 1)
    if kind == 0:
        return c.flow(u)
    if kind == 1:
        return horocycle_shift(c, u, stable=True)
    if kind == 2:
        return horocycle_shift(c, u, stable=False)
    return rotate_about(c, u).flow(scale * rng.uniform(-1, 1))


def _jitter(rect: GoodRectangle, eta: Geodesic, rng, frac: float) -> Geodesic:
    """A geodesic of ``rect`` whose endpoints are moved by ``frac`` of the arc widths, clipped to the arcs."""
    def move(theta, arc):
        off = (theta - arc.lo) % (2 * math.pi) + frac * arc.width * rng.uniform(-1, 1)
        return arc.lo + min(max(off, 0.0), arc.width)

    return rect_geodesic(rect, move(eta.theta_minus, rect.uminus), move(eta.theta_plus, rect.uplus))


# --- constants ---------------------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _gx_bound(cfg: VerifierConfig):
    rng = cfg.rng("gx_bound")
    scales = np.logspace(-4, 0, 5)
    ratios = {s: [] for s in scales}
    for k in range(cfg.samples):
        s = scales[k % len(scales)]
        c = random_geodesic(rng)
        c2 = _perturb(c, rng, s)
        gx = gx_distance(c, c2, tol=min(cfg.gx_tol, FINE_GX_TOL if s < 1e-2 else cfg.gx_tol))
        if gx > 0:
            ratios[s].append(hyp_dist(c.point(0), c2.point(0)) / gx)
    return {s: max(r) if r else 0.0 for s, r in ratios.items()}


def estimate_L(cfg: VerifierConfig) -> float:
    """Empirical constant in ``d(c(0), c'(0)) <= L d_GX(c, c')``."""
    return cfg.L if cfg.L is not None else max(_gx_bound(cfg).values())


# --- lemmas -------------------------------------------------------------------------------------------


def _distance_bounds(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("distance_bounds")
    d0 = dt = 0.0
    for rect, etas in _rect_groups(cfg, rng):
        c = rect.center
        for eta in etas:
            d0 = max(d0, hyp_dist(c.point(0), eta.point(0)))
            dt = max(dt, hyp_dist(c.point(cfg.tau), eta.point(cfg.tau)), hyp_dist(c.point(-cfg.tau), eta.point(-cfg.tau)))
    ok = d0 <= 2 and dt < 4
    return LemmaReport("distance_bounds", cfg.samples, max(d0 / 2, dt / 4), 1.0,
                       {"max_d0": d0, "max_dtau": dt}, ok,
                       f"max d(c(0), eta(0)) = {d0:.6g} <= 2; max d(c(+-tau), eta(+-tau)) = {dt:.6g} < 4")


def _busemann_wedge(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("busemann_wedge")
    ts = np.linspace(-cfg.tau, cfg.tau, 42)[1:-1]
    ts = ts[ts != 0]
    lo, hi = math.inf, -math.inf
    for rect, etas in _rect_groups(cfg, rng):
        for eta in etas:
            slope = busemann(rect.center, eta.point(ts)) / -ts
            lo, hi = min(lo, slope.min()), max(hi, slope.max())
    tol = cfg.residual_tol
    ok = bool(lo >= 0.5 - tol and hi <= 1 + tol)
    return LemmaReport("busemann_wedge", cfg.samples, max(hi, 0.5 / lo), 1.0 + tol,
                       {"min_slope": lo, "max_slope": hi}, ok,
                       f"B_c(eta(t)) / (-t) in [{lo:.6g}, {hi:.6g}], required within [1/2, 1]")


def _corner_diameter(rect: GoodRectangle) -> float:
    fr = (0.0, 0.5, 1.0)
    etas = [rect_geodesic(rect, rect.uminus.lo + a * rect.uminus.width, rect.uplus.lo + b * rect.uplus.width)
            for a in fr for b in fr]
    return max(gx_distance(x, y, tol=FINE_GX_TOL) for i, x in enumerate(etas) for y in etas[i + 1:])


def _separation(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("separation")
    L = estimate_L(cfg)
    worst = 0.0
    trials = max(1, cfg.samples // 100)
    per = max(1, cfg.samples // trials)
    for _ in range(trials):
        r2 = _rectangle(cfg, rng)
        c = r2.center
        # a second good rectangle through c(0) tilted by a fraction of the arc width; c lies in both
        c1 = rotate_about(c, 0.3 * r2.uminus.width / 2 * rng.uniform(-1, 1))
        big = maximal_rectangle(c1, cfg.tau, cfg.grid)
        um, up = big.uminus.intersect(r2.uminus), big.uplus.intersect(r2.uplus)
        r1 = GoodRectangle(c1, cfg.tau, um, up)
        eps = _corner_diameter(r1)
        for eta in r1.sample(rng, per):
            t = _hit_time(c, eta, cfg.alpha)
            worst = max(worst, abs(t) / (2 * L * eps))
    return LemmaReport("separation", trials * per, worst, 1.0, {"L": L}, worst < 1,
                       f"hit times of R2 from R1 stay within {worst:.6g} of 2 L diam(R1)")


def _hit_time(c: Geodesic, eta: Geodesic, alpha: float) -> float:
    """Signed time ``t`` with ``B_c(eta(t)) = 0`` in ``[-alpha, alpha]``."""
    return bisect(lambda s: busemann(c, eta.point(s)), -alpha, alpha, xtol=1e-14, maxiter=200)


def _return_lipschitz(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("return_lipschitz")
    L = estimate_L(cfg)
    bound = 2 * L * cfg.C
    worst = 0.0
    left = cfg.samples
    while left > 0:
        r = _rectangle(cfg, rng)
        c2 = rotate_about(r.center, 0.3 * r.uminus.width / 2 * rng.uniform(-1, 1)).flow(cfg.alpha / 2)
        r2 = maximal_rectangle(c2, cfg.tau, cfg.grid)
        y = GoodRectangle(r.center, cfg.tau, r.uminus.intersect(r2.uminus), r.uplus.intersect(r2.uplus))
        for v in y.sample(rng, min(100, left)):
            w = _jitter(y, v, rng, 10 ** rng.uniform(-3, 0))
            gx = gx_distance(v, w, tol=FINE_GX_TOL)
            if gx > 0:
                dr = abs(return_time(r, r2, v, cfg.alpha) - return_time(r, r2, w, cfg.alpha))
                worst = max(worst, dr / gx)
        left -= 100
    return LemmaReport("return_lipschitz", cfg.samples, worst, bound, {"L": L, "C": cfg.C}, worst <= bound,
                       f"max |r(v) - r(w)| / d_GX(v, w) = {worst:.6g} vs 2 L C = {bound:.6g}")


def _proj_holder(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("proj_holder")
    xs, ys = [], []
    for rect, etas in _rect_groups(cfg, rng):
        for x in etas:
            near = _jitter(rect, x, rng, 10 ** rng.uniform(-4, 0))
            d_near = gx_distance(x, near, tol=FINE_GX_TOL)
            y = near.flow(min(cfg.alpha / 2, 2 * d_near) * rng.uniform(-1, 1))
            a = gx_distance(x, y, tol=FINE_GX_TOL)
            b = gx_distance(x, proj_rect(rect, y, cfg.alpha), tol=FINE_GX_TOL)
            if a > 0 and b > 0:
                xs.append(a)
                ys.append(b)
    la, lb = np.log(xs), np.log(ys)
    # regress the upper envelope: the largest projected distance in each scale bin
    bins = np.linspace(la.min(), la.max(), 11)
    idx = np.clip(np.digitize(la, bins) - 1, 0, 9)
    env = [(la[idx == k][np.argmax(lb[idx == k])], lb[idx == k].max()) for k in range(10) if np.any(idx == k)]
    ex, ey = np.array(env).T
    beta = float(np.polyfit(ex, ey, 1)[0])
    K = float(np.max(np.array(ys) / np.sqrt(xs)))
    ok = beta >= cfg.holder_min and math.isfinite(K)
    return LemmaReport("proj_holder", len(xs), beta, cfg.holder_min, {"exponent": beta, "K": K}, ok,
                       f"regression exponent {beta:.4g} (>= {cfg.holder_min}), K = {K:.6g}")


def _contraction(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("contraction")
    times = np.asarray(cfg.contraction_times, dtype=float)
    grid = np.linspace(0, times.max(), 101)
    pairs = []
    for k in range(cfg.samples):
        c = random_geodesic(rng)
        stable = k % 2 == 0
        c2 = horocycle_shift(c, cfg.delta * rng.uniform(0.05, 1) * rng.choice([-1, 1]), stable=stable)
        pairs.append((c, c2, stable))
    # comparison constant: d(c(t), c'(t)) <= K e^{-t} d(c(0), c'(0)) along the contracting direction
    K = cfg.K
    if K is None:
        K = 0.0
        for c, c2, stable in pairs:
            sign = 1 if stable else -1
            d = hyp_dist(c.point(sign * grid), c2.point(sign * grid))
            K = max(K, float(np.max(d * np.exp(grid))) / hyp_dist(c.point(0), c2.point(0)))
    worst = 0.0
    for c, c2, stable in pairs:
        base = gx_distance(c, c2, tol=FINE_GX_TOL)
        for t in times:
            s = t if stable else -t
            lhs = gx_distance(c.flow(s), c2.flow(s), tol=FINE_GX_TOL)
            worst = max(worst, lhs / ((1 + K) * math.exp(-t) * base))
    return LemmaReport("contraction", cfg.samples, worst, 1.0, {"K": K, "lambda": 1.0}, worst <= 1,
                       f"max d_GX(g_t c, g_t c') / ((1 + K) e^-t d_GX(c, c')) = {worst:.6g}")


def _flow_lipschitz(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("flow_lipschitz")
    T = cfg.flow_T
    times = np.linspace(0, T, 5)[1:]
    worst = 0.0
    for _ in range(cfg.samples):
        x = random_geodesic(rng)
        y = _perturb(x, rng, 10 ** rng.uniform(-3, -1))
        base = gx_distance(x, y, tol=FINE_GX_TOL)
        for t in times:
            worst = max(worst, gx_distance(x.flow(t), y.flow(t), tol=FINE_GX_TOL) / (math.exp(2 * T) * base))
    return LemmaReport("flow_lipschitz", cfg.samples, worst, 1.0, {"T": T}, worst < 1,
                       f"max d_GX(g_t x, g_t y) / (e^(2T) d_GX(x, y)) = {worst:.6g} for t in [0, {T}]")


def _shadow_close(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("shadow_close")
    horizons = (1, 2, 3, 4, 5)
    eps = 0.5
    ratios = {T: 0.0 for T in horizons}
    for k in range(cfg.samples):
        T = horizons[k % len(horizons)]
        x = random_geodesic(rng)
        y = _perturb(x, rng, 0.05 * math.exp(-T) * rng.uniform(0.1, 1))
        ts = np.linspace(-T, T, 2 * T + 1)
        delta = max(gx_distance(x.flow(t), y.flow(t), tol=FINE_GX_TOL) for t in ts)
        best = minimize_scalar(lambda v: gx_distance(x, y.flow(v), tol=FINE_GX_TOL), bounds=(-eps, eps),
                               method="bounded", options={"xatol": 1e-10})
        ratios[T] = max(ratios[T], best.fun / (math.exp(-T) * delta))
    C = max(ratios.values())
    # the decay rate: ratios must not grow with T if lambda = 1 is right
    slope = float(np.polyfit(horizons, np.log([ratios[T] for T in horizons]), 1)[0])
    ok = math.isfinite(C) and slope <= 0.25
    return LemmaReport("shadow_close", cfg.samples, C, math.inf, {"C": C, "lambda": 1.0, "trend": slope}, ok,
                       f"d(x, g_v y) <= C e^-T delta with C = {C:.6g}; log-ratio trend in T {slope:.3g} <= 0.25")


def _gx_bound_report(cfg: VerifierConfig) -> LemmaReport:
    by_scale = _gx_bound(cfg)
    L = max(by_scale.values())
    fine = by_scale[min(by_scale)]
    ok = math.isfinite(L) and L > 0 and fine <= L
    consts = {"L": L}
    consts.update({f"L@{s:.0e}": v for s, v in sorted(by_scale.items())})
    return LemmaReport("gx_bound", cfg.samples, L, math.inf, consts, ok,
                       f"d(c(0), c'(0)) / d_GX(c, c') <= {L:.6g} over scales 1e-4..1")


def _bracket(cfg: VerifierConfig) -> LemmaReport:
    rng = cfg.rng("bracket")
    worst = 0.0
    exact = True
    for _ in range(cfg.samples):
        x = random_geodesic(rng)
        y = _perturb(x, rng, cfg.delta)
        z = _perturb(x, rng, cfg.delta)
        xx = bracket(x, x)
        b_xy = bracket(x, y)
        left, right = bracket(b_xy, z), bracket(x, z)
        inner = bracket(x, bracket(y, z))
        t = rng.uniform(-1, 1)
        moved = bracket(x.flow(t), y.flow(t))
        v = v_time(x, y)
        exact &= (xx.theta_minus, xx.theta_plus) == (x.theta_minus, x.theta_plus)
        exact &= (left.theta_minus, left.theta_plus) == (right.theta_minus, right.theta_plus)
        exact &= (inner.theta_minus, inner.theta_plus) == (right.theta_minus, right.theta_plus)
        residuals = [
            hyp_dist(xx.point(0), x.point(0)),
            hyp_dist(left.point(0), right.point(0)),
            hyp_dist(inner.point(0), right.point(0)),
            hyp_dist(moved.point(0), b_xy.point(t)),
            abs(busemann_backward(x.flow(v), b_xy.point(0))),
            abs(busemann(y, b_xy.point(0))),
            abs(v_time(x, x)),
        ]
        worst = max(worst, max(residuals))
    ok = exact and worst <= cfg.residual_tol
    return LemmaReport("bracket", cfg.samples, worst, cfg.residual_tol, {"max_residual": worst}, ok,
                       f"bracket identities and defining levels: endpoints exact {exact}, residual {worst:.3g}")


_RUNNERS = {
    "distance_bounds": _distance_bounds,
    "busemann_wedge": _busemann_wedge,
    "separation": _separation,
    "return_lipschitz": _return_lipschitz,
    "proj_holder": _proj_holder,
    "contraction": _contraction,
    "flow_lipschitz": _flow_lipschitz,
    "shadow_close": _shadow_close,
    "gx_bound": _gx_bound_report,
    "bracket": _bracket,
}


def verify(lemma_id: str, config: VerifierConfig | None = None) -> LemmaReport:
    config = config or VerifierConfig()
    if lemma_id not in _RUNNERS:
        raise PreconditionError(f"unknown lemma {lemma_id!r}; choose from {', '.join(LEMMAS)}")
    return _RUNNERS[lemma_id](config)


def verify_all(config: VerifierConfig | None = None) -> list[LemmaReport]:
    config = config or VerifierConfig()
    return [verify(name, config) for name in LEMMAS]
