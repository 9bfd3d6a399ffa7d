"""Good geometric rectangles: angle boxes of geodesics based on a horocycle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from ..errors import NoReturn, NotInFlowBox, NotInPartial, PreconditionError
from .geometry import (
    TWO_PI,
    Geodesic,
    busemann,
    canonical_angle,
    foot_time,
    hyp_dist,
    unit,
)

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200
MIN_TAU = 10.0
DEFAULT_GRID = 9
ANGLE_SLACK = 1e-14  # rounding allowance at arc ends


@dataclass(frozen=True)
class Arc:
    """Closed counter-clockwise arc of the circle from ``lo`` to ``lo + width``."""

    lo: float
    width: float

    def __post_init__(self):
        if not 0 <= self.width < TWO_PI:
            raise PreconditionError("arc width must lie in [0, 2 pi)")
        object.__setattr__(self, "lo", canonical_angle(float(self.lo)))

    @classmethod
    def between(cls, lo: float, hi: float) -> "Arc":
        return cls(lo, (hi - lo) % TWO_PI)

    @classmethod
    def around(cls, theta: float, delta: float) -> "Arc":
        return cls(theta - delta, 2 * delta)

    @property
    def hi(self) -> float:
        return canonical_angle(self.lo + self.width)

    @property
    def mid(self) -> float:
        return canonical_angle(self.lo + self.width / 2)

    def contains(self, theta, slack: float = ANGLE_SLACK):
        off = (np.asarray(theta) - self.lo + slack) % TWO_PI
        return off <= self.width + 2 * slack

    def disjoint(self, other: "Arc") -> bool:
        return not (self.contains(other.lo) or other.contains(self.lo))

    def intersect(self, other: "Arc") -> "Arc | None":
        if self.disjoint(other):
            return None
        lo = other.lo if self.contains(other.lo) else self.lo
        end_self = (self.lo + self.width - lo) % TWO_PI
        end_other = (other.lo + other.width - lo) % TWO_PI
        return Arc(lo, min(end_self, end_other))

    def grid(self, n: int) -> np.ndarray:
        return self.lo + self.width * np.linspace(0, 1, n)

    def sample(self, rng: np.random.Generator, size=None):
        return self.lo + self.width * rng.random(size)

    def sub(self, start: float, stop: float) -> "Arc":
        """Sub-arc between fractions ``start`` and ``stop`` of the width."""
        return Arc(self.lo + start * self.width, (stop - start) * self.width)


def crosses_ball(theta_minus, theta_plus, p: complex, radius: float = 1.0):
    """Does the geodesic with these endpoints enter the open ball ``B(p, radius)``?

    After the automorphism sending ``p`` to 0 the endpoints are ``a, b`` and the
    distance from 0 to the geodesic satisfies ``cosh d = 2 / |a - b|``.
    """
    a, b = unit(theta_minus), unit(theta_plus)
    ta = (a - p) / (1 - np.conj(p) * a)
    tb = (b - p) / (1 - np.conj(p) * b)
    return 2 / np.abs(ta - tb) < math.cosh(radius)


@dataclass(frozen=True, eq=False)
class GoodRectangle:
    """Geodesics with endpoints in ``uminus`` x ``uplus`` based on the horocycle ``B_c = 0``."""

    center: Geodesic
    tau: float
    uminus: Arc
    uplus: Arc

    @property
    def balls(self) -> tuple[complex, complex]:
        return self.center.point(-self.tau), self.center.point(self.tau)

    def holds(self, theta_minus, theta_plus) -> bool:
        return bool(np.all(self.uminus.contains(theta_minus)) and np.all(self.uplus.contains(theta_plus)))

    def contains(self, eta: Geodesic, tol: float = 1e-10) -> bool:
        """Endpoint, horocycle and ball-order conditions for ``eta``."""
        if not self.holds(eta.theta_minus, eta.theta_plus):
            return False
        if abs(busemann(self.center, eta.point(0))) > tol:
            return False
        b1, b2 = self.balls
        lo1, hi1 = ball_times(eta, b1)
        lo2, hi2 = ball_times(eta, b2)
        return hi1 < 0 < lo2

    def sub(self, minus: tuple[float, float], plus: tuple[float, float]) -> "GoodRectangle":
        """Rectangular subset on sub-arcs given as width fractions."""
        return GoodRectangle(self.center, self.tau, self.uminus.sub(*minus), self.uplus.sub(*plus))

    def sample(self, rng: np.random.Generator, size: int) -> list[Geodesic]:
        tm = self.uminus.sample(rng, size)
        tp = self.uplus.sample(rng, size)
        return [rect_geodesic(self, a, b) for a, b in zip(tm, tp)]


def ball_times(eta: Geodesic, p: complex, radius: float = 1.0) -> tuple[float, float]:
    """Entry and exit times of ``eta`` in ``B(p, radius)`` (``nan`` if it misses)."""
    t = foot_time(eta, p)
    h = hyp_dist(p, eta.point(t))
    if h >= radius:
        return math.nan, math.nan
    half = math.acosh(math.cosh(radius) / math.cosh(h))
    return t - half, t + half


def partial_violation(c: Geodesic, tau: float, uminus: Arc, uplus: Arc, grid: int = DEFAULT_GRID):
    """First grid endpoint pair whose geodesic misses ``B(c(-tau), 1)`` or ``B(c(tau), 1)``."""
    tm = uminus.grid(grid)[:, None] * np.ones(grid)[None, :]
    tp = np.ones(grid)[:, None] * uplus.grid(grid)[None, :]
    ok = crosses_ball(tm, tp, c.point(-tau)) & crosses_ball(tm, tp, c.point(tau))
    if ok.all():
        return None
    i, j = np.argwhere(~ok)[0]
    return float(tm[i, j]), float(tp[i, j])


def make_rectangle(c: Geodesic, tau: float, uminus: Arc, uplus: Arc, grid: int = DEFAULT_GRID) -> GoodRectangle:
    if tau < MIN_TAU:
        raise PreconditionError(f"rectangle scale tau must be >= {MIN_TAU}")
    if not uminus.disjoint(uplus):
        raise PreconditionError("boundary arcs must be disjoint")
    bad = partial_violation(c, tau, uminus, uplus, grid)
    if bad is not None:
        raise NotInPartial(f"geodesic with endpoints {bad} misses a unit ball at c(+-tau)")
    return GoodRectangle(c, tau, uminus, uplus)


def maximal_rectangle(c: Geodesic, tau: float, grid: int = DEFAULT_GRID) -> GoodRectangle:
    """``R(c, tau)`` with the largest symmetric arcs ``U(c(-+inf), delta)``, found by bisection on ``delta``."""
    def ok(delta):
        um, up = Arc.around(c.theta_minus, delta), Arc.around(c.theta_plus, delta)
        return um.disjoint(up) and partial_violation(c, tau, um, up, grid) is None

    lo, hi = 0.0, math.pi / 2
    if ok(hi):
        lo = hi
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= BISECT_TOL * max(hi, 1e-300):
            break
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    if lo == 0.0:
        raise NotInPartial("no symmetric arcs around the endpoints fit in the partial set")
    return make_rectangle(c, tau, Arc.around(c.theta_minus, lo), Arc.around(c.theta_plus, lo), grid)


def _root(f, a: float, b: float) -> float:
    return bisect(f, a, b, xtol=BISECT_TOL, rtol=4 * np.finfo(float).eps, maxiter=BISECT_MAX_ITER)


def rect_geodesic(rect: GoodRectangle, xi_minus: float, xi_plus: float) -> Geodesic:
    """The geodesic of ``rect`` with these endpoints: the unique zero of ``B_c`` between the two balls."""
    eta = Geodesic(xi_minus, xi_plus, 0.0)
    b1, b2 = rect.balls
    t1, t2 = foot_time(eta, b1), foot_time(eta, b2)
    c = rect.center
    t = _root(lambda s: busemann(c, eta.point(s)), t1, t2)
    return eta.flow(t)


def proj_rect(rect: GoodRectangle, x: Geodesic, alpha: float) -> Geodesic:
    """The geodesic of ``rect`` on the flow line of ``x``, within time ``alpha``."""
    if not rect.holds(x.theta_minus, x.theta_plus):
        raise NotInFlowBox("endpoints lie outside the rectangle arcs")
    c = rect.center
    f = lambda s: busemann(c, x.point(s))  # noqa: E731
    lo, hi = f(-alpha), f(alpha)
    if lo == 0:
        return x.flow(-alpha)
    if hi == 0:
        return x.flow(alpha)
    if not lo > 0 > hi:
        raise NotInFlowBox(f"no crossing of the rectangle within time {alpha}")
    return x.flow(_root(f, -alpha, alpha))


def return_time(rect: GoodRectangle, target: GoodRectangle, eta: Geodesic, alpha: float,
                tol: float = 1e-10) -> float:
    """First ``t >= 0`` with ``g_t eta`` in ``target``, searched up to ``alpha``."""
    if not (rect.holds(eta.theta_minus, eta.theta_plus) and target.holds(eta.theta_minus, eta.theta_plus)):
        raise NoReturn("endpoints must lie in the arcs of both rectangles")
    c = target.center
    f = lambda s: busemann(c, eta.point(s))  # noqa: E731
    start = f(0.0)
    if abs(start) <= tol:
        return 0.0
    if not start > 0 > f(alpha):
        raise NoReturn(f"no return to the target rectangle within time {alpha}")
    return _root(f, 0.0, alpha)
