"""Geodesics, distances and Busemann functions in the Poincare disk."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import DegenerateEndpoints, OutsideDisk

TWO_PI = 2 * math.pi
GX_TOL = 1e-8
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def canonical_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    return 0.0 if t == TWO_PI else t


def unit(theta):
    return np.exp(1j * np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class BoundaryPoint:
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", canonical_angle(float(self.theta)))

    @property
    def z(self) -> complex:
        return complex(unit(self.theta))


def _mobius(z, a: complex, rot: complex):
    """``rot * (z - a) / (1 - conj(a) z)``: the disk automorphism sending ``a`` to 0."""
    return rot * (z - a) / (1 - np.conj(a) * z)


@dataclass(frozen=True)
class Geodesic:
    """Unit-speed geodesic from ``theta_minus`` to ``theta_plus``.

    ``c(t) = M(tanh((t + s0) / 2))`` where ``M`` is the disk automorphism taking
    the real diameter to the geodesic, with ``M(-1)``, ``M(1)`` the endpoints.
    """

    theta_minus: float
    theta_plus: float
    s0: float = 0.0

    def __post_init__(self):
        tm, tp = canonical_angle(float(self.theta_minus)), canonical_angle(float(self.theta_plus))
        if tm == tp:
            raise DegenerateEndpoints("geodesic endpoints must differ")
        object.__setattr__(self, "theta_minus", tm)
        object.__setattr__(self, "theta_plus", tp)
        object.__setattr__(self, "s0", float(self.s0))

    @cached_property
    def _frame(self):
        delta = (self.theta_plus - self.theta_minus) % TWO_PI
        a = (delta - math.pi) / 4
        y = math.tan(a)
        return complex(math.cos(self.theta_plus - 2 * a), math.sin(self.theta_plus - 2 * a)), y

    def _m(self, x):
        rot, y = self._frame
        return rot * (x + 1j * y) / (1 - 1j * y * x)

    def _m_inv(self, z):
        rot, y = self._frame
        w = np.asarray(z) / rot
        return (w - 1j * y) / (1 + 1j * y * w)

    @property
    def minus(self) -> complex:
        return complex(unit(self.theta_minus))

    @property
    def plus(self) -> complex:
        return complex(unit(self.theta_plus))

    def point(self, t=0.0):
        """Disk coordinates of ``c(t)``; ``t`` may be an array."""
        out = self._m(np.tanh((np.asarray(t, dtype=float) + self.s0) / 2))
        return complex(out) if np.ndim(out) == 0 else out

    def __call__(self, t=0.0):
        return self.point(t)

    def flow(self, t: float) -> "Geodesic":
        """``g_t c``: the same geodesic with basepoint moved to ``c(t)``."""
        return Geodesic(self.theta_minus, self.theta_plus, self.s0 + t)

    def reversed(self) -> "Geodesic":
        """``-c``, with ``(-c)(t) = c(-t)``."""
        return Geodesic(self.theta_plus, self.theta_minus, -self.s0)

    def parameter(self, p: complex) -> float:
        """Time of the foot of ``p`` on this geodesic."""
        return foot_time(self, p)

    @classmethod
    def through(cls, theta_minus: float, theta_plus: float, p: complex) -> "Geodesic":
        """The geodesic with these endpoints whose basepoint is the foot of ``p``."""
        g = cls(theta_minus, theta_plus, 0.0)
        return g.flow(foot_time(g, p))


def _check_disk(*points):
    for p in points:
        if np.any(np.abs(p) >= 1):
            raise OutsideDisk("points must lie in the open unit disk")


def hyp_dist(p, q):
    """Poincare-disk distance, ``2 asinh(|p - q| / sqrt((1 - |p|^2)(1 - |q|^2)))``."""
    p, q = np.asarray(p), np.asarray(q)
    _check_disk(p, q)
    d = 2 * np.arcsinh(np.abs(p - q) / np.sqrt((1 - np.abs(p) ** 2) * (1 - np.abs(q) ** 2)))
    return float(d) if d.ndim == 0 else d


def busemann_origin(q, xi):
    """``B_0(q, xi) = log(|xi - q|^2 / (1 - |q|^2))``, normalized to vanish at the origin."""
    q = np.asarray(q)
    return np.log(np.abs(xi - q) ** 2 / (1 - np.abs(q) ** 2))


def busemann(c: Geodesic, q):
    """Busemann function centred at ``c(+inf)`` with basepoint ``c(0)``; ``B_c(c(t)) = -t``."""
    _check_disk(q)
    xi = c.plus
    out = busemann_origin(q, xi) - busemann_origin(c.point(0), xi)
    return float(out) if np.ndim(out) == 0 else out


def busemann_backward(c: Geodesic, q):
    """``B_{-c}``: centred at ``c(-inf)`` with basepoint ``c(0)``; grows by ``t`` along ``c``."""
    return busemann(c.reversed(), q)


def foot_time(c: Geodesic, p) -> float:
    """Time of the closest point of ``c`` to ``p``.

    Level sets of ``B(., c(-inf)) - B(., c(+inf))`` are the geodesics
    perpendicular to ``c``, and the difference grows at rate 2 along ``c``.
    """
    base = c.point(0)
    diff = (busemann_origin(p, c.minus) - busemann_origin(p, c.plus)
            - busemann_origin(base, c.minus) + busemann_origin(base, c.plus))
    return float(diff) / 2


def distance_to_geodesic(c: Geodesic, p) -> float:
    return hyp_dist(p, c.point(foot_time(c, p)))


def gx_tail_bound(d0: float, s: float) -> float:
    """Bound on the two tails beyond ``|s| > S`` using ``d(c(s), c'(s)) <= d0 + 2|s|``."""
    return math.exp(-2 * s) * (d0 + 2 * s + 1)


def gx_truncation(d0: float, tol: float) -> float:
    """Smallest ``S`` (to 1e-3) whose tail bound is at most ``tol / 2``."""
    lo, hi = 0.0, 1.0
    while gx_tail_bound(d0, hi) > tol / 2:
        lo, hi = hi, 2 * hi
    while hi - lo > 1e-3:
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if gx_tail_bound(d0, mid) > tol / 2 else (lo, mid)
    return hi


def _panel_integral(f, a: float, b: float, panels: int) -> float:
    edges = np.linspace(a, b, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    nodes = (mid[:, None] + half[:, None] * GL_NODES[None, :]).ravel()
    weights = (half[:, None] * GL_WEIGHTS[None, :]).ravel()
    return float(np.dot(weights, f(nodes)))


def gx_distance(c: Geodesic, c2: Geodesic, s_max: float | None = None, tol: float = GX_TOL) -> float:
    """``int d(c(s), c2(s)) exp(-2|s|) ds`` over the line.

    The integral is truncated at ``S`` from the closed-form tail bound and the
    remainder is computed by composite Gauss-Legendre quadrature, doubling the
    panel count until two successive values agree to ``tol / 4``.
    """
    d0 = hyp_dist(c.point(0), c2.point(0))
    s = gx_truncation(d0, tol) if s_max is None else float(s_max)

    def f(t):
        return hyp_dist(c.point(t), c2.point(t)) * np.exp(-2 * np.abs(t))

    panels = max(2, int(math.ceil(s)))
    prev = _panel_integral(f, -s, 0, panels) + _panel_integral(f, 0, s, panels)
    for _ in range(10):
        panels *= 2
        cur = _panel_integral(f, -s, 0, panels) + _panel_integral(f, 0, s, panels)
        if abs(cur - prev) <= tol / 4:
            return cur
        prev = cur
    return cur


def bracket(c: Geodesic, c2: Geodesic) -> Geodesic:
    """``<c, c2>``: backward endpoint of ``c``, forward endpoint of ``c2``, basepoint on ``B_{c2} = 0``."""
    if c.theta_minus == c2.theta_plus:
        raise DegenerateEndpoints("bracket needs c(-inf) != c2(+inf)")
    d = Geodesic(c.theta_minus, c2.theta_plus, 0.0)
    # B_{c2}(d(t)) = B_{c2}(d(0)) - t since d and c2 share the forward endpoint
    return d.flow(busemann(c2, d.point(0)))


def v_time(c: Geodesic, c2: Geodesic) -> float:
    """Negative signed distance along ``<c, c2>`` from its basepoint to the horocycle ``B_{-c} = 0``."""
    d = bracket(c, c2)
    return busemann_backward(c, d.point(0))


def is_strong_stable(c: Geodesic, c2: Geodesic, delta: float, tol: float = 1e-10) -> bool:
    return (c.theta_plus == c2.theta_plus and abs(busemann(c, c2.point(0))) <= tol
            and gx_distance(c, c2) < delta)


def is_strong_unstable(c: Geodesic, c2: Geodesic, delta: float, tol: float = 1e-10) -> bool:
    return (c.theta_minus == c2.theta_minus and abs(busemann_backward(c, c2.point(0))) <= tol
            and gx_distance(c, c2) < delta)


def _parabolic(xi: complex, u: float):
    """Parabolic isometry fixing ``xi``; it preserves every horocycle centred at ``xi``."""

    def f(z):
        w = 1j * (xi + z) / (xi - z) + u
        return xi * (w - 1j) / (w + 1j)

    return f


def horocycle_shift(c: Geodesic, u: float, stable: bool = True) -> Geodesic:
    """Slide ``c`` by ``u`` along the horocycle through ``c(0)`` centred at ``c(+inf)`` (or ``c(-inf)``)."""
    if stable:
        f = _parabolic(c.plus, u)
        other = float(np.angle(f(c.minus)))
        return Geodesic.through(other, c.theta_plus, f(c.point(0)))
    f = _parabolic(c.minus, u)
    other = float(np.angle(f(c.plus)))
    return Geodesic.through(c.theta_minus, other, f(c.point(0)))


def rotate_about(c: Geodesic, angle: float) -> Geodesic:
    """The geodesic through ``c(0)`` whose direction is turned by ``angle``."""
    p = c.point(0)
    rot = complex(math.cos(angle), math.sin(angle))

    def f(z):
        w = rot * _mobius(z, p, 1)
        return _mobius(w, -p, 1)

    return Geodesic.through(float(np.angle(f(c.minus))), float(np.angle(f(c.plus))), p)


def random_geodesic(rng: np.random.Generator, spread: float = 1.0) -> Geodesic:
    """Endpoints at angular separation in [pi/2, 3pi/2]; basepoint within ``spread`` of the closest point to 0."""
    tm = rng.uniform(0, TWO_PI)
    tp = tm + rng.uniform(math.pi / 2, 3 * math.pi / 2)
    return Geodesic(tm, tp, rng.uniform(-spread, spread))
