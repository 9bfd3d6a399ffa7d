"""Suspension flows over shifts of finite type with locally constant roofs."""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import sft, thermo
from .errors import BracketFailure, NotIrreducible, PreconditionError, WindowExhausted
from .sft import TransitionMatrix
from .thermo import LocallyConstantPotential

BISECT_TOL = 1e-12
ZETA_CONVERGED_TOL = 1e-3
MAX_LENGTH_CLASSES = 200_000


@dataclass(frozen=True, eq=False)
class RoofFunction:
    """Positive locally constant roof. ``exact`` keeps rational values for exact kinematics."""

    potential: LocallyConstantPotential
    exact: Mapping[tuple, object] | None = None

    def __post_init__(self):
        if self.potential.min <= 0:
            raise PreconditionError("roof function must be strictly positive")

    @classmethod
    def from_values(cls, shift: TransitionMatrix, depth: int, values: Mapping[tuple, object]):
        """Build from a table whose entries may be ``Fraction``, ``int`` or ``float``."""
        pot = LocallyConstantPotential(shift, depth, {w: float(v) for w, v in values.items()})
        exact = dict(values) if all(isinstance(v, (int, Fraction)) for v in values.values()) else None
        if exact is not None:
            exact = {w: Fraction(v) for w, v in exact.items()}
        return cls(pot, exact)

    @classmethod
    def constant(cls, shift: TransitionMatrix, c):
        return cls.from_values(shift, 1, {(i,): c for i in range(shift.n)})

    @property
    def depth(self) -> int:
        return self.potential.depth

    @property
    def min(self) -> float:
        return self.potential.min

    @property
    def max(self) -> float:
        return self.potential.max

    def value(self, word):
        w = tuple(word[: self.depth])
        return self.exact[w] if self.exact is not None else self.potential.table[w]


@dataclass(frozen=True, eq=False)
class SuspensionFlow:
    base: TransitionMatrix
    roof: RoofFunction

    def __post_init__(self):
        if self.roof.potential.shift != self.base:
            raise PreconditionError("roof function is defined over a different shift")

    def require_irreducible(self):
        if not sft.is_irreducible(self.base):
            raise NotIrreducible("flow analysis needs an irreducible base shift")


@dataclass(frozen=True)
class FlowPoint:
    """Base point ``word`` read from ``position`` (cyclically if ``periodic``) at ``height``."""

    word: tuple
    position: int
    height: object
    periodic: bool = True

    def window(self, length: int) -> tuple:
        w, i = self.word, self.position
        if self.periodic:
            reps = (i % len(w) + length) // len(w) + 1
            return (w * reps)[i % len(w): i % len(w) + length]
        if i < 0 or i + length > len(w):
            raise WindowExhausted(f"base window exhausted at position {i}")
        return w[i:i + length]


def _roof_at(flow: SuspensionFlow, point: FlowPoint, position: int):
    p = FlowPoint(point.word, position, 0, point.periodic)
    return flow.roof.value(p.window(flow.roof.depth))


def orbit_period(flow: SuspensionFlow, orbit) -> object:
    """Cyclic Birkhoff sum of the roof; exact when the roof is rational."""
    word = tuple(orbit.word if isinstance(orbit, sft.PeriodicOrbit) else orbit)
    if not flow.base.is_admissible(word, cyclic=True):
        raise PreconditionError(f"orbit {word} is not cyclically admissible")
    if flow.roof.exact is None:
        return thermo.birkhoff_sum(flow.roof.potential, word, cyclic=True)
    k = flow.roof.depth
    ext = word * (k // len(word) + 2)
    return sum((flow.roof.exact[ext[i:i + k]] for i in range(len(word))), Fraction(0))


def make_point(flow: SuspensionFlow, word, height=0, position: int = 0, periodic: bool = True) -> FlowPoint:
    word = tuple(word)
    if not flow.base.is_admissible(word, cyclic=periodic):
        raise PreconditionError(f"base word {word} is not admissible")
    point = FlowPoint(word, position, height, periodic)
    roof = _roof_at(flow, point, position)
    if not 0 <= height < roof:
        raise PreconditionError(f"height {height} outside [0, {roof})")
    return point


def evolve(flow: SuspensionFlow, point: FlowPoint, s) -> FlowPoint:
    """Flow for time ``s``, renormalizing the height into ``[0, roof)``."""
    t = point.height + s
    pos = point.position
    if point.periodic:
        n = len(point.word)
        period = orbit_period(flow, point.word)
        # jump whole periods first; exact when heights and roof are rational
        laps = math.floor(t / period)
        t -= laps * period
        pos %= n
    while True:
        r = _roof_at(flow, point, pos)
        if t >= r:
            t -= r
            pos += 1
        elif t < 0:
            pos -= 1
            t += _roof_at(flow, point, pos)
        else:
            break
    if point.periodic:
        pos %= len(point.word)
    return FlowPoint(point.word, pos, t, point.periodic)


def _potential_minus_s_roof(flow: SuspensionFlow, s: float) -> LocallyConstantPotential:
    return flow.roof.potential.scale(-s)


def flow_entropy(flow: SuspensionFlow) -> float:
    """Root of ``s -> P(-s rho)`` by bisection on ``[0, log lambda / rho_min + 1]``."""
    flow.require_irreducible()
    lo, hi = 0.0, math.log(sft.perron(flow.base.entries.astype(float)).value) / flow.roof.min + 1.0

    def f(s):
        return thermo.pressure(_potential_minus_s_roof(flow, s))

    grid = np.linspace(lo, hi, 9)
    values = [f(s) for s in grid]
    if any(b > a + 1e-12 for a, b in zip(values, values[1:])):
        raise BracketFailure("s -> P(-s rho) is not decreasing on the bracket")
    flo, fhi = values[0], values[-1]
    if not (flo >= 0 >= fhi):
        raise BracketFailure(f"no sign change on [{lo}, {hi}]: P = {flo}, {fhi}")
    for _ in range(200):
        if hi - lo <= BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- zeta function -----------------------------------------------------------------------------


def _length_classes(flow: SuspensionFlow, l_max: float):
    """Periodic-point census grouped by roof composition.

    Returns ``(values, classes)`` where ``values`` are the distinct roof values and
    ``classes`` maps a composition vector (how many times each value is used) to
    the number of period points with that composition and flow length <= l_max.
    """
    k = flow.roof.depth
    st = thermo.states(flow.base, k)
    index = {s: i for i, s in enumerate(st)}
    exact = flow.roof.exact is not None
    raw = flow.roof.exact if exact else flow.roof.potential.table
    values = sorted(set(raw.values()))
    slot = {v: i for i, v in enumerate(values)}
    d = len(values)
    # edges of the state graph labelled by roof class
    edges = []
    if k == 1:
        for i in range(flow.base.n):
            for j in flow.base.successors(i):
                edges.append((i, j, slot[raw[(i,)]]))
    else:
        for w, v in raw.items():
            edges.append((index[w[:-1]], index[w[1:]], slot[v]))
    m = len(st)
    by_class = [np.zeros((m, m), dtype=object) for _ in range(d)]
    for i, j, c in edges:
        by_class[c][i, j] += 1
    vals_f = [float(v) for v in values]
    unit = [tuple(1 if q == c else 0 for q in range(d)) for c in range(d)]
    tol = 1e-12 * max(1.0, l_max)

    def length(key):
        if exact:
            return sum((c * v for c, v in zip(key, values)), Fraction(0))
        return sum(c * v for c, v in zip(key, vals_f))

    def fits(key):
        return length(key) <= l_max + (0 if exact else tol)

    # paths[key] = matrix of path counts with that composition
    frontier = {tuple([0] * d): np.identity(m, dtype=object)}
    classes = {}
    while frontier:
        nxt = defaultdict(lambda: np.zeros((m, m), dtype=object))
        for key, mat in frontier.items():
            for c in range(d):
                new = tuple(a + b for a, b in zip(key, unit[c]))
                if fits(new):
                    nxt[new] = nxt[new] + mat.dot(by_class[c])
        frontier = {}
        for key, mat in nxt.items():
            # keys are reached by a unique step count, so each is final after one round
            frontier[key] = mat
            tr = int(sum(mat[i, i] for i in range(m)))
            if tr:
                classes[key] = tr
        if len(classes) > MAX_LENGTH_CLASSES:
            raise PreconditionError("too many distinct orbit-length classes; lower L_max")
    return values, {key: (n, length(key)) for key, n in classes.items()}


def _primitive_classes(classes):
    """Moebius inversion on composition vectors: number of primitive orbits per class."""
    prim = {}
    for key, (count, length) in classes.items():
        n = sum(key)
        g = 0
        for c in key:
            g = math.gcd(g, c)
        total = 0
        for dd in range(1, g + 1):
            if g % dd:
                continue
            mu = _moebius(dd)
            if mu:
                sub = tuple(c // dd for c in key)
                total += mu * classes.get(sub, (0, 0))[0]
        if total % n:
            raise RuntimeError(f"Moebius inversion produced a non-integer orbit count at {key}")
        if total:
            prim[key] = (total // n, length)
    return prim


def _moebius(n: int) -> int:
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


@dataclass(frozen=True)
class ZetaValue:
    s: complex
    value: complex
    log_value: complex
    euler_value: complex
    tail_bound: float
    log_tail_bound: float
    converged: bool
    q: float

    def __iter__(self):
        return iter((self.value, self.tail_bound, self.converged))


def _exp(z: complex) -> complex:
    """``cmath.exp`` that saturates to infinity for a diverged partial sum."""
    try:
        return cmath.exp(z)
    except OverflowError:
        return complex(math.inf, 0.0)


@dataclass
class ZetaTable:
    """Orbit-length census for one flow and cutoff, reusable across many ``s``."""

    flow: SuspensionFlow
    l_max: float
    classes: dict = field(default_factory=dict)
    primitive: dict = field(default_factory=dict)

    @classmethod
    def build(cls, flow: SuspensionFlow, l_max: float) -> "ZetaTable":
        if l_max <= 0:
            raise PreconditionError("L_max must be positive")
        _, classes = _length_classes(flow, l_max)
        return cls(flow, l_max, classes, _primitive_classes(classes))

    def tail(self, sigma: float) -> tuple[float, float]:
        """Envelope of the omitted part of the log series: ``(q, bound)``."""
        flow = self.flow
        q = math.exp(thermo.pressure(_potential_minus_s_roof(flow, sigma)))
        dim = len(thermo.states(flow.base, flow.roof.depth))
        if q >= 1:
            return q, math.inf
        n_full = math.floor(self.l_max / flow.roof.max + 1e-12)
        n_any = math.floor(self.l_max / flow.roof.min + 1e-12)
        # n <= n_full: every period point counted; n_full < n <= n_any: partial; beyond: none
        bound = sum(dim * q**n / n for n in range(n_full + 1, n_any + 1))
        bound += dim * q ** (n_any + 1) / ((n_any + 1) * (1 - q))
        return q, bound

    def evaluate(self, s: complex) -> ZetaValue:
        s = complex(s)
        log_sum = 0j
        for key, (count, length) in self.classes.items():
            log_sum += count / sum(key) * cmath.exp(-s * float(length))
        euler_log = 0j
        for key, (count, length) in self.primitive.items():
            ell = float(length)
            m = 1
            while m * length <= self.l_max + (1e-12 * self.l_max if isinstance(length, float) else 0):
                euler_log += count * cmath.exp(-s * m * ell) / m
                m += 1
        q, log_tail = self.tail(s.real)
        value = _exp(log_sum)
        tail = abs(value) * math.expm1(log_tail) if math.isfinite(log_tail) else math.inf
        return ZetaValue(s, value, log_sum, _exp(euler_log), tail, log_tail,
                         q < 1 and log_tail <= ZETA_CONVERGED_TOL, q)


def zeta(flow: SuspensionFlow, s: complex, l_max: float) -> ZetaValue:
    """Truncated dynamical zeta function ``exp(sum over period points of e^{-s l}/n)``.

    Orbits are grouped by the roof values they use, so the census is exact.
    ``tail_bound`` bounds ``|zeta - truncated|`` via ``trace L^n <= dim * q^n``
    with ``q = exp P(-Re(s) rho)``.
    """
    return ZetaTable.build(flow, l_max).evaluate(s)


def zeta_grid(flow: SuspensionFlow, points: Sequence[complex], l_max: float) -> list[ZetaValue]:
    table = ZetaTable.build(flow, l_max)
    return [table.evaluate(s) for s in points]


def locate_pole(flow: SuspensionFlow, lo: float, hi: float, tol: float = 1e-9) -> tuple[float, float]:
    """Bracket the real pole by bisection on the divergence of the orbit series (``q >= 1``)."""

    def diverges(s):
        return thermo.pressure(_potential_minus_s_roof(flow, s)) >= 0

    if not diverges(lo) or diverges(hi):
        raise BracketFailure(f"series must diverge at {lo} and converge at {hi}")
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if diverges(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


# --- weak mixing ---------------------------------------------------------------------------------


def weak_mixing_test(periods: Sequence[float], tol: float = 1e-9, max_denominator: int | None = None):
    """Largest ``c > tol`` with every period within ``tol`` of a multiple of ``c``, else None.

    Candidates are ``p_min / Q``. ``Q`` is capped at ``tol**(-1/3)`` so that
    Dirichlet-type approximations, which exist for any ratio once ``Q`` reaches
    ``tol**(-1/2)``, do not count as commensurability.
    """
    ps = [float(p) for p in periods]
    if len(ps) < 2:
        raise PreconditionError("need at least two periods")
    if tol < 0 or any(p <= 0 for p in ps):
        raise PreconditionError("periods must be positive and tol >= 0")
    p_min = min(ps)
    cap = max_denominator or max(1, math.floor((max(tol, 1e-15)) ** (-1 / 3)))
    slack = max(tol, 4 * np.finfo(float).eps * max(ps))
    for q in range(1, cap + 1):
        c = p_min / q
        if c <= tol:
            break
        if all(abs(p - round(p / c) * c) <= slack for p in ps):
            return c
    return None


# --- product measure -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FlowMeasure:
    """``(mu_base x Lebesgue) / integral of rho``."""

    flow: SuspensionFlow
    base: thermo.MarkovMeasure
    normalization: float

    def mass(self, word: Sequence[int] | None = None, a: float = 0.0, b: float = math.inf) -> float:
        """Mass of ``[word] x [a, b]`` (heights clipped to each fibre); ``word=None`` is everything."""
        k = self.flow.roof.depth
        if word is None:
            words = list(sft.iter_words(self.flow.base, k))
        else:
            word = tuple(word)
            if len(word) >= k:
                words = [word]
            else:
                words = [w for w in sft.iter_words(self.flow.base, k) if w[: len(word)] == word]
        total = 0.0
        for w in words:
            top = self.flow.roof.potential.table[w[:k]]
            overlap = max(0.0, min(b, top) - max(a, 0.0))
            total += thermo.cylinder_measure(self.base, w) * overlap
        return total / self.normalization


def flow_measure(flow: SuspensionFlow, phi_base: LocallyConstantPotential | None = None) -> FlowMeasure:
    flow.require_irreducible()
    phi = phi_base or LocallyConstantPotential.zero(flow.base)
    mu = thermo.equilibrium(phi)
    return FlowMeasure(flow, mu, thermo.integral(flow.roof.potential, mu))


# --- sampling ------------------------------------------------------------------------------------


def sample_chain(mu: thermo.MarkovMeasure, steps: int, samples: int, rng: np.random.Generator):
    """Yield state-index vectors of ``samples`` stationary chains, one step at a time."""
    cum_p = np.cumsum(mu.p)
    cum_P = np.cumsum(mu.P, axis=1)
    cum_p[-1] = cum_P[:, -1] = 1.0
    x = np.searchsorted(cum_p, rng.random(samples), side="right")
    yield x
    for _ in range(steps - 1):
        u = rng.random(samples)
        x = (u[:, None] >= cum_P[x]).sum(axis=1)
        yield x


def flow_birkhoff_samples(flow: SuspensionFlow, psi: LocallyConstantPotential, horizon: float,
                          samples: int, seed: int, phi_base: LocallyConstantPotential | None = None):
    """Normalized flow Birkhoff integrals ``(int_0^T psi(f_t x) dt - T * mean) / sqrt(T)``.

    Start points are drawn from the flow measure: base from the stationary chain
    and height uniform in the fibre. ``psi`` and the roof must have depth 1.
    """
    if flow.roof.depth != 1 or psi.depth != 1:
        raise PreconditionError("sampling supports depth-1 roof and observable")
    fm = flow_measure(flow, phi_base)
    mu = fm.base
    if mu.state_length != 1:
        raise PreconditionError("sampling supports depth <= 2 base potentials")
    rho = np.array([flow.roof.potential.table[s[:1]] for s in mu.states])
    val = np.array([psi.table[s[:1]] for s in mu.states])
    mean = float(np.dot(mu.p, rho * val)) / fm.normalization
    rng = np.random.default_rng(seed)
    steps = math.ceil(horizon / flow.roof.min) + 2
    x = next(sample_chain(mu, 1, samples, rng))
    # size-biased start: accept base symbol with probability rho / rho_max
    while True:
        reject = rng.random(samples) * rho.max() > rho[x]
        if not reject.any():
            break
        x = np.where(reject, np.searchsorted(np.cumsum(mu.p), rng.random(samples), side="right"), x)
        x = np.minimum(x, len(mu.p) - 1)
    t = -rng.random(samples) * rho[x]
    total = np.zeros(samples)
    cum_P = np.cumsum(mu.P, axis=1)
    cum_P[:, -1] = 1.0
    for _ in range(steps):
        end = t + rho[x]
        total += val[x] * np.clip(np.minimum(end, horizon) - np.maximum(t, 0.0), 0.0, None)
        t = end
        u = rng.random(samples)
        x = (u[:, None] >= cum_P[x]).sum(axis=1)
    return (total - horizon * mean) / math.sqrt(horizon)


def autocorrelation(series: np.ndarray, lags: Sequence[int]) -> list[float]:
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    var = float(np.dot(x, x)) / len(x)
    if var == 0:
        return [0.0 for _ in lags]
    return [float(np.dot(x[:-lag], x[lag:]) / (len(x) - lag) / var) if lag else 1.0 for lag in lags]


def cylinder_correlations(mu: thermo.MarkovMeasure, word: Sequence[int], lags: Sequence[int],
                          length: int, seed: int) -> list[float]:
    """Empirical autocorrelation of ``1_[word]`` along one stationary chain of ``length`` steps."""
    rng = np.random.default_rng(seed)
    path = np.concatenate(list(sample_chain(mu, length + len(word), 1, rng)))
    first = np.array([s[0] for s in mu.states])
    symbols = first[path]
    hits = np.ones(length, dtype=bool)
    for i, sym in enumerate(word):
        hits &= symbols[i:i + length] == sym
    return autocorrelation(hits.astype(float), lags)
