"""Thermodynamic formalism for locally constant potentials on a shift of finite type."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import sft
from .errors import InadmissibleWord, NotIrreducible, PreconditionError, WordTooShort
from .sft import TransitionMatrix

FIRST_DIFF_STEP = 1e-5
SECOND_DIFF_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class LocallyConstantPotential:
    """A real function of the first ``depth`` symbols, tabulated on admissible words."""

    shift: TransitionMatrix
    depth: int
    table: Mapping[tuple, float]

    def __post_init__(self):
        if self.depth < 1:
            raise PreconditionError("potential depth must be >= 1")
        words = set(sft.iter_words(self.shift, self.depth))
        if set(self.table) != words:
            raise PreconditionError("potential table must cover exactly the admissible words of its depth")
        if not all(math.isfinite(v) for v in self.table.values()):
            raise PreconditionError("potential values must be finite")

    @classmethod
    def from_function(cls, shift, depth: int, f: Callable[[tuple], float]):
        return cls(shift, depth, {w: float(f(w)) for w in sft.iter_words(shift, depth)})

    @classmethod
    def zero(cls, shift, depth: int = 1):
        return cls.from_function(shift, depth, lambda w: 0.0)

    @classmethod
    def indicator(cls, shift, symbol: int, scale: float = 1.0):
        """``scale * 1_[symbol]`` as a depth-1 potential."""
        return cls.from_function(shift, 1, lambda w: scale if w[0] == symbol else 0.0)

    @classmethod
    def constant(cls, shift, value: float):
        return cls.from_function(shift, 1, lambda w: value)

    def __call__(self, word) -> float:
        return self.table[tuple(word[: self.depth])]

    def lift(self, depth: int) -> "LocallyConstantPotential":
        if depth < self.depth:
            raise PreconditionError("cannot lower the depth of a potential")
        if depth == self.depth:
            return self
        return LocallyConstantPotential.from_function(self.shift, depth, self)

    def combine(self, other: "LocallyConstantPotential", t: float = 1.0) -> "LocallyConstantPotential":
        """``self + t * other`` at the larger of the two depths."""
        k = max(self.depth, other.depth)
        a, b = self.lift(k), other.lift(k)
        return LocallyConstantPotential(self.shift, k, {w: a.table[w] + t * b.table[w] for w in a.table})

    def scale(self, t: float) -> "LocallyConstantPotential":
        return LocallyConstantPotential(self.shift, self.depth, {w: t * v for w, v in self.table.items()})

    def shifted(self, c: float) -> "LocallyConstantPotential":
        return LocallyConstantPotential(self.shift, self.depth, {w: v + c for w, v in self.table.items()})

    @property
    def min(self) -> float:
        return min(self.table.values())

    @property
    def max(self) -> float:
        return max(self.table.values())


def states(shift: TransitionMatrix, depth: int) -> list[tuple]:
    """State space of the transfer matrix: symbols for depth 1, (depth-1)-words otherwise."""
    return list(sft.iter_words(shift, max(depth - 1, 1)))


def transfer_matrix(phi: LocallyConstantPotential, weights: Callable[[float], complex] = math.exp,
                    dtype=float) -> tuple[list[tuple], object]:
    """Weighted matrix whose spectral radius is ``exp P(phi)``.

    Depth 1: ``L[i, j] = A[i, j] * w(phi(i))``. Depth k >= 2: states are
    (k-1)-words and ``L[u, v] = w(phi(u + v[-1]))`` when ``u[1:] == v[:-1]``.
    """
    shift, k = phi.shift, phi.depth
    st = states(shift, k)
    index = {s: i for i, s in enumerate(st)}
    rows, cols, vals = [], [], []
    if k == 1:
        for i in range(shift.n):
            w = weights(phi.table[(i,)])
            for j in shift.successors(i):
                rows.append(i), cols.append(j), vals.append(w)
    else:
        for word, value in phi.table.items():
            rows.append(index[word[:-1]]), cols.append(index[word[1:]]), vals.append(weights(value))
    n = len(st)
    m = sp.csr_matrix((np.array(vals, dtype=dtype), (rows, cols)), shape=(n, n))
    if n <= 400:
        m = m.toarray()
    return st, m


def recode(shift: TransitionMatrix, phi: LocallyConstantPotential):
    """Higher-block presentation on admissible ``depth``-words with a depth-1 potential.

    States of the new shift are the admissible k-words, with ``u -> v`` allowed
    when ``u[1:] == v[:-1]``. Returns ``(A', phi', words)``.
    """
    k = phi.depth
    if k == 1:
        return shift, phi, [(i,) for i in range(shift.n)]
    words = list(sft.iter_words(shift, k))
    index = {w: i for i, w in enumerate(words)}
    by_prefix: dict[tuple, list[int]] = {}
    for w, i in index.items():
        by_prefix.setdefault(w[:-1], []).append(i)
    a = np.zeros((len(words), len(words)), dtype=np.int8)
    for w, i in index.items():
        for j in by_prefix.get(w[1:], []):
            a[i, j] = 1
    new_shift = sft.validate(a)
    new_phi = LocallyConstantPotential(new_shift, 1, {(index[w],): v for w, v in phi.table.items()})
    return new_shift, new_phi, words


def _require_irreducible(shift):
    if not sft.is_irreducible(shift):
        raise NotIrreducible("thermodynamic quantities need an irreducible shift")


def pressure(phi: LocallyConstantPotential) -> float:
    """P(phi) = log of the spectral radius of the transfer matrix."""
    _require_irreducible(phi.shift)
    # factor out max(phi) so the matrix stays well scaled
    top = phi.max
    _, m = transfer_matrix(phi.shifted(-top))
    return math.log(sft.perron(m).value) + top


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov measure on the transfer-matrix states of a potential."""

    shift: TransitionMatrix
    states: list
    p: np.ndarray
    P: np.ndarray
    state_length: int
    depth: int

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})

    def index(self, state) -> int:
        return self._index[tuple(state)]

    def step(self, word: Sequence[int], pos: int) -> float:
        """Transition probability of appending ``word[pos]`` after ``word[pos - m: pos]``."""
        m = self.state_length
        u = self._index[tuple(word[pos - m:pos])]
        v = self._index[tuple(word[pos - m + 1:pos + 1])]
        return self.P[u, v]


def equilibrium(phi: LocallyConstantPotential) -> MarkovMeasure:
    """Equilibrium state: ``P_ij = L_ij r_j / (lambda r_i)``, ``p_i = l_i r_i``."""
    _require_irreducible(phi.shift)
    st, m = transfer_matrix(phi.shifted(-phi.max))
    lam, l, r = sft.perron(m)
    dense = m.toarray() if sp.issparse(m) else m
    P = dense * r[None, :] / (lam * r[:, None])
    P /= P.sum(axis=1, keepdims=True)
    p = l * r
    p /= p.sum()
    return MarkovMeasure(phi.shift, st, p, P, max(phi.depth - 1, 1), phi.depth)


def cylinder_measure(mu: MarkovMeasure, word: Sequence[int]) -> float:
    word = tuple(word)
    if not mu.shift.is_admissible(word):
        raise InadmissibleWord(f"word {word} is not admissible")
    m = mu.state_length
    if len(word) < m:
        return float(sum(mu.p[i] for i, s in enumerate(mu.states) if s[: len(word)] == word))
    value = mu.p[mu.index(word[:m])]
    for pos in range(m, len(word)):
        value *= mu.step(word, pos)
    return float(value)


def birkhoff_sum(phi: LocallyConstantPotential, word: Sequence[int], cyclic: bool = False) -> float:
    """Sum of ``phi`` over the windows of ``word``; cyclic windows wrap around."""
    word = tuple(word)
    k = phi.depth
    if cyclic:
        ext = word * (k // len(word) + 2)
        return float(sum(phi.table[ext[i:i + k]] for i in range(len(word))))
    if len(word) < k:
        raise WordTooShort(f"word of length {len(word)} shorter than potential depth {k}")
    return float(sum(phi.table[word[i:i + k]] for i in range(len(word) - k + 1)))


def integral(psi: LocallyConstantPotential, mu: MarkovMeasure) -> float:
    """Integral of ``psi`` against a Markov measure, summed over depth-k cylinders."""
    return float(sum(v * cylinder_measure(mu, w) for w, v in psi.table.items()))


@dataclass(frozen=True)
class GibbsBounds:
    c_low: float
    c_high: float
    by_length: list  # (n, cumulative low, cumulative high, low at n, high at n)

    def __iter__(self):
        return iter((self.c_low, self.c_high))


def verify_gibbs(phi: LocallyConstantPotential, n_max: int) -> GibbsBounds:
    """Range of ``mu[w] / exp(-n P + S_n phi(w))`` over admissible words of length <= n_max."""
    if n_max > 14:
        raise PreconditionError("verify_gibbs enumerates all words; n_max must be <= 14")
    mu = equilibrium(phi)
    P = pressure(phi)
    low, high = math.inf, 0.0
    profile = []
    for n in range(max(phi.depth, 1), n_max + 1):
        lo_n, hi_n = math.inf, 0.0
        for w in sft.iter_words(phi.shift, n):
            ratio = cylinder_measure(mu, w) / math.exp(-n * P + birkhoff_sum(phi, w))
            lo_n, hi_n = min(lo_n, ratio), max(hi_n, ratio)
        low, high = min(low, lo_n), max(high, hi_n)
        profile.append((n, low, high, lo_n, hi_n))
    return GibbsBounds(low, high, profile)


def pressure_derivative(phi: LocallyConstantPotential, psi: LocallyConstantPotential,
                        step: float = FIRST_DIFF_STEP) -> tuple[float, float]:
    """Centred difference of ``t -> P(phi + t psi)`` at 0 and ``integral psi d mu_phi``."""
    slope = (pressure(phi.combine(psi, step)) - pressure(phi.combine(psi, -step))) / (2 * step)
    return slope, integral(psi, equilibrium(phi))


def variance(phi: LocallyConstantPotential, psi: LocallyConstantPotential,
             step: float = SECOND_DIFF_STEP) -> float:
    """Asymptotic variance: second centred difference of ``t -> P(phi + t psi_0)``."""
    centred = psi.shifted(-integral(psi, equilibrium(phi)))
    p0 = pressure(phi.combine(centred, 0.0))
    value = (pressure(phi.combine(centred, step)) - 2 * p0 + pressure(phi.combine(centred, -step))) / step**2
    return max(value, 0.0)


def parse_potential(text: str, shift: TransitionMatrix, depth: int | None = None) -> LocallyConstantPotential:
    """Read ``word value`` lines; a word is space- or comma-free digits or dot-separated indices."""
    from .textio import parse_potential_lines

    entries = parse_potential_lines(text)
    k = depth or max((len(w) for w in entries), default=1)
    table = {}
    missing = []
    for w in sft.iter_words(shift, k):
        if w in entries:
            table[w] = entries.pop(w)
        else:
            table[w] = 0.0
            missing.append(w)
    if entries:
        raise InadmissibleWord(f"potential given on words that are not admissible {k}-words: {sorted(entries)[:5]}")
    if missing:
        warnings.warn(f"{len(missing)} admissible word(s) missing from potential; set to 0", stacklevel=2)
    return LocallyConstantPotential(shift, k, table)
