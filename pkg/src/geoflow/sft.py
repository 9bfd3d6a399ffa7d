"""Two-sided shifts of finite type.

Symbols are the integers ``0..N-1``. Words are tuples of symbols. A periodic
orbit is stored as its lexicographically minimal rotation, which for a
primitive word is a Lyndon word.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyRowOrColumn, NoConvergence, NonSquare, NotIrreducible, PreconditionError

MAX_EXACT_PERIOD = 32
PERRON_TOL = 1e-12
PERRON_MAX_ITER = 10**6
POLISH_ITER = 10_000

Word = tuple


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Validated 0/1 matrix; use :func:`validate` to build one."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def successors(self, i: int) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.entries[i]))

    def allowed(self, i: int, j: int) -> bool:
        return bool(self.entries[i, j])

    def is_admissible(self, word: Sequence[int], cyclic: bool = False) -> bool:
        if len(word) == 0:
            return False
        if any(not 0 <= s < self.n for s in word):
            return False
        a = self.entries
        if any(not a[u, v] for u, v in zip(word, word[1:])):
            return False
        return not cyclic or bool(a[word[-1], word[0]])

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"TransitionMatrix(n={self.n})"


def validate(matrix) -> TransitionMatrix:
    """Check that ``matrix`` is a square 0/1 matrix with no dead symbols."""
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise NonSquare(f"transition matrix must be square and non-empty, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise PreconditionError("transition matrix entries must be 0 or 1")
    a = a.astype(np.int8)
    for i in range(a.shape[0]):
        if not a[i].any():
            raise EmptyRowOrColumn("row", i)
        if not a[:, i].any():
            raise EmptyRowOrColumn("column", i)
    a.setflags(write=False)
    return TransitionMatrix(a)


def _as_matrix(a):
    if isinstance(a, TransitionMatrix):
        return a.entries
    return a if sp.issparse(a) else np.asarray(a)


def _reachable(adj: list[list[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def _adjacency(m) -> list[list[int]]:
    if sp.issparse(m):
        m = sp.csr_matrix(m)
        return [list(m.indices[m.indptr[i]:m.indptr[i + 1]][m.data[m.indptr[i]:m.indptr[i + 1]] != 0])
                for i in range(m.shape[0])]
    m = np.asarray(m)
    return [list(np.flatnonzero(m[i])) for i in range(m.shape[0])]


def is_irreducible(a) -> bool:
    """True iff every symbol reaches every symbol (including itself) in >= 1 step."""
    m = _as_matrix(a)
    adj = _adjacency(m)
    n = len(adj)
    radj = [[] for _ in range(n)]
    for u, vs in enumerate(adj):
        for v in vs:
            radj[v].append(u)
    if len(_reachable(adj, 0)) != n or len(_reachable(radj, 0)) != n:
        return False
    # with strong connectivity every symbol also lies on a cycle unless n == 1
    return n > 1 or bool(adj[0])


def period(a) -> int:
    """gcd of cycle lengths; 1 means aperiodic."""
    if not is_irreducible(a):
        raise NotIrreducible("period is only defined for irreducible matrices")
    adj = _adjacency(_as_matrix(a))
    level = {0: 0}
    queue = deque([0])
    g = 0
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g)


def count_words(a, n: int) -> int:
    """Number of admissible words of length ``n`` (exact integer)."""
    if n < 1:
        raise PreconditionError("word length must be >= 1")
    m = _as_matrix(a).astype(object)
    v = np.ones(m.shape[0], dtype=object)
    for _ in range(n - 1):
        v = m.dot(v)
    return int(sum(v))


def iter_words(a, n: int) -> Iterable[Word]:
    """All admissible words of length ``n`` in lexicographic order."""
    t = a if isinstance(a, TransitionMatrix) else validate(a)

    def extend(prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for s in t.successors(prefix[-1]):
            prefix.append(s)
            yield from extend(prefix)
            prefix.pop()

    for s in range(t.n):
        yield from extend([s])


def trace_power(a, n: int) -> int:
    """trace(A^n) with exact integer arithmetic."""
    if n > MAX_EXACT_PERIOD:
        raise PreconditionError(f"exact periodic census limited to n <= {MAX_EXACT_PERIOD}")
    m = _as_matrix(a).astype(object)
    p = np.identity(m.shape[0], dtype=object)
    for _ in range(n):
        p = p.dot(m)
    return int(sum(p[i, i] for i in range(m.shape[0])))


def canonical_rotation(word: Sequence[int]) -> Word:
    w = tuple(word)
    return min(w[i:] + w[:i] for i in range(len(w)))


def is_primitive(word: Sequence[int]) -> bool:
    w = tuple(word)
    n = len(w)
    return all(w != w[d:] + w[:d] for d in range(1, n) if n % d == 0)


@dataclass(frozen=True)
class PeriodicOrbit:
    word: Word

    def __post_init__(self):
        object.__setattr__(self, "word", canonical_rotation(self.word))

    def __len__(self):
        return len(self.word)


@dataclass(frozen=True)
class PeriodicCensus:
    n: int
    orbits: list = field(default_factory=list)
    census: int = 0


def _lyndon_words(t: TransitionMatrix, n: int) -> list[Word]:
    """Cyclically admissible Lyndon words of length n (FKM with admissibility pruning)."""
    out = []
    a = [0] * (n + 1)

    def gen(pos, p):
        if pos > n:
            if p == n and t.allowed(a[n], a[1]):
                out.append(tuple(a[1:]))
            return
        for j in range(a[pos - p], t.n):
            if pos > 1 and not t.allowed(a[pos - 1], j):
                continue
            a[pos] = j
            gen(pos + 1, p if j == a[pos - p] else pos)

    for s in range(t.n):
        a[1] = s
        gen(2, 1)
    return out


def primitive_orbits(a, n: int) -> list[PeriodicOrbit]:
    t = a if isinstance(a, TransitionMatrix) else validate(a)
    return [PeriodicOrbit(w) for w in _lyndon_words(t, n)]


def enumerate_periodic(a, n: int) -> PeriodicCensus:
    """Primitive orbits of least period ``n`` and the number of period-``n`` points.

    The census is counted from the enumerated orbits of every period dividing
    ``n`` and cross-checked against ``trace(A^n)``.
    """
    if n < 1:
        raise PreconditionError("period must be >= 1")
    if n > MAX_EXACT_PERIOD:
        raise PreconditionError(f"exact periodic census limited to n <= {MAX_EXACT_PERIOD}")
    t = a if isinstance(a, TransitionMatrix) else validate(a)
    orbits = primitive_orbits(t, n)
    census = sum(d * len(_lyndon_words(t, d)) for d in range(1, n) if n % d == 0) + n * len(orbits)
    expected = trace_power(t, n)
    if census != expected:
        raise RuntimeError(f"periodic census {census} disagrees with trace(A^{n}) = {expected}")
    return PeriodicCensus(n=n, orbits=orbits, census=census)


@dataclass(frozen=True)
class PerronData:
    value: float
    left: np.ndarray
    right: np.ndarray

    def __iter__(self):
        return iter((self.value, self.left, self.right))


def _power(m, start, tol, max_iter):
    x = start / start.sum()
    for _ in range(max_iter):
        mx = m @ x
        lam = mx.sum()
        if np.max(np.abs(mx - lam * x)) <= tol * max(1.0, lam):
            return lam, x
        x = mx + x
        x /= x.sum()
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


def _start_vector(m, transpose):
    n = m.shape[0]
    if n <= 64:
        return np.ones(n)
    mt = m.T if transpose else m
    try:
        if sp.issparse(mt) and n > 400:
            from scipy.sparse.linalg import eigs
            _, vec = eigs(sp.csr_matrix(mt, dtype=float), k=1, which="LR", tol=1e-14, maxiter=100_000)
            v = np.abs(vec[:, 0].real)
        else:
            dense = mt.toarray() if sp.issparse(mt) else np.asarray(mt, dtype=float)
            vals, vecs = np.linalg.eig(dense)
            v = np.abs(vecs[:, np.argmax(vals.real)].real)
    except Exception:  # fall back to the deterministic default
        return np.ones(n)
    v = np.maximum(v, 1e-300)
    return v


def perron(m, tol: float = PERRON_TOL, max_iter: int = PERRON_MAX_ITER) -> PerronData:
    """Dominant eigenvalue and positive eigenvectors of a nonnegative irreducible matrix.

    Iterates ``x <- (M + I) x`` normalized by the entry sum, so periodic
    matrices converge too. Returns ``r`` with ``sum(r) = 1`` and ``l`` with
    ``l . r = 1``.
    """
    if not sp.issparse(m):
        m = np.asarray(m, dtype=float)
    if (m.min() if not sp.issparse(m) else (m.data.min() if m.nnz else 0.0)) < 0:
        raise PreconditionError("perron requires a nonnegative matrix")
    if not is_irreducible(m):
        raise NotIrreducible("perron requires an irreducible matrix")
    mt = m.T.tocsr() if sp.issparse(m) else m.T
    r, l = _start_vector(m, False), _start_vector(m, True)
    inner = tol
    best = None
    for attempt in range(4):
        try:
            _, r = _power(m, r, inner, max_iter if attempt == 0 else POLISH_ITER)
            _, l = _power(mt, l, inner, max_iter if attempt == 0 else POLISH_ITER)
        except NoConvergence:
            if best is None:
                raise
            break
        lam = float(l @ (m @ r) / (l @ r))
        r = r / r.sum()
        l = l / (l @ r)
        # the tolerance is stated for the final normalization, so tighten until it holds
        worst = max(np.max(np.abs(m @ r - lam * r)), np.max(np.abs(mt @ l - lam * l)))
        if best is None or worst < best[0]:
            best = (worst, lam, l, r)
        if worst <= tol:
            break
        inner /= 10
    _, lam, l, r = best
    return PerronData(lam, l, r)


def entropy(a) -> float:
    """Topological entropy log(lambda) of the shift."""
    return math.log(perron(_as_matrix(a).astype(float)).value)


def sequence_distance(x: Sequence[int], y: Sequence[int], with_resolution: bool = False):
    """Cylinder metric 2^-l, l = min{|n| : x_n != y_n}, on windows centred at index 0.

    Windows have odd length ``2R+1``. If they agree on the whole window the
    returned distance is 0 and the resolution ``2^-(R+1)`` bounds the true
    distance from above.
    """
    if len(x) != len(y) or len(x) % 2 == 0:
        raise PreconditionError("windows must have equal odd length, centred at index 0")
    radius = len(x) // 2
    resolution = 2.0 ** -(radius + 1)
    d = 0.0
    for l in range(radius + 1):
        if x[radius + l] != y[radius + l] or x[radius - l] != y[radius - l]:
            d = 2.0 ** -l
            break
    return (d, d if d else resolution) if with_resolution else d
