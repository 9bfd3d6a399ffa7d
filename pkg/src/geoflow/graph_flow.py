"""Geodesic flow on compact metric graphs.

Directed edge ``2e`` runs along undirected edge ``e`` from its first to its
second endpoint and ``2e + 1`` runs back. Geodesics are non-backtracking edge
sequences, so the flow is the suspension of the non-backtracking edge shift
under the edge-length roof.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import sft, suspension
from .errors import AlphaTooLarge, DegreeTooLow, PreconditionError, UnequalLengths, WindowExhausted
from .suspension import FlowPoint, RoofFunction, SuspensionFlow

SPACING_FACTOR = Fraction(999999, 1000000)
DIAMETER_MARGIN = 1e-3


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


@dataclass(frozen=True, eq=False)
class MetricGraph:
    vertices: int
    edges: tuple  # (u, v, length)

    def __post_init__(self):
        edges = tuple((int(u), int(v), l) for u, v, l in self.edges)
        if self.vertices < 1 or not edges:
            raise PreconditionError("graph needs at least one vertex and one edge")
        for u, v, l in edges:
            if not (0 <= u < self.vertices and 0 <= v < self.vertices):
                raise PreconditionError(f"edge ({u}, {v}) has an endpoint outside the vertex range")
            if not l > 0 or not math.isfinite(float(l)):
                raise PreconditionError(f"edge ({u}, {v}) has non-positive length {l}")
        exact = all(_is_exact(l) for _, _, l in edges)
        edges = tuple((u, v, Fraction(l) if exact else float(l)) for u, v, l in edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "exact", exact)
        degree = [0] * self.vertices
        for u, v, _ in edges:
            degree[u] += 1
            degree[v] += 1
        low = [i for i, d in enumerate(degree) if d < 3]
        if low:
            raise DegreeTooLow(f"vertices {low} have degree < 3")
        adj = [[] for _ in range(self.vertices)]
        for u, v, _ in edges:
            adj[u].append(v)
            adj[v].append(u)
        seen, queue = {0}, deque([0])
        while queue:
            for w in adj[queue.popleft()]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != self.vertices:
            raise PreconditionError("graph is not connected")

    @property
    def n_directed(self) -> int:
        return 2 * len(self.edges)

    def tail(self, d: int) -> int:
        u, v, _ = self.edges[d // 2]
        return u if d % 2 == 0 else v

    def head(self, d: int) -> int:
        u, v, _ = self.edges[d // 2]
        return v if d % 2 == 0 else u

    def length(self, d: int):
        return self.edges[d // 2][2]

    @staticmethod
    def reverse(d: int) -> int:
        return d ^ 1

    def successors(self, d: int) -> list[int]:
        h = self.head(d)
        return [f for f in range(self.n_directed) if self.tail(f) == h and f != d ^ 1]

    def predecessors(self, d: int) -> list[int]:
        t = self.tail(d)
        return [f for f in range(self.n_directed) if self.head(f) == t and d != f ^ 1]

    def zero(self):
        return Fraction(0) if self.exact else 0.0


def rose(lengths: Sequence = (1, 1)) -> MetricGraph:
    return MetricGraph(1, tuple((0, 0, l) for l in lengths))


def theta(lengths: Sequence = (1, 1, 1)) -> MetricGraph:
    return MetricGraph(2, tuple((0, 1, l) for l in lengths))


def parse_graph(text: str) -> MetricGraph:
    from .textio import parse_graph as _parse

    n, edges = _parse(text)
    return MetricGraph(n, tuple(edges))


def edge_shift(g: MetricGraph) -> sft.TransitionMatrix:
    n = g.n_directed
    a = np.zeros((n, n), dtype=np.int8)
    for d in range(n):
        for f in g.successors(d):
            a[d, f] = 1
    return sft.validate(a)


def code_flow(g: MetricGraph) -> SuspensionFlow:
    a = edge_shift(g)
    roof = RoofFunction.from_values(a, 1, {(d,): g.length(d) for d in range(g.n_directed)})
    return SuspensionFlow(a, roof)


def primitive_cycles(successors, weight, l_max, nodes) -> list[tuple[tuple, object]]:
    """Primitive cyclic words with total weight <= l_max, one per rotation class.

    ``successors(x)`` and ``weight(x)`` describe a graph on ``nodes``. Words are
    grown from their minimal node, so each class is produced from its canonical
    rotation only.
    """
    out = []
    tol = 0 if isinstance(l_max, Fraction) else 1e-12 * max(1.0, float(l_max))
    for s in nodes:
        if weight(s) > l_max + tol:
            continue
        stack = [(s, (s,), weight(s))]
        while stack:
            x, word, total = stack.pop()
            for y in successors(x):
                if y < s:
                    continue
                if y == s and sft.canonical_rotation(word) == word and sft.is_primitive(word):
                    out.append((word, total))
                t = total + weight(y)
                if t <= l_max + tol:
                    stack.append((y, word + (y,), t))
    out.sort(key=lambda item: (item[1], item[0]))
    return out


def closed_geodesics(g: MetricGraph, l_max) -> list[tuple[tuple, object]]:
    """Primitive closed non-backtracking edge cycles of length <= l_max, with lengths."""
    if l_max <= 0:
        raise PreconditionError("L_max must be positive")
    succ = {d: g.successors(d) for d in range(g.n_directed)}
    if g.exact and not isinstance(l_max, float):
        l_max = Fraction(l_max)
    return primitive_cycles(succ.__getitem__, g.length, l_max, range(g.n_directed))


def closed_walk_lengths(g: MetricGraph, l_max) -> list:
    """Distinct lengths <= l_max of closed non-backtracking edge walks.

    Dynamic programming over (current edge, length so far), so the cost grows
    with the number of distinct lengths rather than the number of words. Every
    closed geodesic length up to ``l_max`` is among them.
    """
    tol = 0 if g.exact else 1e-12 * max(1.0, float(l_max))
    key = (lambda x: x) if g.exact else (lambda x: round(float(x) / max(tol, 1e-300)))
    found = {}
    for d in range(g.n_directed):
        frontier = {(d, key(g.length(d))): g.length(d)}
        while frontier:
            nxt = {}
            for (x, _), total in frontier.items():
                for y in g.successors(x):
                    if y == d:
                        found.setdefault(key(total), total)
                    t = total + g.length(y)
                    if t <= l_max + tol:
                        nxt.setdefault((y, key(t)), t)
            frontier = nxt
    return sorted(found.values())


def systole(g: MetricGraph):
    """Length of the shortest closed geodesic (Dijkstra on the edge shift)."""
    best = None
    for d in range(g.n_directed):
        dist = {d: g.zero()}
        heap = [(g.zero(), d)]
        found = None
        while heap:
            w, x = heapq.heappop(heap)
            if w > dist.get(x, w) or (found is not None and w >= found):
                continue
            for y in g.successors(x):
                if y == d:
                    total = w + g.length(d)
                    found = total if found is None else min(found, total)
                    continue
                nw = w + g.length(y)
                if y not in dist or nw < dist[y]:
                    dist[y] = nw
                    heapq.heappush(heap, (nw, y))
        if found is not None:
            best = found if best is None else min(best, found)
    return best


def fraction_gcd(values: Sequence[Fraction]) -> Fraction:
    """Largest ``c`` with every value in ``c Z``."""
    lcm = 1
    for v in values:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    return Fraction(math.gcd(*[int(v * lcm) for v in values]), lcm)


def arithmetic_check(g: MetricGraph, tol: float = 1e-9, cross_check: bool = True):
    """Largest ``c`` with every edge length in ``c Z``, or None.

    When ``c`` exists every closed geodesic up to length ``10 c`` is checked to
    lie in ``c Z`` as well.
    """
    lengths = [l for _, _, l in g.edges]
    if g.exact:
        c = fraction_gcd(lengths)
    else:
        if len(set(lengths)) == 1:
            c = lengths[0]
        else:
            c = suspension.weak_mixing_test(lengths, tol)
    if c is None:
        return None
    if cross_check:
        for length in closed_walk_lengths(g, 10 * c):
            ratio = length / c
            if abs(ratio - round(ratio)) > (0 if g.exact else tol):
                raise RuntimeError(f"closed geodesic length {length} not in {c}Z")
    return c


@dataclass(frozen=True, eq=False)
class BowenMargulis:
    measure: suspension.FlowMeasure
    entropy: float
    edge_length: object


def bowen_margulis(g: MetricGraph) -> BowenMargulis:
    lengths = {l for _, _, l in g.edges}
    if len(lengths) != 1:
        raise UnequalLengths("edge lengths differ; use flow_measure with phi = 0 on code_flow(G)")
    c = lengths.pop()
    flow = code_flow(g)
    measure = suspension.flow_measure(flow)
    lam = sft.perron(flow.base.entries.astype(float)).value
    return BowenMargulis(measure, math.log(lam) / float(c), c)


# --- sections ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphSection:
    """Points on directed ``edge`` at ``position`` whose neighbouring edges read ``past``/``future``."""

    edge: int
    position: object
    past: tuple = ()
    future: tuple = ()

    @property
    def word(self) -> tuple:
        return self.past + (self.edge,) + self.future

    @property
    def depths(self) -> tuple[int, int]:
        return len(self.past), len(self.future)

    def extents(self, g: MetricGraph):
        """Time covered before and after the section point by the cylinder words."""
        back = self.position + sum((g.length(e) for e in self.past), g.zero())
        ahead = g.length(self.edge) - self.position + sum((g.length(e) for e in self.future), g.zero())
        return back, ahead

    def contains(self, other: "GraphSection") -> bool:
        """Cylinder containment at the same point: ``other`` refines ``self``."""
        return (self.edge == other.edge and self.position == other.position
                and other.past[len(other.past) - len(self.past):] == self.past
                and other.future[: len(self.future)] == self.future)


def diameter_bound(g: MetricGraph, s: GraphSection) -> float:
    """Supremum of the d_GX distance between geodesics through a cylinder section.

    Two geodesics sharing the time window ``[-a, b]`` are at distance at most
    ``2 (s - b)`` at time ``s > b``; integrating against ``e^{-2|s|}`` gives
    ``(e^{-2a} + e^{-2b}) / 2``. Equality is attained in the universal cover.
    """
    a, b = s.extents(g)
    return 0.5 * (math.exp(-2 * float(a)) + math.exp(-2 * float(b)))


@dataclass(frozen=True)
class SectionPair:
    B: GraphSection
    D: GraphSection


@dataclass(frozen=True, eq=False)
class GraphFamily:
    graph: MetricGraph
    alpha: object
    pairs: tuple
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.pairs)

    @property
    def B(self) -> list[GraphSection]:
        return [p.B for p in self.pairs]

    @property
    def D(self) -> list[GraphSection]:
        return [p.D for p in self.pairs]


def _stopping_words(g: MetricGraph, d: int, start, target, forward: bool) -> list[tuple]:
    """Minimal edge words beyond ``d`` whose length plus ``start`` reaches ``target``."""
    out = []

    def grow(word, ext):
        if ext >= target:
            out.append(tuple(reversed(word)) if not forward else tuple(word))
            return
        last = word[-1] if word else d
        for e in (g.successors(last) if forward else g.predecessors(last)):
            grow(word + [e], ext + g.length(e))

    grow([], start)
    return sorted(out)


def _position_period(g: MetricGraph, counts: dict) -> int:
    """Period of the chain that visits ``counts[e]`` section groups per traversal of edge ``e``."""
    nodes = []
    first = {}
    for d in range(g.n_directed):
        first[d] = len(nodes)
        nodes.extend((d, k) for k in range(counts[d // 2]))
    a = np.zeros((len(nodes), len(nodes)), dtype=np.int8)
    for d in range(g.n_directed):
        m = counts[d // 2]
        for k in range(m - 1):
            a[first[d] + k, first[d] + k + 1] = 1
        for f in g.successors(d):
            a[first[d] + m - 1, first[f]] = 1
    return sft.period(a)


def _as_scale(g: MetricGraph, alpha):
    if g.exact:
        if isinstance(alpha, float):
            return Fraction(repr(alpha))
        return Fraction(alpha)
    return float(alpha)


def section_counts(g: MetricGraph, alpha, aperiodic: bool = True) -> dict:
    """Section positions per undirected edge: spacing at most ``alpha (1 - 1e-6)``."""
    alpha = _as_scale(g, alpha)
    factor = SPACING_FACTOR if g.exact else float(SPACING_FACTOR)
    counts = {e: math.ceil(l / (alpha * factor)) for e, (_, _, l) in enumerate(g.edges)}
    if aperiodic:
        bumped = 0
        while _position_period(g, counts) > 1:
            counts[bumped % len(counts)] += 1
            bumped += 1
    return counts


def build_sections(g: MetricGraph, alpha, check_scale: bool = True, slack=0,
                   aperiodic: bool = True) -> GraphFamily:
    """Cylinder-refined sections along every edge.

    At each position, ``D`` cylinders cover a time window ``T_D`` on each side
    with ``e^{-2 T_D} < alpha`` (so ``diam D < alpha``). ``B`` cylinders are
    deeper, ``T_B = T_D + 2 alpha`` plus a small margin, which makes every
    ``D_j`` met within ``2 alpha`` readable from ``B_i``. Each ``B`` gets its own
    copy of its ``D``, displaced along the flow by a distinct tiny offset so
    that the ``D`` sets are pairwise disjoint.
    """
    alpha = _as_scale(g, alpha)
    if alpha <= 0:
        raise PreconditionError("alpha must be positive")
    sys_len = systole(g)
    if check_scale and not alpha < sys_len / 8:
        raise AlphaTooLarge(f"alpha = {alpha} must be below systole/8 = {sys_len / 8}")
    t_d = 0.5 * math.log(1 / float(alpha)) + DIAMETER_MARGIN
    t_b = t_d + 2 * float(alpha) + float(alpha) / 100 + float(slack)
    counts = section_counts(g, alpha, aperiodic)
    pairs = []
    for d in range(g.n_directed):
        length = g.length(d)
        m = counts[d // 2]
        for j in range(m):
            p = (2 * j + 1) * length / (2 * m)
            deep = [(past, fut) for past in _stopping_words(g, d, p, t_b, False)
                    for fut in _stopping_words(g, d, length - p, t_b, True)]
            coarse_past = _stopping_words(g, d, p, t_d, False)
            coarse_fut = _stopping_words(g, d, length - p, t_d, True)
            step = alpha / 1_000_000 / (2 * len(deep))
            for k, (past, fut) in enumerate(deep):
                pos = p + k * step
                cp = next(w for w in coarse_past if past[len(past) - len(w):] == w)
                cf = next(w for w in coarse_fut if fut[: len(w)] == w)
                pairs.append(SectionPair(GraphSection(d, pos, past, fut), GraphSection(d, pos, cp, cf)))
    info = {"counts": counts, "T_D": t_d, "T_B": t_b, "systole": sys_len}
    return GraphFamily(g, alpha, tuple(pairs), info)


# --- itineraries and the Poincare map -----------------------------------------------------------


class Undetermined(Exception):
    """The itinerary does not reach far enough to decide; ``side`` says which way to extend."""

    def __init__(self, side: str):
        super().__init__(side)
        self.side = side


@dataclass(frozen=True)
class Itinerary:
    """Edge word with the time-0 point at ``position`` on ``word[anchor]``."""

    word: tuple
    anchor: int
    position: object
    periodic: bool = False

    def edge(self, r: int) -> int:
        if self.periodic:
            return self.word[r % len(self.word)]
        if not 0 <= r < len(self.word):
            raise Undetermined("past" if r < 0 else "future")
        return self.word[r]

    def window(self, lo: int, hi: int) -> tuple:
        """Edges at indices ``lo..hi-1``."""
        if self.periodic:
            return tuple(self.word[r % len(self.word)] for r in range(lo, hi))
        if lo < 0:
            raise Undetermined("past")
        if hi > len(self.word):
            raise Undetermined("future")
        return self.word[lo:hi]

    def matches(self, s: GraphSection, r: int) -> bool:
        m, n = s.depths
        if self.edge(r) != s.edge:
            return False
        return self.window(r - m, r) == s.past and self.window(r + 1, r + 1 + n) == s.future

    def extend(self, g: MetricGraph, side: str) -> list["Itinerary"]:
        if side == "future":
            return [Itinerary(self.word + (e,), self.anchor, self.position) for e in g.successors(self.word[-1])]
        return [Itinerary((e,) + self.word, self.anchor + 1, self.position) for e in g.predecessors(self.word[0])]


@dataclass(frozen=True, eq=False)
class FamilyIndex:
    graph: MetricGraph
    sections: tuple
    by_edge: dict

    @classmethod
    def build(cls, g: MetricGraph, sections: Sequence[GraphSection]) -> "FamilyIndex":
        by_edge: dict[int, list] = {d: [] for d in range(g.n_directed)}
        for i, s in enumerate(sections):
            by_edge[s.edge].append((s.position, i))
        for lst in by_edge.values():
            lst.sort()
        return cls(g, tuple(sections), by_edge)

    def hit(self, it: Itinerary, horizon, forward: bool = True, strict: bool = True):
        """First section met strictly after (or before) time 0 within ``horizon``.

        Returns ``(index, time, edge index)``, or None when nothing is met within the
        horizon. Raises :class:`Undetermined` when the itinerary is too short.
        """
        g = self.graph
        r = it.anchor
        start = -it.position
        if forward:
            while start < horizon:
                e = it.edge(r)
                for pos, i in self.by_edge[e]:
                    t = start + pos
                    if t <= 0 if strict else t < 0:
                        continue
                    if t > horizon:
                        break
                    if it.matches(self.sections[i], r):
                        return i, t, r
                start += g.length(e)
                r += 1
            return None
        end = start + g.length(it.edge(r))
        while end > -horizon:
            e = it.edge(r)
            begin = end - g.length(e)
            for pos, i in reversed(self.by_edge[e]):
                t = begin + pos
                if t >= 0 if strict else t > 0:
                    continue
                if t < -horizon:
                    break
                if it.matches(self.sections[i], r):
                    return i, t, r
            end = begin
            r -= 1
            if r < 0 and not it.periodic:
                raise Undetermined("past")
        return None


def resolve_hits(index: FamilyIndex, it: Itinerary, horizon, forward: bool = True):
    """All ``(itinerary, hit)`` outcomes over the extensions needed to decide the hit."""
    out = []
    stack = [it]
    while stack:
        cur = stack.pop()
        try:
            out.append((cur, index.hit(cur, horizon, forward)))
        except Undetermined as exc:
            stack.extend(cur.extend(index.graph, exc.side))
    return out


def point_itinerary(g: MetricGraph, point: FlowPoint) -> Itinerary:
    if point.periodic:
        n = len(point.word)
        return Itinerary(point.word, point.position % n, point.height, periodic=True)
    return Itinerary(point.word, point.position, point.height)


def section_point(s: GraphSection) -> Itinerary:
    return Itinerary(s.word, len(s.past), s.position)


def poincare(g: MetricGraph, family: GraphFamily, point: FlowPoint, horizon=None):
    """First ``B`` section hit strictly after ``point`` and the elapsed time."""
    index = FamilyIndex.build(g, family.B)
    it = point_itinerary(g, point)
    candidates = [s for s in family.B if s.position == it.position and s.edge == it.edge(it.anchor)]
    try:
        on_section = any(it.matches(s, it.anchor) for s in candidates)
    except Undetermined as exc:
        raise WindowExhausted(f"base window too short to identify the section ({exc.side})") from None
    if not on_section:
        raise PreconditionError("point does not lie on a section of the family")
    if horizon is None:
        horizon = family.alpha
    try:
        found = index.hit(it, horizon)
    except Undetermined as exc:
        raise WindowExhausted(f"base window too short to decide the return ({exc.side})") from None
    if found is None:
        raise PreconditionError("no section within the horizon")
    return found[0], found[1]


def graph_point_distance(g: MetricGraph, x: Itinerary, y: Itinerary) -> float:
    """d_GX between graph geodesics; 0 iff identical, else the shared-window closed form."""
    if x.edge(x.anchor) == y.edge(y.anchor) and x.position == y.position:
        # agree on a window around time 0: bound by the tail of the divergence
        back, ahead = g.zero(), g.length(x.edge(x.anchor)) - x.position
        r = 1
        try:
            while x.edge(x.anchor + r) == y.edge(y.anchor + r) and r < 10_000:
                ahead += g.length(x.edge(x.anchor + r))
                r += 1
        except Undetermined:
            ahead = math.inf
        back = x.position
        r = 1
        try:
            while x.edge(x.anchor - r) == y.edge(y.anchor - r) and r < 10_000:
                back += g.length(x.edge(x.anchor - r))
                r += 1
        except Undetermined:
            back = math.inf
        if back == math.inf and ahead == math.inf:
            return 0.0
        return 0.5 * (math.exp(-2 * float(back)) + math.exp(-2 * float(ahead)))
    return math.inf
