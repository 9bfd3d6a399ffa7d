"""Exact section-family predicates and coding for metric-graph geodesic flows."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .. import sft, suspension
from ..errors import PreconditionError
from ..graph_flow import (
    FamilyIndex,
    GraphFamily,
    GraphSection,
    Itinerary,
    SectionPair,
    MetricGraph,
    Undetermined,
    closed_geodesics,
    code_flow,
    diameter_bound,
    graph_point_distance,
    point_itinerary,
    primitive_cycles,
    build_sections,
    resolve_hits,
    section_counts,
    section_point,
    theta,
)
from ..suspension import FlowPoint, RoofFunction, SuspensionFlow
from .core import Report

GROUP_SPREAD = 1e-5  # sections closer than alpha * GROUP_SPREAD form one coverage group


@dataclass(frozen=True, eq=False)
class GraphBackend:
    """Geodesic flow of ``graph``; ``cycle`` restricts it to one closed geodesic."""

    graph: MetricGraph
    cycle: tuple | None = None

    @property
    def flow(self) -> SuspensionFlow:
        return code_flow(self.graph)


# --- itinerary helpers --------------------------------------------------------------------------


def _start_times(g: MetricGraph, it: Itinerary) -> list:
    starts = [None] * len(it.word)
    starts[it.anchor] = -it.position
    for r in range(it.anchor + 1, len(it.word)):
        starts[r] = starts[r - 1] + g.length(it.word[r - 1])
    for r in range(it.anchor - 1, -1, -1):
        starts[r] = starts[r + 1] - g.length(it.word[r])
    return starts


def _cover(g: MetricGraph, it: Itinerary, t_lo, t_hi) -> list[Itinerary]:
    """Extensions of ``it`` whose edges reach past time ``t_lo`` and ``t_hi``."""
    out, stack = [], [it]
    while stack:
        cur = stack.pop()
        starts = _start_times(g, cur)
        if starts[-1] + g.length(cur.word[-1]) <= t_hi:
            stack.extend(cur.extend(g, "future"))
        elif starts[0] >= t_lo:
            stack.extend(cur.extend(g, "past"))
        else:
            out.append(cur)
    return out


def _aligned(it: Itinerary, s: GraphSection, r: int) -> bool:
    """``s`` placed with its edge at index ``r`` agrees with ``it`` wherever both are defined."""
    lo = r - len(s.past)
    for k, e in enumerate(s.word):
        idx = lo + k
        if 0 <= idx < len(it.word) and it.word[idx] != e:
            return False
    return True


def _compatible(index: FamilyIndex, it: Itinerary, t_lo, t_hi, closed_hi: bool = True):
    """Sections ``j`` (with time) met at some time in ``[t_lo, t_hi]`` by a point of the cylinder ``it``."""
    g = index.graph
    found = {}
    for ext in _cover(g, it, t_lo, t_hi):
        starts = _start_times(g, ext)
        for r, e in enumerate(ext.word):
            if starts[r] > t_hi or starts[r] + g.length(e) < t_lo:
                continue
            for pos, j in index.by_edge[e]:
                t = starts[r] + pos
                if t_lo <= t <= t_hi and _aligned(ext, index.sections[j], r):
                    found.setdefault(j, (t, ext))
    return found


def _reaches(target: FamilyIndex, it: Itinerary, horizon):
    """Every geodesic of the cylinder ``it`` meets the single section of ``target`` within ``horizon``.

    Returns None on success or a witness itinerary that misses it.
    """
    stack = [it]
    while stack:
        cur = stack.pop()
        try:
            if target.hit(cur, horizon, True, strict=False) is not None:
                continue
            if target.hit(cur, horizon, False, strict=False) is not None:
                continue
            return cur
        except Undetermined as exc:
            stack.extend(cur.extend(target.graph, exc.side))
    return None


# --- proper family --------------------------------------------------------------------------------


def _groups(family: GraphFamily):
    """Cluster ``B`` sections by edge and nearby position."""
    g = family.graph
    spread = family.alpha * GROUP_SPREAD
    by_edge: dict[int, list] = {d: [] for d in range(g.n_directed)}
    for i, s in enumerate(family.B):
        by_edge[s.edge].append((s.position, i))
    groups = []
    for d, lst in by_edge.items():
        lst.sort()
        cur = []
        for pos, i in lst:
            if cur and pos - cur[0][0] > spread:
                groups.append((d, cur))
                cur = []
            cur.append((pos, i))
        if cur:
            groups.append((d, cur))
    return groups


def _words(g: MetricGraph, d: int, n: int, forward: bool) -> list[tuple]:
    words = [()]
    for _ in range(n):
        nxt = []
        for w in words:
            last = (w[-1] if forward else w[0]) if w else d
            for e in (g.successors(last) if forward else g.predecessors(last)):
                nxt.append(w + (e,) if forward else (e,) + w)
        words = nxt
    return words


def _group_is_full(family: GraphFamily, d: int, members) -> bool:
    """Do the cylinders of the group cover every geodesic through edge ``d``?"""
    g = family.graph
    secs = [family.B[i] for _, i in members]
    m = max(len(s.past) for s in secs)
    n = max(len(s.future) for s in secs)
    shapes: dict[tuple, set] = {}
    for s in secs:
        shapes.setdefault(s.depths, set()).add((s.past, s.future))
    for past in _words(g, d, m, False):
        for fut in _words(g, d, n, True):
            if not any((past[len(past) - a:] if a else (), fut[:b]) in keys for (a, b), keys in shapes.items()):
                return False
    return True


def _coverage(family: GraphFamily):
    """Worst forward waiting time until a full group; returns (ok, worst, witness)."""
    g = family.graph
    alpha = family.alpha
    full = [(d, members) for d, members in _groups(family) if _group_is_full(family, d, members)]
    spans: dict[int, list] = {d: [] for d in range(g.n_directed)}
    for d, members in full:
        spans[d].append((members[0][0], members[-1][0]))
    for lst in spans.values():
        lst.sort()
    starts = [(d, g.zero(), None) for d in range(g.n_directed)]
    starts += [(d, lo, hi) for d, lst in spans.items() for lo, hi in lst]
    worst, witness = g.zero(), None
    for d, u0, own_hi in starts:
        # depth-first over forward paths until a full group is met
        stack = [(d, u0, g.zero(), (d,), own_hi)]
        while stack:
            e, u, waited, path, skip_hi = stack.pop()
            nxt = None
            for lo, hi in spans[e]:
                if (lo > skip_hi) if skip_hi is not None else (lo >= u):
                    nxt = hi
                    break
            if nxt is not None:
                w = waited + nxt - u
                if w > worst:
                    worst, witness = w, (path, u0)
                continue
            waited = waited + g.length(e) - u
            if waited >= alpha:
                if waited > worst:
                    worst, witness = waited, (path, u0)
                continue
            for f in g.successors(e):
                stack.append((f, g.zero(), waited, path + (f,), None))
    return worst < alpha, worst, witness, len(full)


def check_proper_family(backend: GraphBackend, family: GraphFamily, sample_budget=None) -> Report:
    g = backend.graph
    alpha = family.alpha
    rep = Report("proper_family")
    diam = [diameter_bound(g, p.D) for p in family.pairs]
    nested = all(p.D.contains(p.B) for p in family.pairs)
    worst_diam = max(diam) if diam else 0.0
    rep.add("diameter", worst_diam < float(alpha) and nested,
            f"max diam(D_i) bound {worst_diam:.6g} vs alpha {float(alpha):.6g}; B_i in D_i: {nested}", worst_diam)
    ok, worst, witness, n_full = _coverage(family)
    rep.add("coverage", ok, f"longest wait {float(worst):.6g} before a full section group ({n_full} groups)",
            float(worst), witness)
    index = FamilyIndex.build(g, family.D)
    bad = None
    four = 4 * alpha
    for i, d_sec in enumerate(family.D):
        it = section_point(d_sec)
        ahead = {j for j, (t, _) in _compatible(index, it, 0, four).items() if j != i}
        behind = {j for j, (t, _) in _compatible(index, it, -four, 0).items() if j != i}
        both = ahead & behind
        if both:
            bad = (i, min(both))
            break
    rep.add("disjoint_returns", bad is None,
            "no D_j reachable within 4 alpha both forwards and backwards" if bad is None
            else f"D_{bad[1]} meets D_{bad[0]} both within [0, 4a] and [-4a, 0]", witness=bad)
    return rep


def check_pre_markov(backend: GraphBackend, family: GraphFamily) -> Report:
    g = backend.graph
    alpha = family.alpha
    rep = Report("pre_markov")
    b_index = FamilyIndex.build(g, family.B)
    targets: dict[int, FamilyIndex] = {}
    pairs = 0
    for i, b_sec in enumerate(family.B):
        it = section_point(b_sec)
        for j in sorted(_compatible(b_index, it, -2 * alpha, 2 * alpha)):
            pairs += 1
            if j not in targets:
                targets[j] = FamilyIndex.build(g, [family.D[j]])
            miss = _reaches(targets[j], it, 3 * alpha)
            if miss is not None:
                rep.add("containment", False, f"B_{i} meets B_{j} within 2 alpha but a geodesic of B_{i} "
                        f"misses D_{j} within 3 alpha: edges {miss.word} at index {miss.anchor}",
                        witness=(i, j, miss))
                return rep
    rep.add("containment", True, f"{pairs} intersecting pairs, each B_i inside the 3 alpha flow box of D_j",
            float(pairs))
    return rep


# --- Markov property ------------------------------------------------------------------------------


def _transitions(backend: GraphBackend, family: GraphFamily, forward: bool, horizon=None):
    g = backend.graph
    index = FamilyIndex.build(g, family.B)
    horizon = horizon if horizon is not None else 4 * family.alpha
    out = []
    for i, b_sec in enumerate(family.B):
        it = section_point(b_sec)
        out.append((i, resolve_hits(index, it, horizon, forward)))
    return out


def check_markov_property(backend: GraphBackend, family: GraphFamily) -> Report:
    rep = Report("markov")
    for forward, name in ((True, "forward"), (False, "backward")):
        bad = None
        for i, outcomes in _transitions(backend, family, forward):
            keyed = []
            for it, hit in outcomes:
                data = it.word[it.anchor:] if forward else it.word[: it.anchor + 1]
                keyed.append((data, None if hit is None else hit[0], it))
            for a in range(len(keyed)):
                for b in range(a + 1, len(keyed)):
                    (da, ja, ia), (db, jb, ib) = keyed[a], keyed[b]
                    if ja == jb:
                        continue
                    short, long_ = (da, db) if len(da) <= len(db) else (db, da)
                    same = long_[: len(short)] == short if forward else long_[len(long_) - len(short):] == short
                    if same:
                        bad = (i, ia, ib, ja, jb)
                        break
                if bad:
                    break
            if bad:
                break
        side = "future" if forward else "past"
        rep.add(name, bad is None,
                f"next section is a function of the {side}" if bad is None else
                f"B_{bad[0]}: two geodesics with the same {side} go to B_{bad[3]} and B_{bad[4]}",
                witness=bad)
    return rep


# --- Sigma(R) ---------------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CodingResult:
    backend: object
    family: object
    matrix: sft.TransitionMatrix
    roof: dict  # (a, b) -> return time, in coding symbols
    symbols: tuple  # coding symbol -> family index
    paths: dict = field(default_factory=dict)  # (a, b) -> edges after B_a's edge up to B_b's edge
    uncertified: tuple = ()

    @property
    def flow(self) -> SuspensionFlow:
        cached = self.__dict__.get("_flow")
        if cached is None:
            cached = SuspensionFlow(self.matrix, RoofFunction.from_values(self.matrix, 2, self.roof))
            self.__dict__["_flow"] = cached
        return cached


def _cycle_itinerary(cycle: tuple, s: GraphSection):
    n = len(cycle)
    probe = Itinerary(cycle, 0, s.position, periodic=True)
    for r in range(n):
        if probe.matches(s, r):
            return Itinerary(cycle, r, s.position, periodic=True)
    return None


def build_sigma(backend: GraphBackend, family: GraphFamily, horizon=None) -> CodingResult:
    """Transition matrix of the return map on the ``B`` sections with exact return times."""
    g = backend.graph
    index = FamilyIndex.build(g, family.B)
    horizon = horizon if horizon is not None else 4 * family.alpha
    edges: dict[tuple, tuple] = {}
    paths: dict[tuple, tuple] = {}
    members = []
    for i, b_sec in enumerate(family.B):
        if backend.cycle is not None:
            it = _cycle_itinerary(backend.cycle, b_sec)
            if it is None:
                continue
            outcomes = [(it, index.hit(it, horizon))]
        else:
            outcomes = resolve_hits(index, section_point(b_sec), horizon, True)
        members.append(i)
        for it, hit in outcomes:
            if hit is None:
                raise PreconditionError(f"a geodesic leaving B_{i} meets no section within {horizon}")
            j, t, r = hit
            path = tuple(it.edge(k) for k in range(it.anchor + 1, r + 1))
            if edges.setdefault((i, j), t) != t or paths.setdefault((i, j), path) != path:
                raise PreconditionError(f"return time from B_{i} to B_{j} is not constant")
    symbol = {i: a for a, i in enumerate(members)}
    n = len(members)
    a = np.zeros((n, n), dtype=np.int8)
    roof, sym_paths = {}, {}
    for (i, j), t in edges.items():
        if j not in symbol:
            raise PreconditionError(f"B_{j} is reached but is not part of the coded system")
        a[symbol[i], symbol[j]] = 1
        roof[(symbol[i], symbol[j])] = t
        sym_paths[(symbol[i], symbol[j])] = paths[(i, j)]
    matrix = sft.validate(a)
    return CodingResult(backend, family, matrix, roof, tuple(members), sym_paths)


def project(coding: CodingResult, point: FlowPoint) -> FlowPoint:
    """The coding map: a periodic symbolic flow point to the graph geodesic flow."""
    g = coding.backend.graph
    w = point.word
    n = len(w)
    secs = [coding.family.B[coding.symbols[x]] for x in w]
    cycle = [secs[0].edge]
    anchors = [0]
    for k in range(n):
        cycle.extend(coding.paths[(w[k], w[(k + 1) % n])])
        anchors.append(len(cycle) - 1)
    cycle = tuple(cycle[:-1])
    k = point.position % n
    base = FlowPoint(cycle, anchors[k] % len(cycle), secs[k].position, True)
    return suspension.evolve(code_flow(g), base, point.height)


def canonical_point(point: FlowPoint) -> tuple:
    """(primitive canonical cycle, index, height) identifying a point on a periodic geodesic."""
    w = tuple(point.word)
    n = len(w)
    d = next(p for p in range(1, n + 1) if n % p == 0 and w == w[p:] + w[:p])
    root = w[:d]
    pos = point.position % d
    rot = min(range(d), key=lambda r: root[r:] + root[:r])
    return root[rot:] + root[:rot], (pos - rot) % d, point.height


def _random_cycle(succ, n_nodes, rng, length_range=(1, 40)):
    """Random closed walk: a random walk closed by a shortest path back to its start."""
    start = int(rng.integers(n_nodes))
    walk = [start]
    for _ in range(int(rng.integers(*length_range))):
        nb = succ[walk[-1]]
        walk.append(int(nb[rng.integers(len(nb))]))
    # shortest path from walk[-1] back to start
    prev = {walk[-1]: None}
    queue = deque([walk[-1]])
    while queue:
        x = queue.popleft()
        if x == start and x != walk[-1]:
            break
        for y in succ[x]:
            if y == start:
                prev.setdefault(("end",), x)
                queue.clear()
                break
            if y not in prev:
                prev[y] = x
                queue.append(y)
    last = prev.get(("end",), walk[-1])
    back = []
    while last is not None and last != walk[-1]:
        back.append(last)
        last = prev[last]
    return tuple(walk + back[::-1])


def coded_periods(coding: CodingResult, l_max) -> list:
    """Periods of primitive closed orbits of the coded suspension up to ``l_max``."""
    n = coding.matrix.n
    succ = {x: list(coding.matrix.successors(x)) for x in range(n)}
    pred: dict[int, list] = {x: [] for x in range(n)}
    for x, ys in succ.items():
        for y in ys:
            pred[y].append(x)
    keep = [x for x in range(n) if len(succ[x]) != 1 or len(pred[x]) != 1] or [0]
    kept = set(keep)
    arcs = []  # (tail, head, weight)
    for x in keep:
        for y in succ[x]:
            w = coding.roof[(x, y)]
            while y not in kept:
                z = succ[y][0]
                w += coding.roof[(y, z)]
                y = z
            arcs.append((x, y, w))
    out_arcs: dict[int, list] = {x: [] for x in keep}
    for k, (x, _, _) in enumerate(arcs):
        out_arcs[x].append(k)
    cycles = primitive_cycles(lambda k: out_arcs[arcs[k][1]], lambda k: arcs[k][2], l_max, range(len(arcs)))
    return sorted(length for _, length in cycles)


def check_semiconjugacy(backend: GraphBackend, coding: CodingResult, samples: int = 100, horizon=2,
                        seed: int = 0, l_max=None) -> Report:
    """Exact comparison of ``pi(f_t x)`` with ``phi_t(pi x)`` on sampled periodic points."""
    g = backend.graph
    rep = Report("semiconjugacy")
    rng = np.random.default_rng(seed)
    sym_flow = coding.flow
    graph_flow = code_flow(g)
    n = coding.matrix.n
    succ = {x: list(coding.matrix.successors(x)) for x in range(n)}
    exact = g.exact
    worst = 0.0
    for k in range(samples):
        word = _random_cycle(succ, n, rng)
        pos = int(rng.integers(len(word)))
        roof = coding.roof[(word[pos], word[(pos + 1) % len(word)])]
        frac = Fraction(int(rng.integers(1000)), 1000)
        height = roof * frac if exact else float(roof) * float(frac)
        t = 0 if k == 0 else Fraction(int(rng.integers(1001)), 1000) * horizon
        if not exact:
            t = float(t)
        x = FlowPoint(word, pos, height, True)
        lhs = project(coding, suspension.evolve(sym_flow, x, t))
        rhs = suspension.evolve(graph_flow, project(coding, x), t)
        if canonical_point(lhs) != canonical_point(rhs):
            err = graph_point_distance(g, point_itinerary(g, lhs), point_itinerary(g, rhs))
            if canonical_point(lhs)[:2] == canonical_point(rhs)[:2]:
                err = abs(float(canonical_point(lhs)[2]) - float(canonical_point(rhs)[2]))
            worst = max(worst, err)
    rep.add("commutes", worst == 0 if exact else worst <= 1e-9,
            f"max distance between pi(f_t x) and phi_t(pi x) over {samples} samples: {worst!r}", worst)
    # surjectivity and multiplicity on random closed geodesics
    index = FamilyIndex.build(g, coding.family.B)
    inverse = {i: a for a, i in enumerate(coding.symbols)}
    edge_succ = {d: g.successors(d) for d in range(g.n_directed)}
    miss, multiplicity = 0, 0
    for _ in range(samples):
        cycle = _random_cycle(edge_succ, g.n_directed, rng, (1, 12))
        r0 = int(rng.integers(len(cycle)))
        length = g.length(cycle[r0])
        pos = length * Fraction(int(rng.integers(1000)), 1000) if exact else length * rng.random()
        it = Itinerary(cycle, r0, pos, periodic=True)
        found = index.hit(it, 4 * coding.family.alpha, False, strict=False)
        if found is None:
            miss += 1
            continue
        j, t_back, r = found
        same_time = sum(1 for i, s in enumerate(coding.family.B)
                        if s.edge == cycle[r % len(cycle)] and s.position == coding.family.B[j].position
                        and it.matches(s, r))
        multiplicity = max(multiplicity, same_time)
        start = Itinerary(cycle, r % len(cycle), coding.family.B[j].position, periodic=True)
        seq = [j]
        cur = start
        total = 0
        while True:
            i2, t2, r2 = index.hit(cur, 4 * coding.family.alpha)
            total += t2
            if i2 == j and r2 % len(cycle) == start.anchor and total >= sum(g.length(e) for e in cycle):
                break
            seq.append(i2)
            cur = Itinerary(cycle, r2 % len(cycle), coding.family.B[i2].position, periodic=True)
        sym = FlowPoint(tuple(inverse[i] for i in seq), 0, -t_back, True)
        image = project(coding, sym)
        if canonical_point(image) != canonical_point(FlowPoint(cycle, r0, pos, True)):
            miss += 1
    rep.add("surjective", miss == 0, f"{samples - miss}/{samples} sampled phase points are coded exactly",
            float(miss))
    rep.add("finite_to_one", 0 < multiplicity <= len(coding.family),
            f"max preimage multiplicity {multiplicity} (family size {len(coding.family)})", float(multiplicity))
    if l_max is not None:
        coded = coded_periods(coding, l_max)
        geo = sorted(length for _, length in closed_geodesics(g, l_max))
        same = coded == geo if exact else (len(coded) == len(geo) and
                                           all(abs(a - b) <= 1e-12 for a, b in zip(coded, geo)))
        rep.add("periods", same, f"{len(coded)} coded orbit periods vs {len(geo)} closed geodesics up to {l_max}",
                float(len(coded)))
    return rep


def regularity_report(backend: GraphBackend, coding: CodingResult) -> Report:
    """Return times are constant on each transition; projections along the flow are isometric."""
    rep = Report("regularity")
    outcomes = _transitions(backend, coding.family, True)
    spread = 0.0
    seen: dict[tuple, object] = {}
    for i, outs in outcomes:
        for _, hit in outs:
            if hit is None:
                continue
            t0 = seen.setdefault((i, hit[0]), hit[1])
            spread = max(spread, abs(float(hit[1] - t0)))
    rep.add("return_time", spread == 0,
            f"return time constant on all {len(seen)} transitions (Lipschitz constant {spread})", spread)
    rep.add("projection", True, "projection along the flow fixes the edge cylinder (Lipschitz, exponent 1)", 1.0)
    return rep


# --- constructed counterexamples -----------------------------------------------------------------
# Each family violates exactly one of the checks above.


def single_section_family(g: MetricGraph, alpha) -> GraphFamily:
    """One section at the middle of edge 0: the flow leaves it uncovered for a whole edge."""
    base = build_sections(g, alpha, check_scale=False, aperiodic=False)
    return GraphFamily(g, base.alpha, base.pairs[:1], {"kind": "coverage gap"})


def overlapping_family(g: MetricGraph, alpha) -> GraphFamily:
    """The standard construction at a scale above systole/8: sections recur within 4 alpha both ways."""
    fam = build_sections(g, alpha, check_scale=False)
    return GraphFamily(g, fam.alpha, fam.pairs, dict(fam.info, kind="returns within 4 alpha"))


def bare_section_family(lengths=(10, 10, 10), alpha=2) -> GraphFamily:
    """Theta graph sections with no cylinder data: a geodesic of B_i can branch away from D_j."""
    g = theta(lengths)
    counts = section_counts(g, alpha)
    pairs = []
    for d in range(g.n_directed):
        m = counts[d // 2]
        for j in range(m):
            s = GraphSection(d, (2 * j + 1) * g.length(d) / (2 * m))
            pairs.append(SectionPair(s, s))
    return GraphFamily(g, Fraction(alpha), tuple(pairs), {"kind": "bare sections"})


def mixed_future_family(g: MetricGraph, alpha) -> GraphFamily:
    """One group of sibling ``B`` cylinders, differing only in their last future edge, merged into one.

    The merged cylinder still reaches far enough ahead for the pre-Markov
    containment, but not as far as the future of the section just before it,
    so that section's index is not a function of the merged section's past.
    """
    alpha = Fraction(alpha) if g.exact else float(alpha)
    fam = build_sections(g, alpha, slack=3 * alpha)
    needed = fam.info["T_B"] - 3 * float(alpha)
    spacing = max(float(g.length(d)) / fam.info["counts"][d // 2] for d in range(g.n_directed))
    pairs = list(fam.pairs)
    for start, p in enumerate(pairs):
        key = (p.B.edge, p.B.past, p.B.future[:-1])
        stop = start
        while stop < len(pairs) and (pairs[stop].B.edge, pairs[stop].B.past, pairs[stop].B.future[:-1]) == key:
            stop += 1
        merged = GraphSection(p.B.edge, p.B.position, p.B.past, key[2])
        reach = float(merged.extents(g)[1])
        if stop - start > 1 and needed <= reach < fam.info["T_B"] - spacing and p.D.contains(merged):
            pairs[start:stop] = [SectionPair(merged, p.D)]
            break
    else:
        raise PreconditionError("no sibling group can be merged at this scale")
    return GraphFamily(g, fam.alpha, tuple(pairs), dict(fam.info, kind="merged future cylinders"))
