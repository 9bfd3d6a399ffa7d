"""Command-line driver: ``geoflow <subcommand> <action> ...`` writing CSV or plain-text reports."""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import replace

from . import sft, suspension, thermo
from . import graph_flow as gf
from .errors import GeoflowError, ParseError, PreconditionError, UncertifiedTransition
from .textio import emit_report, format_value, parse_family, parse_matrix

# tolerance knobs overridable from the environment, echoed into report headers
ENV_KNOBS = {
    "GEOFLOW_GX_TOL": 1e-8,
    "GEOFLOW_RESIDUAL_TOL": 1e-9,
    "GEOFLOW_HOLDER_MIN": 0.45,
    "GEOFLOW_MIXING_TOL": 1e-9,
    "GEOFLOW_POLE_TOL": 1e-9,
}

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class Knobs:
    def __init__(self, environ=None):
        environ = os.environ if environ is None else environ
        self.values = dict(ENV_KNOBS)
        self.overrides = {}
        for name in ENV_KNOBS:
            if name in environ:
                raw = environ[name]
                try:
                    value = float(raw)
                except ValueError:
                    raise ParseError(f"{name}={raw!r} is not a number") from None
                if not (value > 0 and math.isfinite(value)):
                    raise ParseError(f"{name} must be a positive tolerance")
                self.values[name] = value
                self.overrides[name] = raw

    def __getitem__(self, name):
        return self.values[name]

    def comments(self):
        return [f"env {k}={v}" for k, v in sorted(self.overrides.items())]


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def _shift(path: str) -> sft.TransitionMatrix:
    return sft.validate(parse_matrix(_read(path)))


def _potential(path: str, shift):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        phi = thermo.parse_potential(_read(path), shift)
    for w in caught:
        print(f"warning: {path}: {w.message}", file=sys.stderr)
    return phi


def _flow(args) -> suspension.SuspensionFlow:
    shift = _shift(args.matrix)
    return suspension.SuspensionFlow(shift, suspension.RoofFunction(_potential(args.roof, shift)))


def _require_seed(args):
    if args.seed is None:
        raise PreconditionError("this computation is sampled; pass --seed")


def _word(w) -> str:
    return ".".join(str(s) for s in w)


def _write_text(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _report(args, knobs, header, rows, comments=()):
    text = emit_report(header, rows, None, [*knobs.comments(), *comments])
    _write_text(text, args.output)


def _matrix_text(a) -> str:
    a = a.entries if isinstance(a, sft.TransitionMatrix) else a
    lines = [str(len(a))] + [" ".join(str(int(x)) for x in row) for row in a]
    return "\n".join(lines) + "\n"


def _roof_text(table: dict) -> str:
    return "".join(f"{_word(w)} {format_value(v)}\n" for w, v in sorted(table.items()))


def _emit_coding(args, matrix, roof: dict):
    """Matrix file plus ``word value`` roof table, both readable by the ``flow`` subcommand."""
    if args.output is None:
        _write_text(_matrix_text(matrix) + "\n" + _roof_text(roof), None)
        return
    _write_text(_matrix_text(matrix), args.output)
    _write_text(_roof_text(roof), args.roof_out or args.output + ".roof")


# --- sft ---------------------------------------------------------------------------------------------


def cmd_sft(args, knobs) -> int:
    shift = _shift(args.matrix)
    if args.action == "entropy":
        _report(args, knobs, ["quantity", "value"], [("entropy", sft.entropy(shift))])
    elif args.action == "irreducible":
        _report(args, knobs, ["quantity", "value"], [("irreducible", sft.is_irreducible(shift))])
    elif args.action == "period":
        _report(args, knobs, ["quantity", "value"], [("period", sft.period(shift))])
    else:
        rows = []
        for n in range(1, args.n + 1):
            census = sft.enumerate_periodic(shift, n)
            rows += [(n, census.census, _word(o.word)) for o in census.orbits] or [(n, census.census, "")]
        _report(args, knobs, ["n", "periodic_points", "primitive_orbit"], rows)
    return EXIT_OK


# --- thermo ------------------------------------------------------------------------------------------


def cmd_thermo(args, knobs) -> int:
    shift = _shift(args.matrix)
    phi = _potential(args.phi, shift) if args.phi else thermo.LocallyConstantPotential.zero(shift)
    needs_psi = args.action in ("derivative", "variance")
    if needs_psi and not args.psi:
        raise PreconditionError(f"thermo {args.action} needs --psi")
    psi = _potential(args.psi, shift) if needs_psi else None
    if args.action == "pressure":
        _report(args, knobs, ["quantity", "value"], [("pressure", thermo.pressure(phi))])
    elif args.action == "equilibrium":
        mu = thermo.equilibrium(phi)
        words = sft.iter_words(shift, args.length)
        _report(args, knobs, ["word", "measure"], [(_word(w), thermo.cylinder_measure(mu, w)) for w in words])
    elif args.action == "gibbs":
        bounds = thermo.verify_gibbs(phi, args.n_max)
        rows = [(n, lo, hi, lo_n, hi_n, hi / lo) for n, lo, hi, lo_n, hi_n in bounds.by_length]
        _report(args, knobs, ["n", "c_low", "c_high", "low_n", "high_n", "spread"], rows)
        spreads = [r[5] for r in rows if r[0] > phi.depth]
        stable = all(b <= a * (1 + 1e-9) for a, b in zip(spreads, spreads[1:]))
        return EXIT_OK if stable else EXIT_FAIL
    elif args.action == "derivative":
        slope, mean = thermo.pressure_derivative(phi, psi)
        _report(args, knobs, ["slope", "integral", "difference"], [(slope, mean, abs(slope - mean))])
    else:
        _report(args, knobs, ["quantity", "value"], [("variance", thermo.variance(phi, psi))])
    return EXIT_OK


# --- flow --------------------------------------------------------------------------------------------


def _parse_complex(token: str) -> complex:
    try:
        return complex(token.replace("i", "j"))
    except ValueError:
        raise ParseError(f"bad complex number {token!r}") from None


def cmd_flow(args, knobs) -> int:
    flow = _flow(args)
    if args.action == "entropy":
        _report(args, knobs, ["quantity", "value"], [("flow_entropy", suspension.flow_entropy(flow))])
    elif args.action == "zeta":
        points = [_parse_complex(t) for t in args.s]
        rows = [(z.s.real, z.s.imag, z.value.real, z.value.imag, z.tail_bound, z.converged)
                for z in suspension.zeta_grid(flow, points, args.l_max)]
        _report(args, knobs, ["Re(s)", "Im(s)", "Re(zeta)", "Im(zeta)", "tail_bound", "converged"], rows)
    elif args.action == "pole":
        lo, hi = suspension.locate_pole(flow, args.lo, args.hi, knobs["GEOFLOW_POLE_TOL"])
        _report(args, knobs, ["lo", "hi"], [(lo, hi)])
    elif args.action == "mixing":
        table = suspension.ZetaTable.build(flow, args.l_max)
        periods = sorted({float(length) for count, length in table.primitive.values() if count})
        c = suspension.weak_mixing_test(periods, knobs["GEOFLOW_MIXING_TOL"])
        _report(args, knobs, ["periods", "c", "weakly_mixing"], [(len(periods), c, c is None)])
    else:
        phi = _potential(args.phi, flow.base) if args.phi else None
        fm = suspension.flow_measure(flow, phi)
        words = sft.iter_words(flow.base, flow.roof.depth)
        _report(args, knobs, ["word", "mass"], [(_word(w), fm.mass(w)) for w in words])
    return EXIT_OK


# --- graph -------------------------------------------------------------------------------------------


def _graph(path: str) -> gf.MetricGraph:
    return gf.parse_graph(_read(path))


def _number(token: str):
    from .textio import parse_number

    try:
        return parse_number(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad number {token!r}") from None


def cmd_graph(args, knobs) -> int:
    g = _graph(args.graph)
    if args.action == "code":
        flow = gf.code_flow(g)
        roof = {w: flow.roof.value(w) for w in flow.roof.potential.table}
        _emit_coding(args, flow.base, roof)
    elif args.action == "geodesics":
        rows = [(_word(w), length) for w, length in gf.closed_geodesics(g, _number(args.l_max))]
        _report(args, knobs, ["edges", "length"], rows)
    elif args.action == "arithmetic":
        c = gf.arithmetic_check(g, knobs["GEOFLOW_MIXING_TOL"])
        _report(args, knobs, ["c", "weakly_mixing"], [(c, c is None)])
    elif args.action == "bm":
        bm = gf.bowen_margulis(g)
        rows = [("entropy", "", bm.entropy), ("edge_length", "", bm.edge_length)]
        rows += [("edge_mass", d, bm.measure.mass((d,))) for d in range(g.n_directed)]
        _report(args, knobs, ["quantity", "edge", "value"], rows)
    else:
        alpha = _alpha(args, g)
        family = gf.build_sections(g, alpha)
        rows = []
        for i, pair in enumerate(family.pairs):
            for kind, s in (("B", pair.B), ("D", pair.D)):
                rows.append((i, kind, s.edge, s.position, _word(s.past), _word(s.future)))
        _report(args, knobs, ["index", "kind", "edge", "position", "past", "future"], rows)
    return EXIT_OK


def _alpha(args, g):
    if args.alpha is None:
        return gf.systole(g) / 10
    return _number(args.alpha)


# --- hyp-verify --------------------------------------------------------------------------------------


def _verifier_config(args, knobs):
    from .hyperbolic import VerifierConfig

    _require_seed(args)
    cfg = VerifierConfig(samples=args.samples, seed=args.seed, gx_tol=knobs["GEOFLOW_GX_TOL"],
                         residual_tol=knobs["GEOFLOW_RESIDUAL_TOL"], holder_min=knobs["GEOFLOW_HOLDER_MIN"])
    if args.tau is not None:
        cfg = replace(cfg, tau=args.tau)
    if getattr(args, "alpha_h", None) is not None:
        cfg = replace(cfg, alpha=args.alpha_h)
    return cfg


def cmd_hyp_verify(args, knobs) -> int:
    from .hyperbolic import LEMMAS, verify
    from .hyperbolic.verify import REPORT_HEADER

    cfg = _verifier_config(args, knobs)
    ids = LEMMAS if args.lemma == "all" else [args.lemma]
    if args.lemma != "all" and args.lemma not in LEMMAS:
        raise PreconditionError(f"unknown lemma {args.lemma!r}; choose from {', '.join(LEMMAS)}")
    reports = [verify(i, cfg) for i in ids]
    _report(args, knobs, REPORT_HEADER, [r.row() for r in reports], [f"seed {args.seed}"])
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# --- code --------------------------------------------------------------------------------------------


def _hyperbolic_family(path: str):
    from .coding import RectangleFamily
    from .hyperbolic import Arc, Geodesic, make_rectangle

    alpha, specs = parse_family(_read(path))
    pairs = []
    for block in specs:
        c = Geodesic(*block["center"], block["basepoint"])
        d = make_rectangle(c, block["tau"], Arc.between(*block["uminus"]), Arc.between(*block["uplus"]))
        b = d.sub(tuple(block.get("bminus", (0.0, 1.0))), tuple(block.get("bplus", (0.0, 1.0))))
        pairs.append((b, d))
    return RectangleFamily(alpha, tuple(pairs))


def _coding_inputs(args, knobs):
    from . import coding

    if (args.graph is None) == (args.family is None):
        raise PreconditionError("give exactly one of --graph and --family")
    if args.graph is not None:
        g = _graph(args.graph)
        return coding.GraphBackend(g), gf.build_sections(g, _alpha(args, g))
    return coding.HyperbolicBackend(_verifier_config(args, knobs)), _hyperbolic_family(args.family)


def cmd_code(args, knobs) -> int:
    from . import coding

    backend, family = _coding_inputs(args, knobs)
    comments = [f"seed {args.seed}"] if args.seed is not None else []
    if args.action == "predicates":
        reports = [coding.check_proper_family(backend, family, args.samples), coding.check_pre_markov(backend, family),
                   coding.check_markov_property(backend, family)]
    elif args.action == "sigma":
        try:
            result = coding.build_sigma(backend, family)
        except UncertifiedTransition as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        _emit_coding(args, result.matrix, result.roof)
        return EXIT_OK
    elif args.action == "semiconjugacy":
        _require_seed(args)
        result = coding.build_sigma(backend, family)
        reports = [coding.check_semiconjugacy(backend, result, samples=args.samples, horizon=_number(args.horizon),
                                              seed=args.seed, l_max=_number(args.l_max))]
    else:
        result = coding.build_sigma(backend, family)
        reports = [coding.regularity_report(backend, result)]
    rows = [row for r in reports for row in r.rows()]
    _report(args, knobs, coding.REPORT_HEADER, rows, comments)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# --- parser ------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geoflow", description="Symbolic dynamics for geodesic flows.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, actions, help_):
        q = sub.add_parser(name, help=help_)
        q.add_argument("action", choices=actions)
        q.add_argument("-o", "--output", help="report path (default stdout)")
        return q

    q = add("sft", ["entropy", "irreducible", "period", "orbits"], "shift of finite type")
    q.add_argument("matrix")
    q.add_argument("--n", type=int, default=6, help="largest period for 'orbits'")
    q.set_defaults(func=cmd_sft)

    q = add("thermo", ["pressure", "equilibrium", "gibbs", "derivative", "variance"], "thermodynamic formalism")
    q.add_argument("matrix")
    q.add_argument("--phi", help="potential file (default 0)")
    q.add_argument("--psi", help="second potential for derivative/variance")
    q.add_argument("--n-max", type=int, default=12)
    q.add_argument("--length", type=int, default=2, help="cylinder length for 'equilibrium'")
    q.set_defaults(func=cmd_thermo)

    q = add("flow", ["entropy", "zeta", "pole", "mixing", "measure"], "suspension flow")
    q.add_argument("matrix")
    q.add_argument("--roof", required=True, help="roof file of 'word value' lines")
    q.add_argument("--s", nargs="+", default=["1.0"], help="zeta probe points, e.g. 0.9 1.5+2j")
    q.add_argument("--l-max", type=float, default=30.0)
    q.add_argument("--lo", type=float, default=0.0)
    q.add_argument("--hi", type=float, default=2.0)
    q.add_argument("--phi", help="base potential for 'measure' (default 0)")
    q.set_defaults(func=cmd_flow)

    q = add("graph", ["code", "geodesics", "arithmetic", "bm", "sections"], "metric-graph geodesic flow")
    q.add_argument("graph")
    q.add_argument("--l-max", default="8")
    q.add_argument("--alpha", help="section scale (default systole/10)")
    q.add_argument("--roof-out", help="roof table path for 'code' (default OUTPUT.roof)")
    q.set_defaults(func=cmd_graph)

    q = sub.add_parser("hyp-verify", help="hyperbolic lemma suite")
    q.add_argument("--lemma", default="all")
    q.add_argument("--seed", type=int)
    q.add_argument("--samples", type=int, default=1000)
    q.add_argument("--tau", type=float)
    q.add_argument("--alpha", dest="alpha_h", type=float)
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_hyp_verify)

    q = add("code", ["predicates", "sigma", "semiconjugacy", "regularity"], "section families and coding")
    q.add_argument("--graph")
    q.add_argument("--family", help="hyperbolic rectangle family file")
    q.add_argument("--alpha", help="graph section scale (default systole/10)")
    q.add_argument("--seed", type=int)
    q.add_argument("--samples", type=int, default=200)
    q.add_argument("--tau", type=float)
    q.add_argument("--horizon", default="2", help="exact (rational) horizons keep graph checks exact")
    q.add_argument("--l-max", default="8")
    q.add_argument("--roof-out")
    q.set_defaults(func=cmd_code)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        knobs = Knobs()
        return args.func(args, knobs)
    except (ParseError, PreconditionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GeoflowError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
