"""Section-family predicates and symbolic coding, exact on graphs and sampled in the disk."""

from ..errors import PreconditionError
from . import graph, hyperbolic
from .core import REPORT_HEADER, Check, Report
from .graph import CodingResult, GraphBackend, coded_periods, project
from .hyperbolic import HyperbolicBackend, RectangleFamily, SampledCoding, chain_family


def _impl(backend):
    if isinstance(backend, GraphBackend):
        return graph
    if isinstance(backend, HyperbolicBackend):
        return hyperbolic
    raise PreconditionError(f"unsupported backend {type(backend).__name__}")


def check_proper_family(backend, family, sample_budget=None) -> Report:
    return _impl(backend).check_proper_family(backend, family, sample_budget)


def check_pre_markov(backend, family) -> Report:
    return _impl(backend).check_pre_markov(backend, family)


def check_markov_property(backend, family) -> Report:
    return _impl(backend).check_markov_property(backend, family)


def build_sigma(backend, family):
    return _impl(backend).build_sigma(backend, family)


def check_semiconjugacy(backend, coding, samples=100, horizon=2, **kwargs) -> Report:
    if not isinstance(backend, GraphBackend):
        raise PreconditionError("semi-conjugacy is checked on the exact graph backend only")
    return graph.check_semiconjugacy(backend, coding, samples, horizon, **kwargs)


def regularity_report(backend, coding) -> Report:
    return _impl(backend).regularity_report(backend, coding)


__all__ = [
    "REPORT_HEADER", "Check", "CodingResult", "GraphBackend", "HyperbolicBackend", "RectangleFamily", "Report",
    "SampledCoding", "build_sigma", "chain_family", "check_markov_property", "check_pre_markov",
    "check_proper_family", "check_semiconjugacy", "coded_periods", "project", "regularity_report",
]
