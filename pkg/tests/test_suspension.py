import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from geoflow import sft, suspension as sus, thermo
from geoflow.errors import BracketFailure, PreconditionError, WindowExhausted
from geoflow.thermo import LocallyConstantPotential as Pot

FULL2 = sft.validate([[1, 1], [1, 1]])
GOLDEN = sft.validate([[1, 1], [1, 0]])


def flow(shift=FULL2, values=None, c=1):
    if values is None:
        return sus.SuspensionFlow(shift, sus.RoofFunction.constant(shift, c))
    roof = sus.RoofFunction.from_values(shift, 1, {(i,): v for i, v in enumerate(values)})
    return sus.SuspensionFlow(shift, roof)


def test_roof_must_be_positive():
    with pytest.raises(PreconditionError):
        sus.RoofFunction.from_values(FULL2, 1, {(0,): 1, (1,): 0})


def test_evolve_examples():
    f = flow()
    x = sus.make_point(f, (0, 1), Fraction(2, 5))
    assert sus.evolve(f, x, Fraction(3, 10)) == sus.FlowPoint((0, 1), 0, Fraction(7, 10))
    y = sus.evolve(f, x, Fraction(3, 5))
    assert (y.position, y.height) == (1, 0)
    g = flow(values=(1, 2))
    z = sus.make_point(g, (0, 1), 0)
    w = sus.evolve(g, z, 3)
    assert (w.position, w.height) == (0, 0)


def test_evolve_window_exhausted():
    f = flow()
    x = sus.make_point(f, (0, 1, 1), 0, periodic=False)
    assert sus.evolve(f, x, 2).position == 2
    with pytest.raises(WindowExhausted):
        sus.evolve(f, x, 3)
    with pytest.raises(WindowExhausted):
        sus.evolve(f, x, -0.5)


def test_make_point_checks_height():
    with pytest.raises(PreconditionError):
        sus.make_point(flow(), (0,), 1)


@settings(max_examples=100, deadline=None)
@given(st.fractions(-20, 20), st.fractions(-20, 20), st.lists(st.integers(0, 1), min_size=1, max_size=6))
def test_evolve_is_a_flow(s, u, word):
    f = flow(values=(1, Fraction(3, 2)))
    x = sus.make_point(f, tuple(word), 0)
    assert sus.evolve(f, sus.evolve(f, x, s), u) == sus.evolve(f, x, s + u)


def test_orbit_period_examples():
    assert sus.orbit_period(flow(c=Fraction(3, 2)), (0, 1, 1)) == Fraction(9, 2)
    assert sus.orbit_period(flow(values=(1, 2)), (0, 1)) == 3
    assert sus.orbit_period(flow(values=(1.0, math.sqrt(2))), (0, 1)) == pytest.approx(1 + math.sqrt(2))
    with pytest.raises(PreconditionError):
        sus.orbit_period(flow(GOLDEN), (1, 1))


def test_flow_entropy_examples():
    assert sus.flow_entropy(flow()) == pytest.approx(math.log(2), abs=1e-10)
    assert sus.flow_entropy(flow(c=2)) == pytest.approx(math.log(2) / 2, abs=1e-10)
    rose = sft.validate([[1, 0, 1, 1], [0, 1, 1, 1], [1, 1, 1, 0], [1, 1, 0, 1]])
    assert sus.flow_entropy(flow(rose)) == pytest.approx(math.log(3), abs=1e-10)


@pytest.mark.parametrize("c", [0.5, 1, 2])
@pytest.mark.parametrize("shift", [FULL2, GOLDEN])
def test_flow_entropy_constant_roof(shift, c):
    assert sus.flow_entropy(flow(shift, c=c)) == pytest.approx(sft.entropy(shift) / c, abs=1e-10)


def test_flow_entropy_solves_pressure_equation():
    f = flow(values=(1.0, math.sqrt(2)))
    h = sus.flow_entropy(f)
    assert abs(thermo.pressure(f.roof.potential.scale(-h))) <= 1e-9


def test_zeta_examples():
    f = flow()
    z = sus.zeta(f, 1.5, 30)
    assert z.converged
    assert abs(z.value - 1 / (1 - 2 * math.exp(-1.5))) <= 1e-6
    assert not sus.zeta(f, math.log(2), 30).converged
    far = sus.zeta(f, 0.1, 30)
    assert not far.converged and far.tail_bound == math.inf
    assert abs(sus.zeta(f, 40, 30).value - 1) <= 1e-12


def test_zeta_error_within_tail_bound():
    f = flow()
    for s in (0.9, 1.0, 1.5, 2.0):
        z = sus.zeta(f, s, 30)
        assert abs(z.value - 1 / (1 - 2 * math.exp(-s))) <= z.tail_bound


def test_zeta_euler_product_agrees():
    for f in (flow(), flow(values=(1.0, math.sqrt(2))), flow(GOLDEN, values=(1, 2))):
        h = sus.flow_entropy(f)
        for s in (h + 0.1, h + 0.5 + 2j, h + 1.3 - 0.7j):
            z = sus.zeta(f, s, 30)
            assert abs(z.value - z.euler_value) <= 1e-10 * max(1, abs(z.value))


def test_zeta_grid_matches_single_calls():
    f = flow(GOLDEN)
    grid = sus.zeta_grid(f, [1.0, 1.2 + 0.5j], 20)
    assert grid[1].value == pytest.approx(sus.zeta(f, 1.2 + 0.5j, 20).value, abs=1e-14)


def test_locate_pole():
    lo, hi = sus.locate_pole(flow(), 0.5, 1.0, tol=1e-9)
    assert lo <= math.log(2) <= hi and hi - lo <= 1e-9
    with pytest.raises(BracketFailure):
        sus.locate_pole(flow(), 1.0, 2.0)


def test_weak_mixing_examples():
    assert sus.weak_mixing_test([2, 3, 5]) == pytest.approx(1)
    assert sus.weak_mixing_test([2, 4, 6]) == pytest.approx(2)
    assert sus.weak_mixing_test([1, math.sqrt(2)], tol=1e-9) is None
    with pytest.raises(PreconditionError):
        sus.weak_mixing_test([1])


@pytest.mark.parametrize("c", [Fraction(1, 2), Fraction(1), Fraction(3, 2)])
def test_constant_roof_periods_are_arithmetic(c):
    f = flow(c=c)
    periods = [sus.orbit_period(f, o) for n in range(1, 7) for o in sft.primitive_orbits(FULL2, n)]
    assert all((p / c).denominator == 1 for p in periods)
    assert sus.weak_mixing_test(periods) == pytest.approx(float(c))


def test_flow_measure_examples():
    fm = sus.flow_measure(flow())
    assert fm.mass((0,), 0, 1) == pytest.approx(0.5, abs=1e-12)
    assert fm.mass() == pytest.approx(1, abs=1e-12)
    gm = sus.flow_measure(flow(GOLDEN))
    parry = thermo.equilibrium(Pot.zero(GOLDEN))
    assert gm.mass((0,), 0, 0.5) == pytest.approx(parry.p[0] / 2, abs=1e-12)


def test_flow_measure_weights_by_roof():
    fm = sus.flow_measure(flow(values=(1, 3)))
    # Bernoulli(1/2) base, mean roof 2
    assert fm.mass((1,)) == pytest.approx(3 / 4, abs=1e-12)
    assert fm.mass((1,), 0, 1) == pytest.approx(1 / 4, abs=1e-12)


def test_clt_small_sample():
    f = flow()
    z = sus.flow_birkhoff_samples(f, Pot.indicator(FULL2, 1), 500, 20_000, seed=3)
    assert abs(z.mean()) < 0.02
    assert stats.kstest(z, "norm", args=(0, 0.5)).statistic <= 0.03


def test_cylinder_correlations_decay():
    mu = thermo.equilibrium(Pot.zero(GOLDEN))
    corr = sus.cylinder_correlations(mu, (0, 1), [0, 1, 20], 200_000, seed=5)
    assert corr[0] == 1
    assert abs(corr[2]) < 0.01


def test_autocorrelation_of_constant_series():
    assert sus.autocorrelation(np.ones(10), [0, 1]) == [0.0, 0.0]
