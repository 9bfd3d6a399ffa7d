import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow import sft
from geoflow.errors import EmptyRowOrColumn, NonSquare, NotIrreducible, PreconditionError

FULL2 = [[1, 1], [1, 1]]
GOLDEN = [[1, 1], [1, 0]]
PHI = (1 + math.sqrt(5)) / 2


def brute_words(a, n):
    a = np.asarray(a)
    return [w for w in itertools.product(range(len(a)), repeat=n) if all(a[x, y] for x, y in zip(w, w[1:]))]


@st.composite
def irreducible_matrices(draw, max_n=6):
    """A random 0/1 matrix containing a random Hamiltonian cycle, hence irreducible."""
    n = draw(st.integers(1, max_n))
    perm = draw(st.permutations(range(n)))
    bits = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    a = np.array(bits, dtype=np.int8).reshape(n, n)
    for k in range(n):
        a[perm[k], perm[(k + 1) % n]] = 1
    return a


def test_validate_examples():
    assert sft.validate(FULL2).n == 2
    assert sft.validate(GOLDEN).n == 2
    with pytest.raises(EmptyRowOrColumn) as exc:
        sft.validate([[0, 0], [1, 1]])
    assert exc.value.kind == "row" and exc.value.symbol == 0
    with pytest.raises(EmptyRowOrColumn) as exc:
        sft.validate([[1, 0], [1, 0]])
    assert exc.value.kind == "column" and exc.value.symbol == 1


def test_validate_rejects_bad_shapes_and_values():
    with pytest.raises(NonSquare):
        sft.validate([[1, 1, 1], [1, 1, 1]])
    with pytest.raises(PreconditionError):
        sft.validate([[2, 1], [1, 1]])
    with pytest.raises(PreconditionError):
        sft.validate(np.zeros((0, 0)))


def test_irreducible_examples():
    assert sft.is_irreducible(GOLDEN)
    assert sft.is_irreducible(FULL2)
    assert not sft.is_irreducible([[1, 0], [0, 1]])
    assert not sft.is_irreducible([[1, 1], [0, 1]])


def test_period_examples():
    assert sft.period(GOLDEN) == 1
    assert sft.period([[0, 1], [1, 0]]) == 2
    assert sft.period(FULL2) == 1
    assert sft.period([[0, 1, 0], [0, 0, 1], [1, 0, 0]]) == 3
    with pytest.raises(NotIrreducible):
        sft.period([[1, 0], [0, 1]])


def test_count_words_examples():
    assert sft.count_words(FULL2, 3) == 8
    assert sft.count_words(GOLDEN, 3) == 5
    assert sft.count_words(GOLDEN, 1) == 2
    # Fibonacci numbers
    assert [sft.count_words(GOLDEN, n) for n in range(1, 9)] == [2, 3, 5, 8, 13, 21, 34, 55]


def test_count_words_is_exact_for_large_n():
    assert sft.count_words(FULL2, 80) == 2**80


def test_enumerate_periodic_examples():
    c = sft.enumerate_periodic(GOLDEN, 2)
    assert c.census == 3 and [o.word for o in c.orbits] == [(0, 1)]
    c = sft.enumerate_periodic(FULL2, 1)
    assert c.census == 2 and sorted(o.word for o in c.orbits) == [(0,), (1,)]
    c = sft.enumerate_periodic(GOLDEN, 1)
    assert c.census == 1 and [o.word for o in c.orbits] == [(0,)]


def test_necklace_count_full_shift():
    def mobius(n):
        out, m, p = 1, n, 2
        while p * p <= m:
            if m % p == 0:
                m //= p
                if m % p == 0:
                    return 0
                out = -out
            p += 1
        return -out if m > 1 else out

    for n in range(1, 13):
        expected = sum(mobius(d) * 2 ** (n // d) for d in range(1, n + 1) if n % d == 0) // n
        assert len(sft.enumerate_periodic(FULL2, n).orbits) == expected


def test_census_limit():
    with pytest.raises(PreconditionError):
        sft.enumerate_periodic(FULL2, 33)
    with pytest.raises(PreconditionError):
        sft.enumerate_periodic(FULL2, 0)


def test_perron_examples():
    lam, l, r = sft.perron(np.array(FULL2, float))
    assert lam == pytest.approx(2, abs=1e-12)
    assert np.allclose(r, [0.5, 0.5], atol=1e-12)
    assert sft.perron(np.array(GOLDEN, float)).value == pytest.approx(PHI, abs=1e-12)
    rose = [[1, 0, 1, 1], [0, 1, 1, 1], [1, 1, 1, 0], [1, 1, 0, 1]]
    assert sft.perron(np.array(rose, float)).value == pytest.approx(3, abs=1e-12)


def test_perron_normalization_and_residuals():
    m = np.array([[0.2, 1.5, 0], [0, 0.1, 2.0], [0.7, 0, 0.3]])
    lam, l, r = sft.perron(m)
    assert np.all(l > 0) and np.all(r > 0)
    assert r.sum() == pytest.approx(1, abs=1e-12)
    assert np.dot(l, r) == pytest.approx(1, abs=1e-12)
    assert np.max(np.abs(m @ r - lam * r)) <= 1e-12
    assert np.max(np.abs(l @ m - lam * l)) <= 1e-12


def test_perron_rejects_reducible():
    with pytest.raises(NotIrreducible):
        sft.perron(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_entropy_values():
    assert sft.entropy(GOLDEN) == pytest.approx(math.log(PHI), abs=1e-10)
    assert sft.entropy(FULL2) == pytest.approx(math.log(2), abs=1e-10)
    assert sft.entropy(np.ones((3, 3), dtype=int)) == pytest.approx(math.log(3), abs=1e-10)


def test_sequence_distance_examples():
    x = (0, 1, 0, 1, 1, 0, 1)
    assert sft.sequence_distance(x, x) == 0
    assert sft.sequence_distance(x, x, with_resolution=True) == (0, 2.0**-4)
    y = list(x)
    y[3] = 0
    assert sft.sequence_distance(x, y) == 1
    z = list(x)
    z[0] = 1
    assert sft.sequence_distance(x, z) == 1 / 8
    with pytest.raises(PreconditionError):
        sft.sequence_distance((0, 1), (0, 1))


def test_canonical_rotation_and_primitive():
    assert sft.canonical_rotation((1, 0, 1, 1)) == (0, 1, 1, 1)
    assert sft.is_primitive((0, 1, 1))
    assert not sft.is_primitive((0, 1, 0, 1))


@settings(max_examples=60, deadline=None)
@given(irreducible_matrices())
def test_trace_identity(a):
    t = sft.validate(a)
    for n in range(1, 9):
        assert sft.enumerate_periodic(t, n).census == int(np.trace(np.linalg.matrix_power(a.astype(np.int64), n)))


@settings(max_examples=60, deadline=None)
@given(irreducible_matrices(max_n=4))
def test_count_words_matches_enumeration(a):
    for n in range(1, 7):
        assert sft.count_words(a, n) == len(brute_words(a, n))
        assert sorted(sft.iter_words(a, n)) == brute_words(a, n)


@settings(max_examples=60, deadline=None)
@given(irreducible_matrices())
def test_perron_matches_dense_spectrum(a):
    lam, l, r = sft.perron(a.astype(float))
    assert lam == pytest.approx(max(abs(np.linalg.eigvals(a.astype(float)))), rel=1e-10)
    assert np.max(np.abs(a @ r - lam * r)) <= 1e-12
    assert np.max(np.abs(l @ a - lam * l)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(irreducible_matrices(max_n=5))
def test_period_divides_cycle_lengths(a):
    p = sft.period(a)
    for n in range(1, 11):
        if sft.enumerate_periodic(a, n).orbits:
            assert n % p == 0
    assert sft.is_irreducible(a)
