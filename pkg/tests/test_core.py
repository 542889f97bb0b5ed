import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majchain.core import (Density, Grid, GridMismatch, InvalidDensity, LengthMismatch,
                           Relation, compare_continuous, compare_discrete, compare_weak,
                           cumulative_profile, decreasing_rearrangement, hinge_witness,
                           read_density_csv, write_density_csv)

G3 = Grid(3)


def brute_partial_sums(x):
    """Sums of the k largest entries by exhaustive subset search."""
    n = len(x)
    return [max(sum(c) for c in itertools.combinations(x, k)) for k in range(1, n + 1)]


def brute_relation(x, y):
    sx, sy = brute_partial_sums(x), brute_partial_sums(y)
    fx = all(a <= b for a, b in zip(sx, sy)) and sx[-1] == sy[-1]
    fy = all(b <= a for a, b in zip(sx, sy)) and sx[-1] == sy[-1]
    return {(True, True): Relation.EQUIVALENT, (True, False): Relation.MAJORIZED_BY,
            (False, True): Relation.MAJORIZES, (False, False): Relation.INCOMPARABLE}[(fx, fy)]


# -- examples -------------------------------------------------------------

def test_rearrangement_of_constant_is_constant():
    d = Density.uniform(Grid(7))
    assert decreasing_rearrangement(d) == d


def test_rearrangement_sorts():
    d = Density(G3, [1.0, 3.0, 2.0])
    assert list(decreasing_rearrangement(d).values) == [3.0, 2.0, 1.0]


def test_rearrangement_dominates_random_permutations():
    rng = np.random.default_rng(3)
    g = Grid(512)
    d = Density(g, rng.random(512))
    top = np.cumsum(decreasing_rearrangement(d).values)
    for _ in range(200):
        perm = np.cumsum(rng.permutation(d.values))
        assert np.all(top >= perm - 1e-12)


def test_uniform_below_delta():
    g = Grid(64)
    v = compare_continuous(Density.uniform(g), Density.delta(g, 5))
    assert v.relation is Relation.MAJORIZED_BY


def test_self_equivalent():
    d = Density(Grid(5), [0.2, 1.4, 0.9, 2.0, 0.5])
    assert compare_continuous(d, d).relation is Relation.EQUIVALENT
    assert compare_weak(d, d).relation is Relation.EQUIVALENT


def test_step_pair_incomparable():
    f = Density(G3, np.array([0.6, 0.2, 0.2]) * 3)
    g = Density(G3, np.array([0.5, 0.45, 0.05]) * 3)
    v = compare_continuous(f, g)
    assert v.relation is Relation.INCOMPARABLE
    # largest-value sum of f exceeds g's; two-largest of g exceeds f's
    assert v.witness == 1
    assert v.reverse_witness == 2
    assert brute_relation([0.6, 0.2, 0.2], [0.5, 0.45, 0.05]) is Relation.INCOMPARABLE


def test_weak_half_uniform():
    g = Grid(10)
    v = compare_weak(Density.uniform(g, 0.5), Density.uniform(g))
    assert v.relation is Relation.MAJORIZED_BY
    # the strict order rejects it on mass
    assert compare_continuous(Density.uniform(g, 0.5), Density.uniform(g)).relation \
        is Relation.INCOMPARABLE


def test_discrete_uniform_below_delta():
    third = Fraction(1, 3)
    assert compare_discrete([third] * 3, [1, 0, 0]).relation is Relation.MAJORIZED_BY


def test_discrete_decimal_example():
    v = compare_discrete([0.4, 0.35, 0.25], [0.5, 0.3, 0.2])
    assert v.relation is Relation.MAJORIZED_BY
    assert brute_relation([Fraction("0.4"), Fraction("0.35"), Fraction("0.25")],
                          [Fraction("0.5"), Fraction("0.3"), Fraction("0.2")]) \
        is Relation.MAJORIZED_BY


def test_discrete_permutation_equivalent():
    assert compare_discrete([0.5, 0.5], [0.5, 0.5]).relation is Relation.EQUIVALENT
    assert compare_discrete([1, 2, 3], [3, 1, 2]).relation is Relation.EQUIVALENT


def test_discrete_length_mismatch():
    with pytest.raises(LengthMismatch):
        compare_discrete([1, 0], [1, 0, 0])


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        compare_continuous(Density.uniform(Grid(4)), Density.uniform(Grid(5)))
    with pytest.raises(GridMismatch):
        hinge_witness(Density.uniform(Grid(4)), Density.uniform(Grid(5)), [0.5])


def test_invalid_densities():
    with pytest.raises(InvalidDensity):
        Density(G3, [1.0, -0.1, 2.0])
    with pytest.raises(InvalidDensity):
        Density(G3, [1.0, np.nan, 2.0])
    with pytest.raises(InvalidDensity):
        Density(G3, [1.0, 2.0])
    with pytest.raises(ValueError):
        Grid(1)


def test_density_values_frozen():
    d = Density.uniform(G3)
    with pytest.raises(ValueError):
        d.values[0] = 5.0


def test_hinge_witness_delta_vs_uniform():
    g = Grid(32)
    th = np.linspace(0.0, 32.0, 200)
    a = hinge_witness(Density.delta(g), Density.uniform(g), th)
    assert a is not None and a < 32
    # direct quadrature of the witness
    assert (32 - a) / 32 > max(1 - a, 0)


def test_hinge_witness_absent_when_majorized():
    g = Grid(32)
    th = np.linspace(0.0, 32.0, 200)
    assert hinge_witness(Density.uniform(g), Density.delta(g), th) is None
    d = Density.delta(g, 3)
    assert hinge_witness(d, d, th) is None


def test_hinge_witness_requires_thresholds():
    d = Density.uniform(G3)
    with pytest.raises(ValueError):
        hinge_witness(d, d, [])


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    d = Density(Grid(50), rng.random(50) / 3.0)
    write_density_csv(d, tmp_path / "d.csv")
    assert read_density_csv(tmp_path / "d.csv") == d


def test_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n0.25,1\n0.75,1\n")
    with pytest.raises(InvalidDensity):
        read_density_csv(p)


def test_csv_rejects_off_grid_centres(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x_center,value\n0.2,1\n0.75,1\n")
    with pytest.raises(InvalidDensity):
        read_density_csv(p)


# -- properties -------------------------------------------------------------

small_vectors = st.lists(st.integers(0, 30), min_size=1, max_size=7)


def _density(ints):
    n = max(len(ints), 2)
    v = list(ints) + [0] * (n - len(ints))
    if sum(v) == 0:
        v[0] = 1
    return Density(Grid(n), np.array(v, dtype=float))


@given(small_vectors)
def test_reflexive(ints):
    d = _density(ints)
    assert compare_continuous(d, d).relation is Relation.EQUIVALENT
    assert compare_discrete(ints, ints).relation is Relation.EQUIVALENT


@given(st.integers(2, 7).flatmap(
    lambda n: st.tuples(*[st.lists(st.integers(0, 20), min_size=n, max_size=n)] * 3)))
def test_discrete_transitive(triple):
    x, y, z = triple
    if compare_discrete(x, y).f_below_g and compare_discrete(y, z).f_below_g:
        assert compare_discrete(x, z).f_below_g


@given(st.integers(2, 7).flatmap(
    lambda n: st.tuples(*[st.lists(st.integers(0, 20), min_size=n, max_size=n)] * 2)))
def test_discrete_matches_brute_force(pair):
    x, y = pair
    assert compare_discrete(x, y).relation is brute_relation(x, y)


@given(st.integers(2, 7).flatmap(
    lambda n: st.tuples(*[st.lists(st.integers(0, 20), min_size=n, max_size=n)] * 2)))
def test_continuous_agrees_with_discrete_on_equal_mass(pair):
    x, y = pair
    sx, sy = sum(x), sum(y)
    if sx == 0 or sy == 0:
        return
    # rescale both to a common total so the mass test is exact
    xs = [v * sy for v in x]
    ys = [v * sx for v in y]
    g = Grid(len(x))
    cont = compare_continuous(Density(g, np.array(xs, float)), Density(g, np.array(ys, float)))
    assert cont.relation is compare_discrete(xs, ys).relation


@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=2, max_size=40))
def test_sandwich_property(vals):
    if sum(vals) <= 0:
        return
    g = Grid(len(vals))
    p = Density(g, np.array(vals)).normalized()
    assert compare_continuous(Density.uniform(g), p).f_below_g
    assert compare_continuous(p, Density.delta(g)).f_below_g


@settings(max_examples=50)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=2, max_size=60), st.randoms())
def test_permutation_invariance(vals, rnd):
    g = Grid(len(vals))
    d = Density(g, vals)
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    e = Density(g, shuffled)
    assert np.array_equal(cumulative_profile(d), cumulative_profile(e))
    assert compare_continuous(d, e).relation is Relation.EQUIVALENT
