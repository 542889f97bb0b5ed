import logging

import numpy as np
import pytest

from majchain.acceptance import concentrating_trajectory
from majchain.chain import (verify_all, verify_chain, verify_lemma1_equivalence, verify_msl,
                            verify_sandwich)
from majchain.convex import XLOGX, icx_battery, lambda_phi, standard_battery
from majchain.core import Density, Grid, Relation, compare_continuous
from majchain.fpe import FpeRunConfig, builtin_initial, fpe_evolve, lambda_prime_rhs, linear_model
from majchain.quantum import quantum_trajectory, sine_mode
from majchain.trajectory import Trajectory


@pytest.fixture(scope="module")
def heat():
    g = Grid(128)
    return fpe_evolve(builtin_initial("cosine", g), linear_model(),
                      FpeRunConfig(g, 0.2, (0.0, 0.01, 0.02, 0.05, 0.1, 0.2)))


def constant_traj(n=4):
    d = builtin_initial("bump", Grid(50))
    return Trajectory(tuple(float(k) for k in range(n)), (d,) * n)


def test_constant_trajectory():
    traj = constant_traj()
    rep = verify_chain(traj, full_pairwise=True)
    assert rep.chain_holds and rep.weak_chain_holds
    for i in range(len(traj)):
        for j in range(len(traj)):
            assert compare_continuous(traj.densities[i], traj.densities[j]).relation \
                is Relation.EQUIVALENT
    assert verify_lemma1_equivalence(traj)


def test_heat_chain(heat):
    rep = verify_all(heat, standard_battery(), full_pairwise=True)
    assert rep.chain_holds and rep.msl_holds and rep.sl_holds and rep.implication_ok
    assert not rep.violations


def test_reversed_heat_fails_first_pair(heat):
    rev = heat.reversed()
    rep = verify_chain(rev, long_range_pairs=0)
    assert not rep.chain_holds
    first = rep.violations[0]
    assert (first.t1, first.t2) == (rev.times[0], rev.times[1])
    assert first.witness.startswith("k=")


def test_violations_replay(heat):
    rev = heat.reversed()
    rep = verify_chain(rev, full_pairwise=True)
    index = dict(zip(rev.times, rev.densities))
    for v in rep.violations:
        if v.check != "chain":
            continue
        again = compare_continuous(index[v.t2], index[v.t1])
        assert f"k={again.witness}" == v.witness
        assert again.excess == v.magnitude


def test_chain_and_battery_verdicts_agree(heat):
    assert verify_lemma1_equivalence(heat, standard_battery())
    assert verify_lemma1_equivalence(heat.reversed(), standard_battery())
    with pytest.raises(ValueError):
        verify_lemma1_equivalence(Trajectory((0.0, 1.0), heat.densities[:2]))


def test_battery_gap_logged(caplog):
    # battery too small to see the concentration: chain fails but x alone is flat
    g = Grid(4)
    a = Density(g, [1.0, 1.0, 1.0, 1.0])
    b = Density(g, [2.0, 1.0, 1.0, 0.0])
    traj = Trajectory((0.0, 1.0, 2.0), (a, a, b))
    with caplog.at_level(logging.WARNING):
        assert not verify_lemma1_equivalence(traj, icx_battery().select(["x"]))
    assert "BatteryGap" in caplog.text


def test_msl_stronger_than_sl():
    traj = concentrating_trajectory()
    rep = verify_msl(traj, standard_battery())
    assert rep.msl_holds is False and rep.sl_holds is True
    assert any(v.witness == "x2" for v in rep.violations)
    ent = -rep.lambdas["xlogx"]
    assert ent[1] >= ent[0]


def test_msl_hermitian_zero_differences():
    traj = quantum_trajectory(sine_mode(Grid(256), 2), [0.0, 1.0, 2.0])
    rep = verify_msl(traj, standard_battery())
    assert rep.msl_holds
    for col in rep.lambdas.values():
        assert np.all(np.diff(col) == 0.0)


def test_msl_implies_entropy_non_decreasing(heat):
    rep = verify_msl(heat, standard_battery())
    assert rep.msl_holds
    ent = -np.array([lambda_phi(d, XLOGX) for d in heat.densities])
    assert np.all(np.diff(ent) >= -1e-8)


def test_sandwich_single_snapshot():
    d = builtin_initial("bump", Grid(32))
    rep = verify_sandwich(Trajectory((0.0,), (d,)))
    assert rep.sandwich.holds and rep.sandwich.label == "asymptotic-surrogate"


def test_sandwich_long_heat_run_residuals():
    g = Grid(32)
    model = linear_model()
    traj = fpe_evolve(builtin_initial("cosine", g), model, FpeRunConfig(g, 3.0, (0.0, 0.5, 3.0)))
    rep = verify_sandwich(traj, residual_fn=lambda d, phi: lambda_prime_rhs(d, model, phi))
    assert rep.sandwich.holds
    assert all(abs(r) <= 1e-8 for r in rep.stationary_residuals.values())


def test_sandwich_with_supplied_uniform(heat):
    rep = verify_sandwich(heat, Density.uniform(heat.grid))
    assert rep.sandwich.holds and rep.sandwich.label == "supplied"


def test_quantum_decay_strict_sandwich_fails_weak_holds():
    traj = quantum_trajectory(sine_mode(Grid(256), 1, gamma=-0.1), [0.0, 1.0, 5.0])
    rep = verify_sandwich(traj, battery=icx_battery())
    assert not rep.sandwich.holds and rep.sandwich.weak_holds


def test_chain_needs_two_snapshots():
    d = Density.uniform(Grid(4))
    with pytest.raises(ValueError):
        verify_chain(Trajectory((0.0,), (d,)))
    with pytest.raises(ValueError):
        verify_msl(Trajectory((0.0,), (d,)))


def test_long_range_pairs_seeded(heat):
    a = verify_chain(heat, long_range_pairs=4, seed=1)
    b = verify_chain(heat, long_range_pairs=4, seed=1)
    pairs = [(r.t1, r.t2) for r in a.rows]
    assert pairs == [(r.t1, r.t2) for r in b.rows]
    # five adjacent pairs plus four sampled ones, two rows (strict and weak) each
    assert len(a.rows) == 2 * (5 + 4)


def test_summary_fields(heat):
    s = verify_all(heat).summary()
    assert s["chain_holds"] and s["sandwich"]["label"] == "asymptotic-surrogate"
    assert s["n_violations"] == 0
