import numpy as np
import pytest

from majchain.chain import verify_chain, verify_msl
from majchain.convex import (ABS, EXP, LINEAR, SQUARE, XLOGX, icx_battery, lambda_phi,
                             standard_battery)
from majchain.core import Grid, Relation, compare_continuous, compare_weak
from majchain.quantum import (PositiveGamma, gauss_mode, mode_density, parse_mode,
                              quantum_lambda_prime, quantum_trajectory, nonhermitian_bound_check,
                              sine_mode)
from majchain.convex import NonIncreasingPhi

G = Grid(512)


def test_hermitian_density_constant():
    m = sine_mode(G, 2)
    for t in (0.0, 1.0, 7.5, 100.0):
        assert mode_density(m, t) == mode_density(m, 0.0)


def test_decay_mass():
    m = sine_mode(G, 1, gamma=-0.1)
    assert mode_density(m, 5.0).mass == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert mode_density(m, 0.0).mass == pytest.approx(1.0, abs=1e-12)


def test_scaling_law():
    for m in (sine_mode(G, 3, gamma=-0.3, hbar=0.7), gauss_mode(G, gamma=0.2)):
        base = mode_density(m, 0.0).values
        for t in (0.5, 2.0, 9.0):
            expect = np.exp(2 * m.gamma * t / m.hbar) * base
            assert np.allclose(mode_density(m, t).values, expect, rtol=1e-12, atol=0)


def test_lambda_prime_hermitian_zero():
    m = sine_mode(G, 1)
    for phi in standard_battery().differentiable():
        assert quantum_lambda_prime(m, 3.0, phi) == 0.0


def test_lambda_prime_square_closed_form():
    m = sine_mode(G, 1, gamma=-0.1)
    rho = mode_density(m, 0.0).values
    expect = 4 * (-0.1) * G.h * np.sum(rho**2)
    assert quantum_lambda_prime(m, 0.0, SQUARE) == pytest.approx(expect, rel=1e-14)
    # continuum value of ∫ 4 sin^4(pi x) dx is 3/2
    assert quantum_lambda_prime(m, 0.0, SQUARE) == pytest.approx(-0.4 * 1.5, rel=1e-6)


def test_lambda_prime_linear():
    m = sine_mode(G, 1, gamma=-0.1)
    assert quantum_lambda_prime(m, 0.0, LINEAR) == pytest.approx(-0.2, abs=1e-12)


def test_lambda_prime_matches_time_derivative():
    m = gauss_mode(G, gamma=-0.2)
    h = 1e-4
    for phi in icx_battery().differentiable().select(["x2", "exp", "x3"]):
        for t in (0.0, 1.0, 4.0):
            fd = (lambda_phi(mode_density(m, t + h), phi)
                  - lambda_phi(mode_density(m, max(t - h, 0.0)), phi)) / (t + h - max(t - h, 0.0))
            assert fd == pytest.approx(quantum_lambda_prime(m, t, phi), rel=0.01)


def test_bound_linear_equality_and_exp_strict():
    m = sine_mode(G, 1, gamma=-0.1)
    b = nonhermitian_bound_check(m, 0.0, LINEAR)
    assert b.holds and b.lhs == pytest.approx(b.rhs, abs=1e-12)
    e = nonhermitian_bound_check(m, 0.0, EXP)
    assert e.holds and e.lhs < e.rhs - 1e-6


def test_bound_holds_for_icx_members_at_t0():
    m = sine_mode(G, 1, gamma=-0.1)
    for phi in icx_battery().differentiable():
        assert nonhermitian_bound_check(m, 0.0, phi).holds, phi.id


def test_bound_preconditions():
    with pytest.raises(PositiveGamma):
        nonhermitian_bound_check(sine_mode(G, 1), 0.0, LINEAR)
    with pytest.raises(PositiveGamma):
        nonhermitian_bound_check(sine_mode(G, 1, gamma=0.1), 0.0, LINEAR)
    with pytest.raises(NonIncreasingPhi):
        nonhermitian_bound_check(sine_mode(G, 1, gamma=-0.1), 0.0, XLOGX)


def test_hermitian_snapshots_equivalent_and_flat():
    m = sine_mode(G, 2)
    traj = quantum_trajectory(m, np.arange(10.0))
    for d in traj.densities:
        assert compare_continuous(d, traj.densities[0]).relation is Relation.EQUIVALENT
    for phi in standard_battery():
        lam = np.array([lambda_phi(d, phi) for d in traj.densities])
        assert np.max(np.abs(lam - lam[0])) <= 1e-12
    assert verify_msl(traj, standard_battery()).msl_holds


@pytest.mark.parametrize("gamma", [-0.1, -1.0])
def test_decay_weak_chain(gamma):
    traj = quantum_trajectory(sine_mode(G, 1, gamma=gamma), [0.0, 0.5, 1.0, 3.0])
    for i in range(len(traj)):
        for j in range(i + 1, len(traj)):
            assert compare_weak(traj.densities[j], traj.densities[i]).f_below_g
            assert not compare_continuous(traj.densities[j], traj.densities[i]).f_below_g
    rep = verify_chain(traj)
    assert rep.weak_chain_holds and not rep.chain_holds
    assert verify_msl(traj, icx_battery()).msl_holds


def test_growth_reverses_weak_chain():
    traj = quantum_trajectory(sine_mode(G, 1, gamma=0.1), [0.0, 1.0, 2.0])
    assert compare_weak(traj.densities[0], traj.densities[-1]).f_below_g
    assert not verify_chain(traj).weak_chain_holds


def test_mode_validation():
    with pytest.raises(ValueError):
        sine_mode(G, 0)
    with pytest.raises(ValueError):
        parse_mode("square", G)
    with pytest.raises(ValueError):
        mode_density(sine_mode(G, 1), -1.0)
    with pytest.raises(ValueError):
        quantum_trajectory(sine_mode(G, 1), [1.0, 0.0])
    assert parse_mode("sine:3", G).label == "sine:3"


def test_nondifferentiable_phi_rejected():
    from majchain.convex import NonDifferentiablePhi
    with pytest.raises(NonDifferentiablePhi):
        quantum_lambda_prime(sine_mode(G, 1, gamma=-0.1), 0.0, ABS)
