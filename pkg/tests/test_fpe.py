import numpy as np
import pytest

from majchain.chain import verify_chain, verify_msl
from majchain.convex import SQUARE, XLOGX, hinge, lambda_phi, standard_battery
from majchain.core import Density, Grid
from majchain.fpe import (FpeModel, FpeRunConfig, NegativeDensity, StabilityViolation,
                          builtin_initial, fpe_evolve, fpe_step, lambda_prime_rhs, linear_model,
                          porous_model, stable_dt)
from majchain.convex import NonDifferentiablePhi


def heat_run(n=128, times=(0.0, 0.01, 0.05), D=1.0, t_end=None):
    g = Grid(n)
    p0 = builtin_initial("cosine", g)
    cfg = FpeRunConfig(g, t_end if t_end is not None else max(times), times)
    return fpe_evolve(p0, linear_model(D), cfg)


def test_uniform_is_fixed_point():
    g = Grid(40)
    u = Density.uniform(g)
    for model in (linear_model(2.0), porous_model(1.0, 2.0, 1.0)):
        dt = stable_dt(g, model.omega(u.values).max())
        assert fpe_step(u, model, dt) == u


def test_heat_tracks_eigenmode():
    traj = heat_run(times=(0.0, 0.01, 0.05))
    x = traj.grid.centers
    for t, d in traj.snapshots:
        exact = 1 + np.cos(np.pi * x) * np.exp(-np.pi**2 * t)
        assert np.max(np.abs(d.values - exact)) < 1e-3


def test_heat_lambda_square_closed_form():
    traj = heat_run(n=256, times=(0.0, 0.01, 0.05))
    for t, d in traj.snapshots:
        assert lambda_phi(d, SQUARE) == pytest.approx(1 + 0.5 * np.exp(-2 * np.pi**2 * t),
                                                      rel=1e-3)


def test_porous_mass_after_many_steps():
    g = Grid(64)
    p = builtin_initial("bump", g)
    model = porous_model(1.0, 2.0, float(p.values.max()))
    m0 = p.mass
    dt = stable_dt(g, model.omega(p.values).max(), safety=0.9)
    for _ in range(10_000):
        p = fpe_step(p, model, dt)
    assert abs(p.mass - m0) <= 1e-12 * m0


def test_single_snapshot_is_initial_density():
    g = Grid(32)
    p0 = builtin_initial("step", g)
    traj = fpe_evolve(p0, linear_model(), FpeRunConfig(g, 0.0, (0.0,)))
    assert len(traj) == 1 and traj.densities[0] == p0


def test_snapshot_times_recorded_near_targets():
    g = Grid(64)
    traj = heat_run(n=64, times=(0.0, 0.013, 0.04))
    dt = stable_dt(g, 1.0, safety=0.9)
    for want, got in zip((0.0, 0.013, 0.04), traj.times):
        assert abs(got - want) <= dt


def test_stability_violation():
    g = Grid(32)
    p = builtin_initial("cosine", g)
    with pytest.raises(StabilityViolation):
        fpe_step(p, linear_model(), 10 * stable_dt(g, 1.0))
    with pytest.raises(StabilityViolation):
        fpe_evolve(p, linear_model(), FpeRunConfig(g, 0.1, (0.0, 0.1), dt=1.0))


def test_negative_density_detected():
    # a model whose diffusion coefficient is negative drives values below zero
    g = Grid(16)
    bad = FpeModel(lambda p: -np.ones_like(p), lambda p: p, omega_max_estimate=1.0, name="bad")
    p = builtin_initial("step", g)
    with pytest.raises(NegativeDensity):
        for _ in range(50):
            p = Density(g, p.values)  # keep the type checks in play
            p = fpe_step(p, bad, 1e-4)


def test_drift_run_conserves_mass():
    g = Grid(64)
    p0 = builtin_initial("cosine", g)
    model = linear_model(0.5, force=lambda x: np.ones_like(x))
    traj = fpe_evolve(p0, model, FpeRunConfig(g, 0.1, (0.0, 0.05, 0.1)))
    assert np.max(np.abs(traj.masses() - 1.0)) <= 1e-12
    assert not model.drift_free
    with pytest.raises(ValueError):
        lambda_prime_rhs(p0, model, SQUARE)


def test_rhs_zero_for_uniform():
    u = Density.uniform(Grid(50))
    assert lambda_prime_rhs(u, linear_model(), SQUARE) == 0.0


def test_rhs_heat_mode_minus_pi_squared():
    p0 = builtin_initial("cosine", Grid(512))
    assert lambda_prime_rhs(p0, linear_model(), SQUARE) == pytest.approx(-np.pi**2, rel=0.02)


def test_rhs_nonpositive_and_requires_d2():
    rng = np.random.default_rng(1)
    g = Grid(64)
    for _ in range(20):
        p = Density(g, rng.random(64) + 0.01)
        for phi in standard_battery().differentiable():
            assert lambda_prime_rhs(p, porous_model(1.0, 2.0, 2.0), phi) <= 0.0
    with pytest.raises(NonDifferentiablePhi):
        lambda_prime_rhs(p, linear_model(), hinge(1.0))


def test_mass_conserved_over_full_run():
    traj = heat_run(n=256, times=(0.0, 0.01, 0.05, 0.2))
    assert np.max(np.abs(traj.masses() - traj.masses()[0])) <= 1e-12


@pytest.mark.parametrize("model", [linear_model(1.0), porous_model(1.0, 2.0, 1.3)],
                         ids=["linear", "porous"])
def test_h_theorem_slope_matches_rhs(model):
    g = Grid(128)
    p0 = builtin_initial("bump" if model.name == "porous" else "cosine", g)
    if model.name == "porous":
        model = porous_model(1.0, 2.0, float(p0.values.max()))
    dt = stable_dt(g, model.omega_max_estimate)
    # dense triples: slope across the outer pair vs rhs at the middle snapshot
    centres = (0.002, 0.01, 0.03)
    times = sorted(c + s for c in centres for s in (-20 * dt, 0.0, 20 * dt))
    traj = fpe_evolve(p0, model, FpeRunConfig(g, times[-1], tuple(times)))
    t, d = traj.times, traj.densities
    checked = 0
    for k in (1, 4, 7):
        for phi in standard_battery().differentiable():
            slope = (lambda_phi(d[k + 1], phi) - lambda_phi(d[k - 1], phi)) / (t[k + 1] - t[k - 1])
            rhs = lambda_prime_rhs(d[k], model, phi)
            assert abs(slope - rhs) <= max(0.02 * abs(rhs), 1e-8), (phi.id, t[k], slope, rhs)
            checked += 1
    assert checked > 0


def test_heat_msl_and_chain():
    traj = heat_run(n=128, times=(0.0, 0.01, 0.05, 0.2))
    assert verify_msl(traj, standard_battery(), 1e-8).msl_holds
    assert verify_chain(traj).chain_holds


def test_porous_chain_adjacent_pairs():
    g = Grid(64)
    p0 = builtin_initial("bump", g)
    model = porous_model(1.0, 2.0, float(p0.values.max()))
    traj = fpe_evolve(p0, model, FpeRunConfig(g, 0.2, tuple(np.linspace(0, 0.2, 15))))
    assert verify_chain(traj, long_range_pairs=0).chain_holds


def test_long_run_converges_to_uniform():
    traj = heat_run(n=32, times=(0.0, 2.0), t_end=2.0)
    assert np.max(np.abs(traj.densities[-1].values - 1.0)) <= 1e-6


def test_builtin_initials_are_probabilities():
    for name in ("cosine", "bump", "step"):
        assert builtin_initial(name, Grid(100)).is_probability()
    with pytest.raises(ValueError):
        builtin_initial("nope", Grid(10))


def test_evolve_rejects_non_probability():
    g = Grid(10)
    with pytest.raises(ValueError):
        fpe_evolve(Density.uniform(g, 2.0), linear_model(), FpeRunConfig(g, 0.1, (0.0,)))


def test_entropy_rises_along_heat_run():
    traj = heat_run(n=128, times=(0.0, 0.01, 0.05, 0.2))
    lam = [lambda_phi(d, XLOGX) for d in traj.densities]
    assert all(b < a for a, b in zip(lam, lam[1:]))
