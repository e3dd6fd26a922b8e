import warnings
from dataclasses import replace

import numpy as np
import pytest

from rdsync.config import preset_adaptive, preset_static
from rdsync.model import (ActivationSpec, DelaySpec, NodeDynamics, SpatialDomain)
from rdsync.sim import (DelayHistory, SimConfig, SimulationDivergence,
                        build_laplacian, delayed_field, error_norm,
                        laplacian_eigenvalues, make_grid, poincare_residual,
                        simulate, simulate_uncoupled, write_trajectory_csv)


def small_cfg(**kw):
    cfg = preset_static()
    base = cfg.sim_config()
    defaults = dict(grid_points=31, horizon=1.0, sample_every=10)
    defaults.update(kw)
    return replace(base, **defaults)


def test_grid_spacing():
    g = make_grid(4.0, 101)
    assert g.dx == pytest.approx(8.0 / 102)
    assert g.coordinates[0] == pytest.approx(-4.0 + g.dx)
    assert g.coordinates[-1] == pytest.approx(4.0 - g.dx)


def test_laplacian_eigenvalues_match_dense_operator():
    g = make_grid(4.0, 41)
    lam = np.sort(laplacian_eigenvalues(g))
    dense = np.sort(np.linalg.eigvalsh(build_laplacian(g)))
    np.testing.assert_allclose(lam, dense, rtol=1e-12, atol=1e-9)


def test_laplacian_needs_enough_points():
    with pytest.raises(ValueError):
        build_laplacian(make_grid(1.0, 2))


def test_error_norm_hand_oracle():
    fields = np.zeros((2, 1, 3))
    fields[0, 0] = [1.0, 2.0, 2.0]
    # sum of squares = 9, dx = 0.25 -> norm = 1.5
    assert error_norm(fields, 0.25) == pytest.approx(1.5)
    assert error_norm(np.zeros((0, 2, 5)), 0.1) == 0.0


def test_delay_history_interpolation():
    h = DelayHistory(np.array([[1.0, 2.0]]), dt=0.1, length=8)
    h.store(1, np.array([[2.0, 4.0]]))
    h.store(2, np.array([[3.0, 6.0]]))
    np.testing.assert_allclose(delayed_field(h, -0.5), [[1.0, 2.0]])  # pre-history
    np.testing.assert_allclose(h.at(0.1), [[2.0, 4.0]])
    np.testing.assert_allclose(h.at(0.15), [[2.5, 5.0]])
    h2 = DelayHistory(np.zeros((1, 1)), dt=0.1, length=2)
    for k in range(1, 6):
        h2.store(k, np.full((1, 1), float(k)))
    with pytest.raises(ValueError):
        h2.at(0.2)  # evicted from the ring


def test_poincare_residual_mode_oracle():
    # mode k on (-l, l) has residual (pi^2 k^2 / 4 - 1) * ||q||^2; the
    # discretization error shrinks like dx^2
    l = 4.0
    errs = []
    for M in (101, 203):
        x = make_grid(l, M).coordinates
        for k in (1, 2, 3):
            q = np.sin(k * np.pi * (x + l) / (2 * l))
            expect = (np.pi ** 2 * k ** 2 / 4.0 - 1.0) * l
            got = poincare_residual(q, l)
            assert got == pytest.approx(expect, rel=0.02)
            if k == 1:
                errs.append(abs(got - expect))
    assert errs[1] < 0.5 * errs[0]


def test_poincare_residual_nonnegative_on_random_profiles():
    l = 4.0
    rng = np.random.default_rng(3)
    x = make_grid(l, 101).coordinates
    modes = np.sin(np.outer(np.arange(1, 6), np.pi * (x + l) / (2 * l)))
    for _ in range(50):
        coef = rng.normal(size=5) / np.arange(1, 6)
        assert poincare_residual(coef @ modes, l) > -1e-3


def test_manifold_invariance_is_exact():
    cfg = preset_static()
    init = np.tile(cfg.initial_target, (4, 1))
    traj = simulate(small_cfg(initial=init))
    assert np.all(traj.error_norms == 0.0)


def test_identical_runs_are_bitwise_equal():
    a = simulate(small_cfg())
    b = simulate(small_cfg())
    np.testing.assert_array_equal(a.error_norms, b.error_norms)
    np.testing.assert_array_equal(a.times, b.times)


def test_adaptive_gain_grows_only_under_control():
    cfg = preset_adaptive()
    traj = simulate(replace(cfg.sim_config(), grid_points=31, horizon=6.0,
                            sample_every=100))
    psi = traj.psi_values
    assert psi[0] == 0.0
    assert np.all(np.diff(psi) >= 0)
    # first control span ends at t = 3; gain frozen during the rest span (3, 5)
    m = (traj.times >= 3.5) & (traj.times <= 4.9)
    assert np.ptp(psi[m]) == 0.0
    assert psi[-1] > psi[0]


def test_divergence_is_reported():
    cfg = preset_static()
    dyn = cfg.dyn
    runaway = NodeDynamics(C=np.array([-80.0, -80.0]), A=dyn.A, B=dyn.B,
                           eta=dyn.eta, D=dyn.D, activation=dyn.activation,
                           delay=dyn.delay)
    with pytest.raises(SimulationDivergence):
        simulate(small_cfg(dyn=runaway, horizon=20.0))


def test_uncoupled_run_shape_and_zero_error():
    cfg = preset_static()
    traj = simulate_uncoupled(cfg.dyn, cfg.dom, cfg.initial_target, horizon=1.0,
                              grid_points=31, sample_every=100)
    assert traj.field_samples.shape[1:] == (1, 2, 31)
    assert np.all(traj.error_norms == 0.0)
    assert traj.times[-1] == pytest.approx(1.0)


def test_time_step_consistency_under_refinement():
    # halving dt changes the final error norm by a small, shrinking amount
    vals = []
    for dt in (2e-3, 1e-3, 5e-4):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = simulate(small_cfg(dt=dt, horizon=2.0, sample_every=1000))
        vals.append(traj.error_norms[-1])
    d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
    assert d1 / vals[1] < 0.05
    assert d2 < 0.75 * d1


def test_trajectory_csv_round_trip(tmp_path):
    traj = simulate(small_cfg())
    out = tmp_path / "traj.csv"
    write_trajectory_csv(traj, out)
    data = np.genfromtxt(out, delimiter=",", names=True)
    np.testing.assert_allclose(data["t"], traj.times)
    np.testing.assert_allclose(data["error_norm"], traj.error_norms)


def test_schedule_must_cover_horizon():
    cfg = preset_static()
    with pytest.raises(ValueError):
        simulate(replace(cfg.sim_config(), horizon=1000.0))


def test_adaptive_requires_small_delay():
    cfg = preset_adaptive()
    dyn = cfg.dyn
    slow = NodeDynamics(C=dyn.C, A=dyn.A, B=dyn.B, eta=dyn.eta, D=dyn.D,
                        activation=dyn.activation,
                        delay=DelaySpec(form="constant", a=3.0, b=0.0, bound=3.5))
    with pytest.raises(ValueError):
        simulate(replace(cfg.sim_config(), dyn=slow, grid_points=31))


def test_multidimensional_domain_rejected():
    cfg = preset_static()
    dom2 = SpatialDomain(half_widths=np.array([4.0, 4.0]))
    dyn2 = NodeDynamics(C=cfg.dyn.C, A=cfg.dyn.A, B=cfg.dyn.B, eta=cfg.dyn.eta,
                        D=np.full((2, 2), 0.1), activation=ActivationSpec(),
                        delay=cfg.dyn.delay)
    with pytest.raises(ValueError):
        SimConfig(dyn=dyn2, dom=dom2, schedule=cfg.schedule, top=cfg.top,
                  horizon=1.0, initial=cfg.initial,
                  initial_target=cfg.initial_target)
