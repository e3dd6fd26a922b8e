import numpy as np
import pytest

from rdsync.config import preset_static_certification
from rdsync.criterion import (CriterionInputs, VERDICT_NOT_DOMINANT, VERDICT_OK,
                              comparison_bound_check, compute_alphas, compute_d,
                              solve_lambda, theorem1_certificate, tune_epsilons)
from rdsync.model import CouplingTopology
from rdsync.schedule import IntermittentSchedule, rho_star

# Frozen reference constants for the certification benchmark, computed
# independently (exact rational characteristic polynomial for the weighted
# pinned matrix, mpmath bisection for lambda).
FROZEN = {
    "d": 0.00625,
    "alpha1": 46.560676884894015,
    "alpha2": 1.0,
    "alpha3": -150.185925862341,
    "alpha4": -9.386620366396333,
    "beta1": 113.02436934384363,
    "beta3": 46.54817688489401,
    "beta": 159.57254622873765,
    "lambda": 3.6116363634100295,
    "delta": 0.4201854388352766,
}


def cert_setup():
    cfg = preset_static_certification()
    rho = rho_star(cfg.schedule)
    inp = CriterionInputs(cfg.eps1, cfg.eps2, rho, cfg.dyn.delay.bound)
    return cfg, rho, inp


def test_compute_d_oracle():
    assert compute_d(np.array([[0.1], [0.1]]), np.array([4.0])) == pytest.approx(0.00625)
    assert compute_d(np.array([[1.0, 2.0], [3.0, 0.5]]), np.array([1.0, 2.0])) \
        == pytest.approx(min(1.0 + 0.5, 3.0 + 0.125))


def test_compute_d_shape_mismatch():
    with pytest.raises(ValueError):
        compute_d(np.ones((2, 2)), np.array([1.0]))


def test_lambda_hand_oracle():
    # root of x - 2 + exp(x) = 0
    assert solve_lambda(2.0, 1.0, 1.0) == pytest.approx(0.4428544010023886, abs=1e-10)


def test_lambda_zero_delay_coefficient():
    assert solve_lambda(5.0, 0.0, 1.3) == 5.0


def test_lambda_preconditions():
    with pytest.raises(ValueError):
        solve_lambda(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        solve_lambda(2.0, 1.0, 0.0)


def test_lambda_monotone_in_beta1():
    roots = [solve_lambda(b1, 1.0, 1.3) for b1 in (2.0, 5.0, 20.0, 113.0)]
    assert all(a < b for a, b in zip(roots, roots[1:]))


def test_certificate_matches_frozen_values():
    cfg, rho, inp = cert_setup()
    rep = theorem1_certificate(cfg.dyn, cfg.top, cfg.dom, rho, inp)
    got = rep.as_dict()
    for key, val in FROZEN.items():
        assert got[key] == pytest.approx(val, abs=1e-9), key
    assert rep.verdict == VERDICT_OK
    np.testing.assert_allclose(rep.weights.p, np.ones(4), atol=1e-10)


def test_certificate_alpha1_scales_with_strength_only_in_alpha34():
    cfg, rho, inp = cert_setup()
    weak = CouplingTopology(N=4, Xi=cfg.top.Xi, Gamma1=cfg.top.Gamma1,
                            Gamma2=cfg.top.Gamma2, sigma=2.0, strength=125.0)
    a = compute_alphas(cfg.dyn, cfg.top, cfg.dom, inp)
    b = compute_alphas(cfg.dyn, weak, cfg.dom, inp)
    assert b[0] == a[0] and b[1] == a[1]
    assert b[2] == pytest.approx(a[2] / 2.0)
    assert b[3] == pytest.approx(a[3] / 2.0)


def test_coupling_mode_masks():
    cfg, rho, inp = cert_setup()
    state = CouplingTopology(N=4, Xi=cfg.top.Xi, Gamma1=cfg.top.Gamma1,
                             Gamma2=cfg.top.Gamma2, sigma=2.0, strength=250.0,
                             mode="state_only")
    spatial = CouplingTopology(N=4, Xi=cfg.top.Xi, Gamma1=cfg.top.Gamma1,
                               Gamma2=cfg.top.Gamma2, sigma=2.0, strength=250.0,
                               mode="spatial_only")
    _, _, a3s, a4s = compute_alphas(cfg.dyn, state, cfg.dom, inp)
    assert a4s == 0.0 and a3s == pytest.approx(FROZEN["alpha3"], abs=1e-9)
    _, _, a3x, a4x = compute_alphas(cfg.dyn, spatial, cfg.dom, inp)
    assert a3x == 0.0 and a4x == pytest.approx(FROZEN["alpha4"], abs=1e-9)


def test_weak_coupling_is_not_dominant():
    cfg, rho, inp = cert_setup()
    weak = CouplingTopology(N=4, Xi=cfg.top.Xi, Gamma1=cfg.top.Gamma1,
                            Gamma2=cfg.top.Gamma2, sigma=2.0, strength=0.5)
    rep = theorem1_certificate(cfg.dyn, weak, cfg.dom, rho, inp)
    assert rep.verdict == VERDICT_NOT_DOMINANT
    assert rep.lam is None and rep.delta is None


def test_tune_epsilons_picks_the_best_delta():
    cfg, rho, _ = cert_setup()
    grid = [(1.0, 1.0), (6.0989, 0.5), (10.0, 0.25)]
    rep, (e1, e2) = tune_epsilons(cfg.dyn, cfg.top, cfg.dom, rho, grid)
    assert (e1, e2) == (10.0, 0.25)
    assert rep.delta > FROZEN["delta"]
    only, _ = tune_epsilons(cfg.dyn, cfg.top, cfg.dom, rho, [(6.0989, 0.5)])
    assert only.delta == pytest.approx(FROZEN["delta"], abs=1e-9)
    with pytest.raises(ValueError):
        tune_epsilons(cfg.dyn, cfg.top, cfg.dom, rho, [])


def test_comparison_bound_on_benchmark_constants():
    cfg, rho, _ = cert_setup()
    ok, (times, V) = comparison_bound_check(
        FROZEN["beta1"], FROZEN["alpha2"], FROZEN["beta3"],
        cfg.schedule, 1.3, horizon=50.0)
    assert ok
    assert V[0] == 1.0
    assert V[-1] < 1e-6


def test_comparison_bound_preconditions():
    sched = IntermittentSchedule(spans=((0.0, 3.0), (5.0, 8.0)), horizon=10.0)
    with pytest.raises(ValueError):
        comparison_bound_check(1.0, 2.0, 0.5, sched, 1.0, horizon=10.0)
    with pytest.raises(ValueError):
        comparison_bound_check(2.0, 1.0, -3.0, sched, 1.0, horizon=10.0)
    with pytest.raises(ValueError):
        comparison_bound_check(2.0, 1.0, 0.5, sched, 1.0, horizon=50.0)


def test_report_text_rendering():
    cfg, rho, inp = cert_setup()
    rep = theorem1_certificate(cfg.dyn, cfg.top, cfg.dom, rho, inp)
    text = rep.to_text()
    assert "verdict = synchronizes" in text
    assert "delta = 0.420185" in text
