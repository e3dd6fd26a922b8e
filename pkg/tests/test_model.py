import numpy as np
import pytest

from rdsync.config import preset_static
from rdsync.model import (ActivationSpec, CouplingTopology, DelaySpec,
                          NodeDynamics, SpatialDomain, is_irreducible,
                          validate_model)


def demo():
    cfg = preset_static()
    return cfg.dyn, cfg.dom, cfg.top


def test_demo_model_is_valid():
    assert validate_model(*demo()) == []


def test_negative_sigma_rejected():
    dyn, dom, top = demo()
    bad = CouplingTopology(N=top.N, Xi=top.Xi, Gamma1=top.Gamma1,
                           Gamma2=top.Gamma2, sigma=-1.0, strength=top.strength)
    assert any("sigma must be positive" in v for v in validate_model(dyn, dom, bad))


def test_nonpositive_decay_rejected():
    dyn, dom, top = demo()
    bad = NodeDynamics(C=np.array([1.0, 0.0]), A=dyn.A, B=dyn.B, eta=dyn.eta,
                       D=dyn.D, activation=dyn.activation, delay=dyn.delay)
    assert any("C must be strictly positive" in v for v in validate_model(bad, dom, top))


def test_bad_row_sums_rejected():
    dyn, dom, top = demo()
    Xi = np.array(top.Xi)
    Xi[0, 0] += 0.5
    bad = CouplingTopology(N=4, Xi=Xi, Gamma1=top.Gamma1, Gamma2=top.Gamma2,
                           sigma=2.0, strength=1.0)
    assert any("row sum" in v for v in validate_model(dyn, dom, bad))


def test_reducible_topology_rejected():
    dyn, dom, top = demo()
    Xi = np.array([[-1.0, 1.0, 0.0, 0.0], [1.0, -1.0, 0.0, 0.0],
                   [0.0, 0.0, -1.0, 1.0], [0.0, 0.0, 1.0, -1.0]])
    bad = CouplingTopology(N=4, Xi=Xi, Gamma1=top.Gamma1, Gamma2=top.Gamma2,
                           sigma=2.0, strength=1.0)
    assert any("irreducible" in v for v in validate_model(dyn, dom, bad))


def test_tanh_requires_unit_lipschitz():
    dyn, dom, top = demo()
    act = ActivationSpec(kind="tanh", lipschitz_g=2.0)
    bad = NodeDynamics(C=dyn.C, A=dyn.A, B=dyn.B, eta=dyn.eta, D=dyn.D,
                       activation=act, delay=dyn.delay)
    assert any("exactly 1" in v for v in validate_model(bad, dom, top))


def test_delay_exceeding_bound_rejected():
    dyn, dom, top = demo()
    bad = NodeDynamics(C=dyn.C, A=dyn.A, B=dyn.B, eta=dyn.eta, D=dyn.D,
                       activation=dyn.activation,
                       delay=DelaySpec(form="sinusoidal", a=1.1, b=0.3, bound=1.3))
    assert any("exceeds its bound" in v for v in validate_model(bad, dom, top))


def test_sinusoidal_delay_evaluation():
    d = DelaySpec(form="sinusoidal", a=1.1, b=0.2, bound=1.3)
    assert d.tau(0.0) == pytest.approx(1.1)
    assert d.tau(np.pi / 2) == pytest.approx(1.3)
    np.testing.assert_allclose(d.tau(np.array([0.0, np.pi])), [1.1, 1.1], atol=1e-12)


def test_activation_tanh():
    act = ActivationSpec()
    x = np.linspace(-3, 3, 7)
    np.testing.assert_array_equal(act.g(x), np.tanh(x))
    np.testing.assert_array_equal(act.h(x), np.tanh(x))


def test_custom_activation_table():
    xs = np.linspace(-5, 5, 1001)
    act = ActivationSpec(kind="custom", lipschitz_g=0.5, lipschitz_h=0.5,
                         table=(xs, 0.5 * np.abs(xs)))
    assert act.g(2.0) == pytest.approx(1.0)


def _closure_irreducible(Xi):
    """Oracle: boolean transitive closure by repeated squaring."""
    N = Xi.shape[0]
    R = (np.abs(Xi) > 0) & ~np.eye(N, dtype=bool) | np.eye(N, dtype=bool)
    for _ in range(int(np.ceil(np.log2(max(N, 2)))) + 1):
        R = R | (R @ R)
    return bool(R.all())


def test_irreducibility_matches_closure_oracle():
    rng = np.random.default_rng(7)
    for _ in range(300):
        N = int(rng.integers(1, 7))
        A = (rng.random((N, N)) < rng.uniform(0.1, 0.7)).astype(float)
        np.fill_diagonal(A, 0.0)
        Xi = A - np.diag(A.sum(axis=1))
        assert is_irreducible(Xi) == _closure_irreducible(Xi)
