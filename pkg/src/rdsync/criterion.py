"""Synchronization certificate and the scalar comparison-system verifier.

Assembles the constants (d, alpha_1..alpha_4, beta_1, beta_3, beta), the
positive root lambda of lambda - beta_1 + alpha_2*exp(lambda*tau) = 0,
and the certified decay exponent delta = lambda - beta*rho_star.  The
error norm of a certified network decays as exp(-delta*t/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import PerronWeights, left_null_vector, pinned_matrix, sym_part_max_eig
from .model import CouplingTopology, NodeDynamics, SpatialDomain
from .schedule import IntermittentSchedule, in_control, rho_star as schedule_rho_star

__all__ = [
    "CriterionInputs",
    "CriterionReport",
    "compute_d",
    "compute_alphas",
    "solve_lambda",
    "theorem1_certificate",
    "tune_epsilons",
    "comparison_bound_check",
]

VERDICT_OK = "synchronizes"
VERDICT_NOT_DOMINANT = "beta1_not_dominant"
VERDICT_DELTA = "delta_nonpositive"

LAMBDA_XTOL = 1e-12
BOUND_SLACK = 1.0001


@dataclass(frozen=True)
class CriterionInputs:
    eps1: float
    eps2: float
    rho_star: float
    tau_bound: float

    def __post_init__(self):
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("eps1 and eps2 must be positive")
        if not 0 <= self.rho_star < 1:
            raise ValueError("rho_star must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class CriterionReport:
    d: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    beta1: float
    beta3: float
    beta: float
    lam: Optional[float]
    delta: Optional[float]
    verdict: str
    weights: PerronWeights

    def as_dict(self) -> dict:
        out = {"d": self.d, "alpha1": self.alpha1, "alpha2": self.alpha2,
               "alpha3": self.alpha3, "alpha4": self.alpha4,
               "beta1": self.beta1, "beta3": self.beta3, "beta": self.beta}
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.delta is not None:
            out["delta"] = self.delta
        out["verdict"] = self.verdict
        return out

    def to_text(self) -> str:
        lines = []
        for k, v in self.as_dict().items():
            lines.append(f"{k} = {v:.6f}" if isinstance(v, float) else f"{k} = {v}")
        return "\n".join(lines) + "\n"


def compute_d(D: np.ndarray, half_widths: np.ndarray) -> float:
    """min over neurons k of sum_r D_kr / l_r^2."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    l = np.atleast_1d(np.asarray(half_widths, dtype=float))
    if D.shape[1] != l.shape[0]:
        raise ValueError(f"D has {D.shape[1]} columns but {l.shape[0]} half-widths given")
    return float(np.min(D @ (1.0 / l ** 2)))


def compute_alphas(dyn: NodeDynamics, top: CouplingTopology, dom: SpatialDomain,
                   inputs: CriterionInputs) -> tuple[float, float, float, float]:
    """The four alpha constants.

    alpha1 bounds the reaction terms, alpha2 the delayed terms; alpha3 and
    alpha4 carry the (negative) contribution of state and spatial coupling.
    The scalar eps1*g^2 term enters as a multiple of the identity.  In
    state_only mode alpha4 is zero (excluded from beta); in spatial_only
    mode alpha3 is.
    """
    g = dyn.activation.lipschitz_g
    h = dyn.activation.lipschitz_h
    n = dyn.n
    M = (-np.diag(dyn.C) + dyn.A @ dyn.A.T / inputs.eps1
         + inputs.eps1 * g * g * np.eye(n) + dyn.B @ dyn.B.T / inputs.eps2)
    alpha1 = 2.0 * sym_part_max_eig(M)
    alpha2 = 2.0 * inputs.eps2 * h * h

    weights = left_null_vector(top.Xi)
    eff = pinned_matrix(top.Xi, top.sigma, top.strength)
    lmax = sym_part_max_eig(weights.P @ eff)
    alpha3 = 2.0 * float(np.min(top.Gamma1)) * lmax
    alpha4 = 2.0 * float(np.min(top.Gamma2)) * lmax * float(np.sum(1.0 / dom.half_widths ** 2))
    if top.mode == "state_only":
        alpha4 = 0.0
    elif top.mode == "spatial_only":
        alpha3 = 0.0
    return alpha1, alpha2, alpha3, alpha4


def solve_lambda(beta1: float, alpha2: float, tau_bound: float) -> float:
    """Unique positive root of f(lam) = lam - beta1 + alpha2*exp(lam*tau).

    f(0) = alpha2 - beta1 < 0, f(beta1) > 0 and f is strictly increasing,
    so bisection on [0, beta1] is guaranteed to converge.
    """
    if not beta1 > alpha2 >= 0:
        raise ValueError("comparison condition violated (need beta1 > alpha2 >= 0)")
    if tau_bound <= 0:
        raise ValueError("tau_bound must be positive")
    if alpha2 == 0.0:
        return beta1
    lo, hi = 0.0, beta1
    while hi - lo > LAMBDA_XTOL:
        mid = 0.5 * (lo + hi)
        if mid - beta1 + alpha2 * math.exp(mid * tau_bound) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def theorem1_certificate(dyn: NodeDynamics, top: CouplingTopology,
                         dom: SpatialDomain, sched_rho_star: float,
                         inputs: CriterionInputs) -> CriterionReport:
    """Full synchronization certificate for the given model and schedule index."""
    d = compute_d(dyn.D, dom.half_widths)
    alpha1, alpha2, alpha3, alpha4 = compute_alphas(dyn, top, dom, inputs)
    weights = left_null_vector(top.Xi)
    beta1 = 2.0 * d - alpha1 - alpha3 - alpha4
    beta3 = alpha1 - 2.0 * d
    beta = beta1 + beta3
    lam = delta = None
    if beta1 > alpha2 >= 0:
        lam = solve_lambda(beta1, alpha2, inputs.tau_bound)
        delta = lam - beta * sched_rho_star
        verdict = VERDICT_OK if delta > 0 else VERDICT_DELTA
    else:
        verdict = VERDICT_NOT_DOMINANT
    return CriterionReport(d=d, alpha1=alpha1, alpha2=alpha2, alpha3=alpha3,
                           alpha4=alpha4, beta1=beta1, beta3=beta3, beta=beta,
                           lam=lam, delta=delta, verdict=verdict, weights=weights)


def tune_epsilons(dyn: NodeDynamics, top: CouplingTopology, dom: SpatialDomain,
                  rho_star: float, grid) -> tuple[CriterionReport, tuple[float, float]]:
    """Grid search over (eps1, eps2) maximizing delta.

    Reports without a delta rank below all reports with one; ties break
    toward smaller eps1, then smaller eps2.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("epsilon grid must be nonempty")
    best = None
    tau = dyn.delay.bound
    for eps1, eps2 in grid:
        rep = theorem1_certificate(dyn, top, dom, rho_star,
                                   CriterionInputs(eps1, eps2, rho_star, tau))
        key = (rep.delta is not None, rep.delta if rep.delta is not None else 0.0,
               -eps1, -eps2)
        if best is None or key > best[0]:
            best = (key, rep, (eps1, eps2))
    return best[1], best[2]


# --------------------------------------------------------------------------
# Scalar comparison-system verifier
# --------------------------------------------------------------------------

def _integrate_batch(beta1, alpha2, beta3, flags_half, tau, dt, n_steps):
    """RK4 on V' = a(t)V + alpha2*V(t - tau), batched over instances.

    beta1, alpha2, beta3, tau: (batch,) arrays; flags_half: control flags
    at times k*dt/2, shape (2*n_steps + 1, batch).  History is V = 1 on
    [-tau, 0].  Returns V of shape (n_steps + 1, batch).
    """
    beta1, alpha2, beta3, tau = (np.atleast_1d(np.asarray(v, dtype=float))
                                 for v in (beta1, alpha2, beta3, tau))
    batch = beta1.shape[0]
    cols = np.arange(batch)
    r = tau / dt
    if np.any(r < 2):
        raise ValueError("dt too large relative to the delay")
    V = np.empty((n_steps + 1, batch))
    V[0] = 1.0

    # Stage offsets c in {0, 1/2, 1}: the delayed index at step i is
    # i + K_c with a constant interpolation weight per instance.
    Ks, fracs = [], []
    for c in (0.0, 0.5, 1.0):
        K = np.floor(c - r).astype(int)
        Ks.append(K)
        fracs.append((c - r) - K)

    def delayed(i, stage):
        idx = i + Ks[stage]
        lo = np.where(idx < 0, 1.0, V[np.clip(idx, 0, n_steps), cols])
        hi = np.where(idx + 1 < 0, 1.0, V[np.clip(idx + 1, 0, n_steps), cols])
        return (1.0 - fracs[stage]) * lo + fracs[stage] * hi

    a_ctrl, a_rest = -beta1, beta3
    h = dt
    for i in range(n_steps):
        a0 = np.where(flags_half[2 * i], a_ctrl, a_rest)
        ah = np.where(flags_half[2 * i + 1], a_ctrl, a_rest)
        a1 = np.where(flags_half[2 * i + 2], a_ctrl, a_rest)
        d0 = alpha2 * delayed(i, 0)
        dh = alpha2 * delayed(i, 1)
        d1 = alpha2 * delayed(i, 2)
        v = V[i]
        k1 = a0 * v + d0
        k2 = ah * (v + 0.5 * h * k1) + dh
        k3 = ah * (v + 0.5 * h * k2) + dh
        k4 = a1 * (v + h * k3) + d1
        V[i + 1] = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return V


def _control_flags_half_grid(sched: IntermittentSchedule, dt: float,
                             n_steps: int) -> np.ndarray:
    t_half = np.arange(2 * n_steps + 1) * (dt / 2.0)
    return np.asarray(in_control(sched, np.minimum(t_half, sched.horizon)))


def comparison_bound_check(beta1: float, alpha2_: float, beta3: float,
                           sched: IntermittentSchedule, tau_bound: float,
                           horizon: float, dt: float = 1e-3):
    """Integrate the worst-case comparison system and check the decay bound.

    The system V' = -beta1*V + alpha2*V(t - tau) on control spans and
    V' = beta3*V + alpha2*V(t - tau) on rest spans (constant history 1)
    must satisfy V(t) <= 1.0001*exp(-delta*t) throughout [0, horizon].
    Returns (ok, (times, V)).
    """
    if not beta1 > alpha2_ >= 0:
        raise ValueError("comparison condition violated (need beta1 > alpha2 >= 0)")
    beta = beta1 + beta3
    if beta <= 0:
        raise ValueError("need beta = beta1 + beta3 > 0")
    rho = schedule_rho_star(sched)
    lam = solve_lambda(beta1, alpha2_, tau_bound)
    delta = lam - beta * rho
    if delta <= 0:
        raise ValueError(f"delta = {delta:g} is not positive; bound not certified")
    if sched.horizon < horizon:
        raise ValueError("schedule does not cover the requested horizon")
    dt = min(dt, 1e-3, tau_bound / 10.0)
    n_steps = int(round(horizon / dt))
    flags = _control_flags_half_grid(sched, dt, n_steps)[:, None]
    V = _integrate_batch([beta1], [alpha2_], [beta3], flags, [tau_bound],
                         dt, n_steps)[:, 0]
    times = np.arange(n_steps + 1) * dt
    ok = bool(np.all(V <= BOUND_SLACK * np.exp(-delta * times)))
    return ok, (times, V)
