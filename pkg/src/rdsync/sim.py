"""Time integration of the coupled delayed reaction-diffusion network.

One spatial dimension, Dirichlet boundary, interior grid only.  The
integrator advances the target trajectory together with the per-node
synchronization errors (node state = target + error), which makes the
synchronization manifold exactly invariant in floating point.  Each step
is IMEX: the linear transport part (own diffusion plus the spatial
Laplacian coupling, including the spatial part of the pinning control)
advances by Crank-Nicolson, diagonalized in the sine eigenbasis of the
Dirichlet Laplacian; reaction, delay terms, state coupling and the state
part of the control are explicit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.fft import dst

from .model import CouplingTopology, NodeDynamics, SpatialDomain
from .schedule import IntermittentSchedule, in_control, small_delay_ok

__all__ = [
    "Grid1D",
    "SimConfig",
    "ErrorTrajectory",
    "SimulationDivergence",
    "make_grid",
    "build_laplacian",
    "laplacian_eigenvalues",
    "error_norm",
    "delayed_field",
    "poincare_residual",
    "DelayHistory",
    "Simulator",
    "simulate",
    "simulate_uncoupled",
    "write_trajectory_csv",
]

DEFAULT_GRID_POINTS = 101
DEFAULT_DT = 1e-3
DEFAULT_SAMPLE_EVERY = 100


class SimulationDivergence(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"divergence detected at t = {t:g}")
        self.t = t


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Interior grid on (-l, l); the boundary points carry the fixed zero."""

    points: int
    dx: float
    coordinates: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, Grid1D) and self.points == other.points
                and self.dx == other.dx)


def make_grid(half_width: float, points: int = DEFAULT_GRID_POINTS) -> Grid1D:
    dx = 2.0 * half_width / (points + 1)
    coords = -half_width + dx * np.arange(1, points + 1)
    coords.setflags(write=False)
    return Grid1D(points=points, dx=dx, coordinates=coords)


def build_laplacian(grid: Grid1D) -> np.ndarray:
    """Second-difference operator with Dirichlet closure (ghost values 0)."""
    if grid.points < 3:
        raise ValueError("need at least 3 interior grid points")
    M = grid.points
    L = np.zeros((M, M))
    inv2 = 1.0 / grid.dx ** 2
    np.fill_diagonal(L, -2.0 * inv2)
    idx = np.arange(M - 1)
    L[idx, idx + 1] = inv2
    L[idx + 1, idx] = inv2
    return L


def laplacian_eigenvalues(grid: Grid1D) -> np.ndarray:
    """Eigenvalues of the Dirichlet second-difference operator, ordered to
    match the orthonormal DST-I basis."""
    M = grid.points
    k = np.arange(1, M + 1)
    return -(4.0 / grid.dx ** 2) * np.sin(k * np.pi / (2.0 * (M + 1))) ** 2


def error_norm(err_fields: np.ndarray, dx: float) -> float:
    """Discrete L2 norm over nodes, components and the spatial grid."""
    return float(np.sqrt(np.sum(err_fields * err_fields) * dx))


def poincare_residual(q: np.ndarray, half_width: float) -> float:
    """l^2 * int (dq/dx)^2 dx - int q^2 dx for a boundary-vanishing profile.

    Central differences at interior nodes, one-sided at the boundary,
    trapezoid quadrature.  Nonnegative up to O(dx^2) discretization slack.
    """
    q = np.asarray(q, dtype=float)
    M = len(q)
    dx = 2.0 * half_width / (M + 1)
    qp = np.concatenate([[0.0], q, [0.0]])
    grad = np.empty(M + 2)
    grad[1:-1] = (qp[2:] - qp[:-2]) / (2.0 * dx)
    grad[0] = (qp[1] - qp[0]) / dx
    grad[-1] = (qp[-1] - qp[-2]) / dx
    int_grad2 = np.trapezoid(grad * grad, dx=dx)
    int_q2 = np.sum(q * q) * dx
    return half_width ** 2 * int_grad2 - int_q2


@dataclass(frozen=True, eq=False)
class SimConfig:
    dyn: NodeDynamics
    dom: SpatialDomain
    schedule: IntermittentSchedule
    top: Optional[CouplingTopology] = None
    grid_points: int = DEFAULT_GRID_POINTS
    dt: float = DEFAULT_DT
    horizon: float = 100.0
    gain_mode: str = "static"
    psi: float = 0.0
    initial: Optional[np.ndarray] = None          # (N, n) per-node constants
    initial_target: Optional[np.ndarray] = None   # (n,)
    sample_every: int = DEFAULT_SAMPLE_EVERY
    record_fields: bool = False

    def __post_init__(self):
        if self.dom.m != 1:
            raise ValueError("the simulator supports one spatial dimension only")
        if self.gain_mode not in ("static", "adaptive"):
            raise ValueError(f"unknown gain mode {self.gain_mode!r}")
        if self.gain_mode == "adaptive" and self.psi <= 0:
            raise ValueError("adaptive mode requires psi > 0")
        if self.dt <= 0 or self.horizon <= 0 or self.sample_every < 1:
            raise ValueError("dt, horizon and sample_every must be positive")

    def __eq__(self, other):
        if not isinstance(other, SimConfig):
            return NotImplemented
        return (self.dyn == other.dyn and self.dom == other.dom
                and self.schedule == other.schedule and self.top == other.top
                and self.grid_points == other.grid_points and self.dt == other.dt
                and self.horizon == other.horizon and self.gain_mode == other.gain_mode
                and self.psi == other.psi
                and np.array_equal(np.asarray(self.initial, dtype=object),
                                   np.asarray(other.initial, dtype=object))
                and np.array_equal(np.asarray(self.initial_target, dtype=object),
                                   np.asarray(other.initial_target, dtype=object))
                and self.sample_every == other.sample_every)


@dataclass
class ErrorTrajectory:
    times: np.ndarray
    error_norms: np.ndarray
    psi_values: np.ndarray
    # optional dense dump of node states and the target, (samples, N+1, n, M)
    field_samples: Optional[np.ndarray] = None
    dx: float = 0.0
    dt: float = 0.0


class DelayHistory:
    """Ring buffer of stacked (errors, target) snapshots over the trailing
    delay window; times before zero return the constant initial data."""

    def __init__(self, initial_fields: np.ndarray, dt: float, length: int):
        self.dt = dt
        self.length = length
        self.buf = np.empty((length,) + initial_fields.shape)
        self.buf[0] = initial_fields
        self.initial = initial_fields.copy()
        self.latest_step = 0

    def store(self, step: int, fields: np.ndarray) -> None:
        self.buf[step % self.length] = fields
        self.latest_step = step

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation in time; exact at snapshot times."""
        if t <= 0.0:
            return self.initial
        k = int(t / self.dt)
        frac = t / self.dt - k
        k = min(k, self.latest_step)
        if k < self.latest_step - self.length + 1:
            raise ValueError(f"query time {t:g} before history start")
        lo = self.buf[k % self.length]
        if frac == 0.0 or k == self.latest_step:
            return lo
        return (1.0 - frac) * lo + frac * self.buf[(k + 1) % self.length]


def delayed_field(history: DelayHistory, query_time: float) -> np.ndarray:
    return history.at(query_time)


class Simulator:
    """Stateful one-step integrator; ``run`` drives it over the horizon.

    Internal state is the stacked array ``S`` of shape (N+1, n, M): rows
    0..N-1 are per-node errors, the last row is the target trajectory.
    """

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        dyn, top = cfg.dyn, cfg.top
        self.n = dyn.n
        self.N = top.N if top is not None else 0
        half_width = float(cfg.dom.half_widths[0])
        self.grid = make_grid(half_width, cfg.grid_points)
        self.dt = cfg.dt
        self.tau_bound = dyn.delay.bound
        if self.dt > self.tau_bound / 10.0:
            warnings.warn(f"dt = {self.dt:g} exceeds a tenth of the delay bound",
                          stacklevel=2)
        if cfg.schedule.horizon < cfg.horizon:
            raise ValueError("schedule does not cover the simulation horizon")
        if cfg.gain_mode == "adaptive" and not small_delay_ok(cfg.schedule, self.tau_bound):
            raise ValueError("adaptive mode requires the delay bound below the "
                             "minimum control width")

        self.n_steps = int(round(cfg.horizon / self.dt))
        self.lam = laplacian_eigenvalues(self.grid)  # (M,)
        h2 = 0.5 * self.dt

        # Target: diffusion-only Crank-Nicolson factors, elementwise (n, M).
        dlam = dyn.D[:, 0][:, None] * self.lam[None, :]
        self._tp = (1.0 + h2 * dlam) / (1.0 - h2 * dlam)
        self._tq = 1.0 / (1.0 - h2 * dlam)

        if top is not None:
            g1, g2 = top.Gamma1, top.Gamma2
            self.gamma1 = g1 if top.mode in ("hybrid", "state_only") else np.zeros_like(g1)
            self.gamma2 = g2 if top.mode in ("hybrid", "spatial_only") else np.zeros_like(g2)
            Xi = np.asarray(top.Xi, dtype=float)
            X_ctrl = Xi.copy()
            X_ctrl[0, 0] -= top.sigma
            self.X_ctrl, self.X_rest = X_ctrl, Xi
            self.strength = top.strength
        else:
            self.gamma1 = self.gamma2 = np.zeros(self.n)
            self.X_ctrl = self.X_rest = np.zeros((0, 0))
            self.strength = 0.0

        self.adaptive = cfg.gain_mode == "adaptive"
        # Cached error-block CN operators for constant-coefficient regimes.
        self._cn_cache = {}
        if self.N:
            if self.adaptive:
                self._cn_cache["rest"] = self._cn_operators(self.X_rest, 1.0)
            else:
                self._cn_cache["rest"] = self._cn_operators(self.X_rest, self.strength)
                self._cn_cache["ctrl"] = self._cn_operators(self.X_ctrl, self.strength)

        self._ctrl = np.asarray(in_control(
            cfg.schedule, np.minimum(np.arange(self.n_steps + 1) * self.dt,
                                     cfg.schedule.horizon)))

        # State: errors stacked over the target.
        S0 = np.zeros((self.N + 1, self.n, self.grid.points))
        target0 = np.asarray(cfg.initial_target, dtype=float).reshape(self.n)
        S0[self.N] = target0[:, None]
        if self.N:
            init = np.asarray(cfg.initial, dtype=float).reshape(self.N, self.n)
            S0[:self.N] = (init - target0[None, :])[:, :, None]
        self.S = S0
        self.step_idx = 0
        hist_len = int(np.ceil(self.tau_bound / self.dt)) + 2
        self.history = DelayHistory(S0, self.dt, hist_len)
        self.psi = 0.0
        self._e2_window = np.full(hist_len, error_norm(S0[:self.N], self.grid.dx) ** 2)
        self._e2_pos = 0

    # -- linear operator machinery ------------------------------------

    def _node_matrices(self, X: np.ndarray, coup: float) -> np.ndarray:
        """Per-component transport matrices D_k*I - coup*gamma2_k*X, (n, N, N)."""
        eye = np.eye(self.N)
        D = self.cfg.dyn.D[:, 0]
        return (D[:, None, None] * eye[None]
                - (coup * self.gamma2)[:, None, None] * X[None])

    def _cn_operators(self, X: np.ndarray, coup: float):
        """(P, Q) with P = (I - h/2 A)^-1 (I + h/2 A), Q = (I - h/2 A)^-1,
        A = lambda_j * N_k, shapes (n, M, N, N)."""
        Nk = self._node_matrices(X, coup)
        A = self.lam[None, :, None, None] * Nk[:, None, :, :]
        eye = np.eye(self.N)[None, None]
        h2 = 0.5 * self.dt
        lhs = eye - h2 * A
        P = np.linalg.solve(lhs, np.broadcast_to(eye + h2 * A, A.shape).copy())
        Q = np.linalg.inv(lhs)
        return P, Q

    # -- explicit terms ------------------------------------------------

    def _explicit(self, S: np.ndarray, t: float, X: np.ndarray, coup: float):
        """(E_err (N, n, M), E_target (n, M)) at time t."""
        dyn = self.cfg.dyn
        act = dyn.activation
        tau_t = float(dyn.delay.tau(t))
        Sd = self.history.at(t - tau_t)
        pi, pid = S[self.N], Sd[self.N]
        g_pi, h_pid = act.g(pi), act.h(pid)
        E_pi = (-dyn.C[:, None] * pi + dyn.A @ g_pi + dyn.B @ h_pid
                + dyn.eta[:, None])
        if not self.N:
            return None, E_pi
        e, ed = S[:self.N], Sd[:self.N]
        gt = act.g(e + pi[None]) - g_pi[None]
        ht = act.h(ed + pid[None]) - h_pid[None]
        E = (-dyn.C[None, :, None] * e
             + np.einsum("kl,jlm->jkm", dyn.A, gt)
             + np.einsum("kl,jlm->jkm", dyn.B, ht))
        if coup != 0.0:
            E += (coup * self.gamma1)[None, :, None] * np.einsum("jk,knm->jnm", X, e)
        return E, E_pi

    # -- stepping ------------------------------------------------------

    def step(self) -> None:
        i = self.step_idx
        if i >= self.n_steps:
            raise ValueError("stepping past the configured horizon")
        t = i * self.dt
        ctrl = bool(self._ctrl[i])
        if self.adaptive:
            coup = self.psi if ctrl else 1.0
        else:
            coup = self.strength
        X = self.X_ctrl if ctrl else self.X_rest

        E_err, E_pi = self._explicit(self.S, t, X, coup)
        Snew = np.empty_like(self.S)

        pi_hat = dst(self.S[self.N], type=1, axis=-1, norm="ortho")
        Epi_hat = dst(E_pi, type=1, axis=-1, norm="ortho")
        Snew[self.N] = dst(self._tp * pi_hat + self.dt * self._tq * Epi_hat,
                           type=1, axis=-1, norm="ortho")

        if self.N:
            e_hat = dst(self.S[:self.N], type=1, axis=-1, norm="ortho")
            E_hat = dst(E_err, type=1, axis=-1, norm="ortho")
            et = e_hat.transpose(1, 2, 0)  # (n, M, N)
            Et = E_hat.transpose(1, 2, 0)
            if self.adaptive and ctrl:
                Nk = self._node_matrices(X, coup)
                A = self.lam[None, :, None, None] * Nk[:, None, :, :]
                h2 = 0.5 * self.dt
                eye = np.eye(self.N)[None, None]
                rhs = et + h2 * np.einsum("kmij,kmj->kmi", A, et) + self.dt * Et
                enew_t = np.linalg.solve(eye - h2 * A, rhs[..., None])[..., 0]
            else:
                P, Q = self._cn_cache["ctrl" if ctrl else "rest"]
                enew_t = (np.einsum("kmij,kmj->kmi", P, et)
                          + self.dt * np.einsum("kmij,kmj->kmi", Q, Et))
            Snew[:self.N] = dst(enew_t.transpose(2, 0, 1), type=1, axis=-1,
                                norm="ortho")

        if not np.all(np.isfinite(Snew)):
            raise SimulationDivergence((i + 1) * self.dt)

        self.S = Snew
        self.step_idx = i + 1
        self.history.store(self.step_idx, Snew)

        if self.adaptive:
            e2 = error_norm(Snew[:self.N], self.grid.dx) ** 2
            self._e2_pos = (self._e2_pos + 1) % len(self._e2_window)
            self._e2_window[self._e2_pos] = e2
            if ctrl:
                self.psi += self.dt * self.cfg.psi * float(np.max(self._e2_window))

    @property
    def t(self) -> float:
        return self.step_idx * self.dt

    def node_states(self) -> np.ndarray:
        """Node states plus target, (N+1, n, M)."""
        out = self.S.copy()
        out[:self.N] += self.S[self.N][None]
        return out

    def run(self) -> ErrorTrajectory:
        cfg = self.cfg
        times, errs, psis, dumps = [], [], [], []

        def record():
            times.append(self.t)
            errs.append(error_norm(self.S[:self.N], self.grid.dx))
            psis.append(self.psi)
            if cfg.record_fields:
                dumps.append(self.node_states())

        record()
        while self.step_idx < self.n_steps:
            self.step()
            if self.step_idx % cfg.sample_every == 0 or self.step_idx == self.n_steps:
                record()
        return ErrorTrajectory(
            times=np.array(times), error_norms=np.array(errs),
            psi_values=np.array(psis),
            field_samples=np.array(dumps) if cfg.record_fields else None,
            dx=self.grid.dx, dt=self.dt)


def simulate(cfg: SimConfig) -> ErrorTrajectory:
    """Run the configured experiment; deterministic for a fixed config."""
    return Simulator(cfg).run()


def simulate_uncoupled(dyn: NodeDynamics, dom: SpatialDomain,
                       initial: np.ndarray, horizon: float,
                       grid_points: int = DEFAULT_GRID_POINTS,
                       dt: float = DEFAULT_DT,
                       sample_every: int = DEFAULT_SAMPLE_EVERY,
                       record_fields: bool = True) -> ErrorTrajectory:
    """Integrate a single uncoupled system (the target dynamics alone)."""
    sched = IntermittentSchedule(spans=((0.0, horizon + 1.0),), horizon=horizon + 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = SimConfig(dyn=dyn, dom=dom, schedule=sched, top=None,
                        grid_points=grid_points, dt=dt, horizon=horizon,
                        initial=None, initial_target=np.asarray(initial, dtype=float),
                        sample_every=sample_every, record_fields=record_fields)
        return simulate(cfg)


def write_trajectory_csv(traj: ErrorTrajectory, path) -> None:
    with open(path, "w") as fh:
        fh.write("t,error_norm,psi\n")
        for t, e, p in zip(traj.times, traj.error_norms, traj.psi_values):
            fh.write(f"{t:.15g},{e:.15g},{p:.15g}\n")
