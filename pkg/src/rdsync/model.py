"""Domain types for the coupled delayed reaction-diffusion network model.

Everything here is a plain value object: per-node neural dynamics, the
spatial domain, and the coupling topology.  The only numerics is input
validation (``validate_model``); all real computation lives in the other
modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ActivationSpec",
    "DelaySpec",
    "SpatialDomain",
    "NodeDynamics",
    "CouplingTopology",
    "validate_model",
    "is_irreducible",
]

ROW_SUM_TOL = 1e-12


def _frozen_array(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ActivationSpec:
    """Neuron activation functions with their global Lipschitz constants.

    ``kind="tanh"`` uses tanh for both the instantaneous and the delayed
    activation (Lipschitz constant 1 for each).  ``kind="custom"`` takes
    user-supplied constants on trust and may carry an interpolation table.
    """

    kind: str = "tanh"
    lipschitz_g: float = 1.0
    lipschitz_h: float = 1.0
    table: Optional[tuple] = None  # (x, y) arrays for kind="custom"

    def __post_init__(self):
        if self.kind not in ("tanh", "custom"):
            raise ValueError(f"unknown activation kind {self.kind!r}")

    def g(self, x: np.ndarray) -> np.ndarray:
        return self._eval(x)

    def h(self, x: np.ndarray) -> np.ndarray:
        return self._eval(x)

    def _eval(self, x):
        if self.kind == "tanh":
            return np.tanh(x)
        if self.table is None:
            raise ValueError("custom activation requires a lookup table")
        xs, ys = self.table
        return np.interp(x, xs, ys)


@dataclass(frozen=True)
class DelaySpec:
    """Bounded time-varying delay, tau(t) = a + b*sin(t) or constant a."""

    form: str = "constant"
    a: float = 0.0
    b: float = 0.0
    bound: float = 0.0

    def __post_init__(self):
        if self.form not in ("constant", "sinusoidal"):
            raise ValueError(f"unknown delay form {self.form!r}")

    def tau(self, t) -> np.ndarray:
        if self.form == "constant":
            return np.broadcast_to(np.asarray(self.a, dtype=float), np.shape(t)).copy() \
                if np.ndim(t) else float(self.a)
        return self.a + self.b * np.sin(t)


@dataclass(frozen=True)
class SpatialDomain:
    """Open box {x : |x_r| < l_r} in m spatial dimensions."""

    half_widths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "half_widths",
                           _frozen_array(np.atleast_1d(self.half_widths)))

    @property
    def m(self) -> int:
        return len(self.half_widths)

    def __eq__(self, other):
        return isinstance(other, SpatialDomain) and \
            np.array_equal(self.half_widths, other.half_widths)


@dataclass(frozen=True, eq=False)
class NodeDynamics:
    """All per-node parameters of the reaction-diffusion neural network.

    C is the diagonal of self-decay rates; A and B are the instantaneous
    and delayed connection weights; eta the external bias; D the n-by-m
    matrix of diffusion coefficients.
    """

    C: np.ndarray
    A: np.ndarray
    B: np.ndarray
    eta: np.ndarray
    D: np.ndarray
    activation: ActivationSpec
    delay: DelaySpec

    def __post_init__(self):
        object.__setattr__(self, "C", _frozen_array(np.diag(np.atleast_2d(self.C))
                                                    if np.ndim(self.C) == 2 else self.C))
        object.__setattr__(self, "A", _frozen_array(self.A))
        object.__setattr__(self, "B", _frozen_array(self.B))
        object.__setattr__(self, "eta", _frozen_array(self.eta))
        object.__setattr__(self, "D", _frozen_array(np.atleast_2d(self.D).reshape(len(self.eta), -1)
                                                    if np.ndim(self.D) != 2 else self.D))

    @property
    def n(self) -> int:
        return len(self.C)

    def __eq__(self, other):
        if not isinstance(other, NodeDynamics):
            return NotImplemented
        return (np.array_equal(self.C, other.C) and np.array_equal(self.A, other.A)
                and np.array_equal(self.B, other.B) and np.array_equal(self.eta, other.eta)
                and np.array_equal(self.D, other.D) and self.activation == other.activation
                and self.delay == other.delay)


@dataclass(frozen=True, eq=False)
class CouplingTopology:
    """Outer coupling matrix plus inner matrices, pinning gain and strength.

    The scalar ``strength`` scales both the outer matrix and the pinning
    gain, so the effective pinned matrix is strength*(Xi - diag(sigma,0,...)).
    Only the first node is ever pinned.
    """

    N: int
    Xi: np.ndarray
    Gamma1: np.ndarray
    Gamma2: np.ndarray
    sigma: float
    strength: float
    mode: str = "hybrid"
    pinned: int = 0

    def __post_init__(self):
        object.__setattr__(self, "Xi", _frozen_array(self.Xi))
        g1 = np.diag(np.atleast_2d(self.Gamma1)) if np.ndim(self.Gamma1) == 2 else self.Gamma1
        g2 = np.diag(np.atleast_2d(self.Gamma2)) if np.ndim(self.Gamma2) == 2 else self.Gamma2
        object.__setattr__(self, "Gamma1", _frozen_array(g1))
        object.__setattr__(self, "Gamma2", _frozen_array(g2))
        if self.mode not in ("hybrid", "state_only", "spatial_only"):
            raise ValueError(f"unknown coupling mode {self.mode!r}")
        if self.pinned != 0:
            raise ValueError("only the first node may be pinned")

    def __eq__(self, other):
        if not isinstance(other, CouplingTopology):
            return NotImplemented
        return (self.N == other.N and np.array_equal(self.Xi, other.Xi)
                and np.array_equal(self.Gamma1, other.Gamma1)
                and np.array_equal(self.Gamma2, other.Gamma2)
                and self.sigma == other.sigma and self.strength == other.strength
                and self.mode == other.mode)


def is_irreducible(Xi: np.ndarray) -> bool:
    """Directed reachability from every node to every node over the
    nonzero off-diagonal entries."""
    Xi = np.asarray(Xi, dtype=float)
    N = Xi.shape[0]
    if N == 1:
        return True
    adj = (np.abs(Xi) > 0) & ~np.eye(N, dtype=bool)
    for start in range(N):
        seen = np.zeros(N, dtype=bool)
        seen[start] = True
        frontier = [start]
        while frontier:
            nxt = []
            for v in frontier:
                for w in np.nonzero(adj[v])[0]:
                    if not seen[w]:
                        seen[w] = True
                        nxt.append(w)
            frontier = nxt
        if not seen.all():
            return False
    return True


def validate_model(dyn: NodeDynamics, dom: SpatialDomain,
                   top: CouplingTopology) -> list[str]:
    """Check every standing assumption; return human-readable violations.

    An empty list means the model is valid.
    """
    out: list[str] = []
    n = dyn.n

    if np.any(dyn.C <= 0):
        out.append("diagonal of C must be strictly positive")
    if np.any(dyn.D < 0):
        out.append("diffusion coefficients D must be nonnegative")
    if dyn.A.shape != (n, n):
        out.append(f"A must be {n}x{n}, got {dyn.A.shape}")
    if dyn.B.shape != (n, n):
        out.append(f"B must be {n}x{n}, got {dyn.B.shape}")
    if dyn.eta.shape != (n,):
        out.append(f"eta must have length {n}")
    if dyn.D.shape != (n, dom.m):
        out.append(f"D must be {n}x{dom.m}, got {dyn.D.shape}")
    if np.any(dom.half_widths <= 0):
        out.append("all domain half-widths must be positive")

    act = dyn.activation
    if act.lipschitz_g <= 0 or act.lipschitz_h <= 0:
        out.append("activation Lipschitz constants must be strictly positive")
    if act.kind == "tanh" and (act.lipschitz_g != 1.0 or act.lipschitz_h != 1.0):
        out.append("tanh activation requires Lipschitz constants exactly 1")

    d = dyn.delay
    if d.bound <= 0:
        out.append("delay bound must be positive")
    if d.form == "sinusoidal":
        if d.a - abs(d.b) < 0:
            out.append("sinusoidal delay may become negative (a - |b| < 0)")
        if d.a + abs(d.b) > d.bound:
            out.append("sinusoidal delay exceeds its bound (a + |b| > bound)")
    elif not (0 <= d.a <= d.bound):
        out.append("constant delay must lie in [0, bound]")

    Xi = top.Xi
    if Xi.shape != (top.N, top.N):
        out.append(f"Xi must be {top.N}x{top.N}, got {Xi.shape}")
    else:
        off = Xi - np.diag(np.diag(Xi))
        if np.any(off < 0):
            out.append("off-diagonal entries of Xi must be nonnegative")
        rs = Xi.sum(axis=1)
        if np.any(np.abs(rs) > ROW_SUM_TOL):
            bad = int(np.argmax(np.abs(rs)))
            out.append(f"row sum of Xi must be zero (row {bad} sums to {rs[bad]:g})")
        if not is_irreducible(Xi):
            out.append("Xi must be irreducible (coupling graph strongly connected)")
    if top.Gamma1.shape != (n,):
        out.append(f"Gamma1 must be a diagonal {n}x{n} matrix")
    elif np.any(top.Gamma1 < 0):
        out.append("Gamma1 entries must be nonnegative")
    if top.Gamma2.shape != (n,):
        out.append(f"Gamma2 must be a diagonal {n}x{n} matrix")
    elif np.any(top.Gamma2 < 0):
        out.append("Gamma2 entries must be nonnegative")
    if top.sigma <= 0:
        out.append("sigma must be positive")
    if top.strength < 0:
        out.append("coupling strength must be nonnegative")
    return out
