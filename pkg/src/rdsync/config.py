"""Experiment configuration: flat text format, bundled presets, rate fitting.

The on-disk format is line oriented, ``section.key = value``, with ``#``
comments.  Vectors are space separated numbers, matrices use ``;`` as the
row separator.  Floats are emitted with shortest round-trip repr so that
``load(dump(cfg)) == cfg`` holds bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .model import (ActivationSpec, CouplingTopology, DelaySpec, NodeDynamics,
                    SpatialDomain, validate_model)
from .schedule import IntermittentSchedule, generate_random
from .sim import ErrorTrajectory, SimConfig

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "loads_config",
    "dump_config",
    "preset_static",
    "preset_static_certification",
    "preset_adaptive",
    "preset",
    "PRESET_NAMES",
    "fit_decay_rate",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    dyn: NodeDynamics
    dom: SpatialDomain
    top: Optional[CouplingTopology]
    schedule: IntermittentSchedule
    eps1: Optional[float] = None
    eps2: Optional[float] = None
    grid_points: int = 101
    dt: float = 1e-3
    horizon: float = 100.0
    gain_mode: str = "static"
    psi: float = 0.0
    sample_every: int = 100
    initial: Optional[np.ndarray] = None
    initial_target: Optional[np.ndarray] = None
    output_path: str = ""

    def __post_init__(self):
        if self.schedule.horizon < self.horizon:
            raise ConfigError("schedule does not cover the simulation horizon")

    def sim_config(self, record_fields: bool = False) -> SimConfig:
        return SimConfig(dyn=self.dyn, dom=self.dom, schedule=self.schedule,
                         top=self.top, grid_points=self.grid_points,
                         dt=self.dt, horizon=self.horizon,
                         gain_mode=self.gain_mode, psi=self.psi,
                         initial=self.initial,
                         initial_target=self.initial_target,
                         sample_every=self.sample_every,
                         record_fields=record_fields)

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        def arr_eq(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(np.asarray(a), np.asarray(b))
        return (self.dyn == other.dyn and self.dom == other.dom
                and self.top == other.top and self.schedule == other.schedule
                and self.eps1 == other.eps1 and self.eps2 == other.eps2
                and self.grid_points == other.grid_points and self.dt == other.dt
                and self.horizon == other.horizon
                and self.gain_mode == other.gain_mode and self.psi == other.psi
                and self.sample_every == other.sample_every
                and arr_eq(self.initial, other.initial)
                and arr_eq(self.initial_target, other.initial_target)
                and self.output_path == other.output_path)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

# key -> value kind; "vector" = space separated, "matrix" = ";" row separator
_KEYS = {
    "model.C": "vector",
    "model.A": "matrix",
    "model.B": "matrix",
    "model.eta": "vector",
    "model.D": "matrix",
    "model.activation": "str",
    "model.lipschitz_g": "float",
    "model.lipschitz_h": "float",
    "model.delay.form": "str",
    "model.delay.a": "float",
    "model.delay.b": "float",
    "model.delay.bound": "float",
    "model.half_widths": "vector",
    "coupling.Xi": "matrix",
    "coupling.Gamma1": "vector",
    "coupling.Gamma2": "vector",
    "coupling.sigma": "float",
    "coupling.strength": "float",
    "coupling.mode": "str",
    "schedule.spans": "matrix",
    "schedule.theta": "float",
    "schedule.omega": "float",
    "schedule.seed": "int",
    "schedule.horizon": "float",
    "criterion.eps1": "float",
    "criterion.eps2": "float",
    "simulation.grid_points": "int",
    "simulation.dt": "float",
    "simulation.horizon": "float",
    "simulation.gain_mode": "str",
    "simulation.psi": "float",
    "simulation.sample_every": "int",
    "simulation.initial": "matrix",
    "simulation.initial_target": "vector",
    "output.trajectory": "str",
}


def _parse_value(kind: str, raw: str, lineno: int):
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "str":
            return raw
        if kind == "vector":
            return np.array([float(x) for x in raw.split()])
        if kind == "matrix":
            rows = [r.strip() for r in raw.split(";")]
            return np.array([[float(x) for x in r.split()] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: cannot parse value {raw!r}: {exc}") from None
    raise AssertionError(kind)


def loads_config(text: str) -> ExperimentConfig:
    kv: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in kv:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        kv[key] = _parse_value(_KEYS[key], raw, lineno)
    return _assemble(kv)


def load_config(path) -> ExperimentConfig:
    return loads_config(Path(path).read_text())


def _assemble(kv: dict) -> ExperimentConfig:
    if not any(k.startswith("model.") for k in kv):
        raise ConfigError("missing required section: model")
    for req in ("model.C", "model.A", "model.B", "model.eta", "model.D",
                "model.half_widths", "model.delay.bound"):
        if req not in kv:
            raise ConfigError(f"missing required key: {req}")

    act_kind = kv.get("model.activation", "tanh")
    act = ActivationSpec(kind=act_kind,
                         lipschitz_g=kv.get("model.lipschitz_g", 1.0),
                         lipschitz_h=kv.get("model.lipschitz_h", 1.0))
    delay = DelaySpec(form=kv.get("model.delay.form", "constant"),
                      a=kv.get("model.delay.a", 0.0),
                      b=kv.get("model.delay.b", 0.0),
                      bound=kv["model.delay.bound"])
    dyn = NodeDynamics(C=kv["model.C"], A=kv["model.A"], B=kv["model.B"],
                       eta=kv["model.eta"], D=kv["model.D"],
                       activation=act, delay=delay)
    dom = SpatialDomain(half_widths=kv["model.half_widths"])

    top = None
    if any(k.startswith("coupling.") for k in kv):
        for req in ("coupling.Xi", "coupling.Gamma1", "coupling.Gamma2",
                    "coupling.sigma", "coupling.strength"):
            if req not in kv:
                raise ConfigError(f"missing required key: {req}")
        Xi = kv["coupling.Xi"]
        top = CouplingTopology(N=Xi.shape[0], Xi=Xi,
                               Gamma1=kv["coupling.Gamma1"],
                               Gamma2=kv["coupling.Gamma2"],
                               sigma=kv["coupling.sigma"],
                               strength=kv["coupling.strength"],
                               mode=kv.get("coupling.mode", "hybrid"))
        problems = validate_model(dyn, dom, top)
        if problems:
            raise ConfigError("; ".join(problems))

    horizon = kv.get("simulation.horizon", 100.0)
    sched_horizon = kv.get("schedule.horizon", horizon)
    if "schedule.spans" in kv:
        spans = tuple(map(tuple, kv["schedule.spans"]))
        sched = IntermittentSchedule(spans=spans, horizon=sched_horizon)
    elif "schedule.theta" in kv:
        for req in ("schedule.omega", "schedule.seed"):
            if req not in kv:
                raise ConfigError(f"missing required key: {req}")
        sched = generate_random(kv["schedule.theta"], kv["schedule.omega"],
                                sched_horizon, kv["schedule.seed"])
    else:
        raise ConfigError("missing required section: schedule")

    initial = kv.get("simulation.initial")
    return ExperimentConfig(
        dyn=dyn, dom=dom, top=top, schedule=sched,
        eps1=kv.get("criterion.eps1"), eps2=kv.get("criterion.eps2"),
        grid_points=kv.get("simulation.grid_points", 101),
        dt=kv.get("simulation.dt", 1e-3), horizon=horizon,
        gain_mode=kv.get("simulation.gain_mode", "static"),
        psi=kv.get("simulation.psi", 0.0),
        sample_every=kv.get("simulation.sample_every", 100),
        initial=initial, initial_target=kv.get("simulation.initial_target"),
        output_path=kv.get("output.trajectory", ""))


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in np.asarray(v).ravel())


def _fmt_mat(m) -> str:
    return " ; ".join(_fmt_vec(row) for row in np.atleast_2d(np.asarray(m)))


def dump_config(cfg: ExperimentConfig) -> str:
    dyn, act, delay = cfg.dyn, cfg.dyn.activation, cfg.dyn.delay
    lines = [
        f"model.C = {_fmt_vec(dyn.C)}",
        f"model.A = {_fmt_mat(dyn.A)}",
        f"model.B = {_fmt_mat(dyn.B)}",
        f"model.eta = {_fmt_vec(dyn.eta)}",
        f"model.D = {_fmt_mat(dyn.D)}",
        f"model.activation = {act.kind}",
        f"model.lipschitz_g = {_fmt(act.lipschitz_g)}",
        f"model.lipschitz_h = {_fmt(act.lipschitz_h)}",
        f"model.delay.form = {delay.form}",
        f"model.delay.a = {_fmt(delay.a)}",
        f"model.delay.b = {_fmt(delay.b)}",
        f"model.delay.bound = {_fmt(delay.bound)}",
        f"model.half_widths = {_fmt_vec(cfg.dom.half_widths)}",
    ]
    if cfg.top is not None:
        top = cfg.top
        lines += [
            f"coupling.Xi = {_fmt_mat(top.Xi)}",
            f"coupling.Gamma1 = {_fmt_vec(top.Gamma1)}",
            f"coupling.Gamma2 = {_fmt_vec(top.Gamma2)}",
            f"coupling.sigma = {_fmt(top.sigma)}",
            f"coupling.strength = {_fmt(top.strength)}",
            f"coupling.mode = {top.mode}",
        ]
    lines += [
        f"schedule.spans = {_fmt_mat(np.array(cfg.schedule.spans))}",
        f"schedule.horizon = {_fmt(cfg.schedule.horizon)}",
    ]
    if cfg.eps1 is not None:
        lines.append(f"criterion.eps1 = {_fmt(cfg.eps1)}")
    if cfg.eps2 is not None:
        lines.append(f"criterion.eps2 = {_fmt(cfg.eps2)}")
    lines += [
        f"simulation.grid_points = {cfg.grid_points}",
        f"simulation.dt = {_fmt(cfg.dt)}",
        f"simulation.horizon = {_fmt(cfg.horizon)}",
        f"simulation.gain_mode = {cfg.gain_mode}",
        f"simulation.psi = {_fmt(cfg.psi)}",
        f"simulation.sample_every = {cfg.sample_every}",
    ]
    if cfg.initial is not None:
        lines.append(f"simulation.initial = {_fmt_mat(cfg.initial)}")
    if cfg.initial_target is not None:
        lines.append(f"simulation.initial_target = {_fmt_vec(cfg.initial_target)}")
    if cfg.output_path:
        lines.append(f"output.trajectory = {cfg.output_path}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Presets (benchmark experiments from the reference study)
# --------------------------------------------------------------------------

def _extend_cyclic(spans, horizon: float) -> tuple:
    """Extend a finite span list to cover [0, horizon] by cycling the
    observed (control width, span width) pairs, preserving theta and omega."""
    spans = [tuple(map(float, s)) for s in spans]
    pairs = [(spans[k][1] - spans[k][0], spans[k + 1][0] - spans[k][0])
             for k in range(len(spans) - 1)]
    out = list(spans[:-1])
    t, cw = spans[-1][0], spans[-1][1] - spans[-1][0]
    k = len(spans) - 1
    while t <= horizon:
        out.append((t, t + cw))
        t += pairs[k % len(pairs)][1]
        cw = pairs[k % len(pairs)][0]
        k += 1
    return tuple(out)


def _demo_dynamics() -> NodeDynamics:
    return NodeDynamics(
        C=np.array([1.0, 1.0]),
        A=np.array([[2.0, -0.1], [-5.0, 3.0]]),
        B=np.array([[-1.5, -0.1], [-0.2, -2.5]]),
        eta=np.zeros(2),
        D=np.array([[0.1], [0.1]]),
        activation=ActivationSpec(kind="tanh"),
        delay=DelaySpec(form="sinusoidal", a=1.1, b=0.2, bound=1.3),
    )


_DEMO_XI = np.array([
    [-2.0, 1.0, 0.0, 1.0],
    [1.0, -2.0, 1.0, 0.0],
    [1.0, 0.0, -2.0, 1.0],
    [0.0, 1.0, 1.0, -2.0],
])

_DEMO_INITIAL = np.array([[0.5, 0.8], [0.6, 0.5], [0.8, 0.3], [0.45, 0.2]])
_DEMO_TARGET = np.array([0.4, 0.6])

_STATIC_SPANS = [
    (0.0, 4.9), (5.0, 9.92), (9.99, 14.89), (14.92, 19.85), (19.9, 24.83),
    (24.87, 29.78), (29.84, 34.8), (34.82, 39.78), (39.8, 44.73),
    (44.79, 49.73), (49.78, 54.7),
]

_ADAPTIVE_SPANS = [
    (0.0, 3.0), (5.0, 9.0), (9.5, 13.0), (14.0, 18.0), (18.3, 22.0),
    (23.0, 26.5), (27.0, 31.0), (31.7, 35.0), (36.0, 40.5), (41.0, 45.2),
    (45.9, 50.0),
]


def _demo_topology(strength: float, mode: str = "hybrid") -> CouplingTopology:
    return CouplingTopology(N=4, Xi=_DEMO_XI, Gamma1=np.ones(2),
                            Gamma2=np.ones(2), sigma=2.0, strength=strength,
                            mode=mode)


def preset_static() -> ExperimentConfig:
    """Static-gain hybrid-coupling benchmark, coupling strength 3.5."""
    horizon = 100.0
    sched = IntermittentSchedule(spans=_extend_cyclic(_STATIC_SPANS, horizon),
                                 horizon=horizon + 10.0)
    return ExperimentConfig(
        dyn=_demo_dynamics(), dom=SpatialDomain(half_widths=np.array([4.0])),
        top=_demo_topology(3.5), schedule=sched,
        eps1=6.0989, eps2=0.5, horizon=horizon,
        initial=_DEMO_INITIAL, initial_target=_DEMO_TARGET,
        output_path="static_demo.csv")


def preset_static_certification() -> ExperimentConfig:
    """The certified variant of the static benchmark (strength 250)."""
    return replace(preset_static(), top=_demo_topology(250.0),
                   output_path="static_cert.csv")


def preset_adaptive() -> ExperimentConfig:
    """Adaptive-gain benchmark, growth rate psi = 0.1."""
    horizon = 100.0
    sched = IntermittentSchedule(spans=_extend_cyclic(_ADAPTIVE_SPANS, horizon),
                                 horizon=horizon + 10.0)
    return ExperimentConfig(
        dyn=_demo_dynamics(), dom=SpatialDomain(half_widths=np.array([4.0])),
        top=_demo_topology(1.0), schedule=sched,
        horizon=horizon, gain_mode="adaptive", psi=0.1,
        initial=_DEMO_INITIAL, initial_target=_DEMO_TARGET,
        output_path="adaptive_demo.csv")


PRESET_NAMES = ("static_demo", "static_cert", "adaptive_demo")


def preset(name: str) -> ExperimentConfig:
    try:
        return {"static_demo": preset_static,
                "static_cert": preset_static_certification,
                "adaptive_demo": preset_adaptive}[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}") from None


# --------------------------------------------------------------------------
# Empirical decay rate
# --------------------------------------------------------------------------

def fit_decay_rate(traj: ErrorTrajectory, t_start: float, t_end: float) -> float:
    """Least-squares slope of log(error_norm) over [t_start, t_end], negated
    so that a positive result means decay."""
    mask = (traj.times >= t_start) & (traj.times <= t_end)
    if not np.any(mask):
        raise ValueError("empty fitting window")
    e = traj.error_norms[mask]
    if np.any(e <= 0):
        raise ValueError("cannot fit log: nonpositive error norms in window")
    slope = np.polyfit(traj.times[mask], np.log(e), 1)[0]
    return float(-slope)
