"""Aperiodically intermittent control schedules.

A schedule is an ordered list of control spans [t_i, s_i]; the gaps
(s_i, t_{i+1}) are rest spans.  theta is the infimum of control widths,
omega the supremum of total span widths, and rho_star = 1 - theta/omega
the maximum rest proportion consumed by the synchronization criterion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "IntermittentSchedule",
    "ScheduleError",
    "ScheduleWarning",
    "theta_omega",
    "rho_star",
    "in_control",
    "small_delay_ok",
    "generate_random",
]


class ScheduleError(ValueError):
    pass


class ScheduleWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class IntermittentSchedule:
    spans: tuple  # ((t_0, s_0), (t_1, s_1), ...)
    horizon: float

    def __post_init__(self):
        spans = tuple((float(t), float(s)) for t, s in self.spans)
        object.__setattr__(self, "spans", spans)
        if not spans:
            raise ScheduleError("no spans")
        if spans[0][0] != 0.0:
            raise ScheduleError("first control span must start at t = 0")
        for i, (t, s) in enumerate(spans):
            if not t < s:
                raise ScheduleError(f"span {i}: need t_i < s_i, got [{t}, {s}]")
            if i + 1 < len(spans) and not s <= spans[i + 1][0]:
                raise ScheduleError(f"span {i} overlaps span {i + 1}")

    @property
    def starts(self) -> np.ndarray:
        return np.array([t for t, _ in self.spans])

    @property
    def ends(self) -> np.ndarray:
        return np.array([s for _, s in self.spans])

    def __eq__(self, other):
        return (isinstance(other, IntermittentSchedule)
                and self.spans == other.spans and self.horizon == other.horizon)

    # -- plain-text serialization: one "t_i s_i" pair per line ------------
    def to_text(self) -> str:
        return "\n".join(f"{t:.17g} {s:.17g}" for t, s in self.spans) + "\n"

    @classmethod
    def from_text(cls, text: str, horizon: float) -> "IntermittentSchedule":
        spans = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ScheduleError(f"line {lineno}: expected 't_i s_i', got {line!r}")
            spans.append((float(parts[0]), float(parts[1])))
        return cls(spans=tuple(spans), horizon=horizon)


def theta_omega(s: IntermittentSchedule) -> tuple[float, float]:
    """(inf control width, sup total span width) over spans within horizon.

    A usable schedule needs theta < omega; a degenerate (always-on)
    schedule is flagged with a ScheduleWarning, not rejected.
    """
    spans = [(t, e) for t, e in s.spans if t <= s.horizon]
    if not spans:
        raise ScheduleError("no spans")
    theta = min(e - t for t, e in spans)
    widths = [spans[i + 1][0] - spans[i][0] for i in range(len(spans) - 1)]
    omega = max(widths) if widths else spans[0][1] - spans[0][0]
    if theta >= omega:
        warnings.warn(f"degenerate schedule: theta={theta:g} >= omega={omega:g}",
                      ScheduleWarning, stacklevel=2)
    return theta, omega


def rho_star(s: IntermittentSchedule) -> float:
    """Maximum rest proportion, 1 - theta/omega."""
    theta, omega = theta_omega(s)
    return 1.0 - theta / omega


def rho_pointwise(s: IntermittentSchedule, t: float) -> float:
    """Rest proportion (t - s_i)/(t - t_i) for t inside a rest span.

    Inspection helper only; the criterion consumes rho_star.
    """
    starts, ends = s.starts, s.ends
    i = int(np.searchsorted(starts, t, side="right")) - 1
    if i < 0 or t <= ends[i]:
        return 0.0
    return (t - ends[i]) / (t - starts[i])


def in_control(s: IntermittentSchedule, t) -> np.ndarray | bool:
    """True iff t lies in some closed control span [t_i, s_i]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > s.horizon):
        raise ScheduleError(f"query time outside [0, {s.horizon}]")
    idx = np.searchsorted(s.starts, t_arr, side="right") - 1
    ok = (idx >= 0) & (t_arr <= s.ends[np.clip(idx, 0, len(s.spans) - 1)])
    return bool(ok) if np.isscalar(t) or t_arr.ndim == 0 else ok


def small_delay_ok(s: IntermittentSchedule, tau_bound: float) -> bool:
    """True iff the delay bound is strictly below the minimum control width."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScheduleWarning)
        theta, _ = theta_omega(s)
    return tau_bound < theta


def generate_random(theta: float, omega: float, horizon: float,
                    seed: int) -> IntermittentSchedule:
    """Random schedule with inf control width >= theta and sup span <= omega.

    Control widths are uniform in [theta, 0.98*omega]; each total span is
    uniform between the control width plus a small gap and omega.
    Deterministic for a fixed seed; covers [0, horizon].
    """
    if not 0 < theta < omega:
        raise ScheduleError(f"need 0 < theta < omega, got theta={theta}, omega={omega}")
    rng = np.random.default_rng(seed)
    gap = 0.005 * omega
    cw_hi = max(theta, 0.98 * omega)
    spans = []
    t = 0.0
    while t <= horizon:
        cw = rng.uniform(theta, cw_hi)
        total = rng.uniform(min(cw + gap, omega), omega)
        spans.append((t, t + cw))
        t += total
    return IntermittentSchedule(spans=tuple(spans), horizon=horizon)
