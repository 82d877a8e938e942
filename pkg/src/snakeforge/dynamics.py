"""Time-domain sinking/rising of the whole robot, driven by bladder fill state.

Depth and velocity are positive DOWN.  Integration is semi-implicit
(velocity first), which stays bounded with quadratic drag at any sane step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Mapping, Sequence

from .hydrostatics import net_buoyant_force
from .pneumatics import FillTrace

if TYPE_CHECKING:
    from .model import RobotAssembly

FillSchedule = Callable[[float], "Sequence[float] | float"]


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class VerticalState:
    depth_m: float
    velocity_m_s: float
    acceleration_m_s2: float
    t_s: float


@dataclass(frozen=True)
class HydroParams:
    """Calibration constants of the vertical model plus the tank geometry.

    Drag and added mass are fit so the simulated descent/ascent reproduce the
    measured mean accelerations; see calibrate.fit_hydro_params for the
    derivation of the shipped values.
    """

    quadratic_drag_n_s2_m2: float
    added_mass_kg: float
    tank_depth_m: float = 1.5

    def __post_init__(self) -> None:
        if self.quadratic_drag_n_s2_m2 < 0:
            raise DynamicsError("drag coefficient must be >= 0")
        if self.added_mass_kg < 0:
            raise DynamicsError("added mass must be >= 0")
        if self.tank_depth_m <= 0:
            raise DynamicsError("tank depth must be positive")


@dataclass(frozen=True)
class VerticalRunSummary:
    duration_s: float | None
    mean_accel_m_s2: float | None
    peak_velocity_m_s: float
    window_t_s: tuple[float, float] | None
    terminated: bool
    diagnosis: str | None


@dataclass(frozen=True)
class VerticalRun:
    trajectory: tuple[VerticalState, ...]
    summary: VerticalRunSummary


def total_mass(assembly: "RobotAssembly") -> float:
    """Dry mass of everything the water has to accelerate (incl. ballast)."""
    mass = 0.0
    for seg in assembly.segments:
        mass += seg.mass_kg + seg.ballast_kg
        mass += sum(sh.mass_kg for sh in seg.shells)
    mass += assembly.bladder.empty_mass_kg * len(assembly.bladder_slot_names())
    return mass


def terminal_velocity(net_force_n: float, quadratic_drag: float) -> float:
    """Speed at which quadratic drag balances the net force."""
    if quadratic_drag <= 0:
        return math.inf
    return math.sqrt(abs(net_force_n) / quadratic_drag)


def _fills_at(fill_fractions: FillSchedule | Sequence[float] | float, t: float):
    if callable(fill_fractions):
        return fill_fractions(t)
    return fill_fractions


def step(
    assembly: "RobotAssembly",
    hydro: HydroParams,
    fill_fractions: FillSchedule | Sequence[float] | float,
    state: VerticalState,
    dt_s: float,
) -> VerticalState:
    """One semi-implicit step; clamps at the surface and the tank floor.

    a = (-F_net_up(fill) - drag * v|v|) / (m + m_added), down positive.
    The fill schedule is sampled at the end of the step, matching how the
    live session updates pneumatics before dynamics each tick.
    """
    if not 0.0 < dt_s <= 0.1:
        raise DynamicsError("dt must be in (0, 0.1] s")
    t_new = state.t_s + dt_s
    fills = _fills_at(fill_fractions, t_new)
    f_up = net_buoyant_force(assembly, fills)
    m_eff = total_mass(assembly) + hydro.added_mass_kg
    v = state.velocity_m_s
    a = (-f_up - hydro.quadratic_drag_n_s2_m2 * v * abs(v)) / m_eff
    v_new = v + a * dt_s
    depth_new = state.depth_m + v_new * dt_s
    if depth_new <= 0.0:
        depth_new = 0.0
        v_new = 0.0
    elif depth_new >= hydro.tank_depth_m:
        depth_new = hydro.tank_depth_m
        v_new = 0.0
    return VerticalState(depth_new, v_new, (v_new - v) / dt_s, t_new)


def simulate_vertical(
    assembly: "RobotAssembly",
    hydro: HydroParams,
    fill_fractions: FillSchedule | Sequence[float] | float,
    initial: VerticalState,
    dt_s: float,
    horizon_s: float,
    stop_at: str | None = None,
    window_fraction: float = 0.5,
) -> VerticalRun:
    """Integrate until floor/surface contact (per ``stop_at``) or the horizon.

    The summary's mean acceleration is taken over the middle
    ``window_fraction`` of the traverse, as Delta-v over Delta-t between the
    window-crossing samples.
    """
    if stop_at not in (None, "floor", "surface"):
        raise DynamicsError("stop_at must be 'floor', 'surface', or None")
    states = [initial]
    state = initial
    terminated = stop_at is None
    n_steps = max(1, int(round(horizon_s / dt_s)))
    for _ in range(n_steps):
        prev = state
        state = step(assembly, hydro, fill_fractions, state, dt_s)
        states.append(state)
        if stop_at == "floor" and state.depth_m >= hydro.tank_depth_m:
            terminated = True
            break
        if stop_at == "surface" and state.depth_m <= 0.0 < prev.depth_m:
            terminated = True
            break

    peak_v = max(abs(s.velocity_m_s) for s in states)
    duration = states[-1].t_s - initial.t_s if terminated and stop_at else None
    diagnosis = None
    if not terminated:
        f_up = net_buoyant_force(assembly, _fills_at(fill_fractions, state.t_s))
        if stop_at == "floor" and f_up >= 0.0:
            diagnosis = "never sinks: net buoyant force is non-negative"
        elif stop_at == "surface" and f_up <= 0.0:
            diagnosis = "never rises: net buoyant force is non-positive"
        else:
            diagnosis = "did not reach the stop condition within the horizon"
    window = _traverse_window(states, initial.depth_m, states[-1].depth_m, window_fraction)
    mean_a = None
    window_t = None
    if window is not None:
        first, last = window
        if last.t_s > first.t_s:
            mean_a = abs(last.velocity_m_s - first.velocity_m_s) / (last.t_s - first.t_s)
            window_t = (first.t_s, last.t_s)
    return VerticalRun(
        tuple(states),
        VerticalRunSummary(duration, mean_a, peak_v, window_t, terminated, diagnosis),
    )


def _traverse_window(
    states: Sequence[VerticalState],
    start_depth: float,
    end_depth: float,
    window_fraction: float,
) -> tuple[VerticalState, VerticalState] | None:
    span = end_depth - start_depth
    if span == 0:
        return None
    lo = start_depth + (0.5 - window_fraction / 2.0) * span
    hi = start_depth + (0.5 + window_fraction / 2.0) * span
    sign = 1.0 if span > 0 else -1.0
    first = next((s for s in states if sign * (s.depth_m - lo) >= 0), None)
    last = next((s for s in states if sign * (s.depth_m - hi) >= 0), None)
    if first is None or last is None:
        return None
    return first, last


def simulate_descent(
    assembly: "RobotAssembly",
    hydro: HydroParams,
    fill_fractions: FillSchedule | Sequence[float] | float = 0.0,
    dt_s: float = 0.01,
    horizon_s: float = 120.0,
    window_fraction: float = 0.5,
) -> VerticalRun:
    """Surface release to floor contact; summary over the mid-traverse window."""
    initial = VerticalState(0.0, 0.0, 0.0, 0.0)
    return simulate_vertical(
        assembly, hydro, fill_fractions, initial, dt_s, horizon_s, "floor", window_fraction
    )


def simulate_ascent(
    assembly: "RobotAssembly",
    hydro: HydroParams,
    fill_fractions: FillSchedule | Sequence[float] | float = 1.0,
    dt_s: float = 0.01,
    horizon_s: float = 120.0,
    window_fraction: float = 0.5,
) -> VerticalRun:
    """Floor release to surfacing."""
    initial = VerticalState(hydro.tank_depth_m, 0.0, 0.0, 0.0)
    return simulate_vertical(
        assembly, hydro, fill_fractions, initial, dt_s, horizon_s, "surface", window_fraction
    )


def summarize_run(
    states: Sequence[VerticalState],
    tank_depth_m: float,
    direction: str,
    window_fraction: float = 0.5,
) -> VerticalRunSummary:
    """Descent/ascent summary over an already-computed state sequence.

    Used for session-driven scenario runs, which produce the same per-tick
    states as :func:`simulate_vertical` but outside its loop.
    """
    if direction not in ("descent", "ascent"):
        raise DynamicsError("direction must be 'descent' or 'ascent'")
    start = states[0]
    target = tank_depth_m if direction == "descent" else 0.0
    if direction == "descent":
        arrival = next((s for s in states if s.depth_m >= tank_depth_m), None)
    else:
        arrival = next(
            (s for prev, s in zip(states, states[1:]) if s.depth_m <= 0.0 < prev.depth_m),
            None,
        )
    window = _traverse_window(states, start.depth_m, target, window_fraction)
    mean_a = None
    window_t = None
    if window is not None and window[1].t_s > window[0].t_s:
        first, last = window
        mean_a = abs(last.velocity_m_s - first.velocity_m_s) / (last.t_s - first.t_s)
        window_t = (first.t_s, last.t_s)
    return VerticalRunSummary(
        duration_s=None if arrival is None else arrival.t_s - start.t_s,
        mean_accel_m_s2=mean_a,
        peak_velocity_m_s=max(abs(s.velocity_m_s) for s in states),
        window_t_s=window_t,
        terminated=arrival is not None,
        diagnosis=None if arrival is not None else "did not reach the target depth",
    )


def couple_fill_to_buoyancy(
    fill_traces: FillTrace | Mapping[str, FillTrace],
    assembly: "RobotAssembly",
) -> Callable[[float], list[float]]:
    """Bridge pneumatic fill traces into a per-bladder fill schedule.

    Each branch's trace drives the bladders on that branch (piecewise-linear
    in time); bladders on branches without a trace stay empty.
    """
    if isinstance(fill_traces, FillTrace):
        fill_traces = {fill_traces.branch: fill_traces}
    slots = assembly.bladder_slot_names()
    slot_to_branch: dict[str, str] = {}
    for name, branch in assembly.pneumatics.branches.items():
        for slot in branch.bladder_slots:
            slot_to_branch[slot] = name

    def fills(t_s: float) -> list[float]:
        out = []
        for slot in slots:
            trace = fill_traces.get(slot_to_branch.get(slot, ""))
            out.append(trace.fill_fraction_at(t_s) if trace is not None else 0.0)
        return out

    return fills
