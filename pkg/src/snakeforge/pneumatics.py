"""Pneumatic branch head loss, minimum upstream pressure, and fill integration.

The fill model is a lumped linear flow resistance per branch
(dV/dt = dP / R_eff) against a bladder whose gauge pressure rises linearly
from 0 when slack to the settle pressure when taut.  R_eff is a calibration
constant shipped in the default manifest; its derivation is
:func:`branch_resistance_for_fill_time`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .units import psi_to_pa

STANDARD_GRAVITY = 9.81
COMPRESSOR_LIMIT_PA = psi_to_pa(15.0)


class PneumaticsError(ValueError):
    """Invalid network input or an infeasible fill request."""


@dataclass(frozen=True)
class TubeRun:
    """A straight tubing run plus the minor-loss fittings hung off it."""

    length_m: float
    inner_diameter_m: float
    darcy_friction_factor: float
    minor_loss_coefficients: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.length_m <= 0:
            raise PneumaticsError("tube length must be positive")
        if self.inner_diameter_m <= 0:
            raise PneumaticsError("tube inner diameter must be positive")
        if self.darcy_friction_factor <= 0:
            raise PneumaticsError("friction factor must be positive")
        if any(k < 0 for k in self.minor_loss_coefficients):
            raise PneumaticsError("minor loss coefficients must be >= 0")


@dataclass(frozen=True)
class Branch:
    """One pneumatic branch: tube runs feeding a set of bladder slots."""

    name: str
    tubes: tuple[TubeRun, ...]
    bladder_slots: tuple[str, ...]
    bladder_volume_m3: float
    settle_gauge_pa: float
    flow_resistance_pa_s_m3: float
    valve_open: bool = False

    def __post_init__(self) -> None:
        if not self.bladder_slots:
            raise PneumaticsError(f"branch {self.name!r} has no bladders")
        if self.bladder_volume_m3 <= 0:
            raise PneumaticsError("bladder volume must be positive")
        if self.settle_gauge_pa < 0:
            raise PneumaticsError("settle pressure must be >= 0")
        if self.flow_resistance_pa_s_m3 <= 0:
            raise PneumaticsError("flow resistance must be positive")

    @property
    def total_volume_m3(self) -> float:
        return self.bladder_volume_m3 * len(self.bladder_slots)


@dataclass(frozen=True)
class PneumaticNetwork:
    """Regulated source split into named branches (front and rear by default)."""

    regulator_gauge_pa: float
    branches: dict[str, Branch] = field(default_factory=dict)
    air_density_kg_m3: float = 1.2
    compressor_limit_gauge_pa: float = COMPRESSOR_LIMIT_PA

    def __post_init__(self) -> None:
        if not self.branches:
            raise PneumaticsError("network needs at least one branch")
        if not 0.0 <= self.regulator_gauge_pa <= self.compressor_limit_gauge_pa:
            raise PneumaticsError(
                "regulator pressure must be within [0, compressor limit] "
                f"({self.regulator_gauge_pa:.0f} Pa vs {self.compressor_limit_gauge_pa:.0f} Pa)"
            )
        if self.air_density_kg_m3 <= 0:
            raise PneumaticsError("air density must be positive")

    def branch(self, name: str) -> Branch:
        try:
            return self.branches[name]
        except KeyError:
            known = ", ".join(sorted(self.branches))
            raise PneumaticsError(f"unknown branch {name!r} (have: {known})") from None

    def with_valves(self, **states: bool) -> "PneumaticNetwork":
        branches = dict(self.branches)
        for name, is_open in states.items():
            branches[name] = replace(self.branch(name), valve_open=is_open)
        return replace(self, branches=branches)


class FillSample(NamedTuple):
    t_s: float
    volume_m3: float
    gauge_pa: float
    flow_m3_s: float


@dataclass(frozen=True)
class FillTrace:
    """Time series of one branch filling; ends when the bladders are taut."""

    branch: str
    total_volume_m3: float
    samples: tuple[FillSample, ...]
    completed: bool

    @property
    def fill_time_s(self) -> float | None:
        return self.samples[-1].t_s if self.completed and self.samples else None

    def fill_fraction_at(self, t_s: float) -> float:
        """Piecewise-linear fill fraction, held constant beyond the trace ends."""
        if not self.samples:
            return 0.0
        if t_s <= self.samples[0].t_s:
            return self.samples[0].volume_m3 / self.total_volume_m3
        for prev, cur in zip(self.samples, self.samples[1:]):
            if t_s <= cur.t_s:
                span = cur.t_s - prev.t_s
                w = (t_s - prev.t_s) / span if span > 0 else 1.0
                v = prev.volume_m3 + w * (cur.volume_m3 - prev.volume_m3)
                return v / self.total_volume_m3
        return self.samples[-1].volume_m3 / self.total_volume_m3


def head_loss(tube: TubeRun, mean_velocity_m_s: float, g: float = STANDARD_GRAVITY) -> float:
    """Darcy-Weisbach head in meters: (f_D L/D + sum K) * v^2 / (2g)."""
    if mean_velocity_m_s < 0:
        raise PneumaticsError("mean velocity must be >= 0")
    factor = (
        tube.darcy_friction_factor * tube.length_m / tube.inner_diameter_m
        + sum(tube.minor_loss_coefficients)
    )
    return factor * mean_velocity_m_s**2 / (2.0 * g)


def head_loss_pressure_pa(
    tube: TubeRun,
    mean_velocity_m_s: float,
    air_density_kg_m3: float = 1.2,
    g: float = STANDARD_GRAVITY,
) -> float:
    """Head loss converted to a pressure drop: dP = rho_a g h."""
    return air_density_kg_m3 * g * head_loss(tube, mean_velocity_m_s, g)


def branch_head_loss(branch: Branch, mean_velocity_m_s: float, g: float = STANDARD_GRAVITY) -> float:
    return sum(head_loss(t, mean_velocity_m_s, g) for t in branch.tubes)


def simulate_fill(
    network: PneumaticNetwork,
    branch: str,
    dt_s: float,
    initial_fill: float = 0.0,
    upstream_gauge_pa: float | None = None,
    max_time_s: float = 3600.0,
) -> FillTrace:
    """Integrate one branch filling from the regulated source.

    dV/dt = (P_upstream - P_bladder) / R_eff, with the bladder pressure
    climbing linearly from 0 to the settle pressure as it fills.  The trace
    ends when the branch reaches full volume; a closed valve yields an empty
    trace.
    """
    if not 0.0 < dt_s <= 1.0:
        raise PneumaticsError("dt must be in (0, 1] s")
    if not 0.0 <= initial_fill <= 1.0:
        raise PneumaticsError("initial fill must be in [0, 1]")
    b = network.branch(branch)
    if not b.valve_open:
        return FillTrace(branch, b.total_volume_m3, (), completed=False)

    p_up = network.regulator_gauge_pa if upstream_gauge_pa is None else upstream_gauge_pa
    full = b.total_volume_m3
    volume = initial_fill * full
    t = 0.0
    samples = []

    def flow_at(v: float) -> float:
        return fill_rate(b, v / full, p_up) * full

    while True:
        samples.append(FillSample(t, volume, b.settle_gauge_pa * (volume / full), flow_at(volume)))
        if volume >= full:
            return FillTrace(branch, full, tuple(samples), completed=True)
        if t >= max_time_s:
            raise PneumaticsError(
                f"branch {branch!r} did not fill within {max_time_s:.0f} s at "
                f"{p_up:.0f} Pa upstream"
            )
        volume = min(full, volume + dt_s * flow_at(volume))
        t += dt_s


def fill_rate(branch: Branch, fill_fraction: float, upstream_gauge_pa: float) -> float:
    """dFill/dt (1/s) of the lumped model at the given fill and source pressure.

    Negative when the source sits below the bladder pressure (venting).  This
    is the one fill law shared by the trace integrator, the live session, and
    the calibration sweeps.
    """
    return (upstream_gauge_pa - branch.settle_gauge_pa * fill_fraction) / (
        branch.flow_resistance_pa_s_m3 * branch.total_volume_m3
    )


def analytic_fill_time(
    flow_resistance_pa_s_m3: float,
    total_volume_m3: float,
    settle_gauge_pa: float,
    upstream_gauge_pa: float,
) -> float:
    """Closed-form fill time of the lumped model; inf when it can never fill."""
    if upstream_gauge_pa <= 0:
        return math.inf
    if settle_gauge_pa == 0:
        return flow_resistance_pa_s_m3 * total_volume_m3 / upstream_gauge_pa
    ratio = settle_gauge_pa / upstream_gauge_pa
    if ratio >= 1.0:
        return math.inf
    tau = flow_resistance_pa_s_m3 * total_volume_m3 / settle_gauge_pa
    return -tau * math.log1p(-ratio)


def branch_resistance_for_fill_time(
    fill_time_s: float,
    upstream_gauge_pa: float,
    settle_gauge_pa: float,
    total_volume_m3: float,
) -> float:
    """Invert :func:`analytic_fill_time` for R_eff (the shipped calibration)."""
    if fill_time_s <= 0:
        raise PneumaticsError("fill time must be positive")
    if settle_gauge_pa == 0:
        return fill_time_s * upstream_gauge_pa / total_volume_m3
    ratio = settle_gauge_pa / upstream_gauge_pa
    if ratio >= 1.0:
        raise PneumaticsError("upstream pressure must exceed the settle pressure")
    return -fill_time_s * settle_gauge_pa / (total_volume_m3 * math.log1p(-ratio))


def min_upstream_pressure(
    network: PneumaticNetwork,
    settle_gauge_pa: float | None = None,
    fill_deadline_s: float = 60.0,
) -> float:
    """Smallest regulator setting (gauge Pa) filling every branch by the deadline.

    Raises if the requirement exceeds the compressor bound.
    """
    if fill_deadline_s <= 0:
        raise PneumaticsError("deadline must be positive")
    required = 0.0
    for b in network.branches.values():
        settle = b.settle_gauge_pa if settle_gauge_pa is None else settle_gauge_pa
        r, v = b.flow_resistance_pa_s_m3, b.total_volume_m3
        if settle == 0:
            p = r * v / fill_deadline_s
        else:
            p = settle / -math.expm1(-fill_deadline_s * settle / (r * v))
        required = max(required, p)
    if required > network.compressor_limit_gauge_pa:
        raise PneumaticsError(
            f"no feasible pressure: deadline {fill_deadline_s:.1f} s needs "
            f"{required:.0f} Pa, above the {network.compressor_limit_gauge_pa:.0f} Pa "
            "compressor bound"
        )
    return required


def inflation_error_vs_target(fill_time_s: float, target_s: float) -> float:
    """Signed fractional error of a measured fill time against the design target."""
    if target_s <= 0:
        raise PneumaticsError("target time must be positive")
    return (fill_time_s - target_s) / target_s
