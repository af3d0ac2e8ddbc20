"""Lumped component laws for the prosthesis hydraulic circuit.

All quantities are SI.  Pressures are gauge pressures in Pa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..gait import GaitPhase

BAR = 1.0e5


class SimulationError(RuntimeError):
    """Numerical or physical failure while integrating the circuit."""


class ChamberVolumeError(SimulationError):
    pass


class AccumulatorError(SimulationError):
    pass


@dataclass(frozen=True)
class FluidProps:
    bulk_modulus: float = 1.4e9
    density: float = 850.0
    kinematic_viscosity: float = 46e-6

    def __post_init__(self):
        for name in ("bulk_modulus", "density", "kinematic_viscosity"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"FluidProps.{name} must be positive")


@dataclass(frozen=True)
class CylinderParams:
    area: float = 160e-6
    stroke: float = 0.040
    dead_volume_upper: float = 2.0e-6
    # referenced to y = 0, so it includes the full swept volume
    dead_volume_lower: float = 160e-6 * 0.040 + 2.0e-6
    moving_mass: float = 2.0
    coulomb_friction: float = 20.0
    viscous_friction: float = 100.0
    friction_smoothing: float = 1e-3

    def __post_init__(self):
        for name in ("area", "stroke", "dead_volume_upper", "dead_volume_lower",
                     "moving_mass", "friction_smoothing"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"CylinderParams.{name} must be positive")
        if self.coulomb_friction < 0.0 or self.viscous_friction < 0.0:
            raise ValueError("friction coefficients must be non-negative")


@dataclass(frozen=True)
class PumpParams:
    displacement: float = 65.6e-9
    speed_rpm: float = 3850.0
    efficiency: float = 0.6

    def __post_init__(self):
        if not self.displacement > 0.0:
            raise ValueError("pump displacement must be positive")
        if self.speed_rpm < 0.0:
            raise ValueError("pump speed must be non-negative")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("pump efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class ValveParams:
    orifice_diameter: float = 0.76e-3
    discharge_coeff: float = 0.7
    normally_open: bool = False
    # below this pressure drop the flow law blends to laminar; 0 keeps the
    # pure square-root orifice
    transition_pressure: float = 0.0

    def __post_init__(self):
        if not self.orifice_diameter > 0.0:
            raise ValueError("orifice diameter must be positive")
        if not 0.0 < self.discharge_coeff <= 1.0:
            raise ValueError("discharge coefficient must lie in (0, 1]")
        if self.transition_pressure < 0.0:
            raise ValueError("transition pressure must be non-negative")

    @property
    def area(self) -> float:
        return 0.25 * math.pi * self.orifice_diameter ** 2


@dataclass(frozen=True)
class AccumulatorState:
    """Gas-charged accumulator obeying P * V_gas**n = P_pre * V0**n."""

    capacity: float
    precharge: float
    polytropic_n: float
    gas_volume: float
    pressure: float

    def __post_init__(self):
        if not (self.capacity > 0.0 and self.precharge > 0.0 and self.polytropic_n > 0.0):
            raise ValueError("accumulator capacity, precharge and exponent must be positive")
        if not 0.0 < self.gas_volume <= self.capacity * (1.0 + 1e-12):
            raise AccumulatorError(
                f"gas volume {self.gas_volume:.6g} m3 outside (0, {self.capacity:.6g}]")
        ref = self.precharge * self.capacity ** self.polytropic_n
        if abs(self.pressure * self.gas_volume ** self.polytropic_n / ref - 1.0) > 1e-9:
            raise ValueError("accumulator state violates the polytropic law")

    @classmethod
    def from_gas_volume(cls, capacity, precharge, polytropic_n, gas_volume):
        if not gas_volume > 0.0:
            raise AccumulatorError("accumulator over-charged: gas volume reached zero")
        if gas_volume > capacity * (1.0 + 1e-12):
            raise AccumulatorError(
                f"accumulator over-discharged: gas volume {gas_volume:.6g} exceeds "
                f"capacity {capacity:.6g}")
        gas_volume = min(gas_volume, capacity)
        p = precharge * (capacity / gas_volume) ** polytropic_n
        return cls(capacity, precharge, polytropic_n, gas_volume, p)

    @classmethod
    def from_pressure(cls, capacity, precharge, polytropic_n, pressure):
        if pressure < precharge:
            raise ValueError("accumulator pressure cannot be below precharge")
        vg = capacity * (precharge / pressure) ** (1.0 / polytropic_n)
        return cls(capacity, precharge, polytropic_n, vg, pressure)

    @property
    def liquid_volume(self) -> float:
        return self.capacity - self.gas_volume

    def with_gas_volume(self, gas_volume: float) -> "AccumulatorState":
        return AccumulatorState.from_gas_volume(
            self.capacity, self.precharge, self.polytropic_n, gas_volume)


def gas_energy(acc: AccumulatorState) -> float:
    """Work done on the gas since precharge (J); exact polytropic integral."""
    n, v0, vg = acc.polytropic_n, acc.capacity, acc.gas_volume
    c = acc.precharge * v0 ** n
    if abs(n - 1.0) < 1e-12:
        return c * math.log(v0 / vg)
    return c * (vg ** (1.0 - n) - v0 ** (1.0 - n)) / (n - 1.0)


def chamber_volume(V_ref: float, A: float, y: float, side: str) -> float:
    if side == "upper":
        return V_ref + A * y
    if side == "lower":
        return V_ref - A * y
    raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")


def chamber_pressure_rate(P, V_ref, A, y, v, Q, fluid: FluidProps, side: str) -> float:
    """dP/dt of one cylinder chamber.

    ``upper``: V = V_ref + A*y and Q is the inflow.
    ``lower``: V = V_ref - A*y and Q is the outflow.
    Positive ``v`` grows the upper chamber and compresses the lower one.
    """
    V = chamber_volume(V_ref, A, y, side)
    if not V > 0.0:
        raise ChamberVolumeError(
            f"{side} chamber volume {V:.3g} m3 is not positive (piston out of envelope)")
    if side == "upper":
        return fluid.bulk_modulus / V * (Q - A * v)
    return fluid.bulk_modulus / V * (A * v - Q)


def friction_force(v: float, cyl: CylinderParams) -> float:
    return cyl.coulomb_friction * math.tanh(v / cyl.friction_smoothing) + cyl.viscous_friction * v


def phase_frame(phase: GaitPhase) -> int:
    """Axis orientation of the per-phase force balance.

    Controlled and powered plantarflexion write the balance along the fixed
    cylinder axis; controlled dorsiflexion and swing write it along the
    reversed axis.
    """
    return 1 if phase in (GaitPhase.CP, GaitPhase.PP) else -1


def cylinder_accel(F_A, P2, P3, v, cyl: CylinderParams, phase: GaitPhase) -> float:
    """Piston acceleration from the phase's force balance.

    ``F_A``, ``v`` and the result are expressed in the phase frame (see
    :func:`phase_frame`): CP and PP use ``F_A + (P2 - P3) A - F_s``, CD and SW
    use ``F_A - (P2 - P3) A - F_s``.
    """
    s = phase_frame(phase)
    return (F_A + s * (P2 - P3) * cyl.area - friction_force(v, cyl)) / cyl.moving_mass


def orifice_flow(dP: float, valve: ValveParams, fluid: FluidProps, is_open: bool = True) -> float:
    """Sharp-edged orifice flow (m3/s), positive in the direction of the drop."""
    if not is_open or dP == 0.0:
        return 0.0
    k = valve.discharge_coeff * valve.area * math.sqrt(2.0 / fluid.density)
    pt = valve.transition_pressure
    if pt > 0.0:
        return k * dP / (dP * dP + pt * pt) ** 0.25
    return math.copysign(k * math.sqrt(abs(dP)), dP)


def accumulator_update(acc: AccumulatorState, Q_in: float, dt: float) -> AccumulatorState:
    """Admit ``Q_in * dt`` of liquid (negative discharges) and re-evaluate the gas."""
    if Q_in == 0.0:
        return acc
    return acc.with_gas_volume(acc.gas_volume - Q_in * dt)


def accumulator_power(acc: AccumulatorState, q_acc: float) -> float:
    return acc.pressure * q_acc


def pump_flow(pump: PumpParams) -> float:
    """Geometric pump flow V_pump * n / 60 (m3/s)."""
    return pump.displacement * pump.speed_rpm / 60.0


def pump_power(P1: float, pump: PumpParams) -> float:
    return P1 * pump.displacement * pump.speed_rpm * pump.efficiency / 60.0


def delivered_pump_flow(pump: PumpParams) -> float:
    """Flow reaching the circuit; the efficiency is booked as volumetric loss
    so that pressure times this flow equals :func:`pump_power`."""
    return pump_flow(pump) * pump.efficiency
