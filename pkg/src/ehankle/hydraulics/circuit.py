"""Four-phase circuit integration with fixed-step RK4 and an energy audit.

State vector: piston position and velocity, both chamber pressures and the
gas volume of each accumulator.  Accumulator pressures are always derived
from gas volume through the polytropic law, so that law holds exactly.

Sign conventions (fixed cylinder frame):
  * ``y`` grows with ankle dorsiflexion; positive ``v`` grows the upper
    chamber and compresses the lower one.
  * the hydraulic force on the piston is ``(P2 - P3) * A``.
  * the external force on the piston is the wearer's reaction to the joint
    moment (``-force`` of the cylinder load series) plus the coupling spring
    that imposes the commanded kinematics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from ..gait import CylinderLoad, GaitPhase, phase_at, time_derivative
from .components import (
    AccumulatorError,
    AccumulatorState,
    ChamberVolumeError,
    SimulationError,
    chamber_pressure_rate,
    cylinder_accel,
    delivered_pump_flow,
    friction_force,
    orifice_flow,
    phase_frame,
    pump_power,
)
from .config import HydraulicConfig, PhaseValveConfig

ExternalForce = Union[float, Callable[[float, float, float], float]]

TIMESERIES_HEADER = ("t_s", "phase", "y_a_m", "v_m_s", "P2_Pa", "P3_Pa", "PA_Pa", "PB_Pa",
                     "PC_Pa", "Q_pump_m3_s", "pump_W", "accA_W", "accC_W")


@dataclass(frozen=True)
class HydraulicState:
    y: float
    v: float
    P2: float
    P3: float
    acc_A: AccumulatorState
    acc_B: AccumulatorState
    acc_C: AccumulatorState
    t: float = 0.0

    def vector(self) -> tuple:
        return (self.y, self.v, self.P2, self.P3,
                self.acc_A.gas_volume, self.acc_B.gas_volume, self.acc_C.gas_volume)

    def with_vector(self, x, t: float) -> "HydraulicState":
        y, v, P2, P3, VA, VB, VC = x
        return HydraulicState(
            y, v, P2, P3,
            self.acc_A.with_gas_volume(VA),
            self.acc_B.with_gas_volume(VB),
            self.acc_C.with_gas_volume(VC),
            t,
        )


def initial_state(config: HydraulicConfig, y0: float = 0.0, v0: float = 0.0) -> HydraulicState:
    accs = {k: a.initial_state() for k, a in config.accumulators.items()}
    p0 = accs["B"].pressure
    return HydraulicState(y0, v0, p0, p0, accs["A"], accs["B"], accs["C"], 0.0)


def _as_force(F_A: ExternalForce) -> Callable[[float, float, float], float]:
    if callable(F_A):
        return F_A
    value = float(F_A)
    return lambda t, y, v: value


class _Circuit:
    """Right-hand side of the circuit ODE for one valve topology."""

    def __init__(self, config: HydraulicConfig, phase: GaitPhase, valves: PhaseValveConfig,
                 force: Callable[[float, float, float], float]):
        self.cfg = config
        self.phase = GaitPhase(phase)
        self.frame = phase_frame(self.phase)
        entry = valves[self.phase]
        self.open = entry.open
        self.pump_on = entry.pump
        self.q_pump = delivered_pump_flow(config.pump) if entry.pump else 0.0
        self.force = force
        accs = config.accumulators
        self.acc = [(a.precharge * a.capacity ** a.polytropic_n, a.polytropic_n)
                    for a in (accs["A"], accs["B"], accs["C"])]

    def pressures(self, x):
        (cA, nA), (cB, nB), (cC, nC) = self.acc
        return cA / x[4] ** nA, cB / x[5] ** nB, cC / x[6] ** nC

    def _flows(self, P2, P3, PA, PB, PC):
        valves, fluid, o = self.cfg.valves, self.cfg.fluid, self.open
        Q1 = orifice_flow(PA - P3, valves[1], fluid, o[0])
        Q2 = orifice_flow(PC - P3, valves[2], fluid, o[1])
        Q3 = orifice_flow(P2 - PB, valves[3], fluid, o[2])
        Q4 = orifice_flow(P2 - P3, valves[4], fluid, o[3])
        return Q1, Q2, Q3, Q4

    def __call__(self, t, x):
        y, v, P2, P3, VA, VB, VC = x
        if not (VA > 0.0 and VB > 0.0 and VC > 0.0):
            raise AccumulatorError("accumulator over-charged: gas volume reached zero")
        cyl, fluid = self.cfg.cylinder, self.cfg.fluid
        PA, PB, PC = self.pressures(x)
        Q1, Q2, Q3, Q4 = self._flows(P2, P3, PA, PB, PC)
        F = self.force(t, y, v)
        s = self.frame
        a = s * cylinder_accel(s * F, P2, P3, s * v, cyl, self.phase)
        dP2 = chamber_pressure_rate(P2, cyl.dead_volume_upper, cyl.area, y, v,
                                    -Q3 - Q4, fluid, "upper")
        dP3 = chamber_pressure_rate(P3, cyl.dead_volume_lower, cyl.area, y, v,
                                    -(Q1 + Q2 + Q4), fluid, "lower")
        qA = self.q_pump - Q1
        qB = Q3 - self.q_pump
        qC = -Q2
        return (v, a, dP2, dP3, -qA, -qB, -qC)

    def diagnostics(self, t, x) -> dict:
        y, v, P2, P3 = x[:4]
        cyl = self.cfg.cylinder
        PA, PB, PC = self.pressures(x)
        Q1, Q2, Q3, Q4 = self._flows(P2, P3, PA, PB, PC)
        F = self.force(t, y, v)
        Av = cyl.area * v
        q_up_in = -Q3 - Q4
        q_low_in = Q1 + Q2 + Q4
        qA, qB, qC = self.q_pump - Q1, Q3 - self.q_pump, -Q2
        Fs = friction_force(v, cyl)
        pump_W = pump_power(PA - PB, self.cfg.pump) if self.pump_on else 0.0
        return {
            "PA": PA, "PB": PB, "PC": PC, "Q_pump": self.q_pump,
            "Q1": Q1, "Q2": Q2, "Q3": Q3, "Q4": Q4, "F_ext": F,
            "pump_W": pump_W,
            "accA_W": PA * qA, "accB_W": PB * qB, "accC_W": PC * qC,
            "fluid_W": P2 * (q_up_in - Av) + P3 * (q_low_in + Av),
            "friction_W": Fs * v,
            "valve_W": (PA - P3) * Q1 + (PC - P3) * Q2 + (P2 - PB) * Q3 + (P2 - P3) * Q4,
            "ext_W": F * v,
        }


def _rk4(f, t, x, dt):
    k1 = f(t, x)
    x2 = tuple(xi + 0.5 * dt * ki for xi, ki in zip(x, k1))
    k2 = f(t + 0.5 * dt, x2)
    x3 = tuple(xi + 0.5 * dt * ki for xi, ki in zip(x, k2))
    k3 = f(t + 0.5 * dt, x3)
    x4 = tuple(xi + dt * ki for xi, ki in zip(x, k3))
    k4 = f(t + dt, x4)
    return tuple(xi + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
                 for xi, a, b, c, d in zip(x, k1, k2, k3, k4))


def _advance(circuit: _Circuit, state_vec, t, dt, stroke, mass):
    """One RK4 step plus inelastic end stops.  Returns (vector, impact_loss_J)."""
    x = list(_rk4(circuit, t, state_vec, dt))
    loss = 0.0
    if x[0] < 0.0 or x[0] > stroke:
        x[0] = min(max(x[0], 0.0), stroke)
        if (x[0] == 0.0 and x[1] < 0.0) or (x[0] == stroke and x[1] > 0.0):
            loss = 0.5 * mass * x[1] ** 2
            x[1] = 0.0
    return tuple(x), loss


def step(state: HydraulicState, phase: GaitPhase, valves: PhaseValveConfig, F_A: ExternalForce,
         dt: float, config: HydraulicConfig) -> HydraulicState:
    """Advance ``state`` by one RK4 step under ``phase``'s valve topology.

    ``F_A`` is the external force on the piston in the fixed frame, either a
    constant or a callable ``(t, y, v) -> N``.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    circuit = _Circuit(config, phase, valves, _as_force(F_A))
    x, _ = _advance(circuit, state.vector(), state.t, dt,
                    config.cylinder.stroke, config.cylinder.moving_mass)
    return state.with_vector(x, state.t + dt)


@dataclass
class TimeSeries:
    """Per-step record of a simulated cycle.

    Every ``*_W`` channel is an instantaneous power; together they satisfy
    ``pump_W + ext_W = accA_W + accB_W + accC_W + fluid_W + friction_W
    + valve_W + m*a*v`` at each sample.
    """

    t: np.ndarray
    phase: list
    y: np.ndarray
    v: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    PA: np.ndarray
    PB: np.ndarray
    PC: np.ndarray
    Q_pump: np.ndarray
    pump_W: np.ndarray
    accA_W: np.ndarray
    accB_W: np.ndarray
    accC_W: np.ndarray
    fluid_W: np.ndarray
    friction_W: np.ndarray
    valve_W: np.ndarray
    ext_W: np.ndarray
    moving_mass: float = 1.0
    impact_loss: float = 0.0
    y_cmd: np.ndarray | None = None
    F_ext: np.ndarray | None = None
    gas_volume: dict = field(default_factory=dict)

    POWER_CHANNELS = ("pump_W", "accA_W", "accB_W", "accC_W", "fluid_W",
                      "friction_W", "valve_W", "ext_W")

    @classmethod
    def from_arrays(cls, t, phase=None, moving_mass=1.0, **channels) -> "TimeSeries":
        """Build a series from whichever channels are given; the rest are zero."""
        t = np.asarray(t, dtype=float)
        zeros = np.zeros_like(t)
        kw = {}
        for name in ("y", "v", "P2", "P3", "PA", "PB", "PC", "Q_pump") + cls.POWER_CHANNELS:
            kw[name] = np.asarray(channels.pop(name, zeros), dtype=float) * np.ones_like(t)
        if phase is None:
            phase = [GaitPhase.CP] * len(t)
        return cls(t=t, phase=list(phase), moving_mass=moving_mass, **kw, **channels)

    def __len__(self):
        return len(self.t)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TIMESERIES_HEADER)
            cols = (self.t, self.y, self.v, self.P2, self.P3, self.PA, self.PB, self.PC,
                    self.Q_pump, self.pump_W, self.accA_W, self.accC_W)
            for i in range(len(self.t)):
                row = [repr(float(self.t[i])), GaitPhase(self.phase[i]).value]
                row.extend(repr(float(c[i])) for c in cols[1:])
                w.writerow(row)


@dataclass(frozen=True)
class EnergyReport:
    """Cycle energy ledger in joules.

    ``stored_*`` are net energy taken up by each accumulator gas (negative
    when it ends the cycle emptier), ``stored_fluid`` is the net chamber
    oil compression energy and ``kinetic`` the change of piston kinetic
    energy.  ``recovered_gravity`` is work done by the wearer on the piston,
    ``net_output`` work the piston does on the wearer.
    """

    pump_input: float = 0.0
    stored_A: float = 0.0
    stored_C: float = 0.0
    recovered_gravity: float = 0.0
    released_PP: float = 0.0
    friction_loss: float = 0.0
    valve_loss: float = 0.0
    net_output: float = 0.0
    stored_B: float = 0.0
    stored_fluid: float = 0.0
    kinetic: float = 0.0

    @property
    def energy_in(self) -> float:
        return self.pump_input + self.recovered_gravity

    @property
    def closure_residual(self) -> float:
        out = (self.stored_A + self.stored_B + self.stored_C + self.stored_fluid + self.kinetic
               + self.net_output + self.friction_loss + self.valve_loss)
        return self.energy_in - out

    @property
    def relative_closure(self) -> float:
        scale = self.energy_in
        if scale == 0.0:
            return 0.0 if self.closure_residual == 0.0 else math.inf
        return abs(self.closure_residual) / scale

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["closure_residual"] = self.closure_residual
        d["relative_closure"] = self.relative_closure
        return d


def _trapz(y, t) -> float:
    if len(t) < 2:
        return 0.0
    return float(np.trapezoid(y, t))


def energy_audit(series: TimeSeries) -> EnergyReport:
    """Trapezoidal integration of each power channel of ``series``."""
    t = series.t
    if len(t) < 2:
        return EnergyReport()
    ext = series.ext_W
    pp = np.array([GaitPhase(p) == GaitPhase.PP for p in series.phase])
    release = np.where(pp, -(series.accA_W + series.accC_W), 0.0)
    kinetic = 0.5 * series.moving_mass * (float(series.v[-1]) ** 2 - float(series.v[0]) ** 2)
    return EnergyReport(
        pump_input=_trapz(series.pump_W, t),
        stored_A=_trapz(series.accA_W, t),
        stored_C=_trapz(series.accC_W, t),
        recovered_gravity=_trapz(np.maximum(ext, 0.0), t),
        released_PP=_trapz(release, t),
        friction_loss=_trapz(series.friction_W, t) + series.impact_loss,
        valve_loss=_trapz(series.valve_W, t),
        net_output=_trapz(np.maximum(-ext, 0.0), t),
        stored_B=_trapz(series.accB_W, t),
        stored_fluid=_trapz(series.fluid_W, t),
        kinetic=kinetic,
    )


class _UniformInterp:
    """Linear interpolation on t_frac in [0, 1] with a fast path for uniform grids."""

    def __init__(self, t_frac, values):
        self.t = np.asarray(t_frac, dtype=float)
        self.vals = np.asarray(values, dtype=float)
        n = len(self.t) - 1
        self.uniform = n > 0 and np.allclose(self.t, np.linspace(0.0, 1.0, n + 1), rtol=0, atol=1e-12)
        self.n = n
        self.list = self.vals.tolist()

    def __call__(self, tf: float) -> float:
        if not self.uniform:
            return float(np.interp(tf, self.t, self.vals))
        s = min(max(tf, 0.0), 1.0) * self.n
        i = min(int(s), self.n - 1)
        w = s - i
        return self.list[i] + w * (self.list[i + 1] - self.list[i])


def coupled_load(load: CylinderLoad, config: HydraulicConfig):
    """External piston force ``(t, y, v) -> N`` plus commanded position and
    velocity callables of time."""
    T = config.cadence_s
    force = _UniformInterp(load.t_frac, load.force)
    pos = _UniformInterp(load.t_frac, load.position)
    vel = _UniformInterp(load.t_frac, time_derivative(load.position, load.t_frac * T))
    k, c = config.coupling.stiffness, config.coupling.damping

    def F(t, y, v):
        tf = t / T
        return -force(tf) + k * (pos(tf) - y) + c * (vel(tf) - v)

    return F, (lambda t: pos(t / T)), (lambda t: vel(t / T))


@dataclass
class SimulationResult:
    series: TimeSeries
    report: EnergyReport
    final_state: HydraulicState


def simulate_cycle(config: HydraulicConfig, load: CylinderLoad, n_steps: int | None = None,
                   min_steps: int = 1000) -> SimulationResult:
    """Integrate one gait cycle and audit its energy."""
    n = int(config.n_steps if n_steps is None else n_steps)
    if n < min_steps:
        raise ValueError(f"n_steps must be at least {min_steps}, got {n}")
    if load.t_frac[0] > 0.0 or load.t_frac[-1] < 1.0:
        raise ValueError("load series must cover the whole cycle")
    T = config.cadence_s
    dt = T / n
    cyl = config.cylinder
    F, y_cmd, v_cmd = coupled_load(load, config)
    y0 = min(max(y_cmd(0.0), 0.0), cyl.stroke)
    state = initial_state(config, y0, v_cmd(0.0))
    circuits = {p: _Circuit(config, p, config.phase_valve_table, F) for p in GaitPhase}

    names = ("PA", "PB", "PC", "Q_pump", "F_ext") + TimeSeries.POWER_CHANNELS
    rec = {k: np.empty(n + 1) for k in names + ("y", "v", "P2", "P3", "VA", "VB", "VC", "y_cmd")}
    phases = []
    x = state.vector()
    impact = 0.0

    def record(i, t, x, circuit):
        d = circuit.diagnostics(t, x)
        for key in names:
            rec[key][i] = d[key]
        for key, val in zip(("y", "v", "P2", "P3", "VA", "VB", "VC"), x):
            rec[key][i] = val
        rec["y_cmd"][i] = y_cmd(t)
        phases.append(circuit.phase)

    t = 0.0
    for i in range(n):
        t = i * dt
        phase = phase_at(t / T, config.phase_bounds)
        circuit = circuits[phase]
        try:
            record(i, t, x, circuit)
            x, loss = _advance(circuit, x, t, dt, cyl.stroke, cyl.moving_mass)
        except (ChamberVolumeError, AccumulatorError, OverflowError, ZeroDivisionError) as exc:
            raise SimulationError(f"step {i} ({phase.value}, t={t:.6f} s): {exc}") from exc
        impact += loss
        if not all(math.isfinite(xi) for xi in x):
            raise SimulationError(f"step {i} ({phase.value}, t={t:.6f} s): non-finite state {x}")
        if x[2] < 0.0 or x[3] < 0.0:
            raise SimulationError(
                f"step {i} ({phase.value}, t={t:.6f} s): negative chamber pressure "
                f"(P2={x[2]:.4g}, P3={x[3]:.4g})")
        for j, name in ((4, "A"), (5, "B"), (6, "C")):
            cap = config.accumulators[name].capacity
            if x[j] > cap * (1.0 + 1e-12):
                raise SimulationError(
                    f"step {i} ({phase.value}, t={t:.6f} s): accumulator {name} over-discharged")
            if x[j] <= 0.0:
                raise SimulationError(
                    f"step {i} ({phase.value}, t={t:.6f} s): accumulator {name} over-charged")
    t_end = n * dt
    record(n, t_end, x, circuits[phase_at(1.0, config.phase_bounds)])

    series = TimeSeries(
        t=np.arange(n + 1) * dt, phase=phases,
        y=rec["y"], v=rec["v"], P2=rec["P2"], P3=rec["P3"],
        PA=rec["PA"], PB=rec["PB"], PC=rec["PC"], Q_pump=rec["Q_pump"],
        pump_W=rec["pump_W"], accA_W=rec["accA_W"], accB_W=rec["accB_W"],
        accC_W=rec["accC_W"], fluid_W=rec["fluid_W"], friction_W=rec["friction_W"],
        valve_W=rec["valve_W"], ext_W=rec["ext_W"],
        moving_mass=cyl.moving_mass, impact_loss=impact,
        y_cmd=rec["y_cmd"], F_ext=rec["F_ext"],
        gas_volume={"A": rec["VA"], "B": rec["VB"], "C": rec["VC"]},
    )
    final = state.with_vector(x, t_end)
    return SimulationResult(series, energy_audit(series), final)


def displacement_correlation(series: TimeSeries) -> float:
    """Pearson correlation between simulated and commanded piston position."""
    return float(np.corrcoef(series.y, series.y_cmd)[0, 1])
