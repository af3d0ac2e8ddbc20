"""Circuit configuration: component parameters, valve schedule, JSON I/O."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

from ..gait import GaitPhase, LinkageMap, PhaseBounds
from .components import (
    BAR,
    AccumulatorState,
    CylinderParams,
    FluidProps,
    PumpParams,
    ValveParams,
)

VALVE_IDS = (1, 2, 3, 4)
ACCUMULATOR_IDS = ("A", "B", "C")

# Valve connections, flow counted positive from the first node to the second.
VALVE_PORTS = {
    1: ("A", "lower"),      # high-pressure accumulator -> lower chamber
    2: ("C", "lower"),      # recovery accumulator <-> lower chamber
    3: ("upper", "B"),      # upper chamber <-> low-pressure accumulator
    4: ("upper", "lower"),  # chamber cross-connection
}


@dataclass(frozen=True)
class AccumulatorParams:
    capacity: float
    precharge: float
    initial_pressure: float
    polytropic_n: float = 1.4

    def __post_init__(self):
        if self.initial_pressure < self.precharge:
            raise ValueError("accumulator initial pressure below precharge")

    def initial_state(self) -> AccumulatorState:
        return AccumulatorState.from_pressure(
            self.capacity, self.precharge, self.polytropic_n, self.initial_pressure)


@dataclass(frozen=True)
class PhaseValves:
    open: tuple[bool, bool, bool, bool]
    pump: bool

    def __post_init__(self):
        if len(self.open) != 4:
            raise ValueError("a phase entry needs exactly four valve flags")
        object.__setattr__(self, "open", tuple(bool(x) for x in self.open))


@dataclass(frozen=True)
class PhaseValveConfig:
    """Valve open/closed flags and pump engagement for each gait phase."""

    table: Mapping[GaitPhase, PhaseValves]

    def __post_init__(self):
        table = {GaitPhase(k): v for k, v in dict(self.table).items()}
        if set(table) != set(GaitPhase):
            raise ValueError("phase valve table needs exactly one entry per phase")
        object.__setattr__(self, "table", table)

    def __getitem__(self, phase: GaitPhase) -> PhaseValves:
        return self.table[GaitPhase(phase)]

    @classmethod
    def default(cls) -> "PhaseValveConfig":
        return cls({
            GaitPhase.CP: PhaseValves((False, False, True, True), True),
            GaitPhase.CD: PhaseValves((False, True, True, False), True),
            GaitPhase.PP: PhaseValves((True, True, True, False), True),
            GaitPhase.SW: PhaseValves((False, False, True, True), True),
        })

    @classmethod
    def all_closed(cls, pump: bool = False) -> "PhaseValveConfig":
        entry = PhaseValves((False,) * 4, pump)
        return cls({p: entry for p in GaitPhase})

    def to_dict(self) -> dict:
        return {p.value: {"valves": list(self.table[p].open), "pump": self.table[p].pump}
                for p in GaitPhase}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PhaseValveConfig":
        return cls({GaitPhase(k): PhaseValves(tuple(v["valves"]), bool(v["pump"]))
                    for k, v in d.items()})


@dataclass(frozen=True)
class BodyCoupling:
    """Compliant link through which the wearer imposes the gait kinematics
    on the piston (residual limb, socket and linkage compliance)."""

    stiffness: float = 1.0e6
    damping: float = 2.0e3

    def __post_init__(self):
        if self.stiffness < 0.0 or self.damping < 0.0:
            raise ValueError("coupling stiffness and damping must be non-negative")


def _default_valves():
    return {i: ValveParams(0.76e-3, 0.7, normally_open=i in (3, 4), transition_pressure=2.0e5)
            for i in VALVE_IDS}


def _default_accumulators():
    return {
        "A": AccumulatorParams(1.3e-5, 80 * BAR, 120 * BAR),
        "B": AccumulatorParams(1.3e-4, 20 * BAR, 25 * BAR),
        "C": AccumulatorParams(1.3e-5, 70 * BAR, 75 * BAR),
    }


@dataclass(frozen=True)
class HydraulicConfig:
    cadence_s: float
    fluid: FluidProps = field(default_factory=FluidProps)
    cylinder: CylinderParams = field(default_factory=CylinderParams)
    pump: PumpParams = field(default_factory=PumpParams)
    valves: Mapping[int, ValveParams] = field(default_factory=_default_valves)
    accumulators: Mapping[str, AccumulatorParams] = field(default_factory=_default_accumulators)
    phase_bounds: PhaseBounds = field(default_factory=PhaseBounds)
    phase_valve_table: PhaseValveConfig = field(default_factory=PhaseValveConfig.default)
    n_steps: int = 20000
    linkage: LinkageMap = field(default_factory=LinkageMap)
    coupling: BodyCoupling = field(default_factory=BodyCoupling)

    def __post_init__(self):
        if not self.cadence_s > 0.0:
            raise ValueError("cadence_s must be positive")
        valves = {int(k): v for k, v in dict(self.valves).items()}
        if set(valves) != set(VALVE_IDS):
            raise ValueError("valves must define ids 1, 2, 3 and 4")
        accs = dict(self.accumulators)
        if set(accs) != set(ACCUMULATOR_IDS):
            raise ValueError("accumulators must define A, B and C")
        object.__setattr__(self, "valves", valves)
        object.__setattr__(self, "accumulators", accs)
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    @classmethod
    def table1(cls, cadence_s: float = 1.2, n_steps: int = 20000) -> "HydraulicConfig":
        return cls(cadence_s=cadence_s, n_steps=n_steps)

    def to_dict(self) -> dict:
        return {
            "cadence_s": self.cadence_s,
            "n_steps": self.n_steps,
            "fluid": asdict(self.fluid),
            "cylinder": asdict(self.cylinder),
            "pump": asdict(self.pump),
            "valves": {str(k): asdict(v) for k, v in sorted(self.valves.items())},
            "accumulators": {k: asdict(v) for k, v in sorted(self.accumulators.items())},
            "phase_bounds": asdict(self.phase_bounds),
            "phase_valve_table": self.phase_valve_table.to_dict(),
            "linkage": asdict(self.linkage),
            "coupling": asdict(self.coupling),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "HydraulicConfig":
        """Build from a JSON-style mapping; absent sections take the reference defaults."""
        if "cadence_s" not in d:
            raise ValueError("config must state cadence_s (no default cycle duration)")
        kw = {"cadence_s": float(d["cadence_s"])}
        if "n_steps" in d:
            kw["n_steps"] = int(d["n_steps"])
        simple = {"fluid": FluidProps, "cylinder": CylinderParams, "pump": PumpParams,
                  "phase_bounds": PhaseBounds, "linkage": LinkageMap, "coupling": BodyCoupling}
        for key, typ in simple.items():
            if key in d:
                kw[key] = typ(**d[key])
        if "valves" in d:
            valves = _default_valves()
            valves.update({int(k): ValveParams(**v) for k, v in d["valves"].items()})
            kw["valves"] = valves
        if "accumulators" in d:
            accs = _default_accumulators()
            accs.update({k: AccumulatorParams(**v) for k, v in d["accumulators"].items()})
            kw["accumulators"] = accs
        if "phase_valve_table" in d:
            kw["phase_valve_table"] = PhaseValveConfig.from_dict(d["phase_valve_table"])
        return cls(**kw)


def load_config(path) -> HydraulicConfig:
    with Path(path).open(encoding="utf-8") as fh:
        return HydraulicConfig.from_dict(json.load(fh))
