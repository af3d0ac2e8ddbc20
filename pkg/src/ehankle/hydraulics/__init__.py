"""Lumped-parameter hydraulic circuit of the ankle prosthesis."""

from .circuit import (
    TIMESERIES_HEADER,
    EnergyReport,
    HydraulicState,
    SimulationResult,
    TimeSeries,
    coupled_load,
    displacement_correlation,
    energy_audit,
    initial_state,
    simulate_cycle,
    step,
)
from .components import (
    BAR,
    AccumulatorError,
    AccumulatorState,
    ChamberVolumeError,
    CylinderParams,
    FluidProps,
    PumpParams,
    SimulationError,
    ValveParams,
    accumulator_power,
    accumulator_update,
    chamber_pressure_rate,
    cylinder_accel,
    delivered_pump_flow,
    friction_force,
    gas_energy,
    orifice_flow,
    phase_frame,
    pump_flow,
    pump_power,
)
from .config import (
    AccumulatorParams,
    BodyCoupling,
    HydraulicConfig,
    PhaseValveConfig,
    PhaseValves,
    load_config,
)

__all__ = [name for name in dir() if not name.startswith("_")]
