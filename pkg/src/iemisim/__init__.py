"""Simulator for electromagnetic sensor-spoofing attacks on switched-mode
power converters, battery chargers, and the batteries behind them."""

from .battery import BatteryHealth, BatteryState, OcvCurve, charge_current, step, terminal_voltage
from .charger import ChargerConfig, ChargerPhase, charger_step
from .core import (
    AdjustableDivider,
    AttackSource,
    BatteryLoad,
    BatterySimRig,
    ConstantCurrent,
    ConstantResistance,
    ConstantVoltage,
    ConverterSpec,
    CurrentSense,
    FeedbackNetwork,
    FixedDividerAdjustableRef,
    LimitingMode,
    LoadModel,
    Open,
    OperatingPoint,
    Topology,
    ZenerDrop,
    validate_spec,
)
from .coupling import (
    CouplingProfile,
    InjectionPoint,
    ResonancePeak,
    attack_offset,
    calibrate_kappa,
    demodulated_offset,
    kappa_at,
    received_power,
)
from .equilibrium import (
    NoOperatingPoint,
    RegulationCommand,
    ShutdownSignal,
    measure,
    perceived_value,
    regulated_setpoint,
    solve_operating_point,
)
from .protection import (
    AttackDetector,
    LowPassFilterModel,
    MonitorVerdict,
    PptcFuse,
    RedundantMonitor,
    filter_attenuation,
    monitor_step,
    pptc_step,
    thermal_fuse,
)
from .scenario import (
    AttackStep,
    CalibrationAmbiguous,
    CalibrationTarget,
    CalibrationUnreachable,
    Scenario,
    ScenarioRecord,
    SweepSpec,
    SweepVariable,
    calibrate_scenario,
    run_charging_attack,
    run_distance_sweep,
    run_frequency_sweep,
    run_power_sweep,
    run_sweep,
    run_timeline,
)

__version__ = "0.1.0"
