"""motesim: deterministic discrete-event simulation of dual-radio LPWAN motes.

A mote couples a LoRa main transceiver with a micro-watt OOK wake-up
receiver. The package models the physical layer (airtime, link budget),
a shared propagation medium with capture, the composite node power state
machine with an exact energy ledger, a minimal single-hop unicast stack,
and a reproducible event engine with coverage and power-profiling
experiment presets.
"""

from .channel import (ChannelParams, Position, ReceptionOutcome, Transmission,
                      noise_floor_dbm, resolve_concurrent, rssi_at, snr_of)
from .engine import Simulator, power_profile, range_sweep, run
from .errors import (ConfigError, ContractViolation, IllegalTransition,
                     MotesimError, PayloadTooLarge, RadioUnavailable,
                     ScenarioError, TableEntryMissing, ZeroDistanceError)
from .frame import Frame
from .node import (DEFAULT_POWER_TABLE_W, EnergyLedger, MoteDevice,
                   NodeEvent, NodeEventKind, power_report)
from .phy import (RadioConfig, ReceptionDecision, SensitivityTable,
                  airtime_s, payload_symbol_count, reception_margin,
                  time_on_air, tx_energy)
from .report import RunMetrics, emit, emit_sweep
from .scenario import (Scenario, load, power_profile_scenario,
                       range_point_scenario, scenario_hash)
from .stack import (RadioDriver, Unicast, UnicastMessage, decode_message,
                    encode_message)
from .wurx import (WakeUpFrame, WurxState, ook_tx_energy, receive_wub,
                   send_wub, wub_airtime)

__version__ = "0.1.0"

__all__ = [
    "ChannelParams", "Position", "ReceptionOutcome", "Transmission",
    "noise_floor_dbm", "resolve_concurrent", "rssi_at", "snr_of",
    "Simulator", "power_profile", "range_sweep", "run",
    "ConfigError", "ContractViolation", "IllegalTransition", "MotesimError",
    "PayloadTooLarge", "RadioUnavailable", "ScenarioError",
    "TableEntryMissing", "ZeroDistanceError",
    "Frame",
    "DEFAULT_POWER_TABLE_W", "EnergyLedger", "MoteDevice", "NodeEvent",
    "NodeEventKind", "power_report",
    "RadioConfig", "ReceptionDecision", "SensitivityTable", "airtime_s",
    "payload_symbol_count", "reception_margin", "time_on_air", "tx_energy",
    "RunMetrics", "emit", "emit_sweep",
    "Scenario", "load", "power_profile_scenario", "range_point_scenario",
    "scenario_hash",
    "RadioDriver", "Unicast", "UnicastMessage", "decode_message",
    "encode_message",
    "WakeUpFrame", "WurxState", "ook_tx_energy", "receive_wub", "send_wub",
    "wub_airtime",
    "__version__",
]
