"""Scenario definition: schema, YAML loading, validation, presets.

A scenario file is YAML with five sections (sim, radio, channel, nodes,
app). Unknown keys anywhere are rejected to catch typos. The same
dataclasses are built programmatically by the experiment presets, so the
CLI presets and file-driven runs share one validation path.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .channel import ChannelParams, Position
from .errors import ScenarioError
from .node import DEFAULT_MCU_WAKEUP_NS, DEFAULT_RADIO_TURN_ON_NS
from .phy import LINK_HEADER_BYTES, NS_PER_S, RadioConfig, time_on_air

SCENARIO_FORMAT_VERSION = 1

ROLES = ("bs", "mote", "initiator", "sleeper")
APP_KINDS = ("periodic", "wakeup_exchange", "none")


@dataclass(frozen=True)
class WurxSpec:
    address: int
    sensitivity_dbm: float = -50.0
    bit_rate_bps: float = 1000.0
    preamble_bits: int = 8
    listen_power_w: float = 1.8e-6
    decode_power_w: float = 284e-6


@dataclass(frozen=True)
class NodeSpec:
    address: int
    role: str
    position: Position
    power_w: dict = field(default_factory=dict)
    wurx: WurxSpec | None = None
    battery_j: float = 1.0e4
    harvest_rate_w: float = 0.0
    harvest_efficiency: float = 0.90
    mcu_wakeup_ns: int = DEFAULT_MCU_WAKEUP_NS
    radio_turn_on_ns: int = DEFAULT_RADIO_TURN_ON_NS


@dataclass(frozen=True)
class AppSpec:
    kind: str
    src: int | None = None
    dst: int | None = None
    payload_len: int = 16
    period_ns: int = 10 * NS_PER_S
    initiator: int | None = None
    target: int | None = None
    cycles: int = 10
    cycle_period_ns: int = NS_PER_S
    linger_ns: int = 10_000_000
    rx_timeout_ns: int = NS_PER_S


@dataclass(frozen=True)
class Scenario:
    horizon_ns: int
    seed: int
    radio: RadioConfig
    channel: ChannelParams
    nodes: tuple
    app: AppSpec

    def node(self, address: int) -> NodeSpec:
        for spec in self.nodes:
            if spec.address == address:
                return spec
        raise ScenarioError(f"no node with address {address}")


def _require_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ScenarioError(
            f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _get(section: dict, key: str, kind, where: str, default=None,
         required: bool = False):
    if key not in section:
        if required:
            raise ScenarioError(f"missing required key {where}.{key}")
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ScenarioError(
            f"{where}.{key} must be {getattr(kind, '__name__', kind)}, "
            f"got {type(value).__name__}")
    return value


def _s_to_ns(seconds: float) -> int:
    return round(seconds * NS_PER_S)


def _parse_position(raw, where: str) -> Position:
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where} must be a mapping with x, y, z")
    _require_keys(raw, {"x", "y", "z"}, where)
    return Position(x=_get(raw, "x", float, where, 0.0),
                    y=_get(raw, "y", float, where, 0.0),
                    z=_get(raw, "z", float, where, 0.0))


def _parse_wurx(raw, where: str) -> WurxSpec:
    _require_keys(raw, {"address", "sensitivity_dbm", "bit_rate_bps",
                        "preamble_bits", "listen_power_w", "decode_power_w"},
                  where)
    return WurxSpec(
        address=_get(raw, "address", int, where, required=True),
        sensitivity_dbm=_get(raw, "sensitivity_dbm", float, where, -50.0),
        bit_rate_bps=_get(raw, "bit_rate_bps", float, where, 1000.0),
        preamble_bits=_get(raw, "preamble_bits", int, where, 8),
        listen_power_w=_get(raw, "listen_power_w", float, where, 1.8e-6),
        decode_power_w=_get(raw, "decode_power_w", float, where, 284e-6),
    )


_POWER_KEYS = {
    "sleep_w": "sleep", "wurx_decode_w": "wurx_decode",
    "lora_tx_w": "lora_tx", "lora_rx_w": "lora_rx",
    "mcu_active_w": "mcu_active",
}


def _parse_node(raw, index: int) -> NodeSpec:
    where = f"nodes[{index}]"
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where} must be a mapping")
    _require_keys(raw, {"address", "role", "position", "power", "wurx",
                        "battery_j", "harvest_rate_w", "harvest_efficiency",
                        "radio_turn_on_ms", "mcu_wakeup_latency_us"}, where)
    role = _get(raw, "role", str, where, required=True)
    if role not in ROLES:
        raise ScenarioError(f"{where}.role must be one of {ROLES}, got {role!r}")
    address = _get(raw, "address", int, where, required=True)
    if not 0 <= address <= 0xFFFF:
        raise ScenarioError(f"{where}.address must fit in 16 bits")
    power = {}
    if "power" in raw:
        _require_keys(raw["power"], set(_POWER_KEYS), f"{where}.power")
        for key, label in _POWER_KEYS.items():
            if key in raw["power"]:
                power[label] = _get(raw["power"], key, float, f"{where}.power")
    wurx = _parse_wurx(raw["wurx"], f"{where}.wurx") if "wurx" in raw else None
    if role == "sleeper" and wurx is None:
        raise ScenarioError(f"{where}: role 'sleeper' requires a wurx block")
    return NodeSpec(
        address=address,
        role=role,
        position=_parse_position(raw["position"], f"{where}.position")
        if "position" in raw else Position(),
        power_w=power,
        wurx=wurx,
        battery_j=_get(raw, "battery_j", float, where, 1.0e4),
        harvest_rate_w=_get(raw, "harvest_rate_w", float, where, 0.0),
        harvest_efficiency=_get(raw, "harvest_efficiency", float, where, 0.90),
        mcu_wakeup_ns=_s_to_ns(_get(raw, "mcu_wakeup_latency_us", float,
                                    where, 7.0) * 1e-6),
        radio_turn_on_ns=_s_to_ns(_get(raw, "radio_turn_on_ms", float,
                                       where, 1.0) * 1e-3),
    )


def _parse_radio(raw) -> RadioConfig:
    where = "radio"
    _require_keys(raw, {"frequency_hz", "spreading_factor", "bandwidth_hz",
                        "coding_rate", "tx_power_dbm", "preamble_symbols",
                        "explicit_header", "crc_on", "low_data_rate_optimize"},
                  where)
    try:
        return RadioConfig(
            frequency_hz=_get(raw, "frequency_hz", float, where, 868e6),
            spreading_factor=_get(raw, "spreading_factor", int, where, 12),
            bandwidth_hz=_get(raw, "bandwidth_hz", int, where, 500_000),
            coding_rate=_get(raw, "coding_rate", int, where, 6),
            tx_power_dbm=_get(raw, "tx_power_dbm", float, where, 14.0),
            preamble_symbols=_get(raw, "preamble_symbols", int, where, 8),
            explicit_header=_get(raw, "explicit_header", bool, where, True),
            crc_on=_get(raw, "crc_on", bool, where, True),
            low_data_rate_optimize=_get(raw, "low_data_rate_optimize", bool,
                                        where, False),
        )
    except Exception as exc:
        raise ScenarioError(f"radio: {exc}") from exc


def _parse_channel(raw) -> ChannelParams:
    where = "channel"
    _require_keys(raw, {"path_loss_exponent", "reference_loss_at_1m_db",
                        "shadowing_sigma_db", "noise_figure_db",
                        "capture_threshold_db"}, where)
    try:
        return ChannelParams(
            path_loss_exponent=_get(raw, "path_loss_exponent", float,
                                    where, 3.70),
            reference_loss_at_1m_db=_get(raw, "reference_loss_at_1m_db",
                                         float, where, 31.2),
            shadowing_sigma_db=_get(raw, "shadowing_sigma_db", float,
                                    where, 0.0),
            noise_figure_db=_get(raw, "noise_figure_db", float, where, 6.0),
            capture_threshold_db=_get(raw, "capture_threshold_db", float,
                                      where, 6.0),
        )
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"channel: {exc}") from exc


def _parse_app(raw) -> AppSpec:
    where = "app"
    _require_keys(raw, {"kind", "src", "dst", "payload_len", "period_s",
                        "initiator", "target", "cycles", "cycle_period_s",
                        "linger_ms", "rx_timeout_ms"}, where)
    kind = _get(raw, "kind", str, where, required=True)
    if kind not in APP_KINDS:
        raise ScenarioError(f"app.kind must be one of {APP_KINDS}, got {kind!r}")
    return AppSpec(
        kind=kind,
        src=_get(raw, "src", int, where),
        dst=_get(raw, "dst", int, where),
        payload_len=_get(raw, "payload_len", int, where, 16),
        period_ns=_s_to_ns(_get(raw, "period_s", float, where, 10.0)),
        initiator=_get(raw, "initiator", int, where),
        target=_get(raw, "target", int, where),
        cycles=_get(raw, "cycles", int, where, 10),
        cycle_period_ns=_s_to_ns(_get(raw, "cycle_period_s", float, where, 1.0)),
        linger_ns=_s_to_ns(_get(raw, "linger_ms", float, where, 10.0) * 1e-3),
        rx_timeout_ns=_s_to_ns(_get(raw, "rx_timeout_ms", float, where,
                                    1000.0) * 1e-3),
    )


def validate(scenario: Scenario) -> None:
    """Cross-field checks shared by file loads and presets."""
    if scenario.horizon_ns <= 0:
        raise ScenarioError("sim.horizon_s must be > 0")
    if not scenario.nodes:
        raise ScenarioError("nodes: at least one node is required")
    addresses = [n.address for n in scenario.nodes]
    if len(addresses) != len(set(addresses)):
        raise ScenarioError("nodes: addresses must be unique")
    if not 0 <= scenario.seed < 2 ** 64:
        raise ScenarioError("sim.seed must fit in 64 bits")
    app = scenario.app
    if app.kind == "periodic":
        if app.src is None or app.dst is None:
            raise ScenarioError("app: periodic requires src and dst")
        if app.src not in addresses or app.dst not in addresses:
            raise ScenarioError("app: src and dst must be node addresses")
        frame_airtime = time_on_air(
            scenario.radio, app.payload_len + LINK_HEADER_BYTES)
        if app.period_ns <= frame_airtime:
            raise ScenarioError(
                f"app.period_s must exceed the frame airtime "
                f"({frame_airtime / NS_PER_S:.6f} s)")
        if scenario.node(app.src).role not in ("mote", "bs"):
            raise ScenarioError("app.src must be a mote or bs node")
    elif app.kind == "wakeup_exchange":
        if app.initiator is None or app.target is None:
            raise ScenarioError("app: wakeup_exchange requires initiator "
                                "and target")
        if app.initiator not in addresses or app.target not in addresses:
            raise ScenarioError("app: initiator and target must be node "
                                "addresses")
        target = scenario.node(app.target)
        if target.wurx is None:
            raise ScenarioError("app.target must carry a wurx block")
        if app.cycles < 0:
            raise ScenarioError("app.cycles must be >= 0")
        wub_ns = round((target.wurx.preamble_bits + 8)
                       / target.wurx.bit_rate_bps * NS_PER_S)
        exchange_ns = (wub_ns + target.mcu_wakeup_ns + target.radio_turn_on_ns
                       + time_on_air(scenario.radio,
                                     app.payload_len + LINK_HEADER_BYTES)
                       + app.linger_ns)
        if app.cycle_period_ns <= exchange_ns:
            raise ScenarioError(
                f"app.cycle_period_s must exceed one full exchange "
                f"({exchange_ns / NS_PER_S:.6f} s)")
    if app.payload_len < 0:
        raise ScenarioError("app.payload_len must be >= 0")


def from_dict(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario root must be a mapping")
    _require_keys(raw, {"sim", "radio", "channel", "nodes", "app"}, "scenario")
    for section in ("sim", "nodes", "app"):
        if section not in raw:
            raise ScenarioError(f"missing required section '{section}'")
    sim = raw["sim"]
    _require_keys(sim, {"horizon_s", "seed"}, "sim")
    if not isinstance(raw["nodes"], list):
        raise ScenarioError("nodes must be a list")
    scenario = Scenario(
        horizon_ns=_s_to_ns(_get(sim, "horizon_s", float, "sim", required=True)),
        seed=_get(sim, "seed", int, "sim", 0),
        radio=_parse_radio(raw.get("radio") or {}),
        channel=_parse_channel(raw.get("channel") or {}),
        nodes=tuple(_parse_node(n, i) for i, n in enumerate(raw["nodes"])),
        app=_parse_app(raw["app"]),
    )
    validate(scenario)
    return scenario


def load(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario file is not valid YAML: {exc}") from exc
    return from_dict(raw)


def canonical_dict(scenario: Scenario) -> dict:
    """Stable, JSON-serialisable view used for hashing and report headers."""
    return {
        "format_version": SCENARIO_FORMAT_VERSION,
        "sim": {"horizon_ns": scenario.horizon_ns, "seed": scenario.seed},
        "radio": {
            "frequency_hz": scenario.radio.frequency_hz,
            "spreading_factor": scenario.radio.spreading_factor,
            "bandwidth_hz": scenario.radio.bandwidth_hz,
            "coding_rate": scenario.radio.coding_rate,
            "tx_power_dbm": scenario.radio.tx_power_dbm,
            "preamble_symbols": scenario.radio.preamble_symbols,
            "explicit_header": scenario.radio.explicit_header,
            "crc_on": scenario.radio.crc_on,
            "low_data_rate_optimize": scenario.radio.low_data_rate_optimize,
        },
        "channel": {
            "path_loss_exponent": scenario.channel.path_loss_exponent,
            "reference_loss_at_1m_db": scenario.channel.reference_loss_at_1m_db,
            "shadowing_sigma_db": scenario.channel.shadowing_sigma_db,
            "noise_figure_db": scenario.channel.noise_figure_db,
            "capture_threshold_db": scenario.channel.capture_threshold_db,
        },
        "nodes": [
            {
                "address": n.address,
                "role": n.role,
                "position": [n.position.x, n.position.y, n.position.z],
                "power_w": dict(sorted(n.power_w.items())),
                "wurx": None if n.wurx is None else {
                    "address": n.wurx.address,
                    "sensitivity_dbm": n.wurx.sensitivity_dbm,
                    "bit_rate_bps": n.wurx.bit_rate_bps,
                    "preamble_bits": n.wurx.preamble_bits,
                    "listen_power_w": n.wurx.listen_power_w,
                    "decode_power_w": n.wurx.decode_power_w,
                },
                "battery_j": n.battery_j,
                "harvest_rate_w": n.harvest_rate_w,
                "harvest_efficiency": n.harvest_efficiency,
                "mcu_wakeup_ns": n.mcu_wakeup_ns,
                "radio_turn_on_ns": n.radio_turn_on_ns,
            }
            for n in scenario.nodes
        ],
        "app": {
            "kind": scenario.app.kind,
            "src": scenario.app.src,
            "dst": scenario.app.dst,
            "payload_len": scenario.app.payload_len,
            "period_ns": scenario.app.period_ns,
            "initiator": scenario.app.initiator,
            "target": scenario.app.target,
            "cycles": scenario.app.cycles,
            "cycle_period_ns": scenario.app.cycle_period_ns,
            "linger_ns": scenario.app.linger_ns,
            "rx_timeout_ns": scenario.app.rx_timeout_ns,
        },
    }


def scenario_hash(scenario: Scenario) -> str:
    blob = json.dumps(canonical_dict(scenario), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# -- presets -------------------------------------------------------------------

PAPER_RADIO = RadioConfig()  # SF12 / 500 kHz / 4-6 / +14 dBm defaults

DEFAULT_SWEEP_DISTANCES_M = (1.0, 50.0, 100.0, 200.0, 400.0, 600.0,
                             800.0, 1000.0, 1500.0, 2500.0)


def range_point_scenario(distance_m: float, packets: int = 360,
                         period_s: float = 10.0, payload_len: int = 16,
                         seed: int = 1,
                         shadowing_sigma_db: float = 0.0) -> Scenario:
    """Coverage preset: one base station, one mote at ``distance_m``,
    ``packets`` periodic transmissions plus a 1 s guard so the final frame
    can land inside the horizon."""
    if distance_m <= 0:
        raise ScenarioError("distance_m must be > 0")
    if packets < 1:
        raise ScenarioError("packets must be >= 1")
    scenario = Scenario(
        horizon_ns=_s_to_ns(packets * period_s + 1.0),
        seed=seed,
        radio=PAPER_RADIO,
        channel=ChannelParams(shadowing_sigma_db=shadowing_sigma_db),
        nodes=(
            NodeSpec(address=1, role="bs", position=Position()),
            NodeSpec(address=2, role="mote",
                     position=Position(x=distance_m)),
        ),
        app=AppSpec(kind="periodic", src=2, dst=1, payload_len=payload_len,
                    period_ns=_s_to_ns(period_s)),
    )
    validate(scenario)
    return scenario


def power_profile_scenario(cycles: int = 10, cycle_period_s: float = 1.0,
                           payload_len: int = 16, distance_m: float = 2.0,
                           linger_ms: float = 10.0, seed: int = 1,
                           wurx_address: int = 0x2A) -> Scenario:
    """Micro-benchmark preset: an initiator wakes a WuRX-equipped sleeper
    once per cycle and unicasts one payload to it."""
    if cycles < 1:
        raise ScenarioError("cycles must be >= 1")
    scenario = Scenario(
        horizon_ns=_s_to_ns((cycles + 1) * cycle_period_s),
        seed=seed,
        radio=PAPER_RADIO,
        channel=ChannelParams(),
        nodes=(
            NodeSpec(address=1, role="initiator", position=Position()),
            NodeSpec(address=2, role="sleeper",
                     position=Position(x=distance_m),
                     wurx=WurxSpec(address=wurx_address)),
        ),
        app=AppSpec(kind="wakeup_exchange", initiator=1, target=2,
                    payload_len=payload_len, cycles=cycles,
                    cycle_period_ns=_s_to_ns(cycle_period_s),
                    linger_ns=_s_to_ns(linger_ms * 1e-3)),
    )
    validate(scenario)
    return scenario
