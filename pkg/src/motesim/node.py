"""Composite mote model: MCU x main radio x wake-up receiver, plus the
time-integrating energy ledger.

Virtual time is integer nanoseconds throughout, so per-state dwell times sum
exactly to the simulation horizon. Energy is charged modally: at any instant
the mote is in exactly one power label, looked up from the composite state:

    lora_tx / wub_tx  radio transmitting (wub_tx is duty-scaled OOK)
    lora_rx           radio in receive
    mcu_active        MCU awake (radio off/turning on/standby)
    wurx_decode       wake-up receiver decoding while the MCU sleeps
    sleep             MCU in deep sleep, radio off, WuRX listening

The "sleep" label is the mote-level floor (1.83 uW) covering the listening
wake-up receiver and the sleeping MCU together; the attribution between the
two (1.8 uW WuRX + 0.03 uW MCU and leakage) is documentation, not a charged
split. The MCU's datasheet deep-sleep figure (0.3 uA at the 3.0 V supply)
is kept as a named constant for reference.

State machine (states are (mcu, radio); WuRX mode only affects the label):

    state              event / op          next state        side effect
    ------------------ ------------------- ----------------- ------------------
    (sleep, off)       wurx_interrupt      (waking, off)     timer mcu_awake +7us
    (sleep, off)       timer[wake]         (waking, off)     timer mcu_awake +7us
    (waking, off)      timer[mcu_awake]    (active, off)     notify awake
    (active, off)      radio_on()          (active, turning_on)  timer radio_ready
    (active, turning_on) timer[radio_ready] (active, standby) notify radio ready
    (active, standby)  start_rx()          (active, rx)
    (active, standby)  tx_request          (active, tx)
    (active, standby)  begin_wub_tx()      (active, tx)      duty-scaled power
    (active, standby)  radio_off()         (active, off)
    (active, standby)  sleep_request       (sleep, off)
    (active, rx)       tx_request          (active, tx)
    (active, rx)       begin_wub_tx()      (active, tx)      duty-scaled power
    (active, rx)       stop_rx()           (active, standby)
    (active, rx)       radio_off()         (active, off)
    (active, rx)       rx_done             (active, rx)      notify frame
    (active, rx)       sleep_request       (sleep, off)      radio off
    (active, tx)       tx_done             (active, standby) notify tx done
    (active, off)      sleep_request       (sleep, off)
    any mcu != sleep   wurx_interrupt      unchanged         retrigger ignored

Every other (state, event) pair raises IllegalTransition: it signals a stack
bug and the simulation aborts with the recent event trace attached.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigError, IllegalTransition
from .phy import NS_PER_S
from .wurx import WurxMode, WurxState

SUPPLY_VOLTAGE_V = 3.0
MCU_LPM4_CURRENT_A = 0.3e-6  # datasheet deep-sleep draw, for reference
DEFAULT_MCU_WAKEUP_NS = 7_000
DEFAULT_RADIO_TURN_ON_NS = 1_000_000

#: Modal power defaults (W): measured mote figures for sleep/decode/tx/rx,
#: MCU-active from the microcontroller's datasheet class at 3.0 V.
DEFAULT_POWER_TABLE_W = {
    "sleep": 1.83e-6,
    "wurx_decode": 284e-6,
    "lora_tx": 0.240,
    "lora_rx": 0.050,
    "mcu_active": 2.4e-3,
}

POWER_LABELS = ("sleep", "wurx_decode", "mcu_active", "lora_rx", "lora_tx",
                "wub_tx")


class McuMode(enum.Enum):
    SLEEP = "sleep"
    WAKING = "waking"
    ACTIVE = "active"


class RadioMode(enum.Enum):
    OFF = "off"
    TURNING_ON = "turning_on"
    STANDBY = "standby"
    RX = "rx"
    TX = "tx"


class NodeEventKind(enum.Enum):
    WURX_INTERRUPT = "wurx_interrupt"
    TX_REQUEST = "tx_request"
    RX_DONE = "rx_done"
    TX_DONE = "tx_done"
    TIMER = "timer"
    SLEEP_REQUEST = "sleep_request"


@dataclass(frozen=True)
class NodeEvent:
    kind: NodeEventKind
    purpose: str | None = None  # for TIMER: "wake" | "mcu_awake" | "radio_ready"

    def __str__(self):
        if self.purpose:
            return f"{self.kind.value}[{self.purpose}]"
        return self.kind.value


@dataclass(frozen=True)
class TransitionResult:
    """New state plus follow-up events the engine must schedule."""

    mcu: McuMode
    radio: RadioMode
    followups: tuple = ()  # of (delay_ns, NodeEvent)
    awake: bool = False        # MCU just reached active
    radio_ready: bool = False  # radio just reached standby
    tx_finished: bool = False
    frame_received: bool = False


class EnergyLedger:
    """Per-label time/energy integration with battery and harvesting inflow.

    Time is integer ns; energy per accrual is power * dt. The battery floors
    at zero (``depleted`` latches); it is not capped above, so sustained
    harvesting surplus accumulates. Conservation identity maintained:
    consumed - harvested == battery_initial - battery_remaining while the
    floor has not been hit.
    """

    def __init__(self, battery_j: float = 1.0e4, harvest_rate_w: float = 0.0,
                 harvest_efficiency: float = 0.90):
        if battery_j < 0 or harvest_rate_w < 0:
            raise ConfigError("battery_j and harvest_rate_w must be >= 0")
        if not 0.0 <= harvest_efficiency <= 1.0:
            raise ConfigError("harvest_efficiency must be within [0, 1]")
        self.time_ns: dict = {}
        self.energy_j: dict = {}
        self.battery_initial_j = battery_j
        self.battery_remaining_j = battery_j
        self.harvest_rate_w = harvest_rate_w
        self.harvest_efficiency = harvest_efficiency
        self.consumed_j = 0.0
        self.harvested_j = 0.0
        self.depleted = False

    def accrue(self, label: str, power_w: float, dt_ns: int) -> None:
        if dt_ns < 0:
            raise ConfigError("dt_ns must be >= 0")
        if dt_ns == 0:
            return
        dt_s = dt_ns / NS_PER_S
        spent = power_w * dt_s
        gained = self.harvest_rate_w * self.harvest_efficiency * dt_s
        self.time_ns[label] = self.time_ns.get(label, 0) + dt_ns
        self.energy_j[label] = self.energy_j.get(label, 0.0) + spent
        self.consumed_j += spent
        self.harvested_j += gained
        level = self.battery_remaining_j + gained - spent
        if level <= 0.0:
            level = 0.0
            self.depleted = True
        self.battery_remaining_j = level

    def total_time_ns(self) -> int:
        return sum(self.time_ns.values())

    def total_energy_j(self) -> float:
        return sum(self.energy_j.values())


def power_report(ledger: EnergyLedger, power_table_w: dict) -> list:
    """Rows of (label, power_w, time_ns, energy_j, pct_of_total_energy).

    All canonical labels appear (zero rows included) in a fixed order;
    labels whose power varies per dwell (wub_tx) report their average power.
    """
    total = ledger.total_energy_j()
    rows = []
    labels = list(POWER_LABELS) + sorted(
        set(ledger.time_ns) - set(POWER_LABELS))
    for label in labels:
        t = ledger.time_ns.get(label, 0)
        e = ledger.energy_j.get(label, 0.0)
        if label in power_table_w:
            p = power_table_w[label]
        else:
            p = e / (t / NS_PER_S) if t else 0.0
        pct = 100.0 * e / total if total > 0 else 0.0
        rows.append((label, p, t, e, pct))
    return rows


class MoteDevice:
    """One mote's composite state; mutated only on the engine thread.

    The wake path after a wake-up interrupt is mechanical (7 us MCU wake),
    after which the application layer owns radio policy via the driver ops
    (radio_on/start_rx/...). ``transition`` implements the table in the
    module docstring and returns follow-up events for the engine to
    schedule.
    """

    def __init__(self, address: int, position, power_table_w: dict | None = None,
                 wurx: WurxState | None = None,
                 mcu_wakeup_ns: int = DEFAULT_MCU_WAKEUP_NS,
                 radio_turn_on_ns: int = DEFAULT_RADIO_TURN_ON_NS,
                 battery_j: float = 1.0e4, harvest_rate_w: float = 0.0,
                 harvest_efficiency: float = 0.90,
                 start_awake: bool = False):
        if mcu_wakeup_ns <= 0 or radio_turn_on_ns <= 0:
            raise ConfigError("wake-up and radio turn-on latencies must be > 0")
        self.address = address
        self.position = position
        self.power_table_w = dict(DEFAULT_POWER_TABLE_W)
        if power_table_w:
            self.power_table_w.update(power_table_w)
        table = self.power_table_w
        if table["sleep"] >= table["mcu_active"]:
            raise ConfigError("sleep power must be below MCU active power")
        # radio tx/rx must dominate the idle draws
        idle_peak = max(table["sleep"], table["mcu_active"])
        if table["lora_tx"] <= idle_peak or table["lora_rx"] <= idle_peak:
            raise ConfigError(
                "lora_tx and lora_rx draws must exceed sleep/standby draws")
        self.wurx = wurx
        self.mcu_wakeup_ns = mcu_wakeup_ns
        self.radio_turn_on_ns = radio_turn_on_ns
        self.mcu = McuMode.ACTIVE if start_awake else McuMode.SLEEP
        self.radio = RadioMode.OFF
        self.rx_since_ns: int | None = None
        self.wub_tx_power_w: float | None = None  # duty-scaled override
        self.ledger = EnergyLedger(battery_j, harvest_rate_w, harvest_efficiency)
        self._label = self._current_label()
        self._label_since_ns = 0

    # -- power accounting ---------------------------------------------------

    def _current_label(self) -> str:
        if self.radio is RadioMode.TX:
            return "wub_tx" if self.wub_tx_power_w is not None else "lora_tx"
        if self.radio is RadioMode.RX:
            return "lora_rx"
        if self.mcu is not McuMode.SLEEP:
            return "mcu_active"
        if self.wurx is not None and self.wurx.mode is WurxMode.DECODING:
            return "wurx_decode"
        return "sleep"

    def _label_power_w(self, label: str) -> float:
        if label == "wub_tx":
            return self.wub_tx_power_w if self.wub_tx_power_w is not None \
                else self.power_table_w["lora_tx"]
        return self.power_table_w[label]

    def sync_ledger(self, now_ns: int) -> None:
        """Charge the dwell in the current label up to ``now_ns``.

        Called before every state change and once at the horizon, so the
        per-label times partition the run exactly.
        """
        dt = now_ns - self._label_since_ns
        if dt < 0:
            raise IllegalTransition(
                f"node {self.address}: ledger time moved backwards")
        self.ledger.accrue(self._label, self._label_power_w(self._label), dt)
        self._label_since_ns = now_ns
        self._label = self._current_label()

    # -- spec events ----------------------------------------------------------

    def transition(self, event: NodeEvent, now_ns: int) -> TransitionResult:
        kind = event.kind
        mcu, radio = self.mcu, self.radio

        if kind is NodeEventKind.WURX_INTERRUPT:
            if mcu is McuMode.SLEEP:
                return self._apply(now_ns, McuMode.WAKING, radio, followups=(
                    (self.mcu_wakeup_ns,
                     NodeEvent(NodeEventKind.TIMER, "mcu_awake")),))
            # re-trigger while already awake/waking: documented no-op
            return TransitionResult(mcu, radio)

        if kind is NodeEventKind.TIMER:
            if event.purpose == "wake" and mcu is McuMode.SLEEP:
                return self._apply(now_ns, McuMode.WAKING, radio, followups=(
                    (self.mcu_wakeup_ns,
                     NodeEvent(NodeEventKind.TIMER, "mcu_awake")),))
            if event.purpose == "mcu_awake" and mcu is McuMode.WAKING:
                return self._apply(now_ns, McuMode.ACTIVE, radio, awake=True)
            if event.purpose == "radio_ready" and mcu is McuMode.ACTIVE \
                    and radio is RadioMode.TURNING_ON:
                return self._apply(now_ns, mcu, RadioMode.STANDBY,
                                   radio_ready=True)
            return self._illegal(event, now_ns)

        if kind is NodeEventKind.TX_REQUEST:
            if mcu is McuMode.ACTIVE and radio in (RadioMode.STANDBY,
                                                   RadioMode.RX):
                self.rx_since_ns = None
                return self._apply(now_ns, mcu, RadioMode.TX)
            return self._illegal(event, now_ns)

        if kind is NodeEventKind.TX_DONE:
            if mcu is McuMode.ACTIVE and radio is RadioMode.TX:
                # charge the finished dwell before dropping the duty override
                result = self._apply(now_ns, mcu, RadioMode.STANDBY,
                                     tx_finished=True)
                self.wub_tx_power_w = None
                return result
            return self._illegal(event, now_ns)

        if kind is NodeEventKind.RX_DONE:
            if mcu is McuMode.ACTIVE and radio is RadioMode.RX:
                return self._apply(now_ns, mcu, radio, frame_received=True)
            return self._illegal(event, now_ns)

        if kind is NodeEventKind.SLEEP_REQUEST:
            if mcu is McuMode.ACTIVE and radio in (RadioMode.OFF,
                                                   RadioMode.STANDBY,
                                                   RadioMode.RX):
                self.rx_since_ns = None
                return self._apply(now_ns, McuMode.SLEEP, RadioMode.OFF)
            return self._illegal(event, now_ns)

        return self._illegal(event, now_ns)

    # -- driver operations (engine thread) ------------------------------------

    def radio_on(self, now_ns: int) -> TransitionResult:
        if self.mcu is not McuMode.ACTIVE or self.radio is not RadioMode.OFF:
            return self._illegal("radio_on", now_ns)
        return self._apply(now_ns, self.mcu, RadioMode.TURNING_ON, followups=(
            (self.radio_turn_on_ns,
             NodeEvent(NodeEventKind.TIMER, "radio_ready")),))

    def radio_off(self, now_ns: int) -> TransitionResult:
        if self.mcu is not McuMode.ACTIVE or self.radio not in (
                RadioMode.STANDBY, RadioMode.RX):
            return self._illegal("radio_off", now_ns)
        self.rx_since_ns = None
        return self._apply(now_ns, self.mcu, RadioMode.OFF)

    def start_rx(self, now_ns: int) -> TransitionResult:
        if self.mcu is not McuMode.ACTIVE or self.radio is not RadioMode.STANDBY:
            return self._illegal("start_rx", now_ns)
        self.rx_since_ns = now_ns
        return self._apply(now_ns, self.mcu, RadioMode.RX)

    def stop_rx(self, now_ns: int) -> TransitionResult:
        if self.mcu is not McuMode.ACTIVE or self.radio is not RadioMode.RX:
            return self._illegal("stop_rx", now_ns)
        self.rx_since_ns = None
        return self._apply(now_ns, self.mcu, RadioMode.STANDBY)

    def begin_wub_tx(self, now_ns: int, duty: float) -> TransitionResult:
        """Enter TX for an OOK wake-up frame, charged at duty-scaled power."""
        if self.mcu is not McuMode.ACTIVE or self.radio not in (
                RadioMode.STANDBY, RadioMode.RX):
            return self._illegal("begin_wub_tx", now_ns)
        self.rx_since_ns = None
        self.wub_tx_power_w = self.power_table_w["lora_tx"] * duty
        return self._apply(now_ns, self.mcu, RadioMode.TX)

    # -- internals ------------------------------------------------------------

    def _apply(self, now_ns, mcu, radio, **flags) -> TransitionResult:
        self.sync_ledger(now_ns)
        self.mcu = mcu
        self.radio = radio
        self._label = self._current_label()
        return TransitionResult(mcu, radio, **flags)

    def _illegal(self, event, now_ns):
        raise IllegalTransition(
            f"node {self.address}: event {event} illegal in state "
            f"(mcu={self.mcu.value}, radio={self.radio.value}) at t={now_ns} ns")

    # WuRX mode flips also change the charged label.

    def wurx_set_mode(self, mode: WurxMode, now_ns: int) -> None:
        if self.wurx is None:
            raise IllegalTransition(
                f"node {self.address} has no wake-up receiver")
        self.sync_ledger(now_ns)
        self.wurx.mode = mode
        self._label = self._current_label()

    def finalize(self, horizon_ns: int) -> None:
        self.sync_ledger(horizon_ns)
