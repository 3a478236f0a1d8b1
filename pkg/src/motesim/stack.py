"""Layered networking stack: radio driver contract, single-hop unicast,
and the two reference applications (periodic sender, wake-up exchange).

Layering rule: nothing in this module touches channel or ledger internals.
Applications see exactly two surfaces: the radio driver contract below and
a small engine-provided services object (timers, wake/sleep requests,
wake-up transmission). A test asserts this module imports neither the
channel nor the node internals.

The unicast primitive is fire-and-forget: no ACKs, no retransmissions.
The link header is src(2B) + dst(2B) + seqno(2B), little-endian, version 1;
sequence numbers exist for duplicate filtering and delivery accounting only.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import ContractViolation, PayloadTooLarge
from .frame import Frame
from .phy import RadioConfig

HEADER_FORMAT = "<HHH"  # src, dst, seqno
HEADER_BYTES = struct.calcsize(HEADER_FORMAT)
HEADER_VERSION = 1
DEFAULT_MTU = 255
DEFAULT_DUPLICATE_WINDOW = 16


@dataclass(frozen=True)
class UnicastMessage:
    src: int
    dst: int
    seqno: int
    payload: bytes


def encode_message(msg: UnicastMessage) -> bytes:
    return struct.pack(HEADER_FORMAT, msg.src, msg.dst, msg.seqno) + msg.payload


def decode_message(data: bytes) -> UnicastMessage | None:
    """Parse a link frame; None if too short to carry the header."""
    if len(data) < HEADER_BYTES:
        return None
    src, dst, seqno = struct.unpack_from(HEADER_FORMAT, data)
    return UnicastMessage(src, dst, seqno, data[HEADER_BYTES:])


class RadioDriver:
    """Radio abstraction contract every backend must satisfy.

    Rules (exercised by :mod:`motesim.contract_kit`):
      * ``configure`` is legal only while the radio is not transmitting or
        receiving;
      * every accepted ``send`` produces exactly one ``tx_done`` callback,
        and a ``send`` issued from inside that same callback is rejected;
      * ``send`` while off or busy raises instead of silently dropping.
    """

    def init(self) -> None:
        raise NotImplementedError

    def configure(self, config: RadioConfig) -> None:
        raise NotImplementedError

    def send(self, data: bytes):
        raise NotImplementedError

    def start_rx(self) -> None:
        raise NotImplementedError

    def stop_rx(self) -> None:
        raise NotImplementedError

    def channel_clear(self) -> bool:
        raise NotImplementedError

    def on(self) -> None:
        raise NotImplementedError

    def off(self) -> None:
        raise NotImplementedError

    def is_on(self) -> bool:
        raise NotImplementedError

    def is_ready(self) -> bool:
        """Radio powered and idle (not turning on, not tx, not rx)."""
        raise NotImplementedError

    def bind(self, rx_done=None, tx_done=None) -> None:
        """Register stack callbacks: rx_done(Frame), tx_done(handle)."""
        raise NotImplementedError


@dataclass
class SendHandle:
    seqno: int
    dst: int
    completed: bool = False


class Unicast:
    """Best-effort single-hop unicast over a :class:`RadioDriver`."""

    def __init__(self, driver: RadioDriver, local_address: int,
                 mtu: int = DEFAULT_MTU,
                 duplicate_window: int = DEFAULT_DUPLICATE_WINDOW):
        self.driver = driver
        self.local_address = local_address
        self.mtu = mtu
        self.duplicate_window = duplicate_window
        self._seqno = 0
        self._seen: dict = {}  # src -> list of recent seqnos (FIFO)
        self.duplicates_dropped = 0
        self.overheard = 0
        self.on_message = None  # callback(UnicastMessage)
        self._pending: dict = {}
        driver.bind(rx_done=self._rx_done, tx_done=self._tx_done)

    def send(self, dst: int, payload: bytes) -> SendHandle:
        """Transmit ``payload`` to ``dst``; loopback destinations are
        delivered locally without touching the radio."""
        if len(payload) > self.mtu:
            raise PayloadTooLarge(
                f"payload {len(payload)} B exceeds MTU {self.mtu} B")
        self._seqno += 1
        msg = UnicastMessage(self.local_address, dst, self._seqno, payload)
        handle = SendHandle(seqno=msg.seqno, dst=dst)
        if dst == self.local_address:
            handle.completed = True
            if self.on_message is not None:
                self.on_message(msg)
            return handle
        radio_handle = self.driver.send(encode_message(msg))
        self._pending[radio_handle] = handle
        return handle

    def _tx_done(self, radio_handle) -> None:
        handle = self._pending.pop(radio_handle, None)
        if handle is not None:
            handle.completed = True

    def _rx_done(self, frame: Frame) -> str:
        disposition = self.filter_frame(frame)
        if disposition != "deliver":
            return disposition
        msg = decode_message(frame.payload)
        if self.on_message is not None:
            self.on_message(msg)
        return disposition

    def filter_frame(self, frame: Frame) -> str:
        """Classify a PHY-accepted frame: deliver | drop-address | duplicate."""
        msg = decode_message(frame.payload)
        if msg is None or msg.dst != self.local_address:
            self.overheard += 1
            return "drop-address"
        seen = self._seen.setdefault(msg.src, [])
        if msg.seqno in seen:
            self.duplicates_dropped += 1
            return "duplicate"
        seen.append(msg.seqno)
        if len(seen) > self.duplicate_window:
            seen.pop(0)
        return "deliver"


class Services:
    """Engine capabilities handed to applications.

    Keeps the stack decoupled from engine internals: applications can read
    the clock, set timers, request node wake/sleep and emit a wake-up burst,
    and nothing else.
    """

    def __init__(self, now_ns, call_at, request_sleep, request_wake,
                 send_wakeup, target_awake, log):
        self.now_ns = now_ns
        self.call_at = call_at
        self.request_sleep = request_sleep
        self.request_wake = request_wake
        self.send_wakeup = send_wakeup
        self.target_awake = target_awake
        self.log = log


class PeriodicSenderApp:
    """Send a fixed payload to one destination every ``period_ns``.

    First transmission fires at t = period. Idle policy between sends is
    either "sleep" (mote: MCU and radio down, woken by the tick timer) or
    "rx" (base station: radio permanently listening).
    """

    def __init__(self, unicast: Unicast, services: Services, dst: int,
                 payload_len: int, period_ns: int, idle_policy: str = "sleep"):
        if idle_policy not in ("sleep", "rx"):
            raise ContractViolation(f"unknown idle policy {idle_policy!r}")
        self.unicast = unicast
        self.services = services
        self.dst = dst
        self.payload = bytes(payload_len)
        self.period_ns = period_ns
        self.idle_policy = idle_policy
        self.attempts = 0  # ticks that initiated a send cycle
        self.sent = 0      # frames actually put on air
        self.ticks_skipped = 0
        self._phase = "idle"

    def start(self) -> None:
        if self.idle_policy == "rx":
            self.unicast.driver.on()
        self.services.call_at(self.period_ns, self.on_tick)

    def on_tick(self) -> None:
        self.services.call_at(self.services.now_ns() + self.period_ns,
                              self.on_tick)
        if self._phase != "idle":
            # previous cycle still in flight; deterministic skip
            self.ticks_skipped += 1
            return
        self.attempts += 1
        self._phase = "waking"
        if self.idle_policy == "sleep":
            self.services.request_wake()
        else:
            self._send_now()

    def on_awake(self) -> None:
        self.unicast.driver.on()

    def on_radio_ready(self) -> None:
        if self._phase == "waking":
            self._send_now()

    def _send_now(self) -> None:
        self._phase = "sending"
        self.unicast.send(self.dst, self.payload)
        self.sent += 1

    def on_tx_done(self) -> None:
        if self._phase != "sending":
            return
        self._phase = "idle"
        if self.idle_policy == "sleep":
            self.services.request_sleep()
        else:
            self.unicast.driver.start_rx()


class SinkApp:
    """Base-station behaviour: bring the radio up and listen forever."""

    def __init__(self, unicast: Unicast, services: Services):
        self.unicast = unicast
        self.services = services
        self.received = []
        unicast.on_message = self.received.append

    def start(self) -> None:
        self.unicast.driver.on()

    def on_radio_ready(self) -> None:
        self.unicast.driver.start_rx()

    def on_tx_done(self) -> None:  # pragma: no cover - sink never sends
        pass


class WakeupInitiatorApp:
    """Wake a sleeping peer with an OOK burst, then unicast it a payload.

    The data transmission is scheduled exactly one wake chain after the
    burst ends (MCU wake-up latency + radio turn-on), mirroring a firmware
    protocol that hard-codes the peer's timing constants. If the peer did
    not raise its interrupt (out of wake range or address mismatch) the
    cycle is aborted and logged as a wake timeout.
    """

    def __init__(self, unicast: Unicast, services: Services, target: int,
                 target_wurx_address: int, payload_len: int,
                 cycle_period_ns: int, cycles: int, wake_chain_ns: int):
        self.unicast = unicast
        self.services = services
        self.target = target
        self.target_wurx_address = target_wurx_address
        self.payload = bytes(payload_len)
        self.cycle_period_ns = cycle_period_ns
        self.cycles = cycles
        self.wake_chain_ns = wake_chain_ns
        self.exchanges = []  # (cycle, wub_start_ns, outcome)
        self._cycle = 0

    def start(self) -> None:
        self.unicast.driver.on()
        for i in range(1, self.cycles + 1):
            self.services.call_at(i * self.cycle_period_ns, self.on_cycle)

    def on_cycle(self) -> None:
        self._cycle += 1
        cycle = self._cycle
        start = self.services.now_ns()
        emission = self.services.send_wakeup(self.target_wurx_address)
        self.services.call_at(start + emission.duration_ns + self.wake_chain_ns,
                              lambda: self.on_data_slot(cycle, start))

    def on_data_slot(self, cycle: int, wub_start_ns: int) -> None:
        if not self.services.target_awake(self.target):
            self.services.log(f"wake-timeout: cycle {cycle} target "
                              f"{self.target} did not wake")
            self.exchanges.append((cycle, wub_start_ns, "wake-timeout"))
            return
        self.unicast.send(self.target, self.payload)
        self.exchanges.append((cycle, wub_start_ns, "data-sent"))

    def on_radio_ready(self) -> None:
        pass

    def on_tx_done(self) -> None:
        pass


class WakeupSleeperApp:
    """Peer side of the wake-up exchange: sleep until the WuRX interrupt,
    listen for one payload, then linger briefly and go back to sleep."""

    def __init__(self, unicast: Unicast, services: Services,
                 linger_ns: int, rx_timeout_ns: int):
        self.unicast = unicast
        self.services = services
        self.linger_ns = linger_ns
        self.rx_timeout_ns = rx_timeout_ns
        self.received = []
        self.rx_timeouts = 0
        self._armed_until = None
        unicast.on_message = self.on_message

    def start(self) -> None:
        # the node is constructed asleep; nothing to do until the interrupt
        pass

    def on_awake(self) -> None:
        self.unicast.driver.on()

    def on_radio_ready(self) -> None:
        self.unicast.driver.start_rx()
        deadline = self.services.now_ns() + self.rx_timeout_ns
        self._armed_until = deadline
        self.services.call_at(deadline, lambda: self.on_rx_timeout(deadline))

    def on_message(self, msg: UnicastMessage) -> None:
        self.received.append((self.services.now_ns(), msg))
        self._armed_until = None
        self.services.call_at(self.services.now_ns() + self.linger_ns,
                              self.back_to_sleep)

    def on_rx_timeout(self, deadline: int) -> None:
        if self._armed_until == deadline:
            self.rx_timeouts += 1
            self._armed_until = None
            self.back_to_sleep()

    def back_to_sleep(self) -> None:
        self.services.request_sleep()

    def on_tx_done(self) -> None:  # pragma: no cover - sleeper never sends
        pass
