"""Deterministic discrete-event engine and the two experiment drivers.

One event loop per scenario, single-threaded. Events are ordered by
(timestamp, sequence) where the sequence is a monotonic tiebreaker, so a
run is fully reproducible and its dispatch trace can be hashed. Events
falling past the horizon are discarded; every node ledger is finalised at
exactly the horizon so per-state dwell times partition the run.

Frame reception is evaluated at the frame's end: by then every overlapping
transmission has started, so the capture decision sees the complete
interferer set. A receiver counts as listening if its radio has been in rx
continuously since no later than the frame's first sample (boundary
inclusive).
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import itertools
import random
import time

from . import channel as chan
from . import report as rep
from . import stack as stk
from . import wurx as wux
from .errors import ContractViolation, MotesimError, RadioUnavailable
from .frame import Frame
from .node import (DEFAULT_POWER_TABLE_W, DEFAULT_RADIO_TURN_ON_NS,
                   McuMode, MoteDevice, NodeEvent, NodeEventKind, RadioMode,
                   SUPPLY_VOLTAGE_V, power_report)
from .phy import SensitivityTable, time_on_air
from .scenario import (DEFAULT_SWEEP_DISTANCES_M, Scenario,
                       power_profile_scenario, range_point_scenario,
                       scenario_hash)


class EventKind(enum.Enum):
    NODE_TIMER = "node_timer"
    CALLBACK = "callback"
    TX_END = "tx_end"
    WUB_END = "wub_end"
    WUB_DECODE_DONE = "wub_decode_done"


class SimRadioDriver(stk.RadioDriver):
    """Radio contract backend driving one simulated mote."""

    def __init__(self, sim: "Simulator", device: MoteDevice):
        self.sim = sim
        self.device = device
        self._rx_cb = None
        self._tx_cb = None
        self._config = sim.scenario.radio
        self._handles = itertools.count(1)
        self._inflight = None
        self._in_tx_done = False

    def bind(self, rx_done=None, tx_done=None) -> None:
        if rx_done is not None:
            self._rx_cb = rx_done
        if tx_done is not None:
            self._tx_cb = tx_done

    def init(self) -> None:
        self._inflight = None

    def configure(self, config) -> None:
        if self.device.radio in (RadioMode.TX, RadioMode.RX,
                                 RadioMode.TURNING_ON):
            raise ContractViolation(
                "configure while the radio is transmitting, receiving or "
                "powering up")
        self._config = config

    @property
    def config(self):
        return self._config

    def on(self) -> None:
        result = self.device.radio_on(self.sim.now)
        self.sim.process_result(self.device, result)

    def off(self) -> None:
        result = self.device.radio_off(self.sim.now)
        self.sim.process_result(self.device, result)

    def start_rx(self) -> None:
        result = self.device.start_rx(self.sim.now)
        self.sim.process_result(self.device, result)

    def stop_rx(self) -> None:
        result = self.device.stop_rx(self.sim.now)
        self.sim.process_result(self.device, result)

    def channel_clear(self) -> bool:
        return not self.sim.medium_busy(self._config.frequency_hz)

    def is_on(self) -> bool:
        return self.device.radio is not RadioMode.OFF

    def is_ready(self) -> bool:
        return self.device.radio is RadioMode.STANDBY

    def send(self, data: bytes):
        if self._in_tx_done:
            raise ContractViolation(
                "send called from inside a tx_done callback; defer via timer")
        if self.device.mcu is not McuMode.ACTIVE or self.device.radio not in (
                RadioMode.STANDBY, RadioMode.RX):
            raise RadioUnavailable(
                f"radio of node {self.device.address} is "
                f"{self.device.radio.value}; cannot send")
        handle = next(self._handles)
        self._inflight = handle
        self.sim.begin_transmission(self.device, bytes(data), handle)
        return handle

    def fire_tx_done(self, handle) -> None:
        self._inflight = None
        if self._tx_cb is not None:
            self._in_tx_done = True
            try:
                self._tx_cb(handle)
            finally:
                self._in_tx_done = False

    def deliver(self, frame: Frame) -> str:
        if self._rx_cb is None:
            return "drop-address"
        return self._rx_cb(frame)


class Simulator:
    """Builds devices, drivers and applications from a scenario and runs
    the event loop to the horizon."""

    def __init__(self, scenario: Scenario, record_trace: bool = True):
        self.scenario = scenario
        self.table = SensitivityTable.load_default()
        self.rng = random.Random(scenario.seed)
        self.now = 0
        self._last_key = (-1, -1)
        self._seq = itertools.count()
        self._queue: list = []
        self._frame_ids = itertools.count(1)
        self._trace: list | None = [] if record_trace else None
        self.event_count = 0
        self.log_lines: list = []

        self.devices: dict = {}
        self.drivers: dict = {}
        self.unicasts: dict = {}
        self.apps: dict = {}
        self._tx_log: list = []
        self._tx_by_id: dict = {}

        self.packets: list = []
        self._pkt_by_frame_id: dict = {}
        self.links: dict = {}
        self._depletion_skips = 0

        for spec in sorted(scenario.nodes, key=lambda n: n.address):
            self._build_device(spec)
        self._build_apps()

    # -- construction ---------------------------------------------------------

    def _build_device(self, spec) -> None:
        wurx_state = None
        power = dict(spec.power_w)
        if spec.wurx is not None:
            wurx_state = wux.WurxState(
                configured_address=spec.wurx.address,
                sensitivity_dbm=spec.wurx.sensitivity_dbm,
                listen_power_w=spec.wurx.listen_power_w,
                decode_power_w=spec.wurx.decode_power_w,
            )
            # single source for the decode figure: the WuRX block
            power.setdefault("wurx_decode", spec.wurx.decode_power_w)
        device = MoteDevice(
            address=spec.address,
            position=spec.position,
            power_table_w=power,
            wurx=wurx_state,
            mcu_wakeup_ns=spec.mcu_wakeup_ns,
            radio_turn_on_ns=spec.radio_turn_on_ns,
            battery_j=spec.battery_j,
            harvest_rate_w=spec.harvest_rate_w,
            harvest_efficiency=spec.harvest_efficiency,
            start_awake=spec.role in ("bs", "initiator"),
        )
        self.devices[spec.address] = device
        self.drivers[spec.address] = SimRadioDriver(self, device)

    def _services_for(self, address: int) -> stk.Services:
        device = self.devices[address]
        return stk.Services(
            now_ns=lambda: self.now,
            call_at=lambda at_ns, fn: self.schedule(
                at_ns, EventKind.CALLBACK, address, fn),
            request_sleep=lambda: self.node_event(
                device, NodeEvent(NodeEventKind.SLEEP_REQUEST)),
            request_wake=lambda: self.node_event(
                device, NodeEvent(NodeEventKind.TIMER, "wake")),
            send_wakeup=lambda wurx_address: self.send_wakeup(
                device, wurx_address),
            target_awake=lambda addr: self.devices[addr].mcu is McuMode.ACTIVE,
            log=self.log_lines.append,
        )

    def _build_apps(self) -> None:
        scenario = self.scenario
        app = scenario.app
        roles = {spec.address: spec.role for spec in scenario.nodes}

        for address, role in roles.items():
            unicast = stk.Unicast(self.drivers[address], address)
            self.unicasts[address] = unicast

        if app.kind == "periodic":
            senders = [app.src] if app.src is not None else [
                a for a, r in roles.items() if r == "mote"]
            for address in senders:
                self.apps[address] = stk.PeriodicSenderApp(
                    self.unicasts[address], self._services_for(address),
                    dst=app.dst, payload_len=app.payload_len,
                    period_ns=app.period_ns,
                    idle_policy="rx" if roles[address] == "bs" else "sleep")
        elif app.kind == "wakeup_exchange":
            target_spec = scenario.node(app.target)
            wake_chain = (target_spec.mcu_wakeup_ns
                          + target_spec.radio_turn_on_ns)
            self.apps[app.initiator] = stk.WakeupInitiatorApp(
                self.unicasts[app.initiator],
                self._services_for(app.initiator),
                target=app.target,
                target_wurx_address=target_spec.wurx.address,
                payload_len=app.payload_len,
                cycle_period_ns=app.cycle_period_ns,
                cycles=app.cycles,
                wake_chain_ns=wake_chain)
            self.apps[app.target] = stk.WakeupSleeperApp(
                self.unicasts[app.target], self._services_for(app.target),
                linger_ns=app.linger_ns, rx_timeout_ns=app.rx_timeout_ns)

        for address, role in roles.items():
            if address not in self.apps and role == "bs":
                self.apps[address] = stk.SinkApp(
                    self.unicasts[address], self._services_for(address))

    # -- scheduling -----------------------------------------------------------

    def schedule(self, at_ns: int, kind: EventKind, target, payload=None) -> None:
        if at_ns < self.now:
            raise MotesimError(
                f"event {kind.value} scheduled into the past "
                f"({at_ns} < {self.now})")
        heapq.heappush(self._queue, (at_ns, next(self._seq), kind, target,
                                     payload))

    def node_event(self, device: MoteDevice, event: NodeEvent) -> None:
        result = device.transition(event, self.now)
        self.process_result(device, result)

    def process_result(self, device: MoteDevice, result) -> None:
        for delay_ns, node_event in result.followups:
            self.schedule(self.now + delay_ns, EventKind.NODE_TIMER,
                          device.address, node_event)
        app = self.apps.get(device.address)
        if app is None:
            return
        if result.awake and hasattr(app, "on_awake"):
            app.on_awake()
        if result.radio_ready:
            app.on_radio_ready()

    # -- medium ---------------------------------------------------------------

    def medium_busy(self, frequency_hz: float) -> bool:
        return any(tx.start_ns <= self.now < tx.end_ns
                   and tx.frame.frequency_hz == frequency_hz
                   for tx in self._tx_log)

    def _annotate(self, frame: Frame, tx_device: MoteDevice) -> None:
        params = self.scenario.channel
        for rx_addr in sorted(self.devices):
            if rx_addr == tx_device.address:
                continue
            rx_device = self.devices[rx_addr]
            rssi = chan.rssi_at(frame.tx_power_dbm, tx_device.position,
                                rx_device.position, params, self.rng)
            frame.rssi_by_rx[rx_addr] = rssi
            frame.snr_by_rx[rx_addr] = chan.snr_of(
                rssi, frame.bandwidth_hz, params.noise_figure_db)

    def begin_transmission(self, device: MoteDevice, data: bytes,
                           handle) -> Frame:
        config = self.drivers[device.address].config
        msg = stk.decode_message(data)
        airtime_ns = time_on_air(config, len(data))
        frame = Frame(
            frame_id=next(self._frame_ids),
            src=device.address,
            dst=msg.dst if msg is not None else None,
            seqno=msg.seqno if msg is not None else None,
            payload=data,
            length=len(data),
            airtime_ns=airtime_ns,
            spreading_factor=config.spreading_factor,
            bandwidth_hz=config.bandwidth_hz,
            frequency_hz=config.frequency_hz,
            tx_power_dbm=config.tx_power_dbm,
        )
        self._annotate(frame, device)
        self.node_event(device, NodeEvent(NodeEventKind.TX_REQUEST))
        tx = chan.Transmission(frame, self.now, self.now + airtime_ns)
        self._tx_log.append(tx)
        self._tx_by_id[frame.frame_id] = (tx, handle)
        self.schedule(tx.end_ns, EventKind.TX_END, device.address,
                      frame.frame_id)
        self._record_sent(tx)
        return frame

    def send_wakeup(self, device: MoteDevice, wurx_address: int):
        if device.mcu is not McuMode.ACTIVE or device.radio not in (
                RadioMode.STANDBY, RadioMode.RX):
            raise RadioUnavailable(
                f"radio of node {device.address} is {device.radio.value}; "
                f"cannot emit a wake-up burst")
        app_spec = self.scenario.app
        target_spec = self.scenario.node(app_spec.target) \
            if app_spec.target is not None else None
        wurx_spec = target_spec.wurx if target_spec is not None else None
        emission = wux.send_wub(
            wurx_address,
            preamble_bits=wurx_spec.preamble_bits if wurx_spec else 8,
            bit_rate_bps=wurx_spec.bit_rate_bps if wurx_spec else 1000.0,
            tx_power_draw_w=device.power_table_w["lora_tx"],
        )
        result = device.begin_wub_tx(self.now, emission.duty)
        self.process_result(device, result)
        params = self.scenario.channel
        for rx_addr in sorted(self.devices):
            receiver = self.devices[rx_addr]
            if rx_addr == device.address or receiver.wurx is None:
                continue
            rssi = chan.rssi_at(self.scenario.radio.tx_power_dbm,
                                device.position, receiver.position,
                                params, self.rng)
            outcome = wux.receive_wub(receiver.wurx, emission.frame, rssi)
            if outcome.kind == "busy":
                receiver.wurx.missed_while_decoding += 1
            elif outcome.kind == "decoding":
                receiver.wurx_set_mode(wux.WurxMode.DECODING, self.now)
                self.schedule(self.now + outcome.decode_time_ns,
                              EventKind.WUB_DECODE_DONE, rx_addr,
                              outcome.interrupt)
        self.schedule(self.now + emission.duration_ns, EventKind.WUB_END,
                      device.address, None)
        return emission

    # -- event loop -------------------------------------------------------------

    def start_apps(self) -> None:
        for address in sorted(self.apps):
            self.apps[address].start()

    def run_until(self, t_ns: int) -> None:
        """Dispatch every event up to and including ``t_ns``, then park the
        clock there. Events scheduled past ``t_ns`` stay queued."""
        while self._queue and self._queue[0][0] <= t_ns:
            ts, seq, kind, target, payload = heapq.heappop(self._queue)
            if (ts, seq) <= self._last_key:
                raise MotesimError("event dispatch out of (timestamp, "
                                   "sequence) order")
            self._last_key = (ts, seq)
            self.now = ts
            self.event_count += 1
            if self._trace is not None:
                self._trace.append(
                    f"{ts} {seq} {kind.value} {target} "
                    f"{payload if kind is EventKind.NODE_TIMER else ''}")
            self._dispatch(kind, target, payload)
        self.now = t_ns

    def run(self) -> rep.RunMetrics:
        started = time.perf_counter()
        horizon = self.scenario.horizon_ns
        self.start_apps()
        self.run_until(horizon)
        for address in sorted(self.devices):
            self.devices[address].finalize(horizon)
        return self._collect(time.perf_counter() - started)

    def _dispatch(self, kind: EventKind, target, payload) -> None:
        if kind in (EventKind.NODE_TIMER, EventKind.CALLBACK):
            device = self.devices[target]
            if device.ledger.depleted:
                self._depletion_skips += 1
                self.log_lines.append(
                    f"drop {kind.value} for depleted node {target}")
                return
        if kind is EventKind.NODE_TIMER:
            self.node_event(self.devices[target], payload)
        elif kind is EventKind.CALLBACK:
            payload()
        elif kind is EventKind.TX_END:
            self._finish_tx(payload)
        elif kind is EventKind.WUB_END:
            self._finish_wub(target)
        elif kind is EventKind.WUB_DECODE_DONE:
            self._finish_decode(target, payload)

    def _finish_tx(self, frame_id: int) -> None:
        tx, handle = self._tx_by_id[frame_id]
        frame = tx.frame
        sender = self.devices[frame.src]
        self.node_event(sender, NodeEvent(NodeEventKind.TX_DONE))
        app = self.apps.get(frame.src)
        self.drivers[frame.src].fire_tx_done(handle)
        if app is not None and hasattr(app, "on_tx_done"):
            app.on_tx_done()
        self._deliver(tx)

    def _finish_wub(self, address: int) -> None:
        device = self.devices[address]
        self.node_event(device, NodeEvent(NodeEventKind.TX_DONE))
        app = self.apps.get(address)
        if app is not None and hasattr(app, "on_tx_done"):
            app.on_tx_done()

    def _finish_decode(self, address: int, interrupt: bool) -> None:
        device = self.devices[address]
        device.wurx_set_mode(wux.WurxMode.LISTENING, self.now)
        if interrupt:
            device.wurx.interrupts_asserted += 1
            if not device.ledger.depleted:
                self.node_event(device,
                                NodeEvent(NodeEventKind.WURX_INTERRUPT))
        else:
            device.wurx.false_wakeups_rejected += 1

    def _deliver(self, tx) -> None:
        frame = tx.frame
        params = self.scenario.channel
        for rx_addr in sorted(self.devices):
            if rx_addr == frame.src:
                continue
            device = self.devices[rx_addr]
            listening = (device.radio is RadioMode.RX
                         and device.rx_since_ns is not None
                         and device.rx_since_ns <= tx.start_ns
                         and not device.ledger.depleted)
            if not listening:
                outcome_str = "not-listening"
            else:
                decision = chan.decide_reception(
                    tx, rx_addr, self._tx_log, self.table,
                    params.capture_threshold_db)
                if decision.decoded:
                    self.node_event(device, NodeEvent(NodeEventKind.RX_DONE))
                    disposition = self.drivers[rx_addr].deliver(frame)
                    outcome_str = ("delivered" if disposition == "deliver"
                                   else disposition)
                else:
                    outcome_str = decision.cause
            if rx_addr == frame.dst:
                self._finish_packet(frame.frame_id, outcome_str)

    def _record_sent(self, tx) -> None:
        """Account the frame when it goes on air; a frame still in flight at
        the horizon keeps the outcome 'in-flight'."""
        frame = tx.frame
        if frame.dst is None or frame.dst == frame.src \
                or frame.dst not in self.devices:
            return
        src_pos = self.devices[frame.src].position
        dst_pos = self.devices[frame.dst].position
        record = rep.PacketRecord(
            frame_id=frame.frame_id, src=frame.src, dst=frame.dst,
            seqno=frame.seqno, t_start_ns=tx.start_ns,
            distance_m=src_pos.distance_to(dst_pos),
            rssi_dbm=frame.rssi_by_rx.get(frame.dst),
            snr_db=frame.snr_by_rx.get(frame.dst),
            outcome="in-flight")
        self.packets.append(record)
        self._pkt_by_frame_id[frame.frame_id] = record
        stats = self.links.setdefault((frame.src, frame.dst), rep.LinkStats())
        stats.sent += 1

    def _finish_packet(self, frame_id: int, outcome: str) -> None:
        record = self._pkt_by_frame_id.get(frame_id)
        if record is None:
            return
        record.outcome = outcome
        if outcome == "delivered":
            self.links[(record.src, record.dst)].delivered += 1

    # -- results ------------------------------------------------------------------

    def trace_hash(self) -> str:
        if self._trace is None:
            return ""
        blob = "\n".join(self._trace).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def _calibration(self) -> dict:
        scenario = self.scenario
        return {
            "path_loss_exponent": scenario.channel.path_loss_exponent,
            "reference_loss_at_1m_db": scenario.channel.reference_loss_at_1m_db,
            "shadowing_sigma_db": scenario.channel.shadowing_sigma_db,
            "noise_figure_db": scenario.channel.noise_figure_db,
            "capture_threshold_db": scenario.channel.capture_threshold_db,
            "spreading_factor": scenario.radio.spreading_factor,
            "bandwidth_hz": scenario.radio.bandwidth_hz,
            "coding_rate": scenario.radio.coding_rate,
            "tx_power_dbm": scenario.radio.tx_power_dbm,
            "preamble_symbols": scenario.radio.preamble_symbols,
            "link_header_version": stk.HEADER_VERSION,
            "sensitivity_table_version": self.table.version,
            "mcu_active_w_default": DEFAULT_POWER_TABLE_W["mcu_active"],
            "radio_turn_on_ns_default": DEFAULT_RADIO_TURN_ON_NS,
            "supply_voltage_v": SUPPLY_VOLTAGE_V,
        }

    def _collect(self, wallclock_s: float) -> rep.RunMetrics:
        metrics = rep.RunMetrics(
            scenario_hash=scenario_hash(self.scenario),
            seed=self.scenario.seed,
            horizon_ns=self.scenario.horizon_ns,
            calibration=self._calibration(),
            packets=self.packets,
            links=self.links,
            event_count=self.event_count,
            trace_hash=self.trace_hash(),
            wallclock_s=wallclock_s,
        )
        for address in sorted(self.devices):
            device = self.devices[address]
            ledger = device.ledger
            metrics.energy.append(rep.NodeEnergyReport(
                address=address,
                rows=power_report(ledger, device.power_table_w),
                battery_initial_j=ledger.battery_initial_j,
                battery_remaining_j=ledger.battery_remaining_j,
                consumed_j=ledger.consumed_j,
                harvested_j=ledger.harvested_j,
                depleted=ledger.depleted,
                total_time_ns=ledger.total_time_ns(),
                wurx_interrupts=device.wurx.interrupts_asserted
                if device.wurx else 0,
                wurx_false_rejected=device.wurx.false_wakeups_rejected
                if device.wurx else 0,
                wurx_missed=device.wurx.missed_while_decoding
                if device.wurx else 0,
            ))
        metrics.exchanges = self._collect_exchanges()
        return metrics

    def _collect_exchanges(self) -> list:
        app = self.scenario.app
        if app.kind != "wakeup_exchange":
            return []
        initiator = self.apps.get(app.initiator)
        sleeper = self.apps.get(app.target)
        received = list(sleeper.received) if sleeper is not None else []
        records = []
        rx_index = 0
        for (cycle, wub_start, status) in initiator.exchanges:
            if status == "wake-timeout":
                records.append(rep.ExchangeRecord(cycle, wub_start,
                                                  "wake-timeout"))
            elif rx_index < len(received):
                t_rx, _msg = received[rx_index]
                rx_index += 1
                records.append(rep.ExchangeRecord(cycle, wub_start,
                                                  "completed", t_rx))
            else:
                records.append(rep.ExchangeRecord(cycle, wub_start,
                                                  "data-lost"))
        return records


def run(scenario: Scenario, record_trace: bool = True) -> rep.RunMetrics:
    """Validate, build and execute one scenario."""
    return Simulator(scenario, record_trace=record_trace).run()


def range_sweep(distances=DEFAULT_SWEEP_DISTANCES_M, packets: int = 360,
                period_s: float = 10.0, payload_len: int = 16, seed: int = 1,
                shadowing_sigma_db: float = 0.0):
    """Coverage experiment: one run per distance, aggregated per point.

    Returns (rows, meta, per-distance RunMetrics list). RSSI/SNR means are
    taken over all transmitted packets' channel annotations at the base
    station, delivered or not.
    """
    rows = []
    all_metrics = []
    for index, distance in enumerate(distances):
        scenario = range_point_scenario(
            distance_m=distance, packets=packets, period_s=period_s,
            payload_len=payload_len, seed=seed + index,
            shadowing_sigma_db=shadowing_sigma_db)
        metrics = run(scenario, record_trace=False)
        stats = metrics.link(2, 1)
        rssi_values = [p.rssi_dbm for p in metrics.packets
                       if p.rssi_dbm is not None]
        snr_values = [p.snr_db for p in metrics.packets
                      if p.snr_db is not None]
        rows.append(rep.SweepRow(
            distance_m=distance,
            sent=stats.sent,
            delivered=stats.delivered,
            pdr=stats.pdr,
            rssi_dbm_mean=sum(rssi_values) / len(rssi_values)
            if rssi_values else float("nan"),
            snr_db_mean=sum(snr_values) / len(snr_values)
            if snr_values else float("nan"),
        ))
        all_metrics.append(metrics)
    meta = dict(all_metrics[0].calibration) if all_metrics else {}
    meta.update({"packets_per_distance": packets, "seed": seed,
                 "period_s": period_s, "payload_len": payload_len})
    return rows, meta, all_metrics


def power_profile(cycles: int = 10, cycle_period_s: float = 1.0,
                  payload_len: int = 16, distance_m: float = 2.0,
                  linger_ms: float = 10.0, seed: int = 1) -> rep.RunMetrics:
    """Micro-benchmark experiment: wake-up-then-exchange cycles."""
    scenario = power_profile_scenario(
        cycles=cycles, cycle_period_s=cycle_period_s, payload_len=payload_len,
        distance_m=distance_m, linger_ms=linger_ms, seed=seed)
    return run(scenario)
