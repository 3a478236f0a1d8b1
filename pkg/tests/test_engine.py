import os
import random

import pytest

from motesim import (ChannelParams, MotesimError, Position, RadioConfig,
                     Scenario, SensitivityTable, resolve_concurrent, run)
from motesim.engine import Simulator, power_profile, range_sweep
from motesim.node import RadioMode
from motesim.report import emit, render_text
from motesim.scenario import (AppSpec, NodeSpec, WurxSpec,
                              power_profile_scenario, range_point_scenario)
from oracles import replay_delivered

TABLE = SensitivityTable.load_default()


def two_node_scenario(distance_m=100.0, packets=3, period_s=1.0,
                      seed=1, sigma=0.0):
    return range_point_scenario(distance_m=distance_m, packets=packets,
                                period_s=period_s, seed=seed,
                                shadowing_sigma_db=sigma)


def multi_mote_scenario(positions, period_s=1.0, horizon_s=5.0, seed=1,
                        payload_len=16, turn_ons_ms=None):
    """BS at origin plus one mote per position, all periodic senders."""
    nodes = [NodeSpec(address=1, role="bs", position=Position())]
    turn_ons_ms = turn_ons_ms or [1.0] * len(positions)
    for i, (pos, turn_on) in enumerate(zip(positions, turn_ons_ms)):
        nodes.append(NodeSpec(address=2 + i, role="mote", position=pos,
                              radio_turn_on_ns=round(turn_on * 1e6)))
    return Scenario(
        horizon_ns=round(horizon_s * 1e9), seed=seed, radio=RadioConfig(),
        channel=ChannelParams(),
        nodes=tuple(nodes),
        app=AppSpec(kind="periodic", src=None, dst=1,
                    payload_len=payload_len,
                    period_ns=round(period_s * 1e9)))


class TestBasicRuns:
    def test_two_node_perfect_channel_pdr_one(self):
        metrics = run(two_node_scenario())
        assert metrics.link(2, 1).pdr == 1.0
        assert metrics.link(2, 1).sent == 3

    def test_16_byte_payload_makes_22_byte_frame(self):
        sim = Simulator(two_node_scenario(packets=1), record_trace=False)
        sim.run()
        (tx,) = sim._tx_log
        assert tx.frame.length == 16 + 6
        assert tx.frame.airtime_ns == 362_496_000

    def test_tick_count_matches_horizon_over_period(self):
        # 360 tick-initiated sends for a 3600 s horizon at 10 s period
        scenario = two_node_scenario(packets=5, period_s=10.0)
        scenario = Scenario(horizon_ns=3_600 * 10 ** 9, seed=1,
                            radio=scenario.radio, channel=scenario.channel,
                            nodes=scenario.nodes, app=scenario.app)
        sim = Simulator(scenario, record_trace=False)
        sim.run()
        assert sim.apps[2].attempts == 360

    def test_zero_ticks_when_horizon_below_period(self):
        scenario = Scenario(horizon_ns=9 * 10 ** 9, seed=1,
                            radio=RadioConfig(), channel=ChannelParams(),
                            nodes=two_node_scenario().nodes,
                            app=AppSpec(kind="periodic", src=2, dst=1,
                                        period_ns=10 * 10 ** 9))
        metrics = run(scenario)
        assert metrics.total_sent() == 0

    def test_ledger_times_partition_horizon(self):
        metrics = run(two_node_scenario(packets=4))
        for report in metrics.energy:
            assert report.total_time_ns == metrics.horizon_ns

    def test_energy_conservation(self):
        metrics = run(two_node_scenario(packets=4))
        for report in metrics.energy:
            total = sum(row[3] for row in report.rows)
            assert total == pytest.approx(report.consumed_j, rel=1e-12)
            assert (report.battery_initial_j - report.battery_remaining_j
                    + report.harvested_j) == pytest.approx(report.consumed_j,
                                                           rel=1e-9)


class TestDeterminism:
    def test_identical_runs_identical_traces(self):
        hashes = set()
        for _ in range(3):
            sim = Simulator(two_node_scenario(sigma=3.0, seed=77))
            sim.run()
            hashes.add(sim.trace_hash())
        assert len(hashes) == 1

    def test_identical_runs_identical_files(self, tmp_path):
        blobs = []
        for i in range(3):
            out = tmp_path / str(i)
            metrics = run(two_node_scenario(sigma=3.0, seed=77))
            paths = emit(metrics, "csv", out)
            blobs.append(b"".join(p.read_bytes() for p in sorted(paths)))
        assert blobs[0] == blobs[1] == blobs[2]

    def test_different_seed_changes_shadowed_run(self):
        a = Simulator(two_node_scenario(sigma=3.0, seed=1))
        b = Simulator(two_node_scenario(sigma=3.0, seed=2))
        ma, mb = a.run(), b.run()
        ra = [p.rssi_dbm for p in ma.packets]
        rb = [p.rssi_dbm for p in mb.packets]
        assert ra != rb


class TestCausality:
    def test_no_past_scheduling(self):
        from motesim.engine import EventKind
        sim = Simulator(two_node_scenario(), record_trace=False)
        sim.run_until(1_000_000)
        with pytest.raises(MotesimError):
            sim.schedule(999_999, EventKind.CALLBACK, 1, lambda: None)

    def test_fuzzed_scenarios_dispatch_in_order(self):
        """Randomized small scenarios; the loop itself asserts strict
        (timestamp, sequence) order and schedule() rejects the past.

        Default depth keeps the suite fast while still monitoring well over
        1e5 dispatched events; set MOTESIM_CAUSALITY_SCENARIOS=100000 for
        the full-scale CI sweep.
        """
        count = int(os.environ.get("MOTESIM_CAUSALITY_SCENARIOS", "10000"))
        rng = random.Random(0xCA05)
        dispatched = 0
        for _ in range(count):
            n_motes = rng.randint(1, 2)
            positions = [Position(x=rng.uniform(1.0, 2000.0),
                                  y=rng.uniform(0.0, 50.0))
                         for _ in range(n_motes)]
            period = rng.uniform(0.45, 2.0)
            scenario = multi_mote_scenario(
                positions, period_s=period,
                horizon_s=rng.uniform(0.5, 4.0),
                seed=rng.randrange(2 ** 32),
                turn_ons_ms=[rng.uniform(0.5, 5.0) for _ in range(n_motes)])
            sim = Simulator(scenario, record_trace=False)
            sim.run()
            dispatched += sim.event_count
        assert dispatched >= 10 * count


class TestReplayOracleEquivalence:
    def engine_sets(self, scenario):
        metrics = run(scenario, record_trace=False)
        sent = {(p.src, p.dst, p.seqno) for p in metrics.packets}
        delivered = {(p.src, p.dst, p.seqno) for p in metrics.packets
                     if p.outcome == "delivered"}
        return sent, delivered

    def test_single_mote_cases(self):
        for distance in (1.0, 600.0, 1200.0, 2500.0):
            scenario = multi_mote_scenario([Position(x=distance)],
                                           period_s=0.8, horizon_s=6.0)
            assert self.engine_sets(scenario) == replay_delivered(scenario,
                                                                  TABLE)

    def test_equal_distance_motes_always_collide(self):
        scenario = multi_mote_scenario(
            [Position(x=100.0), Position(x=-100.0)], period_s=1.0,
            horizon_s=5.0)
        sent, delivered = self.engine_sets(scenario)
        oracle_sent, oracle_delivered = replay_delivered(scenario, TABLE)
        assert (sent, delivered) == (oracle_sent, oracle_delivered)
        assert delivered == set()  # symmetric tie can never capture

    def test_capture_margin_lets_closer_mote_win(self):
        scenario = multi_mote_scenario(
            [Position(x=50.0), Position(x=400.0)], period_s=1.0,
            horizon_s=5.0)
        sent, delivered = self.engine_sets(scenario)
        assert delivered == {(2, 1, k) for k in range(1, 5)}
        assert (sent, delivered) == replay_delivered(scenario, TABLE)

    def test_randomized_small_scenarios(self):
        rng = random.Random(0x5EED)
        for _ in range(200):
            n_motes = rng.randint(1, 2)
            positions = [Position(x=rng.uniform(1.0, 2600.0),
                                  y=rng.uniform(0.0, 100.0))
                         for _ in range(n_motes)]
            period = rng.uniform(0.5, 1.5)
            scenario = multi_mote_scenario(
                positions, period_s=period,
                horizon_s=rng.uniform(1.0, 8.0),
                seed=rng.randrange(2 ** 32),
                payload_len=rng.randint(0, 32),
                turn_ons_ms=[rng.uniform(0.5, 8.0) for _ in range(n_motes)])
            assert self.engine_sets(scenario) == replay_delivered(
                scenario, TABLE), scenario


class TestIncrementalMatchesBatchResolver:
    def test_engine_outcomes_equal_resolve_concurrent(self):
        scenario = multi_mote_scenario(
            [Position(x=50.0), Position(x=400.0)], period_s=1.0,
            horizon_s=4.0, turn_ons_ms=[1.0, 3.0])
        sim = Simulator(scenario, record_trace=False)
        metrics = sim.run()
        batch = resolve_concurrent(sim._tx_log, TABLE,
                                   scenario.channel.capture_threshold_db)
        for packet in metrics.packets:
            if packet.outcome in ("in-flight", "not-listening"):
                continue
            outcome = batch[(packet.dst, packet.frame_id)]
            expected = "delivered" if outcome.cause == "ok" else outcome.cause
            assert packet.outcome == expected


class TestWakeupExchange:
    def test_latency_chain_exact(self):
        metrics = power_profile(cycles=4)
        data_airtime = 362_496_000  # 16 B payload + 6 B header at SF12/500k
        expected = 16_000_000 + 7_000 + 1_000_000 + data_airtime
        assert len(metrics.exchanges) == 4
        for exchange in metrics.exchanges:
            assert exchange.outcome == "completed"
            assert abs(exchange.latency_ns - expected) <= 1

    def test_wrong_wurx_address_times_out_with_decode_energy(self):
        scenario = power_profile_scenario(cycles=2)
        sleeper = scenario.node(2)
        wrong = NodeSpec(
            address=2, role="sleeper", position=sleeper.position,
            wurx=WurxSpec(address=0x55))  # initiator still targets 0x55?
        # rebuild with a mismatched *configured* address on the sleeper:
        # the initiator addresses the app target's spec, so point the app
        # at a frame address that cannot match by overriding after build.
        sim = Simulator(scenario, record_trace=False)
        sim.devices[2].wurx.configured_address = 0x11
        metrics = sim.run()
        assert all(ex.outcome == "wake-timeout" for ex in metrics.exchanges)
        sleeper_report = metrics.energy[1]
        rows = {r[0]: r for r in sleeper_report.rows}
        assert rows["wurx_decode"][2] == 2 * 16_000_000
        assert rows["mcu_active"][2] == 0  # never woke
        assert rows["lora_rx"][2] == 0
        assert sleeper_report.wurx_false_rejected == 2

    def test_out_of_wake_range_times_out(self):
        # data link viable at 600 m but the wake link dies at -50 dBm
        scenario = power_profile_scenario(cycles=2, distance_m=600.0)
        metrics = run(scenario, record_trace=False)
        assert all(ex.outcome == "wake-timeout" for ex in metrics.exchanges)
        sleeper_report = metrics.energy[1]
        rows = {r[0]: r for r in sleeper_report.rows}
        assert rows["wurx_decode"][2] == 0  # below sensitivity: no decode
        assert rows["sleep"][2] == metrics.horizon_ns

    def test_custom_wub_bit_rate_scales_burst(self):
        import dataclasses
        scenario = power_profile_scenario(cycles=1)
        sleeper = scenario.node(2)
        slow = dataclasses.replace(
            sleeper, wurx=dataclasses.replace(sleeper.wurx,
                                              bit_rate_bps=500.0))
        scenario = dataclasses.replace(
            scenario, nodes=(scenario.node(1), slow))
        metrics = run(scenario, record_trace=False)
        expected = 32_000_000 + 7_000 + 1_000_000 + 362_496_000
        assert metrics.exchanges[0].latency_ns == expected

    def test_busy_wurx_misses_second_wub(self):
        scenario = power_profile_scenario(cycles=1)
        sim = Simulator(scenario, record_trace=False)
        sim.start_apps()
        sim.run_until(1_000_000_000 + 1_000_000)  # first WUB under way
        device = sim.devices[2]
        outcome = __import__("motesim").receive_wub(
            device.wurx, __import__("motesim").WakeUpFrame(address=0x2A),
            -30.0)
        assert outcome.kind == "busy"


class TestDepletion:
    def test_depleted_mote_stops_transmitting(self):
        nodes = (
            NodeSpec(address=1, role="bs", position=Position()),
            NodeSpec(address=2, role="mote", position=Position(x=10.0),
                     battery_j=0.40),  # enough for a handful of frames
        )
        scenario = Scenario(horizon_ns=60 * 10 ** 9, seed=1,
                            radio=RadioConfig(), channel=ChannelParams(),
                            nodes=nodes,
                            app=AppSpec(kind="periodic", src=2, dst=1,
                                        period_ns=10 ** 9))
        metrics = run(scenario, record_trace=False)
        sent = metrics.link(2, 1).sent
        assert 0 < sent < 59
        mote = metrics.energy[1]
        assert mote.depleted
        assert mote.battery_remaining_j == 0.0


class TestEmission:
    def test_csv_and_text_totals_agree(self, tmp_path):
        metrics = run(two_node_scenario(packets=4))
        csv_paths = emit(metrics, "csv", tmp_path)
        energy_csv = next(p for p in csv_paths if p.name == "energy.csv")
        per_node = {}
        for line in energy_csv.read_text().splitlines():
            if line.startswith("#") or line.startswith("node,"):
                continue
            addr, _label, _p, _t, energy, _pct = line.split(",")
            per_node[int(addr)] = per_node.get(int(addr), 0.0) + float(energy)
        text = "\n".join(render_text(metrics))
        for report in metrics.energy:
            total_line = [ln for ln in text.splitlines()
                          if ln.split()[:2] == [str(report.address), "total"]]
            assert total_line, "text report must carry per-node totals"
            text_total = float(total_line[0].split()[-1])
            assert per_node[report.address] == pytest.approx(text_total,
                                                             rel=1e-9)

    def test_reemit_byte_identical(self, tmp_path):
        metrics = run(two_node_scenario(packets=3))
        first = emit(metrics, "csv", tmp_path / "a")
        second = emit(metrics, "csv", tmp_path / "b")
        for pa, pb in zip(first, second):
            assert pa.read_bytes() == pb.read_bytes()

    def test_sweep_csv_schema(self, tmp_path):
        rows, meta, _ = range_sweep(distances=(1.0, 600.0), packets=2)
        from motesim import emit_sweep
        (path,) = emit_sweep(rows, meta, "csv", tmp_path)
        lines = [ln for ln in path.read_text().splitlines()
                 if not ln.startswith("#")]
        assert lines[0] == "distance_m,sent,delivered,pdr,rssi_dbm_mean,snr_db_mean"
        assert len(lines) == 3


class TestChannelClear:
    def test_busy_during_foreign_tx(self):
        scenario = multi_mote_scenario([Position(x=10.0)], period_s=1.0,
                                       horizon_s=3.0)
        sim = Simulator(scenario, record_trace=False)
        sim.start_apps()
        sim.run_until(1_050_000_000)  # mote tx in flight (starts ~1.001 s)
        assert sim.devices[2].radio is RadioMode.TX
        assert not sim.drivers[1].channel_clear()
        sim.run_until(2 * 10 ** 9 - 1)
        assert sim.drivers[1].channel_clear()
