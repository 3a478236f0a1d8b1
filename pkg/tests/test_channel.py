import random

import pytest

from motesim import (ChannelParams, ConfigError, Frame, Position,
                     SensitivityTable, Transmission, ZeroDistanceError,
                     noise_floor_dbm, resolve_concurrent, rssi_at, snr_of)
from oracles import oracle_noise_floor_dbm

TABLE = SensitivityTable.load_default()
ORIGIN = Position()


def make_frame(frame_id, src, dst, rssi_by_rx, sf=12, bw=500_000,
               freq=868e6, airtime_ns=313_344_000):
    nf = 6.0
    return Frame(
        frame_id=frame_id, src=src, dst=dst, seqno=frame_id,
        payload=b"", length=16, airtime_ns=airtime_ns,
        spreading_factor=sf, bandwidth_hz=bw, frequency_hz=freq,
        tx_power_dbm=14.0,
        rssi_by_rx=dict(rssi_by_rx),
        snr_by_rx={a: snr_of(v, bw, nf) for a, v in rssi_by_rx.items()},
    )


class TestRssiAt:
    def test_calibrated_600m_point(self):
        # +14 dBm over 600 m with n = 3.70, 31.2 dB at 1 m -> about -120 dBm
        rssi = rssi_at(14.0, ORIGIN, Position(x=600.0), ChannelParams())
        assert rssi == pytest.approx(-120.0, abs=0.05)

    def test_reference_distance(self):
        rssi = rssi_at(14.0, ORIGIN, Position(x=1.0), ChannelParams())
        assert rssi == pytest.approx(14.0 - 31.2, abs=1e-12)

    def test_strictly_decreasing_with_distance(self):
        params = ChannelParams()
        values = [rssi_at(14.0, ORIGIN, Position(x=d), params)
                  for d in (1, 2, 5, 10, 100, 500, 1000, 5000)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_zero_distance_rejected(self):
        with pytest.raises(ZeroDistanceError):
            rssi_at(14.0, ORIGIN, Position(), ChannelParams())

    def test_shadowing_deterministic_given_seed(self):
        params = ChannelParams(shadowing_sigma_db=4.0)
        draws_a = [rssi_at(14.0, ORIGIN, Position(x=100.0), params,
                           random.Random(99)) for _ in range(1)]
        draws_b = [rssi_at(14.0, ORIGIN, Position(x=100.0), params,
                           random.Random(99)) for _ in range(1)]
        assert draws_a == draws_b

    def test_shadowing_requires_rng(self):
        params = ChannelParams(shadowing_sigma_db=4.0)
        with pytest.raises(ConfigError):
            rssi_at(14.0, ORIGIN, Position(x=10.0), params)

    def test_param_ranges(self):
        with pytest.raises(ConfigError):
            ChannelParams(path_loss_exponent=1.0)
        with pytest.raises(ConfigError):
            ChannelParams(path_loss_exponent=6.5)
        with pytest.raises(ConfigError):
            ChannelParams(shadowing_sigma_db=-1.0)


class TestSnr:
    def test_zero_at_noise_floor(self):
        floor = noise_floor_dbm(500_000, 6.0)
        assert floor == pytest.approx(-111.0103, abs=1e-3)
        assert snr_of(floor, 500_000, 6.0) == 0.0
        assert snr_of(-111.0, 500_000, 6.0) == pytest.approx(0.0, abs=0.02)

    def test_matches_thermal_oracle(self):
        for bw in (125_000, 250_000, 500_000):
            for nf in (0.0, 3.0, 6.0):
                assert noise_floor_dbm(bw, nf) == pytest.approx(
                    oracle_noise_floor_dbm(bw, nf), abs=1e-12)

    def test_linearity(self):
        base = snr_of(-100.0, 500_000, 6.0)
        assert snr_of(-90.0, 500_000, 6.0) == pytest.approx(base + 10.0)

    def test_bad_bandwidth(self):
        with pytest.raises(ConfigError):
            snr_of(-100.0, 0, 6.0)


class TestResolveConcurrent:
    def test_single_transmission_ok(self):
        frame = make_frame(1, src=10, dst=20, rssi_by_rx={20: -100.0})
        out = resolve_concurrent([Transmission(frame, 0, frame.airtime_ns)],
                                 TABLE)
        assert out[(20, 1)].cause == "ok"

    def test_equal_rssi_tie_both_dropped(self):
        a = make_frame(1, 10, 20, {20: -100.0})
        b = make_frame(2, 11, 20, {20: -100.0})
        out = resolve_concurrent(
            [Transmission(a, 0, a.airtime_ns),
             Transmission(b, 0, b.airtime_ns)], TABLE,
            capture_threshold_db=6.0)
        assert out[(20, 1)].cause == "collision"
        assert out[(20, 2)].cause == "collision"

    def test_capture_strongest_wins(self):
        a = make_frame(1, 10, 20, {20: -90.0})
        b = make_frame(2, 11, 20, {20: -100.0})
        out = resolve_concurrent(
            [Transmission(a, 0, a.airtime_ns),
             Transmission(b, 1_000_000, 1_000_000 + b.airtime_ns)], TABLE)
        assert out[(20, 1)].cause == "ok"
        assert out[(20, 2)].cause == "collision"

    def test_capture_needs_threshold(self):
        a = make_frame(1, 10, 20, {20: -95.0})
        b = make_frame(2, 11, 20, {20: -100.0})  # 5 dB < 6 dB threshold
        out = resolve_concurrent(
            [Transmission(a, 0, a.airtime_ns),
             Transmission(b, 0, b.airtime_ns)], TABLE)
        assert out[(20, 1)].cause == "collision"
        assert out[(20, 2)].cause == "collision"

    def test_non_overlapping_decoded_independently(self):
        a = make_frame(1, 10, 20, {20: -100.0})
        b = make_frame(2, 11, 20, {20: -100.0})
        out = resolve_concurrent(
            [Transmission(a, 0, a.airtime_ns),
             Transmission(b, a.airtime_ns, 2 * a.airtime_ns)], TABLE)
        assert out[(20, 1)].cause == "ok"
        assert out[(20, 2)].cause == "ok"

    def test_different_sf_orthogonal(self):
        a = make_frame(1, 10, 20, {20: -100.0}, sf=12)
        b = make_frame(2, 11, 20, {20: -90.0}, sf=11)
        out = resolve_concurrent(
            [Transmission(a, 0, a.airtime_ns),
             Transmission(b, 0, b.airtime_ns)], TABLE)
        assert out[(20, 1)].cause == "ok"
        assert out[(20, 2)].cause == "ok"

    def test_captured_frame_still_gated(self):
        # strongest of the pair but below sensitivity: cause is the gate
        a = make_frame(1, 10, 20, {20: -141.0})
        b = make_frame(2, 11, 20, {20: -150.0})
        out = resolve_concurrent(
            [Transmission(a, 0, a.airtime_ns),
             Transmission(b, 0, b.airtime_ns)], TABLE)
        assert out[(20, 1)].cause == "below-sensitivity"
        assert out[(20, 2)].cause == "collision"

    def test_chained_overlap_pairwise_exclusive(self):
        # A and C do not overlap each other; B bridges both and loses twice
        a = make_frame(1, 10, 20, {20: -80.0}, airtime_ns=100)
        b = make_frame(2, 11, 20, {20: -90.0}, airtime_ns=150)
        c = make_frame(3, 12, 20, {20: -80.0}, airtime_ns=100)
        out = resolve_concurrent(
            [Transmission(a, 0, 100),
             Transmission(b, 50, 200),
             Transmission(c, 150, 250)], TABLE)
        assert out[(20, 1)].cause == "ok"
        assert out[(20, 2)].cause == "collision"
        assert out[(20, 3)].cause == "ok"

    def test_at_most_one_decoded_among_pairwise_overlaps(self):
        rng = random.Random(7)
        for _ in range(300):
            n = rng.randint(2, 5)
            txs = []
            for i in range(1, n + 1):
                start = rng.randrange(0, 400)
                length = rng.randrange(50, 300)
                rssi = rng.uniform(-135.0, -60.0)
                frame = make_frame(i, 100 + i, 20, {20: rssi},
                                   airtime_ns=length)
                txs.append(Transmission(frame, start, start + length))
            out = resolve_concurrent(txs, TABLE)
            for i, ta in enumerate(txs):
                for tb in txs[i + 1:]:
                    if ta.start_ns < tb.end_ns and tb.start_ns < ta.end_ns:
                        decoded = [
                            out[(20, ta.frame.frame_id)].decoded,
                            out[(20, tb.frame.frame_id)].decoded]
                        assert sum(decoded) <= 1

    def test_matches_margin_check_for_single_tx(self):
        # with one transmitter the outcome equals the plain link-budget check
        from motesim import RadioConfig, reception_margin
        cfg = RadioConfig()
        rng = random.Random(11)
        for _ in range(500):
            rssi = rng.uniform(-150.0, -60.0)
            frame = make_frame(1, 10, 20, {20: rssi})
            out = resolve_concurrent([Transmission(frame, 0, 1000)], TABLE)
            expected = reception_margin(cfg, rssi,
                                        frame.snr_by_rx[20], TABLE)
            assert out[(20, 1)].decoded == expected.accepted
            assert out[(20, 1)].cause == expected.cause
