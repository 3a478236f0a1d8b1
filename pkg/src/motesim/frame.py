"""Over-the-air frame record shared by the channel, stack and engine."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Frame:
    """One LoRa packet as seen on the medium.

    ``src``/``dst``/``seqno`` are the parsed link-header fields (``dst`` is
    None for raw, headerless sends). ``length`` is the full on-air byte count
    (header + payload). ``rssi_by_rx``/``snr_by_rx`` are the per-receiver
    annotations filled in by the channel when the transmission starts.
    """

    frame_id: int
    src: int
    dst: int | None
    seqno: int | None
    payload: bytes
    length: int
    airtime_ns: int
    spreading_factor: int
    bandwidth_hz: int
    frequency_hz: float
    tx_power_dbm: float
    rssi_by_rx: dict = field(default_factory=dict)
    snr_by_rx: dict = field(default_factory=dict)
