"""OOK wake-up link model: frame format, timing, sensitivity, addressing.

Wake-up frames are sent by the main transceiver in OOK mode: a 1-bit is a
full-amplitude carrier, a 0-bit is transmitter-off, so transmit energy
scales with the number of 1-bits. The frame format is an all-ones preamble
followed by an 8-bit address, MSB first; both lengths are configurable.

Decoding is all-or-nothing at the sensitivity threshold (no bit-error
model): below the threshold the receiver never leaves listening and spends
no decode energy; at or above it, the decoder runs for the full frame and
the interrupt line is asserted only on an exact address match.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigError
from .phy import NS_PER_S

ADDRESS_BITS = 8


@dataclass(frozen=True)
class WakeUpFrame:
    address: int
    preamble_bits: int = 8
    bit_rate_bps: float = 1000.0
    carrier_frequency_hz: float = 868e6

    def __post_init__(self):
        if not 0 <= self.address <= 255:
            raise ConfigError(f"wake-up address must be 0..255, got {self.address}")
        if self.preamble_bits < 0:
            raise ConfigError("preamble_bits must be >= 0")
        if not 0 < self.bit_rate_bps <= 1000.0:
            raise ConfigError(
                f"bit_rate_bps must be in (0, 1000], got {self.bit_rate_bps}")

    def bits(self) -> tuple:
        """Concrete on-air bit sequence: all-ones preamble, address MSB first."""
        preamble = (1,) * self.preamble_bits
        address = tuple((self.address >> (ADDRESS_BITS - 1 - i)) & 1
                        for i in range(ADDRESS_BITS))
        return preamble + address


def wub_airtime(frame: WakeUpFrame) -> int:
    """Frame duration (preamble + address bits) in integer nanoseconds."""
    n_bits = frame.preamble_bits + ADDRESS_BITS
    return round(n_bits / frame.bit_rate_bps * NS_PER_S)


def ook_tx_energy(bits, bit_rate_bps: float, tx_power_draw_w: float) -> float:
    """Joules to emit a bit sequence in OOK; only 1-bits cost carrier time."""
    if bit_rate_bps <= 0:
        raise ConfigError("bit_rate_bps must be positive")
    ones = sum(1 for b in bits if b)
    return tx_power_draw_w * ones / bit_rate_bps


def ook_duty(bits) -> float:
    """Fraction of 1-bits; 0.0 for an empty sequence."""
    bits = tuple(bits)
    if not bits:
        return 0.0
    return sum(bits) / len(bits)


@dataclass(frozen=True)
class WubEmission:
    """Result of preparing a wake-up transmission on the main radio."""

    frame: WakeUpFrame
    duration_ns: int
    energy_j: float
    duty: float


def send_wub(target_address: int, *, preamble_bits: int = 8,
             bit_rate_bps: float = 1000.0, carrier_frequency_hz: float = 868e6,
             tx_power_draw_w: float = 0.240) -> WubEmission:
    """Build the OOK wake-up frame for ``target_address`` and account its
    airtime and duty-scaled transmit energy."""
    frame = WakeUpFrame(address=target_address, preamble_bits=preamble_bits,
                        bit_rate_bps=bit_rate_bps,
                        carrier_frequency_hz=carrier_frequency_hz)
    bits = frame.bits()
    return WubEmission(
        frame=frame,
        duration_ns=wub_airtime(frame),
        energy_j=ook_tx_energy(bits, bit_rate_bps, tx_power_draw_w),
        duty=ook_duty(bits),
    )


class WurxMode(enum.Enum):
    LISTENING = "listening"
    DECODING = "decoding"


@dataclass
class WurxState:
    """Wake-up receiver: configured address, sensitivity, modal powers."""

    configured_address: int
    sensitivity_dbm: float = -50.0
    listen_power_w: float = 1.8e-6
    decode_power_w: float = 284e-6
    mode: WurxMode = WurxMode.LISTENING
    missed_while_decoding: int = 0
    false_wakeups_rejected: int = 0
    interrupts_asserted: int = 0

    def __post_init__(self):
        if not 0 <= self.configured_address <= 255:
            raise ConfigError("configured_address must be 0..255")
        if self.listen_power_w >= self.decode_power_w:
            raise ConfigError("listen power must be below decode power")


@dataclass(frozen=True)
class WurxOutcome:
    """What a wake-up frame arrival does to a listening receiver.

    ``kind`` is "ignored" (below sensitivity), "busy" (decoder already
    running; arrival is missed) or "decoding". For "decoding" the receiver
    occupies the decoder for ``decode_time_ns`` and spends
    ``decode_energy_j``; ``interrupt`` says whether the line is asserted at
    the end of the frame.
    """

    kind: str
    decode_time_ns: int = 0
    decode_energy_j: float = 0.0
    interrupt: bool = False


def receive_wub(state: WurxState, frame: WakeUpFrame,
                rssi_dbm: float) -> WurxOutcome:
    """Decide how a wake-up frame lands; pure so the engine owns mutation."""
    if state.mode is WurxMode.DECODING:
        return WurxOutcome("busy")
    if rssi_dbm < state.sensitivity_dbm:
        return WurxOutcome("ignored")
    decode_time = wub_airtime(frame)
    return WurxOutcome(
        "decoding",
        decode_time_ns=decode_time,
        decode_energy_j=state.decode_power_w * decode_time / NS_PER_S,
        interrupt=frame.address == state.configured_address,
    )
