"""Synthetic key-fob transmissions, propagation, and attacker hardware chains.

All randomness flows from integer seeds through :func:`substream`, which
derives an independent PCG64 generator for every ``(seed, *keys)`` tuple.
Two calls that share a seed and key therefore see identical noise, which is
what lets a playback replica be compared against the capture it was made
from.
"""

from __future__ import annotations

import enum
import math
import zlib
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import lfilter, resample_poly

from . import dsp
from .errors import InvalidProfile, RelayDecodeError
from .signal import IqBuffer, ModulationKind, ModulationScheme

DEFAULT_PREAMBLE = "10" * 8

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def _key_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    return zlib.crc32(str(key).encode())


def substream(seed: SeedLike, *keys) -> np.random.Generator:
    """Independent PCG64 generator for ``(seed, *keys)``.

    Keys may be ints or strings; strings are reduced with CRC-32 so the
    mapping is stable across processes and Python versions.
    """
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(0, 2**63))
    if isinstance(seed, np.random.SeedSequence):
        entropy, base = seed.entropy, tuple(seed.spawn_key)
    else:
        entropy, base = int(seed), ()
    ss = np.random.SeedSequence(entropy, spawn_key=base + tuple(_key_int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def _seed_of(rng: SeedLike) -> Union[int, np.random.SeedSequence]:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    return rng


def complex_awgn(rng: np.random.Generator, n: int, power: float) -> np.ndarray:
    if power <= 0:
        return np.zeros(n, dtype=np.complex128)
    s = math.sqrt(power / 2)
    return s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def db_to_power(db: Optional[float]) -> float:
    if db is None or db == -math.inf:
        return 0.0
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class DeviceProfile:
    """Analog signature of one transmitter.

    ``tx_snr_floor_db`` sets the transmitter's own wideband noise relative to
    its carrier power; that noise exists only while the transmitter is keyed.
    ``carrier_jitter_hz`` is the std of a fresh carrier offset perturbation
    drawn for every transmission (oscillator drift between button presses).
    ``tx_power_db`` scales the whole transmission.
    """

    id: str = "fob"
    clock_offset_ppm: float = 0.0
    carrier_offset_hz: float = 0.0
    amplitude_rise_time_s: float = 0.0
    tx_snr_floor_db: Optional[float] = None
    preamble_bits: str = DEFAULT_PREAMBLE
    carrier_jitter_hz: float = 0.0
    tx_power_db: float = 0.0

    def __post_init__(self):
        if self.carrier_jitter_hz < 0:
            raise InvalidProfile("carrier_jitter_hz must be non-negative")
        if not abs(self.clock_offset_ppm) < 10000:
            raise InvalidProfile("|clock_offset_ppm| must be below 10000")
        if not self.preamble_bits or set(self.preamble_bits) - {"0", "1"}:
            raise InvalidProfile("preamble_bits must be a non-empty bit string")
        if self.amplitude_rise_time_s < 0:
            raise InvalidProfile("amplitude_rise_time_s must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceProfile":
        return cls(**d)


@dataclass(frozen=True)
class ChannelProfile:
    """Log-distance path loss, static multipath taps and receiver noise.

    ``shadowing_std_db`` draws a fresh log-normal power offset for every
    capture (hand position, antenna orientation); zero disables it.
    """

    distance_m: float = 1.0
    reference_distance_m: float = 1.0
    path_loss_exponent: float = 2.0
    noise_floor_dbfs: Optional[float] = None
    multipath_taps: Tuple[Tuple[int, complex], ...] = ()
    shadowing_std_db: float = 0.0

    def __post_init__(self):
        if not (self.distance_m > 0 and self.reference_distance_m > 0):
            raise InvalidProfile("distances must be positive")
        if self.path_loss_exponent < 1:
            raise InvalidProfile("path_loss_exponent must be >= 1")
        taps = tuple((int(d), complex(g)) for d, g in self.multipath_taps)
        if taps and taps[0][0] != 0:
            raise InvalidProfile("first multipath tap must have zero delay")
        if any(d < 0 for d, _ in taps):
            raise InvalidProfile("tap delays must be non-negative")
        object.__setattr__(self, "multipath_taps", taps)

    @property
    def path_loss_db(self) -> float:
        return 10.0 * self.path_loss_exponent * math.log10(self.distance_m / self.reference_distance_m)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["multipath_taps"] = [[t, [g.real, g.imag]] for t, g in self.multipath_taps]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelProfile":
        d = dict(d)
        taps = d.pop("multipath_taps", ())
        parsed = []
        for delay, g in taps:
            parsed.append((int(delay), complex(*g) if isinstance(g, (list, tuple)) else complex(g)))
        return cls(multipath_taps=tuple(parsed), **d)


@dataclass(frozen=True)
class ReceiverConfig:
    sample_rate_hz: float = 5e6
    receiver_lo_offset_hz: float = 0.0
    guard_samples: int = 50_000
    tail_samples: int = 5_000

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise InvalidProfile("sample_rate_hz must be positive")
        if self.guard_samples < 0 or self.tail_samples < 0:
            raise InvalidProfile("guard/tail lengths must be non-negative")

    def check_bandwidth(self, highest_hz: float) -> None:
        if self.sample_rate_hz < 10 * highest_hz:
            raise InvalidProfile(f"sample rate {self.sample_rate_hz} Hz below 10x {highest_hz} Hz")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReceiverConfig":
        return cls(**d)


class AttackKind(str, enum.Enum):
    NONE = "none"
    SINGLE_BAND_RELAY = "single_band_relay"
    AMPLIFICATION = "amplification"
    DIGITAL_RELAY = "digital_relay"
    PLAYBACK = "playback"


@dataclass(frozen=True)
class AttackChain:
    """Adversary hardware between the fob and the receiver.

    Only the fields belonging to ``kind`` are meaningful.  The amplification
    chain places the amplifier ``amp_source_distance_m`` from the fob and
    transmits from ``attacker_distance_m``.  Besides its input-referred noise
    (receiver floor raised by ``amp_noise_figure_db``) the amplifier adds
    ``amp_drive_noise_dbc`` of wideband noise proportional to the signal it is
    driven with; that part is absent while the input is quiet.  Digital relay
    and playback transmit from ``attacker_distance_m`` as well.  The playback
    recorder leaves ``adc_headroom_db`` between the recorded peak and its
    full scale.
    """

    kind: AttackKind = AttackKind.NONE
    victim_distance_m: Optional[float] = None
    amp_gain_db: float = 0.0
    amp_noise_figure_db: float = 0.0
    analog_prefilter: Optional[Tuple[float, float]] = None
    amp_source_distance_m: float = 1.0
    amp_drive_noise_dbc: Optional[float] = None
    attacker_distance_m: float = 1.0
    attacker_device: Optional[DeviceProfile] = None
    record_sample_rate_hz: Optional[float] = None
    record_noise_floor_dbfs: Optional[float] = None
    adc_bits: int = 16
    dac_bits: int = 16
    adc_headroom_db: float = 6.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        k = self.kind
        if k is AttackKind.SINGLE_BAND_RELAY and not (self.victim_distance_m and self.victim_distance_m > 0):
            raise InvalidProfile("single-band relay needs a positive victim_distance_m")
        if k is AttackKind.DIGITAL_RELAY and self.attacker_device is None:
            raise InvalidProfile("digital relay needs an attacker_device")
        if k is AttackKind.PLAYBACK:
            for name in ("adc_bits", "dac_bits"):
                b = getattr(self, name)
                if not 2 <= b <= 24:
                    raise InvalidProfile(f"{name} must be in [2, 24], got {b}")
            if self.adc_headroom_db < 0:
                raise InvalidProfile("adc_headroom_db must be non-negative")
            if self.record_sample_rate_hz is not None and self.record_sample_rate_hz <= 0:
                raise InvalidProfile("record_sample_rate_hz must be positive")
        if self.analog_prefilter is not None:
            lo, hi = self.analog_prefilter
            if not lo < hi:
                raise InvalidProfile("analog_prefilter needs low < high")
            object.__setattr__(self, "analog_prefilter", (float(lo), float(hi)))
        if self.attacker_distance_m <= 0 or self.amp_source_distance_m <= 0:
            raise InvalidProfile("distances must be positive")

    @classmethod
    def none(cls) -> "AttackChain":
        return cls(AttackKind.NONE)

    @classmethod
    def single_band_relay(cls, victim_distance_m: float) -> "AttackChain":
        return cls(AttackKind.SINGLE_BAND_RELAY, victim_distance_m=victim_distance_m)

    @classmethod
    def amplification(cls, gain_db: float, noise_figure_db: float = 3.0, prefilter=None,
                      attacker_distance_m: float = 1.0, **kw) -> "AttackChain":
        return cls(AttackKind.AMPLIFICATION, amp_gain_db=gain_db, amp_noise_figure_db=noise_figure_db,
                   analog_prefilter=prefilter, attacker_distance_m=attacker_distance_m, **kw)

    @classmethod
    def digital_relay(cls, attacker_device: DeviceProfile, **kw) -> "AttackChain":
        return cls(AttackKind.DIGITAL_RELAY, attacker_device=attacker_device, **kw)

    @classmethod
    def playback(cls, adc_bits: int = 8, dac_bits: int = 8, record_sample_rate_hz=None, **kw) -> "AttackChain":
        return cls(AttackKind.PLAYBACK, adc_bits=adc_bits, dac_bits=dac_bits,
                   record_sample_rate_hz=record_sample_rate_hz, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        if self.attacker_device is not None:
            d["attacker_device"] = self.attacker_device.to_dict()
        if self.analog_prefilter is not None:
            d["analog_prefilter"] = list(self.analog_prefilter)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AttackChain":
        d = dict(d)
        if d.get("attacker_device") is not None:
            d["attacker_device"] = DeviceProfile.from_dict(d["attacker_device"])
        if d.get("analog_prefilter") is not None:
            d["analog_prefilter"] = tuple(d["analog_prefilter"])
        return cls(**d)


# -- transmitter -------------------------------------------------------------

def effective_bit_rate(device: DeviceProfile, mod: ModulationScheme) -> float:
    return mod.bit_rate_bps * (1.0 + device.clock_offset_ppm * 1e-6)


def _ramp(gate: np.ndarray, rise_samples: float) -> np.ndarray:
    """Linear amplitude ramps of ``rise_samples`` on every edge of ``gate``."""
    r = int(round(rise_samples))
    if r <= 1:
        return gate
    box = np.full(r, 1.0 / r)
    return lfilter(box, [1.0], gate)


def synth_preamble(device: DeviceProfile, mod: ModulationScheme, rx: ReceiverConfig,
                   rng: SeedLike = 0, bits: Optional[str] = None, start_fraction: Optional[float] = None) -> IqBuffer:
    """Transmitted complex baseband: guard silence, preamble burst, short tail.

    FSK keys ``+/- freq_deviation_hz`` around the device's carrier offset with
    continuous phase; ASK keys a unit carrier on and off.  The amplitude rises
    linearly over ``amplitude_rise_time_s`` (only at burst edges for FSK, on
    every bit edge for ASK).  ``start_fraction`` is the sub-sample burst
    start; by default it is drawn from ``rng``.
    """
    bits = bits if bits is not None else device.preamble_bits
    rate = effective_bit_rate(device, mod)
    if not rate > 0:
        raise InvalidProfile("effective bit rate must be positive")
    fs = rx.sample_rate_hz
    rx.check_bandwidth(abs(device.carrier_offset_hz) + 4 * device.carrier_jitter_hz
                       + mod.freq_deviation_hz + mod.bit_rate_bps)
    seed = _seed_of(rng)
    g = substream(seed, "tx")
    if start_fraction is None:
        start_fraction = float(g.uniform(0.0, 1.0))
    carrier = device.carrier_offset_hz
    if device.carrier_jitter_hz > 0:
        carrier += float(g.normal(0.0, device.carrier_jitter_hz))

    nbits = len(bits)
    burst = nbits * fs / rate
    n = rx.guard_samples + int(math.ceil(burst + start_fraction)) + rx.tail_samples
    t = (np.arange(n) - rx.guard_samples - start_fraction) / fs
    bit_idx = np.floor(t * rate).astype(np.int64)
    active = (bit_idx >= 0) & (bit_idx < nbits)
    bit_vals = np.zeros(n)
    b = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    bit_vals[active] = b[bit_idx[active]]

    rise = device.amplitude_rise_time_s * fs
    if mod.kind is ModulationKind.FSK:
        amp = _ramp(active.astype(float), rise)
        freq = carrier + np.where(bit_vals > 0, 1.0, -1.0) * mod.freq_deviation_hz
    else:
        amp = _ramp(bit_vals, rise)
        freq = np.full(n, carrier)
    phase = 2 * np.pi * np.cumsum(freq) / fs
    x = amp * np.exp(1j * phase)

    if device.tx_snr_floor_db is not None:
        # unit carrier power; the noise exists only while the transmitter is keyed
        noise = complex_awgn(g, n, 10.0 ** (-device.tx_snr_floor_db / 10.0))
        x = x + noise * active
    if device.tx_power_db:
        x = x * 10.0 ** (device.tx_power_db / 20.0)
    return IqBuffer(x, fs)


def burst_onset(rx: ReceiverConfig) -> int:
    return rx.guard_samples


# -- propagation -------------------------------------------------------------

def apply_multipath(x: np.ndarray, taps: Sequence[Tuple[int, complex]]) -> np.ndarray:
    if not taps:
        return x
    h = np.zeros(max(d for d, _ in taps) + 1, dtype=np.complex128)
    for d, gain in taps:
        h[d] += gain
    return np.convolve(x, h)[: x.shape[0]]


def apply_channel(sig: IqBuffer, ch: ChannelProfile, rng: SeedLike = 0) -> IqBuffer:
    """Multipath FIR, log-distance path loss and receiver AWGN."""
    g = substream(_seed_of(rng), "channel")
    x = apply_multipath(sig.samples, ch.multipath_taps)
    loss_db = ch.path_loss_db
    if ch.shadowing_std_db > 0:
        loss_db += float(g.normal(0.0, ch.shadowing_std_db))
    x = x * 10.0 ** (-loss_db / 20.0)
    p = db_to_power(ch.noise_floor_dbfs)
    if p > 0:
        x = x + complex_awgn(g, x.shape[0], p)
    return sig.with_samples(x)


def receive(sig: IqBuffer, rx: ReceiverConfig) -> IqBuffer:
    """Mix down with the receiver's (offset) local oscillator."""
    return dsp.shift_frequency(sig, rx.receiver_lo_offset_hz)


# -- attacker hardware -------------------------------------------------------

def quantize_midrise(x: np.ndarray, bits: int, full_scale: float) -> np.ndarray:
    """Uniform mid-rise quantizer over ``[-full_scale, full_scale]``."""
    if full_scale <= 0:
        full_scale = 1.0
    step = 2.0 * full_scale / (1 << bits)
    q = step * (np.floor(x / step) + 0.5)
    top = full_scale - step / 2
    return np.clip(q, -top, top)


def quantize_iq(x: np.ndarray, bits: int, headroom_db: float = 0.0) -> np.ndarray:
    """Quantize I and Q with full scale ``headroom_db`` above the largest component."""
    fs = float(np.max(np.abs(np.concatenate((x.real, x.imag))))) if x.size else 1.0
    fs *= 10.0 ** (headroom_db / 20.0)
    return quantize_midrise(x.real, bits, fs) + 1j * quantize_midrise(x.imag, bits, fs)


def _resample(x: np.ndarray, from_hz: float, to_hz: float) -> np.ndarray:
    if from_hz == to_hz:
        return x
    ratio = Fraction(to_hz / from_hz).limit_denominator(1000)
    return resample_poly(x, ratio.numerator, ratio.denominator)


def _band_limit(x: np.ndarray, band: Tuple[float, float], fs: float) -> np.ndarray:
    lo, hi = band
    lo, hi = max(lo, -fs / 2), min(hi, fs / 2)
    if lo <= -fs / 2 and hi >= fs / 2:
        # the analog passband is wider than the simulated bandwidth
        return x
    width = hi - lo
    f = dsp.design_fir("lowpass", min(width / 2, 0.49 * fs), max(width / 10, fs / 500), fs)
    centre = (lo + hi) / 2
    m = np.arange(f.ntaps) - f.group_delay
    taps = f.taps * np.exp(2j * np.pi * centre * m / fs)
    return dsp.filter_signal(IqBuffer(x, fs), dsp.FirFilter(taps, "bandpass", band, f.transition_hz, fs)).samples


def decode_bits(sig: IqBuffer, mod: ModulationScheme, nbits: int) -> str:
    """Hard-decision bit recovery used by the digital relay adversary.

    The relay low-passes its capture, takes the first crossing of half the
    peak envelope as the start of the burst, and decides each nominal bit
    from the middle half of its period: by the sign of the mean instantaneous
    frequency for FSK, by envelope level for ASK.
    """
    fs = sig.sample_rate_hz
    spb = dsp.samples_per_bit(mod, fs)
    cutoff = mod.freq_deviation_hz + 4 * mod.bit_rate_bps if mod.kind is ModulationKind.FSK else 20e3
    lp = dsp.filter_signal(sig, dsp.design_fir("lowpass", cutoff, 10e3, fs)).samples
    env = np.abs(lp)
    peak = float(np.max(env)) if env.size else 0.0
    if not peak > 0:
        raise RelayDecodeError("relay heard nothing")
    start = int(np.argmax(env > 0.5 * peak))
    if start + nbits * spb > env.shape[0]:
        raise RelayDecodeError("burst runs past the end of the relay capture")
    edges = start + np.arange(nbits) * spb
    windows = [slice(int(e + spb / 4), int(e + 3 * spb / 4)) for e in edges]

    if mod.kind is ModulationKind.FSK:
        inst = np.angle(lp[1:] * np.conj(lp[:-1])) * fs / (2 * np.pi)
        v = np.array([inst[w].mean() for w in windows])
        if np.any(np.abs(v) < 0.5 * mod.freq_deviation_hz):
            raise RelayDecodeError("frequency decisions too close to the carrier (SNR too low)")
        return "".join("1" if f > 0 else "0" for f in v)

    v = np.array([env[w].mean() for w in windows])
    hi, lo = float(v.max()), float(v.min())
    if hi - lo <= 0:
        raise RelayDecodeError("no amplitude contrast between bit levels")
    thr = (hi + lo) / 2
    if np.any(np.abs(v - thr) < 0.1 * (hi - lo)):
        raise RelayDecodeError("bit decisions too close to threshold (SNR too low)")
    return "".join("1" if a > thr else "0" for a in v)


def apply_attack_chain(tx: IqBuffer, chain: AttackChain, rx: ReceiverConfig, rng: SeedLike,
                       mod: ModulationScheme, channel: ChannelProfile,
                       device: Optional[DeviceProfile] = None) -> IqBuffer:
    """Signal arriving at the receiver antenna when ``chain`` sits in the path.

    ``tx`` is the legitimate fob's transmission and ``channel`` the legitimate
    near-field channel; each chain replaces or extends that channel.
    """
    seed = _seed_of(rng)
    kind = chain.kind
    fs = tx.sample_rate_hz
    if kind is AttackKind.NONE:
        return apply_channel(tx, channel, seed)

    if kind is AttackKind.SINGLE_BAND_RELAY:
        return apply_channel(tx, replace(channel, distance_m=chain.victim_distance_m), seed)

    attacker_channel = replace(channel, distance_m=chain.attacker_distance_m)

    if kind is AttackKind.AMPLIFICATION:
        g = substream(seed, "amplifier")
        src = replace(channel, distance_m=chain.amp_source_distance_m, noise_floor_dbfs=None,
                      multipath_taps=(), shadowing_std_db=0.0)
        x = apply_channel(tx, src, seed).samples
        if chain.analog_prefilter is not None:
            x = _band_limit(x, chain.analog_prefilter, fs)
        amp_noise_db = None
        if channel.noise_floor_dbfs is not None:
            amp_noise_db = channel.noise_floor_dbfs + chain.amp_noise_figure_db
        drive = db_to_power(chain.amp_drive_noise_dbc)
        if drive > 0:
            x = x + x * complex_awgn(g, x.shape[0], drive)
        x = x + complex_awgn(g, x.shape[0], db_to_power(amp_noise_db))
        x = x * 10.0 ** (chain.amp_gain_db / 20.0)
        if chain.analog_prefilter is not None:
            x = _band_limit(x, chain.analog_prefilter, fs)
        return apply_channel(tx.with_samples(x), attacker_channel, seed)

    if kind is AttackKind.DIGITAL_RELAY:
        # the relay listens next to the fob, so it hears the burst through a
        # lossless near-field path with only the receiver noise floor
        near = replace(channel, distance_m=channel.reference_distance_m, multipath_taps=(), shadowing_std_db=0.0)
        heard = apply_channel(tx, near, substream(seed, "relay-listen").integers(2**63))
        nbits = len(device.preamble_bits) if device is not None else len(chain.attacker_device.preamble_bits)
        bits = decode_bits(heard, mod, nbits)
        forged = synth_preamble(chain.attacker_device, mod, rx, substream(seed, "relay-tx").integers(2**63), bits=bits)
        return apply_channel(forged, attacker_channel, seed)

    if kind is AttackKind.PLAYBACK:
        near = replace(channel, distance_m=channel.reference_distance_m, multipath_taps=(), shadowing_std_db=0.0,
                       noise_floor_dbfs=chain.record_noise_floor_dbfs)
        recorded = apply_channel(tx, near, substream(seed, "playback-record").integers(2**63)).samples
        rec_rate = chain.record_sample_rate_hz or fs
        y = _resample(recorded, fs, rec_rate)
        y = quantize_iq(y, chain.adc_bits, chain.adc_headroom_db)
        y = _resample(y, rec_rate, fs)[: recorded.shape[0]]
        if y.shape[0] < recorded.shape[0]:
            y = np.pad(y, (0, recorded.shape[0] - y.shape[0]))
        y = quantize_iq(y, chain.dac_bits, chain.adc_headroom_db)
        return apply_channel(tx.with_samples(y), attacker_channel, seed)

    raise InvalidProfile(f"unhandled attack kind {kind}")


def capture(device: DeviceProfile, mod: ModulationScheme, channel: ChannelProfile, rx: ReceiverConfig,
            seed: SeedLike, chain: Optional[AttackChain] = None) -> IqBuffer:
    """One complete capture as the receiver's SDR would record it."""
    seed = _seed_of(seed)
    tx = synth_preamble(device, mod, rx, seed)
    chain = chain or AttackChain.none()
    at_antenna = apply_attack_chain(tx, chain, rx, seed, mod, channel, device)
    return receive(at_antenna, rx)


# -- populations -------------------------------------------------------------

@dataclass(frozen=True)
class DeviceDrift:
    """Half-widths of a uniform per-capture perturbation of a device profile."""

    clock_ppm: float = 0.0
    carrier_hz: float = 0.0
    power_db: float = 0.0

    def __post_init__(self):
        if min(self.clock_ppm, self.carrier_hz, self.power_db) < 0:
            raise InvalidProfile("drift half-widths must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def perturb_device(device: DeviceProfile, drift: Optional[DeviceDrift], rng: SeedLike) -> DeviceProfile:
    if drift is None:
        return device
    g = substream(_seed_of(rng), "drift")
    u = g.uniform(-1.0, 1.0, 3)
    return replace(device,
                   clock_offset_ppm=device.clock_offset_ppm + u[0] * drift.clock_ppm,
                   carrier_offset_hz=device.carrier_offset_hz + u[1] * drift.carrier_hz,
                   tx_power_db=device.tx_power_db + u[2] * drift.power_db)


def trial_seed(seed: int, role: str, index: int) -> int:
    """64-bit seed of trial ``index`` in population ``role``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(_key_int(role), int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Scenario:
    """A labeled population: ``count`` captures through ``chain``.

    ``channel`` and ``drift`` override the legitimate channel and add
    per-capture device drift.  ``role`` keys the trial seeds; it defaults to
    ``name``.
    """

    name: str
    label: str
    count: int
    chain: AttackChain = AttackChain()
    channel: Optional[ChannelProfile] = None
    drift: Optional[DeviceDrift] = None
    role: Optional[str] = None

    def __post_init__(self):
        if self.count < 0:
            raise InvalidProfile("count must be non-negative")

    def params(self) -> dict:
        d = {"scenario": self.name, "chain": self.chain.to_dict()}
        if self.channel is not None:
            d["channel"] = self.channel.to_dict()
        if self.drift is not None:
            d["drift"] = self.drift.to_dict()
        return d


@dataclass(frozen=True, eq=False)
class LabeledCapture:
    signal: IqBuffer
    label: str
    scenario: str
    seed: int
    device_id: str = ""


def scenario_captures(sc: Scenario, device: DeviceProfile, mod: ModulationScheme, channel: ChannelProfile,
                      rx: ReceiverConfig, seed: int):
    """Lazily yield the captures of one scenario."""
    role = sc.role or sc.name
    ch = sc.channel or channel
    for i in range(sc.count):
        s = trial_seed(seed, role, i)
        dev = perturb_device(device, sc.drift, s)
        sig = capture(dev, mod, ch, rx, s, sc.chain)
        yield LabeledCapture(sig, sc.label, sc.name, s, dev.id)


def generate_dataset(device: DeviceProfile, mod: ModulationScheme, channel: ChannelProfile,
                     rx: ReceiverConfig, scenarios: Sequence[Scenario], seed: int = 0):
    """All captures of ``scenarios`` in order; a pure function of its arguments."""
    out = []
    for sc in scenarios:
        out.extend(scenario_captures(sc, device, mod, channel, rx, seed))
    return out
