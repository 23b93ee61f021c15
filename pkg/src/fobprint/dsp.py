"""Receiver-side preprocessing: mix, filter, envelope-demodulate, normalize, segment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidDesign, PreambleNotFound, ZeroSignal
from .signal import (IqBuffer, ModulationKind, ModulationScheme, PulseSignal,
                     Span, resolve_span)

# windowed-sinc length rule for a Hamming window
HAMMING_LENGTH_FACTOR = 3.3

ONSET_THRESHOLD_FACTOR = 4.0
REFERENCE_BITS = 2


@dataclass(frozen=True, eq=False)
class FirFilter:
    taps: np.ndarray
    kind: str
    cutoffs_hz: Tuple[float, ...]
    transition_hz: float
    sample_rate_hz: float

    def __post_init__(self):
        taps = np.array(self.taps)
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @property
    def ntaps(self) -> int:
        return self.taps.shape[0]

    @property
    def group_delay(self) -> int:
        return (self.ntaps - 1) // 2

    def response(self, freqs_hz) -> np.ndarray:
        """Complex frequency response evaluated directly at ``freqs_hz``."""
        f = np.atleast_1d(np.asarray(freqs_hz, dtype=float))
        n = np.arange(self.ntaps) - self.group_delay
        return np.exp(-2j * np.pi * np.outer(f, n) / self.sample_rate_hz) @ self.taps


def shift_frequency(sig: IqBuffer, delta_hz: float) -> IqBuffer:
    """Multiply sample ``k`` by ``exp(-j 2 pi delta k / fs)``."""
    if delta_hz == 0:
        return sig
    k = np.arange(len(sig))
    return sig.with_samples(sig.samples * np.exp(-2j * np.pi * delta_hz * k / sig.sample_rate_hz))


def fir_length(transition_hz: float, fs: float) -> int:
    n = int(math.ceil(HAMMING_LENGTH_FACTOR * fs / transition_hz))
    return n if n % 2 else n + 1


def _lowpass_prototype(cutoff_hz: float, ntaps: int, fs: float) -> np.ndarray:
    m = np.arange(ntaps) - (ntaps - 1) / 2
    fc = cutoff_hz / fs
    h = 2 * fc * np.sinc(2 * fc * m) * np.hamming(ntaps)
    return h / h.sum()


def design_fir(kind: str, cutoffs_hz, transition_hz: float, fs: float) -> FirFilter:
    """Hamming-windowed sinc design.

    ``kind='lowpass'`` takes a single cutoff and returns real, symmetric taps.
    ``kind='bandpass'`` takes ``(low, high)`` and returns a complex one-sided
    filter that passes ``[low, high]`` and rejects the mirrored negative band;
    its taps are conjugate-symmetric, so the phase is still linear.
    """
    cutoffs = tuple(float(c) for c in np.atleast_1d(cutoffs_hz))
    if transition_hz <= 0:
        raise InvalidDesign("transition width must be positive")
    if any(abs(c) >= fs / 2 for c in cutoffs):
        raise InvalidDesign(f"cutoffs {cutoffs} must lie below Nyquist ({fs / 2} Hz)")
    ntaps = fir_length(transition_hz, fs)
    if kind == "lowpass":
        if len(cutoffs) != 1 or cutoffs[0] <= 0:
            raise InvalidDesign("lowpass takes one positive cutoff")
        taps = _lowpass_prototype(cutoffs[0], ntaps, fs)
    elif kind == "bandpass":
        if len(cutoffs) != 2 or not cutoffs[0] < cutoffs[1]:
            raise InvalidDesign("bandpass takes (low, high) with low < high")
        lo, hi = cutoffs
        proto = _lowpass_prototype((hi - lo) / 2, ntaps, fs)
        m = np.arange(ntaps) - (ntaps - 1) // 2
        taps = proto * np.exp(2j * np.pi * (lo + hi) / 2 * m / fs)
    else:
        raise InvalidDesign(f"unknown filter kind {kind!r}")
    return FirFilter(taps, kind, cutoffs, float(transition_hz), float(fs))


def fsk_bandpass(fs: float = 5e6) -> FirFilter:
    return design_fir("bandpass", (15e3, 45e3), 10e3, fs)


def ask_lowpass(fs: float = 5e6) -> FirFilter:
    return design_fir("lowpass", 20e3, 10e3, fs)


def receiver_filter(mod: ModulationScheme, fs: float) -> FirFilter:
    if mod.kind is ModulationKind.FSK:
        return fsk_bandpass(fs)
    return ask_lowpass(fs)


def filter_signal(sig: IqBuffer, f: FirFilter) -> IqBuffer:
    """Linear convolution, shifted by the group delay and cut to the input length."""
    x = sig.samples
    if x.shape[0] == 0:
        return sig
    y = fftconvolve(x, f.taps, mode="full")
    d = f.group_delay
    return sig.with_samples(y[d:d + x.shape[0]])


def demodulate(sig: IqBuffer, mod: ModulationScheme) -> PulseSignal:
    """Envelope detector.

    Both schemes reduce to ``|s|`` once the receiver filter has been applied:
    the one-sided FSK bandpass keeps only the mark tone, so the envelope is
    high for a 1 bit and low for a 0 bit.
    """
    return PulseSignal(np.abs(sig.samples), sig.sample_rate_hz)


def rms_normalize(d: PulseSignal, span: Optional[Span] = None) -> PulseSignal:
    """Scale ``d`` so that its mean square over ``span`` (default: all) is one."""
    start, stop = resolve_span(len(d), span)
    ms = float(np.mean(d.samples[start:stop] ** 2))
    if not ms > 0:
        raise ZeroSignal("cannot RMS-normalize an all-zero pulse")
    return d.with_samples(d.samples / math.sqrt(ms))


def samples_per_bit(mod: ModulationScheme, fs: float) -> float:
    return fs / mod.bit_rate_bps


def detect_preamble(d: PulseSignal, mod: ModulationScheme, expected_bits: int,
                    threshold_factor: float = ONSET_THRESHOLD_FACTOR,
                    reference_bits: int = REFERENCE_BITS) -> PulseSignal:
    """Locate the preamble by energy onset.

    The first ``reference_bits`` bit periods set the quiet-level RMS.  The
    onset is the first sample at which the trailing one-bit RMS exceeds
    ``threshold_factor`` times that level.  The returned pulse carries the
    preamble span (``expected_bits`` nominal bit periods from the onset) and a
    guard span ending one bit before the onset.
    """
    x = d.samples
    n = x.shape[0]
    spb = samples_per_bit(mod, d.sample_rate_hz)
    L = max(1, int(round(spb)))
    ref_len = L * reference_bits
    span_len = int(round(expected_bits * spb))
    if n <= ref_len + span_len:
        raise PreambleNotFound(f"pulse of {n} samples too short for guard plus {expected_bits}-bit preamble")
    ref_rms = math.sqrt(float(np.mean(x[:ref_len] ** 2)))
    thr_ms = (threshold_factor * ref_rms) ** 2

    c = np.concatenate(([0.0], np.cumsum(x * x)))
    # trailing window (i-L, i] for i = ref_len .. n-1
    idx = np.arange(ref_len, n)
    ms = (c[idx + 1] - c[idx + 1 - L]) / L
    hits = np.flatnonzero(ms > thr_ms)
    if hits.size == 0:
        raise PreambleNotFound("no energy onset above the guard level")
    onset = int(idx[hits[0]])
    if onset + span_len > n:
        raise PreambleNotFound("preamble runs past the end of the capture")
    guard_end = onset - L
    if guard_end < L:
        raise PreambleNotFound("onset too close to the start of the capture")
    return PulseSignal(x, d.sample_rate_hz, (onset, onset + span_len), (0, guard_end))


def preprocess(capture: IqBuffer, mod: ModulationScheme, expected_bits: int,
               filt: Optional[FirFilter] = None):
    """Filter, demodulate and segment a capture.

    Returns ``(filtered, pulse, normalized)`` where ``pulse`` carries the
    detected spans and ``normalized`` is RMS-normalized over the preamble.
    """
    filt = filt or receiver_filter(mod, capture.sample_rate_hz)
    filtered = filter_signal(capture, filt)
    pulse = detect_preamble(demodulate(filtered, mod), mod, expected_bits)
    return filtered, pulse, rms_normalize(pulse, pulse.preamble_span)
