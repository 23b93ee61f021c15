"""Per-preamble fingerprint features and the per-modulation feature vector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.signal import zoom_fft

from . import dsp
from .errors import DegenerateSignal, InvalidInput, SpanTooShort
from .signal import (IqBuffer, ModulationKind, ModulationScheme, PulseSignal,
                     Span, fft_magnitude, mean_power, resolve_span)

FSK_FEATURES = ("f_peak", "kurtosis", "spectral_brightness", "snr_db")
ASK_FEATURES = ("f_peak", "kurtosis", "fc_offset", "spectral_brightness", "snr_db")
RKE_FEATURES = ("f_peak", "spectral_brightness")

BRIGHTNESS_CUTOFF_FRACTION = 0.1
SNR_CAP_DB = 200.0
SNR_EPS = 1e-12
# zero-padding equivalent used for f_peak inside extract_features
PEAK_RESOLUTION_HZ = 1.0 / 64


def feature_names(mod: ModulationScheme) -> Tuple[str, ...]:
    return FSK_FEATURES if mod.kind is ModulationKind.FSK else ASK_FEATURES


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    names: Tuple[str, ...]
    modulation: Optional[ModulationScheme] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != len(self.names):
            raise InvalidInput("values and names must have equal length")
        if not np.all(np.isfinite(v)):
            raise InvalidInput(f"non-finite feature value in {dict(zip(self.names, v))}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", tuple(self.names))

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    def subset(self, names: Sequence[str]) -> "FeatureVector":
        return FeatureVector([self[n] for n in names], tuple(names), self.modulation)


def _preamble(d: PulseSignal, span: Optional[Span]) -> Span:
    span = span or d.preamble_span
    if span is None:
        raise InvalidInput("pulse has no preamble span")
    return resolve_span(len(d), span)


def peak_frequency(d_rms: PulseSignal, span: Optional[Span] = None,
                   resolution_hz: Optional[float] = None,
                   bit_rate_bps: Optional[float] = None) -> float:
    """Frequency of the largest non-DC bin of the pulse spectrum.

    With ``resolution_hz`` set, the spectrum is evaluated as if the span had
    been zero-padded to ``fs / resolution_hz`` points, but only within one
    coarse bin either side of the coarse peak (chirp-z zoom).
    """
    start, stop = _preamble(d_rms, span)
    spec = fft_magnitude(d_rms, (start, stop))
    if bit_rate_bps is not None and spec.bin_width_hz >= bit_rate_bps:
        raise SpanTooShort(f"bin width {spec.bin_width_hz:.1f} Hz not below bit rate {bit_rate_bps} Hz")
    mags = spec.magnitudes
    if mags.shape[0] < 3:
        raise SpanTooShort("span too short for a non-DC bin")
    k = 1 + int(np.argmax(mags[1:]))
    coarse = spec.first_bin_hz + k * spec.bin_width_hz
    if resolution_hz is None or resolution_hz >= spec.bin_width_hz:
        return coarse

    fs = d_rms.sample_rate_hz
    lo_k = max(1, int(math.floor((coarse - spec.bin_width_hz) / resolution_hz)))
    hi_k = int(math.ceil((coarse + spec.bin_width_hz) / resolution_hz))
    m = hi_k - lo_k + 1
    x = d_rms.samples[start:stop]
    fine = np.abs(zoom_fft(x, [lo_k * resolution_hz, hi_k * resolution_hz], m=m, fs=fs, endpoint=True))
    return float((lo_k + int(np.argmax(fine))) * resolution_hz)


def carrier_offset(baseband: IqBuffer, span: Span) -> float:
    """Signed frequency of the strongest line in the complex baseband span."""
    start, stop = resolve_span(len(baseband), span)
    if stop - start < 64:
        raise SpanTooShort("carrier offset needs at least 64 samples")
    return fft_magnitude(baseband, (start, stop)).argmax_hz()


def snr_db(d: PulseSignal, signal_span: Optional[Span] = None, noise_span: Optional[Span] = None) -> float:
    """Noise-floor-corrected signal-to-noise ratio of the pulse in dB."""
    signal_span = signal_span or d.preamble_span
    noise_span = noise_span or d.guard_span
    if signal_span is None or noise_span is None:
        raise InvalidInput("snr_db needs both a signal span and a noise span")
    p_sig = mean_power(d, signal_span)
    p_noise = mean_power(d, noise_span)
    if p_noise <= 0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, 10.0 * math.log10(max(p_sig - p_noise, SNR_EPS) / p_noise))


def kurtosis(d_rms: PulseSignal, span: Optional[Span] = None) -> float:
    """Population kurtosis (not excess) of the span."""
    start, stop = _preamble(d_rms, span)
    x = d_rms.samples[start:stop]
    c = x - x.mean()
    var = float(np.mean(c * c))
    if not var > 0:
        raise DegenerateSignal("kurtosis of a constant span is undefined")
    return float(np.mean(c ** 4) / var ** 2)


def spectral_brightness(d_rms: PulseSignal, span: Optional[Span] = None,
                        fs: Optional[float] = None) -> float:
    """Sum of squared one-sided spectrum magnitudes from ``0.1 fs`` to ``0.5 fs``."""
    start, stop = _preamble(d_rms, span)
    fs = fs or d_rms.sample_rate_hz
    spec = fft_magnitude(d_rms, (start, stop))
    f = spec.frequencies
    band = (f >= BRIGHTNESS_CUTOFF_FRACTION * fs) & (f <= 0.5 * fs)
    return float(np.sum(spec.magnitudes[band] ** 2))


def extract_features(capture: IqBuffer, mod: ModulationScheme, expected_bits: int = 16,
                     peak_resolution_hz: Optional[float] = PEAK_RESOLUTION_HZ) -> FeatureVector:
    """Run the receive pipeline on ``capture`` and compute the feature vector.

    Column order is fixed per modulation: FSK ``f_peak, kurtosis,
    spectral_brightness, snr_db``; ASK inserts ``fc_offset`` after kurtosis.
    """
    filtered, pulse, d_rms = dsp.preprocess(capture, mod, expected_bits)
    span = pulse.preamble_span
    fs = capture.sample_rate_hz
    values = {
        "f_peak": peak_frequency(d_rms, span, peak_resolution_hz),
        "kurtosis": kurtosis(d_rms, span),
        "spectral_brightness": spectral_brightness(d_rms, span, fs),
        "snr_db": snr_db(pulse, span, pulse.guard_span),
    }
    if mod.kind is ModulationKind.ASK:
        values["fc_offset"] = carrier_offset(filtered, span)
    names = feature_names(mod)
    return FeatureVector([values[n] for n in names], names, mod)
