"""Signal containers and elementary spectral/power helpers.

Every container is a frozen dataclass wrapping a read-only numpy array, so
instances can be shared freely between threads and pipeline stages.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .errors import InvalidProfile, InvalidSpan

Span = Tuple[int, int]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IqBuffer:
    """Uniformly sampled complex-baseband signal."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", _frozen(np.asarray(self.samples, dtype=np.complex128)))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def with_samples(self, samples: np.ndarray) -> "IqBuffer":
        return IqBuffer(samples, self.sample_rate_hz)

    def scaled(self, c: float) -> "IqBuffer":
        return IqBuffer(self.samples * c, self.sample_rate_hz)


@dataclass(frozen=True, eq=False)
class PulseSignal:
    """Real-valued demodulated pulse, optionally annotated with segment bounds.

    ``guard_span`` is the quiet stretch before the preamble that noise power is
    measured from; it is filled in by :func:`fobprint.dsp.detect_preamble`.
    """

    samples: np.ndarray
    sample_rate_hz: float
    preamble_span: Optional[Span] = None
    guard_span: Optional[Span] = None

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        x = np.asarray(self.samples)
        if np.iscomplexobj(x):
            raise TypeError("PulseSignal samples must be real")
        object.__setattr__(self, "samples", _frozen(x.astype(np.float64)))
        n = len(self)
        for name in ("preamble_span", "guard_span"):
            span = getattr(self, name)
            if span is not None:
                span = (int(span[0]), int(span[1]))
                if not 0 <= span[0] < span[1] <= n:
                    raise InvalidSpan(f"{name} {span} outside [0, {n}]")
                object.__setattr__(self, name, span)

    def __len__(self) -> int:
        return self.samples.shape[0]

    def with_samples(self, samples: np.ndarray) -> "PulseSignal":
        return PulseSignal(samples, self.sample_rate_hz, self.preamble_span, self.guard_span)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Magnitude spectrum on a uniform frequency grid, lowest frequency first."""

    magnitudes: np.ndarray
    bin_width_hz: float
    first_bin_hz: float
    fft_length: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "magnitudes", _frozen(np.asarray(self.magnitudes, dtype=np.float64)))

    @property
    def frequencies(self) -> np.ndarray:
        return self.first_bin_hz + self.bin_width_hz * np.arange(self.magnitudes.shape[0])

    def argmax_hz(self) -> float:
        # np.argmax returns the first maximum, i.e. the lowest frequency on ties
        return float(self.first_bin_hz + self.bin_width_hz * int(np.argmax(self.magnitudes)))


class ModulationKind(str, enum.Enum):
    FSK = "FSK"
    ASK = "ASK"


@dataclass(frozen=True)
class ModulationScheme:
    kind: ModulationKind
    bit_rate_bps: float
    freq_deviation_hz: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, ModulationKind):
            try:
                object.__setattr__(self, "kind", ModulationKind(str(self.kind).upper()))
            except ValueError:
                raise InvalidProfile(f"unknown modulation {self.kind!r}") from None
        if not self.bit_rate_bps > 0:
            raise InvalidProfile("bit_rate_bps must be positive")
        if self.freq_deviation_hz < 0:
            raise InvalidProfile("freq_deviation_hz must be non-negative")
        if self.kind is ModulationKind.FSK and not self.freq_deviation_hz > 0:
            raise InvalidProfile("FSK requires a positive frequency deviation")

    @classmethod
    def fsk(cls, bit_rate_bps: float = 3000.0, freq_deviation_hz: float = 30e3) -> "ModulationScheme":
        return cls(ModulationKind.FSK, bit_rate_bps, freq_deviation_hz)

    @classmethod
    def ask(cls, bit_rate_bps: float = 3500.0) -> "ModulationScheme":
        return cls(ModulationKind.ASK, bit_rate_bps, 0.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "bit_rate_bps": self.bit_rate_bps,
                "freq_deviation_hz": self.freq_deviation_hz}

    @classmethod
    def from_dict(cls, d: dict) -> "ModulationScheme":
        return cls(d["kind"], float(d["bit_rate_bps"]),
                   float(d.get("freq_deviation_hz", 0.0)))


Signal = Union[IqBuffer, PulseSignal]


def resolve_span(n: int, span: Optional[Span]) -> Span:
    if span is None:
        span = (0, n)
    start, stop = int(span[0]), int(span[1])
    if start < 0 or stop > n:
        raise InvalidSpan(f"span {span} outside signal of length {n}")
    if stop <= start:
        raise InvalidSpan(f"empty span {span}")
    return start, stop


def mean_power(signal: Signal, span: Optional[Span] = None) -> float:
    """Mean of ``|x|**2`` over the half-open sample interval ``span``."""
    start, stop = resolve_span(len(signal), span)
    x = signal.samples[start:stop]
    return float(np.mean(np.abs(x) ** 2))


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def fft_magnitude(signal: Signal, span: Optional[Span] = None) -> Spectrum:
    """Magnitude spectrum of ``span``, zero-padded to the next power of two.

    Real input yields the one-sided spectrum over ``[0, fs/2]``; complex input
    yields the full spectrum over ``[-fs/2, fs/2)``.  Rectangular window.
    """
    start, stop = resolve_span(len(signal), span)
    x = signal.samples[start:stop]
    nfft = next_pow2(x.shape[0])
    fs = signal.sample_rate_hz
    df = fs / nfft
    if np.iscomplexobj(x):
        mags = np.abs(np.fft.fftshift(np.fft.fft(x, nfft)))
        return Spectrum(mags, df, -fs / 2, nfft)
    mags = np.abs(np.fft.rfft(x, nfft))
    return Spectrum(mags, df, 0.0, nfft)
