import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fobprint import dsp
from fobprint.errors import InvalidDesign, PreambleNotFound, ZeroSignal
from fobprint.signal import IqBuffer, ModulationScheme, PulseSignal, fft_magnitude, mean_power
from fobprint.synth import DeviceProfile, ReceiverConfig, synth_preamble
from oracles import frequency_response

FS = 5e6


def tone(f, n=40000, fs=FS, amp=1.0):
    return IqBuffer(amp * np.exp(2j * np.pi * f * np.arange(n) / fs), fs)


# -- shift_frequency ---------------------------------------------------------

def test_shift_zero_is_identity(rng):
    sig = IqBuffer(rng.standard_normal(100) + 1j * rng.standard_normal(100), FS)
    assert dsp.shift_frequency(sig, 0.0) is sig


def test_shift_moves_tone_to_dc():
    out = dsp.shift_frequency(tone(30e3, 4096), 30e3)
    assert fft_magnitude(out).argmax_hz() == 0.0


def test_shift_additive(rng):
    sig = IqBuffer(rng.standard_normal(500) + 0j, FS)
    a, b = 1234.5, -987.25
    twice = dsp.shift_frequency(dsp.shift_frequency(sig, a), b)
    once = dsp.shift_frequency(sig, a + b)
    np.testing.assert_allclose(twice.samples, once.samples, atol=1e-9)


# -- design_fir ----------------------------------------------------------------

def test_tap_count_rule():
    f = dsp.fsk_bandpass(FS)
    assert f.ntaps == 1651
    assert f.ntaps % 2 == 1
    assert f.cutoffs_hz == (15e3, 45e3) and f.transition_hz == 10e3
    a = dsp.ask_lowpass(FS)
    assert a.cutoffs_hz == (20e3,) and a.kind == "lowpass"


def test_lowpass_taps_symmetric():
    t = dsp.ask_lowpass(FS).taps
    assert np.isrealobj(t)
    assert np.array_equal(t, t[::-1])


def test_bandpass_taps_conjugate_symmetric():
    t = dsp.fsk_bandpass(FS).taps
    np.testing.assert_allclose(t, np.conj(t[::-1]), atol=1e-15)


def test_response_matches_oracle():
    f = dsp.fsk_bandpass(FS)
    freqs = np.array([-30e3, 0.0, 10e3, 30e3, 55e3, 200e3])
    ref = np.array([frequency_response(f.taps, x, FS) for x in freqs])
    np.testing.assert_allclose(f.response(freqs), ref, atol=1e-9)


def test_fsk_bandpass_passband_and_stopband():
    f = dsp.fsk_bandpass(FS)
    db = lambda x: 20 * np.log10(abs(frequency_response(f.taps, x, FS)))
    for x in (20e3, 30e3, 40e3):
        assert abs(db(x)) < 0.1
    # 10 kHz beyond either cutoff, and the mirrored band
    for x in (5e3, 55e3, -30e3, -20e3, 200e3):
        assert db(x) <= -40


def test_ask_lowpass_stopband():
    f = dsp.ask_lowpass(FS)
    h = lambda x: abs(frequency_response(f.taps, x, FS))
    assert abs(20 * np.log10(h(0.0))) < 0.1
    assert 20 * np.log10(h(30e3)) <= -40
    assert 20 * np.log10(h(-30e3)) <= -40


@pytest.mark.parametrize("kind, cut", [("lowpass", 2.5e6), ("lowpass", 3e6), ("bandpass", (1e3, 2.6e6)),
                                       ("bandpass", (40e3, 10e3)), ("highpass", 1e3)])
def test_invalid_designs(kind, cut):
    with pytest.raises(InvalidDesign):
        dsp.design_fir(kind, cut, 10e3, FS)


def test_zero_transition():
    with pytest.raises(InvalidDesign):
        dsp.design_fir("lowpass", 1e3, 0.0, FS)


# -- filter_signal ------------------------------------------------------------

def test_in_band_tone_power():
    out = dsp.filter_signal(tone(30e3), dsp.fsk_bandpass(FS))
    mid = (5000, 35000)
    ratio = mean_power(out, mid) / mean_power(tone(30e3), mid)
    assert abs(10 * np.log10(ratio)) < 1.0


def test_out_of_band_tone_attenuated():
    f = dsp.fsk_bandpass(FS)
    for fr in (200e3, -30e3):
        out = dsp.filter_signal(tone(fr), f)
        assert 10 * np.log10(mean_power(out, (5000, 35000))) <= -40


def test_zero_in_zero_out():
    out = dsp.filter_signal(IqBuffer(np.zeros(5000), FS), dsp.fsk_bandpass(FS))
    assert not np.any(out.samples)
    assert len(out) == 5000


def test_group_delay_alignment():
    # an impulse in the middle stays in the middle
    x = np.zeros(8001)
    x[4000] = 1.0
    out = dsp.filter_signal(IqBuffer(x, FS), dsp.ask_lowpass(FS))
    assert int(np.argmax(np.abs(out.samples))) == 4000


# -- demodulate / normalize -------------------------------------------------

def _ideal(mod, bits="10" * 8, rx=None):
    rx = rx or ReceiverConfig()
    return synth_preamble(DeviceProfile(preamble_bits=bits), mod, rx, 0, start_fraction=0.0)


def test_fsk_envelope_fundamental():
    mod = ModulationScheme.fsk()
    filt = dsp.filter_signal(_ideal(mod), dsp.fsk_bandpass(FS))
    d = dsp.demodulate(filt, mod)
    assert np.all(d.samples >= 0)
    span = (50000, 50000 + 26667)
    spec = fft_magnitude(d, span)
    k = 1 + int(np.argmax(spec.magnitudes[1:]))
    assert abs(k * spec.bin_width_hz - 1500) <= spec.bin_width_hz


def test_ask_all_ones_is_flat():
    mod = ModulationScheme.ask()
    filt = dsp.filter_signal(_ideal(mod, "1" * 16), dsp.ask_lowpass(FS))
    d = dsp.demodulate(filt, mod)
    inner = d.samples[55000:70000]
    assert inner.std() / inner.mean() < 1e-3
    assert fft_magnitude(d, (55000, 70000)).argmax_hz() == 0.0


def test_zero_signal_zero_envelope():
    d = dsp.demodulate(IqBuffer(np.zeros(64), FS), ModulationScheme.ask())
    assert not np.any(d.samples)


def test_rms_normalize_constant():
    out = dsp.rms_normalize(PulseSignal(np.full(50, 5.0), FS))
    np.testing.assert_allclose(out.samples, 1.0, rtol=0, atol=1e-15)


def test_rms_normalize_zero():
    with pytest.raises(ZeroSignal):
        dsp.rms_normalize(PulseSignal(np.zeros(50), FS))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=400).filter(lambda v: any(x > 1e-100 for x in v)))
def test_rms_normalize_unit_power(values):
    out = dsp.rms_normalize(PulseSignal(np.array(values), FS))
    assert mean_power(out) == pytest.approx(1.0, abs=1e-9)


def test_rms_normalize_idempotent(rng):
    once = dsp.rms_normalize(PulseSignal(rng.random(1000), FS))
    twice = dsp.rms_normalize(once)
    np.testing.assert_allclose(twice.samples, once.samples, rtol=0, atol=1e-12)


def test_rms_normalize_span():
    x = np.r_[np.zeros(10), np.full(10, 2.0)]
    out = dsp.rms_normalize(PulseSignal(x, FS), (10, 20))
    assert mean_power(out, (10, 20)) == pytest.approx(1.0)


# -- detect_preamble ---------------------------------------------------------

def test_onset_at_1000(rng):
    # 30 kbps so that the two-bit reference window fits in a 1000-sample guard
    mod = ModulationScheme.ask(bit_rate_bps=30e3)
    spb = FS / 30e3
    x = np.r_[np.zeros(1000), np.tile(np.r_[np.ones(167), np.zeros(167)], 10)] + 0.01 * np.abs(rng.standard_normal(4340))
    pulse = dsp.detect_preamble(PulseSignal(x, FS), mod, 16)
    assert abs(pulse.preamble_span[0] - 1000) <= spb / 2
    assert pulse.preamble_span[1] - pulse.preamble_span[0] == round(16 * spb)
    assert pulse.guard_span[1] <= pulse.preamble_span[0]


def test_onset_on_synth_capture(fob, fsk, rx):
    from fobprint.synth import ChannelProfile, capture
    cap = capture(fob, fsk, ChannelProfile(noise_floor_dbfs=-50.0), rx, 11)
    filt = dsp.filter_signal(cap, dsp.fsk_bandpass(FS))
    pulse = dsp.detect_preamble(dsp.demodulate(filt, fsk), fsk, 16)
    assert abs(pulse.preamble_span[0] - rx.guard_samples) <= dsp.samples_per_bit(fsk, FS) / 2


def test_pure_noise_has_no_preamble(rng):
    mod = ModulationScheme.fsk()
    noise = IqBuffer(1e-3 * (rng.standard_normal(80000) + 1j * rng.standard_normal(80000)), FS)
    filt = dsp.filter_signal(noise, dsp.fsk_bandpass(FS))
    with pytest.raises(PreambleNotFound):
        dsp.detect_preamble(dsp.demodulate(filt, mod), mod, 16)


def test_onset_at_zero_without_guard():
    mod = ModulationScheme.ask()
    x = np.tile(np.r_[np.ones(714), np.zeros(714)], 12)
    with pytest.raises(PreambleNotFound):
        dsp.detect_preamble(PulseSignal(x, FS), mod, 16)


def test_too_short():
    with pytest.raises(PreambleNotFound):
        dsp.detect_preamble(PulseSignal(np.ones(100), FS), ModulationScheme.ask(), 16)


@pytest.mark.parametrize("shift", [0, 37, 1200, 5000])
def test_translation_covariance(shift):
    mod = ModulationScheme.ask()
    base = np.r_[np.full(20000, 0.01), np.tile(np.r_[np.ones(1429), np.full(1429, 0.01)], 9), np.full(3000, 0.01)]
    a = dsp.detect_preamble(PulseSignal(base, FS), mod, 16)
    b = dsp.detect_preamble(PulseSignal(np.r_[np.full(shift, 0.01), base], FS), mod, 16)
    assert abs((b.preamble_span[0] - a.preamble_span[0]) - shift) <= dsp.samples_per_bit(mod, FS)


def test_amplitude_invariance(fob, fsk, rx):
    from fobprint.synth import ChannelProfile, capture
    cap = capture(fob, fsk, ChannelProfile(noise_floor_dbfs=-50.0), rx, 3)
    _, _, a = dsp.preprocess(cap, fsk, 16)
    for c in (1e-3, 7.5, 1e4):
        _, _, b = dsp.preprocess(cap.scaled(c), fsk, 16)
        assert b.preamble_span == a.preamble_span
        np.testing.assert_allclose(b.samples, a.samples, rtol=1e-6, atol=1e-6)
