"""End-to-end acceptance checks.

Each test records one pass/fail line through the ``criterion`` fixture; the
lines are repeated in the terminal summary.  Experiments use the default
config (seed 0) and share one session cache, so legitimate batches and
trained models are built once.
"""

import itertools
import json
import time

import numpy as np

from fobprint import dsp, harness
from fobprint.cli import main
from fobprint.detector import DetectorModel, KnnModel, NormParams, System, detect_rke, train_svm
from fobprint.features import carrier_offset, extract_features, kurtosis, peak_frequency, snr_db
from fobprint.signal import IqBuffer, PulseSignal, mean_power
from fobprint.synth import AttackChain, capture, synth_preamble
from oracles import dft_peak_complex, dft_peak_real, majority_vote

FS = 5e6
SCORERS = {"knn": 4.0, "svm": 5.0}


def run(preset, scorer, cache, **kw):
    cfg = harness.ExperimentConfig(preset=preset, scorer=scorer, **kw)
    return harness.run_experiment(cfg, cache=cache)


def med(z):
    return float(np.median(z))


def test_criterion_01_rms_normalization(criterion, rng):
    pulses = []
    for _ in range(1000):
        n = int(rng.integers(16, 40000))
        x = np.abs(rng.standard_normal(n)) * 10.0 ** rng.uniform(-6, 6)
        a = int(rng.integers(0, n // 2))
        pulses.append(PulseSignal(x, FS, (a, n)))
    t0 = time.perf_counter()
    powers = [mean_power(dsp.rms_normalize(p, p.preamble_span), p.preamble_span) for p in pulses]
    elapsed = time.perf_counter() - t0
    err = float(np.max(np.abs(np.array(powers) - 1.0)))
    ok = err <= 1e-9 and elapsed < 5.0
    assert criterion(1, ok, f"max |P-1| = {err:.2e}, {elapsed:.2f} s for 1000 pulses")


def test_criterion_02_kurtosis(criterion, rng):
    sine = np.sin(2 * np.pi * np.arange(100000) / 1000)
    square = np.tile([1.0, -1.0], 50000)
    gauss = rng.standard_normal(10 ** 6)
    k = [kurtosis(PulseSignal(x, FS, (0, x.size))) for x in (sine, square, gauss)]
    ok = abs(k[0] - 1.5) <= 1e-3 and abs(k[1] - 1.0) <= 1e-6 and abs(k[2] - 3.0) <= 0.05
    assert criterion(2, ok, f"sine {k[0]:.6f}, square {k[1]:.9f}, gaussian {k[2]:.4f}")


def test_criterion_03_spectral_peaks(criterion, rng):
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(256, 1500))
        t = np.arange(n)
        fr = rng.uniform(0.005, 0.45) * FS
        real = 1.0 + np.cos(2 * np.pi * fr * t / FS + rng.uniform(0, 6))
        fc = rng.uniform(-0.45, 0.45) * FS
        cplx = np.exp(2j * np.pi * fc * t / FS + 1j * rng.uniform(0, 6))
        if peak_frequency(PulseSignal(real, FS, (0, n))) != dft_peak_real(real, FS):
            mismatches += 1
        if carrier_offset(IqBuffer(cplx, FS), (0, n)) != dft_peak_complex(cplx, FS):
            mismatches += 1
    assert criterion(3, mismatches == 0, f"{mismatches} bin mismatches over 100 real and 100 complex tones")


def test_criterion_04_snr_recovery(criterion, fob, fsk):
    """Known-SNR mixtures measured with the guard/preamble power ratio.

    Every trial must land within 1 dB; the mean bias per level is reported
    alongside to separate estimator bias from estimator spread.
    """
    rx = harness.ExperimentConfig().receiver
    filt = dsp.receiver_filter(fsk, FS)
    worst, worst_bias, worst_level = 0.0, 0.0, None
    for target in range(0, 31, 5):
        errs = []
        for trial in range(20):
            seed = 1000 * target + trial
            clean = dsp.filter_signal(synth_preamble(fob, fsk, rx, seed), filt).samples
            burst = (rx.guard_samples, clean.size - rx.tail_samples)
            guard = (0, rx.guard_samples)
            noise_rng = np.random.default_rng(seed)
            w = noise_rng.standard_normal(clean.size) + 1j * noise_rng.standard_normal(clean.size)
            noise = dsp.filter_signal(IqBuffer(w, FS), filt).samples
            p_sig = np.mean(np.abs(clean[burst[0]:burst[1]]) ** 2)
            p_noise = np.mean(np.abs(noise) ** 2)
            noise = noise * np.sqrt(p_sig / p_noise / 10 ** (target / 10))
            env = dsp.demodulate(IqBuffer(clean + noise, FS), fsk)
            pulse = PulseSignal(env.samples, FS, burst, guard)
            errs.append(snr_db(pulse, burst, guard) - target)
        level_worst = float(np.max(np.abs(errs)))
        if level_worst > worst:
            worst, worst_level = level_worst, target
        worst_bias = max(worst_bias, abs(float(np.mean(errs))))
    detail = (f"worst single-trial |error| {worst:.3f} dB (at {worst_level} dB), "
              f"worst mean bias {worst_bias:.3f} dB over 7 levels x 20 trials")
    assert criterion(4, worst <= 1.0, detail)


def test_criterion_05_single_band_relay(criterion, experiment_cache):
    t0 = time.perf_counter()
    fails, medians = [], {}
    for scorer, gamma in SCORERS.items():
        medians[scorer] = []
        for d in (5, 10, 15):
            rep = run(f"single_band_relay_{d}m", scorer, experiment_cache)
            assert rep.threshold == gamma
            medians[scorer].append(med(rep.attack_z))
            if rep.fnr != 0 or rep.fpr > 0.01:
                fails.append(f"{scorer}@{d}m FNR {rep.fnr:.2%} FPR {rep.fpr:.2%}")
    elapsed = time.perf_counter() - t0
    mono = all(m[0] < m[1] < m[2] for m in medians.values())
    ok = not fails and mono and elapsed < 120
    detail = "; ".join(fails) or "FNR 0, FPR <= 1% at 5/10/15 m for both scorers"
    detail += f"; median z knn {[round(m) for m in medians['knn']]}, svm {[f'{m:.3g}' for m in medians['svm']]}"
    detail += f"; {elapsed:.1f} s"
    assert criterion(5, ok, detail)


def test_criterion_06_digital_relay(criterion, experiment_cache):
    cfg = harness.ExperimentConfig()
    dev, att = cfg.device, cfg.attacker_device
    ppm = abs(dev.clock_offset_ppm - att.clock_offset_ppm)
    hz = abs(dev.carrier_offset_hz - att.carrier_offset_hz)
    parts, ok = [f"attacker differs by {ppm:g} ppm / {hz:g} Hz"], ppm >= 100 and hz >= 1000
    for scorer in SCORERS:
        rep = run("digital_relay", scorer, experiment_cache)
        ok &= rep.fnr == 0 and rep.fpr <= 0.01 and rep.top_feature == "f_peak"
        parts.append(f"{scorer} FNR {rep.fnr:.2%} FPR {rep.fpr:.2%} top {rep.top_feature}")
    assert criterion(6, ok, "; ".join(parts))


def test_criterion_07_playback(criterion, experiment_cache, fob, fsk, rx, channel):
    parts, ok = [], True
    for scorer in SCORERS:
        rep = run("playback_8bit", scorer, experiment_cache)
        ok &= rep.fnr == 0 and rep.top_feature == "spectral_brightness"
        parts.append(f"{scorer} FNR {rep.fnr:.2%} top {rep.top_feature}")
    brighter = 0
    for seed in range(100):
        a = extract_features(capture(fob, fsk, channel, rx, seed), fsk)["spectral_brightness"]
        b = extract_features(capture(fob, fsk, channel, rx, seed, AttackChain.playback(8, 8)),
                             fsk)["spectral_brightness"]
        brighter += b > a
    ok &= brighter >= 99
    parts.append(f"replica brighter on {brighter}/100 seeds")
    assert criterion(7, ok, "; ".join(parts))


def test_criterion_08_amplification(criterion, experiment_cache):
    parts, ok = [], True
    for scorer in SCORERS:
        amp = run("amplification_30dB", scorer, experiment_cache)
        sbr = run("single_band_relay_5m", scorer, experiment_cache)
        pre = run("amplification_prefiltered", scorer, experiment_cache)
        delta = pre.fnr - amp.fnr
        ok &= med(amp.attack_z) < med(sbr.attack_z) and amp.fnr == 0 and delta == 0
        parts.append(f"{scorer} median z {med(amp.attack_z):.3g} vs relay {med(sbr.attack_z):.3g}, "
                     f"FNR {amp.fnr:.2%}, prefilter dFNR {delta:+.2%}")
    assert criterion(8, ok, "; ".join(parts))


def test_criterion_09_rke_voting(criterion):
    # one training point at 0 with unit std: z equals the probe value
    model = DetectorModel(KnnModel(np.zeros((2, 1)), np.ones(1)), NormParams(0.0, 1.0), 4.5, System.RKE)
    bad = 0
    for n in range(1, 6):
        for pattern in itertools.product([False, True], repeat=n):
            v = detect_rke(model, [[10.0] if f else [1.0] for f in pattern])
            bad += v.rejected != majority_vote(pattern)
    assert criterion(9, bad == 0, f"{bad} disagreements over all 62 patterns for N=1..5")


def test_criterion_10_false_alarms(criterion, experiment_cache):
    parts, ok = [], True
    for scorer, gamma in SCORERS.items():
        fresh = run("single_band_relay_5m", scorer, experiment_cache, seed=12345)
        below = float(np.mean(fresh.legit_z < gamma))
        nlos = run("nlos", scorer, experiment_cache)
        ok &= below >= 0.95 and nlos.fpr <= 0.05
        parts.append(f"{scorer} {below:.0%} of fresh z below {gamma:g}, NLoS FPR {nlos.fpr:.2%}")
    assert criterion(10, ok, "; ".join(parts))


def test_criterion_11_nu_property(criterion):
    rng = np.random.default_rng(11)
    worst = -np.inf
    for _ in range(20):
        n = int(rng.integers(20, 200))
        d = int(rng.integers(1, 6))
        nu = float(rng.uniform(0.02, 0.5))
        x = rng.standard_normal((n, d)) * rng.uniform(0.1, 10, d) + rng.uniform(-5, 5, d)
        m = train_svm(x, nu=nu)
        frac = float(np.mean(m.outlier_mask(x)))
        worst = max(worst, frac - (nu + 2 / n))
    assert criterion(11, worst <= 0, f"max outlier fraction minus (nu + 2/n) = {worst:+.4f} over 20 datasets")


def test_criterion_12_reproducible_reports(criterion, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"preset": "digital_relay", "scorer": "svm",
                               "counts": {"train": 30, "legit": 20, "attack": 20}}))
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert main(["experiment", "--config", str(cfg), "--seed", "77", "--out", str(out)]) == 0
        outs.append(out)
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in ("report.json", "scores.csv"))
    assert criterion(12, same, "report.json and scores.csv byte-identical across two runs" if same
                     else "reports differ between runs")
