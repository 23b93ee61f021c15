"""Scenario presets, experiment runner and report writers.

An experiment trains a detector on legitimate captures, scores a fresh
legitimate test batch and one attack population, and summarises the
decisions.  Rates follow the attack-positive convention: a *positive* is a
capture the detector rejects as an attack, so

* FPR = legitimate captures rejected / legitimate captures,
* FNR = attack captures accepted / attack captures.

Everything in the machine report is a pure function of the config and the
seed; wall-clock timings go to a separate file.
"""

from __future__ import annotations

import csv
import io as _io
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import dsp
from .detector import (ASK_PRESET_THRESHOLD, DEFAULT_NU, DetectorModel, System, default_threshold,
                       detect, train_detector)
from .errors import ConfigError, FobprintError, InvalidTrainingSet
from .features import (FeatureVector, carrier_offset, extract_features, kurtosis, peak_frequency,
                       snr_db, spectral_brightness)
from .io import CaptureMeta, ManifestEntry, write_capture, write_manifest
from .relief import rank_features
from .signal import ModulationKind, ModulationScheme
from .synth import (AttackChain, ChannelProfile, DeviceDrift, DeviceProfile, LabeledCapture, ReceiverConfig,
                    Scenario, capture, scenario_captures, trial_seed)

REPORT_FORMAT = "fobprint-report"
REPORT_VERSION = 1

# roles keying the per-trial seed substreams
TRAIN_ROLE = "train"
LEGIT_ROLE = "legit"
PILOT_LEGIT_ROLE = "pilot-legit"
PILOT_ATTACK_ROLE = "pilot-attack"

SNR_MATCH_TOL_DB = 0.5
SNR_PILOT = 10
SNR_BISECT_LOG10_RANGE = (-2.0, 6.0)
SNR_BISECT_ITERS = 40

PREFILTER_BAND_HZ = (-55e6, 55e6)
AMP_NOISE_FIGURE_DB = 5.0
AMP_SOURCE_DISTANCE_M = 0.1
AMP_DRIVE_NOISE_DBC = -17.0

NLOS_TAPS = ((0, 0.7 + 0j), (3, 0.5j), (8, -0.25 + 0.3j))
TEMPERATURE_DRIFT = DeviceDrift(clock_ppm=2.0, carrier_hz=400.0)
BATTERY_DRIFT = DeviceDrift(clock_ppm=0.5, carrier_hz=100.0, power_db=1.0)

DEFAULT_SYNTH_SCENARIOS = ("single_band_relay_5m", "amplification_30dB", "digital_relay", "playback_8bit")


def default_device() -> DeviceProfile:
    return DeviceProfile("fob", clock_offset_ppm=23.0, carrier_offset_hz=1200.0,
                         amplitude_rise_time_s=60e-6, tx_snr_floor_db=65.0, carrier_jitter_hz=200.0)


def default_attacker_device() -> DeviceProfile:
    # an SDR transmitter: 110 ppm and 1.5 kHz away from the default fob
    return DeviceProfile("sdr", clock_offset_ppm=-87.0, carrier_offset_hz=-300.0,
                         amplitude_rise_time_s=60e-6, tx_snr_floor_db=65.0, carrier_jitter_hz=50.0)


def default_channel() -> ChannelProfile:
    return ChannelProfile(distance_m=1.0, noise_floor_dbfs=-55.0, shadowing_std_db=0.5)


def nlos_channel(channel: ChannelProfile) -> ChannelProfile:
    return replace(channel, path_loss_exponent=3.0, multipath_taps=NLOS_TAPS)


def parse_modulation(name) -> ModulationScheme:
    if isinstance(name, dict):
        try:
            return ModulationScheme.from_dict(name)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad modulation block: {exc}") from None
    key = str(name).upper()
    if key == "FSK":
        return ModulationScheme.fsk()
    if key == "ASK":
        return ModulationScheme.ask()
    raise ConfigError(f"unknown modulation {name!r} (expected FSK or ASK)")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment or a synthetic dataset depends on.

    JSON layout (all keys optional)::

        {"preset": "digital_relay", "seed": 7, "modulation": "FSK",
         "counts": {"train": 100, "legit": 100, "attack": 100},
         "scorer": "knn", "system": "pkes", "threshold": null, "nu": 0.05,
         "rke_preambles": 5, "scenarios": ["playback_8bit", ...],
         "device": {...}, "attacker_device": {...},
         "channel": {...}, "receiver": {...}}

    Profile blocks take the field names of the matching dataclasses and
    replace only the fields they mention.
    """

    preset: str = "single_band_relay_5m"
    seed: int = 0
    modulation: ModulationScheme = field(default_factory=ModulationScheme.fsk)
    train_count: int = 100
    legit_count: int = 100
    attack_count: int = 100
    scorer: str = "knn"
    system: str = "pkes"
    threshold: Optional[float] = None
    nu: float = DEFAULT_NU
    rke_preambles: int = 5
    scenarios: Tuple[str, ...] = DEFAULT_SYNTH_SCENARIOS
    device: DeviceProfile = field(default_factory=default_device)
    attacker_device: DeviceProfile = field(default_factory=default_attacker_device)
    channel: ChannelProfile = field(default_factory=default_channel)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)

    def __post_init__(self):
        if self.scorer not in ("knn", "svm"):
            raise ConfigError(f"unknown scorer {self.scorer!r}")
        try:
            System(self.system)
        except ValueError:
            raise ConfigError(f"unknown system {self.system!r}") from None
        for name in ("train_count", "legit_count", "attack_count"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not 1 <= self.rke_preambles <= 5:
            raise ConfigError("rke_preambles must be in 1..5")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in (self.preset, *self.scenarios):
            if name not in PRESETS:
                raise ConfigError(f"unknown scenario preset {name!r}")

    @property
    def gamma(self) -> float:
        if self.threshold is not None:
            return float(self.threshold)
        if self.modulation.kind is ModulationKind.ASK:
            return ASK_PRESET_THRESHOLD
        return default_threshold(self.system, self.scorer)

    @property
    def preambles_per_trial(self) -> int:
        return self.rke_preambles if self.system == "rke" else 1

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "seed": self.seed,
            "modulation": self.modulation.to_dict(),
            "counts": {"train": self.train_count, "legit": self.legit_count, "attack": self.attack_count},
            "scorer": self.scorer,
            "system": self.system,
            "threshold": self.threshold,
            "nu": self.nu,
            "rke_preambles": self.rke_preambles,
            "scenarios": list(self.scenarios),
            "device": self.device.to_dict(),
            "attacker_device": self.attacker_device.to_dict(),
            "channel": self.channel.to_dict(),
            "receiver": self.receiver.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {"preset", "seed", "modulation", "counts", "scorer", "system", "threshold", "nu",
                 "rke_preambles", "scenarios", "device", "attacker_device", "channel", "receiver"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        base = cls()
        kw = {}
        try:
            for key in ("preset", "scorer", "system"):
                if key in d:
                    kw[key] = str(d[key])
            if "seed" in d:
                kw["seed"] = int(d["seed"])
            if "nu" in d:
                kw["nu"] = float(d["nu"])
            if "rke_preambles" in d:
                kw["rke_preambles"] = int(d["rke_preambles"])
            if d.get("threshold") is not None:
                kw["threshold"] = float(d["threshold"])
            if "modulation" in d:
                kw["modulation"] = parse_modulation(d["modulation"])
            if "scenarios" in d:
                kw["scenarios"] = tuple(str(s) for s in d["scenarios"])
            counts = d.get("counts") or {}
            bad = set(counts) - {"train", "legit", "attack"}
            if bad:
                raise ConfigError(f"unknown count keys: {sorted(bad)}")
            for key in ("train", "legit", "attack"):
                if key in counts:
                    kw[f"{key}_count"] = int(counts[key])
            for key, typ in (("device", DeviceProfile), ("attacker_device", DeviceProfile),
                             ("channel", ChannelProfile), ("receiver", ReceiverConfig)):
                if key in d:
                    merged = {**getattr(base, key).to_dict(), **d[key]}
                    kw[key] = typ.from_dict(merged)
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad config: {exc}") from None

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: config not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(doc)


# -- presets -----------------------------------------------------------------

def _amplification(gain_db: float, prefilter=None):
    def build(cfg: ExperimentConfig, n: int, cache: Optional[dict] = None) -> Scenario:
        d = match_amplifier_distance(cfg, gain_db, prefilter, cache=cache)
        chain = amplifier_chain(gain_db, d, prefilter)
        return Scenario(f"amplification_{gain_db:g}dB" + ("_prefiltered" if prefilter else ""),
                        "amplification", n, chain)
    return build


def _simple(name: str, label: str, chain_fn):
    def build(cfg: ExperimentConfig, n: int, cache: Optional[dict] = None) -> Scenario:
        return Scenario(name, label, n, chain_fn(cfg))
    return build


def _legit_variant(name: str, channel_fn=None, drift: Optional[DeviceDrift] = None):
    def build(cfg: ExperimentConfig, n: int, cache: Optional[dict] = None) -> Scenario:
        ch = channel_fn(cfg.channel) if channel_fn else None
        return Scenario(name, "legit", n, AttackChain.none(), ch, drift)
    return build


def amplifier_chain(gain_db: float, attacker_distance_m: float, prefilter=None) -> AttackChain:
    return AttackChain.amplification(gain_db, AMP_NOISE_FIGURE_DB, prefilter, attacker_distance_m,
                                     amp_source_distance_m=AMP_SOURCE_DISTANCE_M,
                                     amp_drive_noise_dbc=AMP_DRIVE_NOISE_DBC)


PRESETS = {
    "single_band_relay_5m": _simple("single_band_relay_5m", "single_band_relay",
                                    lambda c: AttackChain.single_band_relay(5.0)),
    "single_band_relay_10m": _simple("single_band_relay_10m", "single_band_relay",
                                     lambda c: AttackChain.single_band_relay(10.0)),
    "single_band_relay_15m": _simple("single_band_relay_15m", "single_band_relay",
                                     lambda c: AttackChain.single_band_relay(15.0)),
    "amplification_30dB": _amplification(30.0),
    "amplification_60dB": _amplification(60.0),
    "amplification_64dB": _amplification(64.0),
    "amplification_prefiltered": _amplification(30.0, PREFILTER_BAND_HZ),
    "digital_relay": _simple("digital_relay", "digital_relay",
                             lambda c: AttackChain.digital_relay(c.attacker_device)),
    "playback_8bit": _simple("playback_8bit", "playback", lambda c: AttackChain.playback(8, 8)),
    "playback_16bit": _simple("playback_16bit", "playback", lambda c: AttackChain.playback(16, 16)),
    "playback_highrate": _simple("playback_highrate", "playback",
                                 lambda c: AttackChain.playback(16, 16, record_sample_rate_hz=20e6)),
    "nlos": _legit_variant("nlos", nlos_channel),
    "temperature_drift": _legit_variant("temperature_drift", drift=TEMPERATURE_DRIFT),
    "battery_drift": _legit_variant("battery_drift", drift=BATTERY_DRIFT),
}


def build_scenario(name: str, cfg: ExperimentConfig, count: Optional[int] = None,
                   cache: Optional[dict] = None) -> Scenario:
    """Population of ``name``; legit-variant presets produce legitimate captures."""
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario preset {name!r}") from None
    n = cfg.attack_count if count is None else count
    return builder(cfg, n * cfg.preambles_per_trial, cache)


def _mean_snr(cfg: ExperimentConfig, sc: Scenario) -> float:
    caps = scenario_captures(sc, cfg.device, cfg.modulation, cfg.channel, cfg.receiver, cfg.seed)
    return float(np.mean([snr_db_of(c, cfg.modulation) for c in caps]))


def snr_db_of(cap: LabeledCapture, mod: ModulationScheme) -> float:
    return extract_features(cap.signal, mod)["snr_db"]


def match_amplifier_distance(cfg: ExperimentConfig, gain_db: float, prefilter=None,
                             tol_db: float = SNR_MATCH_TOL_DB, pilot: int = SNR_PILOT,
                             cache: Optional[dict] = None) -> float:
    """Attacker distance at which the amplified signal's mean SNR equals the legitimate one.

    Bisection on ``log10(distance)`` over a fixed pilot batch, so the result
    depends only on the config.  The returned distance brings the pilot
    means within ``tol_db / 2``.
    """
    key = ("distance", gain_db, prefilter, tol_db, pilot, cfg.device, cfg.modulation, cfg.channel,
           cfg.receiver, cfg.seed)
    if cache is not None and key in cache:
        return cache[key]
    target = _mean_snr(cfg, Scenario("pilot", "legit", pilot, role=PILOT_LEGIT_ROLE))
    lo, hi = SNR_BISECT_LOG10_RANGE

    def attack_snr(log_d: float) -> float:
        sc = Scenario("pilot", "amplification", pilot, amplifier_chain(gain_db, 10.0 ** log_d, prefilter),
                      role=PILOT_ATTACK_ROLE)
        return _mean_snr(cfg, sc)

    if attack_snr(lo) < target:
        raise ConfigError(f"{gain_db} dB amplifier cannot reach the legitimate SNR")
    mid = hi
    for _ in range(SNR_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        s = attack_snr(mid)
        if abs(s - target) <= tol_db / 2:
            break
        lo, hi = (mid, hi) if s > target else (lo, mid)
    d = float(10.0 ** mid)
    if cache is not None:
        cache[key] = d
    return d


# -- experiment ----------------------------------------------------------------

def _features(cfg: ExperimentConfig, sc: Scenario,
              cache: Optional[dict] = None) -> List[Tuple[int, Optional[FeatureVector]]]:
    key = ("features", sc, cfg.device, cfg.modulation, cfg.channel, cfg.receiver, cfg.seed)
    if cache is not None and key in cache:
        return cache[key]
    out = []
    for cap in scenario_captures(sc, cfg.device, cfg.modulation, cfg.channel, cfg.receiver, cfg.seed):
        try:
            v = extract_features(cap.signal, cfg.modulation)
        except FobprintError:
            # nothing the receiver could lock on to; the door stays shut
            v = None
        out.append((cap.seed, v))
    if cache is not None:
        cache[key] = out
    return out


def _rates(flags: Sequence[bool]) -> Tuple[Optional[float], Optional[float]]:
    """``(rejected fraction, accepted fraction)``, or ``None`` for an empty population."""
    n = len(flags)
    if n == 0:
        return None, None
    r = sum(flags)
    return r / n, (n - r) / n


def _verdicts(model: DetectorModel, feats, group: int) -> List[dict]:
    rows = []
    for i in range(0, len(feats), group):
        chunk = feats[i:i + group]
        seeds = [s for s, _ in chunk]
        vecs = [v for _, v in chunk]
        if any(v is None for v in vecs):
            rows.append({"seeds": seeds, "z_score": None, "raw_score": None, "rejected": True})
            continue
        verdict = detect(model, vecs if group > 1 else vecs[0])
        rows.append({"seeds": seeds, "z_score": verdict.z_score, "raw_score": verdict.raw_score,
                     "rejected": verdict.rejected})
    return rows


@dataclass
class ExperimentReport:
    """Outcome of one experiment.  ``to_dict`` is the machine report."""

    scenario: str
    config: dict
    threshold: float
    seed: int
    counts: Dict[str, int]
    fpr: Optional[float]
    tnr: Optional[float]
    fnr: Optional[float]
    tpr: Optional[float]
    legit: List[dict]
    attack: List[dict]
    npc: Dict[str, float]
    attack_label: str
    ranking: Optional[List[Tuple[str, float]]] = None
    wall_time_s: Dict[str, float] = field(default_factory=dict)

    @property
    def legit_z(self) -> np.ndarray:
        return np.array([r["z_score"] if r["z_score"] is not None else np.inf for r in self.legit])

    @property
    def attack_z(self) -> np.ndarray:
        return np.array([r["z_score"] if r["z_score"] is not None else np.inf for r in self.attack])

    @property
    def top_feature(self) -> Optional[str]:
        return self.ranking[0][0] if self.ranking else None

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "scenario": self.scenario,
            "attack_label": self.attack_label,
            "seed": self.seed,
            "threshold": self.threshold,
            "counts": self.counts,
            "metrics": {"fpr": self.fpr, "tnr": self.tnr, "fnr": self.fnr, "tpr": self.tpr},
            "npc": self.npc,
            "feature_ranking": [{"feature": n, "weight": w} for n, w in self.ranking] if self.ranking else None,
            "legit": self.legit,
            "attack": self.attack,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["population", "index", "seeds", "z_score", "raw_score", "decision"])
        for pop, rows in (("legit", self.legit), (self.attack_label, self.attack)):
            for i, r in enumerate(rows):
                w.writerow([pop, i, " ".join(str(s) for s in r["seeds"]),
                            "" if r["z_score"] is None else repr(r["z_score"]),
                            "" if r["raw_score"] is None else repr(r["raw_score"]),
                            "Reject" if r["rejected"] else "Accept"])
        return buf.getvalue()

    def summary(self) -> str:
        def pct(x):
            return "n/a" if x is None else f"{100 * x:.2f}%"
        lz, az = self.legit_z, self.attack_z
        lines = [f"scenario {self.scenario} ({self.config['scorer']}, {self.config['system']}, "
                 f"threshold {self.threshold:g}, seed {self.seed})",
                 f"  legit  n={len(lz):4d}  FPR {pct(self.fpr)}  TNR {pct(self.tnr)}"
                 + (f"  median z {np.median(lz):.2f}" if lz.size else ""),
                 f"  attack n={len(az):4d}  FNR {pct(self.fnr)}  TPR {pct(self.tpr)}"
                 + (f"  median z {np.median(az):.2f}" if az.size else "")]
        if self.ranking:
            lines.append("  ReliefF: " + ", ".join(f"{n} {w:.4f}" for n, w in self.ranking))
        return "\n".join(lines)


def train_for(cfg: ExperimentConfig, cache: Optional[dict] = None) -> DetectorModel:
    """Detector trained on the config's legitimate training batch."""
    key = ("model", cfg.scorer, cfg.system, cfg.gamma, cfg.nu, cfg.train_count, cfg.device, cfg.modulation,
           cfg.channel, cfg.receiver, cfg.seed)
    if cache is not None and key in cache:
        return cache[key]
    train = _features(cfg, Scenario(TRAIN_ROLE, "legit", cfg.train_count), cache)
    if any(v is None for _, v in train):
        raise InvalidTrainingSet("a training capture had no detectable preamble")
    kw = {"nu": cfg.nu} if cfg.scorer == "svm" else {}
    model = train_detector([v for _, v in train], cfg.scorer, cfg.system, cfg.gamma,
                           rng=trial_seed(cfg.seed, "npc", 0), **kw)
    if cache is not None:
        cache[key] = model
    return model


def run_experiment(cfg: ExperimentConfig, model: Optional[DetectorModel] = None,
                   cache: Optional[dict] = None) -> ExperimentReport:
    """Generate, train, detect and summarise one preset.

    ``model`` skips training when given (it must match the config's system).
    ``cache`` is a dict shared between calls; it memoises feature batches and
    trained models, so sweeping presets over one config trains once.  The
    report does not depend on whether the cache was warm.
    """
    t0 = time.perf_counter()
    timings = {}
    group = cfg.preambles_per_trial
    if model is None:
        model = train_for(cfg, cache)
    timings["train"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    attack_sc = build_scenario(cfg.preset, cfg, cache=cache)
    if attack_sc.label == "legit":
        # legit-variant presets replace the test batch and have no attack population
        legit_sc = replace(attack_sc, count=cfg.legit_count * group)
        attack_sc = replace(attack_sc, count=0)
    else:
        legit_sc = Scenario(LEGIT_ROLE, "legit", cfg.legit_count * group)
    legit_f = _features(cfg, legit_sc, cache)
    attack_f = _features(cfg, attack_sc, cache)
    timings["generate"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    legit = _verdicts(model, legit_f, group)
    attack = _verdicts(model, attack_f, group)
    fpr, tnr = _rates([r["rejected"] for r in legit])
    tpr, fnr = _rates([r["rejected"] for r in attack])
    timings["detect"] = time.perf_counter() - t2

    ranking = None
    lv = [v for _, v in legit_f if v is not None]
    av = [v for _, v in attack_f if v is not None]
    if lv and av:
        x = np.array([v.values for v in lv + av])
        labels = ["legit"] * len(lv) + [attack_sc.label] * len(av)
        r = rank_features(x, labels, lv[0].names)
        ranking = list(zip(r.names, r.weights))
    timings["total"] = time.perf_counter() - t0

    return ExperimentReport(
        scenario=cfg.preset, config=cfg.to_dict(), threshold=model.threshold_gamma, seed=cfg.seed,
        counts={"train": cfg.train_count, "legit": len(legit), "attack": len(attack),
                "preambles_per_trial": group},
        fpr=fpr, tnr=tnr, fnr=fnr, tpr=tpr, legit=legit, attack=attack,
        npc={"mu": model.norm.mu, "sigma": model.norm.sigma}, attack_label=attack_sc.label,
        ranking=ranking, wall_time_s=timings)


def write_report(report: ExperimentReport, out_dir) -> Dict[str, Path]:
    """``report.json`` and ``scores.csv`` are deterministic; ``timing.json`` is not."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / "report.json", "csv": out / "scores.csv", "timing": out / "timing.json"}
    paths["json"].write_text(report.to_json())
    paths["csv"].write_text(report.to_csv())
    paths["timing"].write_text(json.dumps(report.wall_time_s, indent=1, sort_keys=True) + "\n")
    return paths


# -- datasets ------------------------------------------------------------------

def dataset_scenarios(cfg: ExperimentConfig) -> List[Scenario]:
    scs = [Scenario(LEGIT_ROLE, "legit", cfg.legit_count)]
    scs.extend(build_scenario(name, cfg, cfg.attack_count) for name in cfg.scenarios)
    return scs


def generate_dataset(cfg: ExperimentConfig, out_dir) -> Path:
    """Write every capture of ``cfg`` plus a manifest; returns the manifest path."""
    out = Path(out_dir)
    entries = []
    meta_base = {"sample_rate_hz": cfg.receiver.sample_rate_hz, "modulation": cfg.modulation.kind.value}
    for sc in dataset_scenarios(cfg):
        caps = scenario_captures(sc, cfg.device, cfg.modulation, cfg.channel, cfg.receiver, cfg.seed)
        for i, cap in enumerate(caps):
            rel = f"captures/{sc.name}_{i:04d}"
            meta = CaptureMeta(**meta_base, device_id=cap.device_id, label=cap.label, seed=cap.seed)
            write_capture(out / rel, cap.signal, meta)
            entries.append(ManifestEntry(rel, cap.label, sc.params(), cap.seed))
    info = {"config": cfg.to_dict()}
    return write_manifest(out / "manifest.json", entries, info)


# -- bench ---------------------------------------------------------------------

def bench(sig, mod: ModulationScheme, model: Optional[DetectorModel] = None, repeats: int = 5) -> Dict[str, float]:
    """Median milliseconds per receive-pipeline stage on one capture."""
    if len(sig) == 0:
        raise InvalidTrainingSet("bench needs a non-empty capture")
    fs = sig.sample_rate_hz
    stages = {}

    def timed(name, fn):
        ts = []
        out = None
        for _ in range(repeats):
            t = time.perf_counter()
            out = fn()
            ts.append(time.perf_counter() - t)
        stages[name] = 1e3 * float(np.median(ts))
        return out

    filt = timed("design_filter", lambda: dsp.receiver_filter(mod, fs))
    filtered = timed("filter", lambda: dsp.filter_signal(sig, filt))
    env = timed("demodulate", lambda: dsp.demodulate(filtered, mod))
    pulse = timed("detect_preamble", lambda: dsp.detect_preamble(env, mod, 16))
    span = pulse.preamble_span
    d_rms = timed("rms_normalize", lambda: dsp.rms_normalize(pulse, span))
    timed("f_peak", lambda: peak_frequency(d_rms, span, 1.0 / 64))
    timed("kurtosis", lambda: kurtosis(d_rms, span))
    timed("spectral_brightness", lambda: spectral_brightness(d_rms, span, fs))
    timed("snr_db", lambda: snr_db(pulse, span, pulse.guard_span))
    if mod.kind is ModulationKind.ASK:
        timed("fc_offset", lambda: carrier_offset(filtered, span))
    v = timed("extract_features", lambda: extract_features(sig, mod))
    if model is not None:
        timed("score", lambda: detect(model, v))
    stages["detect_path_total"] = sum(t for k, t in stages.items() if k not in ("extract_features",))
    return stages


def bench_default(cfg: ExperimentConfig) -> Dict[str, float]:
    """Bench on one synthetic capture with a small freshly trained model."""
    sig = capture(cfg.device, cfg.modulation, cfg.channel, cfg.receiver, trial_seed(cfg.seed, "bench", 0))
    small = cfg.with_(train_count=20)
    train = [v for _, v in _features(small, Scenario(TRAIN_ROLE, "legit", 20)) if v is not None]
    model = train_detector(train, cfg.scorer, "pkes", cfg.gamma, rng=cfg.seed)
    return bench(sig, cfg.modulation, model)


__all__ = [
    "ExperimentConfig", "ExperimentReport", "PRESETS", "amplifier_chain", "bench", "bench_default",
    "build_scenario", "dataset_scenarios", "default_attacker_device", "default_channel", "default_device",
    "generate_dataset", "load_config", "match_amplifier_distance", "nlos_channel", "parse_modulation",
    "run_experiment", "train_for", "write_report",
]
