"""``fobprint`` command line.

Human-readable text goes to stdout; machine reports (JSON/CSV) go to the
``--out`` directory.  The exit code is 0 on success and nonzero iff an
error occurred (1 for pipeline errors, 2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import harness
from .detector import System, detect, load_model, save_model, train_detector
from .errors import ConfigError, FobprintError, InvalidInput, InvalidTrainingSet, ManifestError
from .features import extract_features
from .io import load_dataset, read_capture
from .relief import rank_features


def _config(args) -> harness.ExperimentConfig:
    cfg = harness.load_config(args.config) if args.config else harness.ExperimentConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "scorer", None):
        overrides["scorer"] = args.scorer
    if getattr(args, "system", None):
        overrides["system"] = args.system
    if getattr(args, "preset", None):
        overrides["preset"] = args.preset
    try:
        return cfg.with_(**overrides)
    except FobprintError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _out(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def _dataset_features(ds, modulation_override=None):
    feats, labels = [], []
    for entry, sig, meta in ds.items():
        mod = modulation_override or harness.parse_modulation(meta.modulation)
        feats.append(extract_features(sig, mod))
        labels.append(entry.label)
    return feats, labels


def cmd_synth(args) -> int:
    cfg = _config(args)
    manifest = harness.generate_dataset(cfg, _out(args, "dataset"))
    ds = load_dataset(manifest)
    counts = {}
    for label in ds.labels():
        counts[label] = counts.get(label, 0) + 1
    print(f"wrote {len(ds)} captures to {manifest.parent}")
    for label, n in counts.items():
        print(f"  {label:18s} {n}")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.dataset)
    attack = sorted({e.label for e in ds.entries if e.label != "legit"})
    if attack:
        raise InvalidTrainingSet(f"training set contains attack-labeled entries ({', '.join(attack)}); "
                                 "train on legitimate captures only")
    if len(ds) < 10:
        raise InvalidTrainingSet(f"need at least 10 legitimate captures, got {len(ds)}")
    feats, _ = _dataset_features(ds)
    scorer = args.scorer or "knn"
    system = args.system or "pkes"
    seed = 0 if args.seed is None else args.seed
    model = train_detector(feats, scorer, system, args.threshold, rng=seed)
    out = Path(args.model) if args.model else _out(args, ".") / "model.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    print(f"trained {scorer} ({system}) on {len(feats)} captures: NPC mu={model.norm.mu:.6g} "
          f"sigma={model.norm.sigma:.6g}, threshold {model.threshold_gamma:g}")
    print(f"model written to {out}")
    return 0


def cmd_detect(args) -> int:
    if not args.model:
        raise ConfigError("detect needs --model")
    model = load_model(args.model)
    mod = model.modulation or harness.parse_modulation("FSK")
    if not args.captures:
        raise InvalidInput("no captures given")
    vecs = []
    for path in args.captures:
        sig, _ = read_capture(path)
        vecs.append((path, extract_features(sig, mod)))

    results = []
    if model.system is System.RKE:
        # all captures given form one transmission
        verdict = detect(model, [v for _, v in vecs])
        results.append({"captures": [str(p) for p, _ in vecs], **verdict.to_dict()})
        print(f"{verdict.decision.value}  z={verdict.z_score:.3f}  ({len(vecs)} preambles)")
    else:
        for path, v in vecs:
            verdict = detect(model, v)
            results.append({"capture": str(path), **verdict.to_dict()})
            print(f"{verdict.decision.value}  z={verdict.z_score:.3f}  {path}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verdicts.json").write_text(json.dumps(results, indent=1, sort_keys=True) + "\n")
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    report = harness.run_experiment(cfg)
    print(report.summary())
    if args.out:
        paths = harness.write_report(report, args.out)
        print(f"report written to {paths['json']}")
    return 0


def cmd_rank_features(args) -> int:
    ds = load_dataset(args.dataset)
    feats, labels = _dataset_features(ds)
    if not feats:
        raise ManifestError("dataset is empty")
    names = feats[0].names
    ranking = rank_features(np.array([v.values for v in feats]), labels, names, args.neighbors)
    for i, (n, w) in enumerate(zip(ranking.names, ranking.weights), 1):
        print(f"{i}. {n:20s} {w: .6f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = [{"feature": n, "weight": w} for n, w in zip(ranking.names, ranking.weights)]
        (out / "ranking.json").write_text(json.dumps(doc, indent=1) + "\n")
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.capture:
        sig, meta = read_capture(args.capture)
        model = load_model(args.model) if args.model else None
        mod = (model.modulation if model and model.modulation else harness.parse_modulation(meta.modulation))
        stages = harness.bench(sig, mod, model)
    else:
        stages = harness.bench_default(cfg)
    for name, ms in stages.items():
        print(f"{name:20s} {ms:9.3f} ms")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.json").write_text(json.dumps(stages, indent=1) + "\n")
    return 0


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fobprint", description="RF fingerprinting of key-fob transmissions.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True, scorer=False):
        if config:
            sp.add_argument("--config", help="scenario config (JSON)")
        sp.add_argument("--seed", type=_u64, help="64-bit seed")
        sp.add_argument("--out", help="output directory")
        if scorer:
            sp.add_argument("--scorer", choices=("knn", "svm"))
            sp.add_argument("--system", choices=("pkes", "rke"))

    sp = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    common(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="train a detector on legitimate captures")
    sp.add_argument("dataset", help="dataset manifest")
    sp.add_argument("--model", help="model file to write (default <out>/model.json)")
    sp.add_argument("--threshold", type=float, help="override the default threshold")
    common(sp, config=False, scorer=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("detect", help="accept or reject captures")
    sp.add_argument("captures", nargs="*", help="capture files (.cf32 or stem)")
    sp.add_argument("--model", help="trained model file")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("experiment", help="run a scenario preset end to end")
    sp.add_argument("--preset", choices=sorted(harness.PRESETS), help="override the config's preset")
    common(sp, scorer=True)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("rank-features", help="ReliefF ranking of a labeled dataset")
    sp.add_argument("dataset", help="dataset manifest")
    sp.add_argument("--neighbors", type=int, default=10)
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_rank_features)

    sp = sub.add_parser("bench", help="time each pipeline stage on one capture")
    sp.add_argument("capture", nargs="?", help="capture to time (default: one synthetic capture)")
    sp.add_argument("--model", help="model to include the scoring stage")
    common(sp, scorer=True)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FobprintError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
