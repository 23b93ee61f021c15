"""Capture files and dataset manifests.

A capture is a pair of files sharing a stem:

``<stem>.cf32``
    Raw samples, interleaved little-endian float32 ``I0 Q0 I1 Q1 ...``
    (8 bytes per complex sample, no header).
``<stem>.json``
    Sidecar header with ``sample_rate_hz``, ``nominal_carrier_hz``,
    ``modulation``, ``device_id``, ``label`` and ``seed``.

A dataset is a JSON manifest listing captures (paths relative to the
manifest) with a label, free-form scenario parameters and the trial seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from .errors import ManifestError, ParseError, TruncatedFile
from .signal import IqBuffer

DATA_SUFFIX = ".cf32"
HEADER_SUFFIX = ".json"
SAMPLE_DTYPE = np.dtype("<f4")

DATASET_FORMAT = "fobprint-dataset"
DATASET_VERSION = 1
LABELS = ("legit", "single_band_relay", "amplification", "digital_relay", "playback")

PathLike = Union[str, os.PathLike]


@dataclass
class CaptureMeta:
    sample_rate_hz: float
    nominal_carrier_hz: float = 433.92e6
    modulation: str = "FSK"
    device_id: str = ""
    label: str = "legit"
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict, source: str = "<header>") -> "CaptureMeta":
        if not isinstance(d, dict):
            raise ParseError(f"{source}: header is not an object")
        try:
            rate = float(d["sample_rate_hz"])
        except KeyError:
            raise ParseError(f"{source}: missing sample_rate_hz") from None
        except (TypeError, ValueError):
            raise ParseError(f"{source}: sample_rate_hz is not a number") from None
        if not rate > 0:
            raise ParseError(f"{source}: sample_rate_hz must be positive")
        seed = d.get("seed")
        try:
            return cls(rate, float(d.get("nominal_carrier_hz", 433.92e6)), str(d.get("modulation", "FSK")),
                       str(d.get("device_id", "")), str(d.get("label", "legit")),
                       None if seed is None else int(seed))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{source}: {exc}") from None


def _stem(path: PathLike) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (DATA_SUFFIX, HEADER_SUFFIX) else p


def capture_paths(path: PathLike) -> Tuple[Path, Path]:
    """``(data, header)`` paths for a stem or either member of the pair."""
    s = _stem(path)
    return s.with_name(s.name + DATA_SUFFIX), s.with_name(s.name + HEADER_SUFFIX)


def write_capture(path: PathLike, sig: IqBuffer, meta: Optional[CaptureMeta] = None) -> Tuple[Path, Path]:
    """Write ``sig`` as float32 I/Q plus its JSON sidecar; returns both paths."""
    data_path, header_path = capture_paths(path)
    meta = meta or CaptureMeta(sig.sample_rate_hz)
    if meta.sample_rate_hz != sig.sample_rate_hz:
        meta = CaptureMeta(**{**meta.to_dict(), "sample_rate_hz": sig.sample_rate_hz})
    inter = np.empty(2 * len(sig), dtype=SAMPLE_DTYPE)
    inter[0::2] = sig.samples.real
    inter[1::2] = sig.samples.imag
    data_path.parent.mkdir(parents=True, exist_ok=True)
    inter.tofile(data_path)
    with open(header_path, "w") as fh:
        json.dump(meta.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return data_path, header_path


def read_header(path: PathLike) -> CaptureMeta:
    _, header_path = capture_paths(path)
    try:
        with open(header_path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ParseError(f"{header_path}: sidecar header not found") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{header_path}: {exc}") from None
    return CaptureMeta.from_dict(doc, str(header_path))


def read_capture(path: PathLike) -> Tuple[IqBuffer, CaptureMeta]:
    """Inverse of :func:`write_capture`; samples come back bit-exact."""
    data_path, _ = capture_paths(path)
    meta = read_header(path)
    try:
        raw = np.fromfile(data_path, dtype=np.uint8)
    except FileNotFoundError:
        raise ParseError(f"{data_path}: sample file not found") from None
    if raw.shape[0] % 8:
        raise TruncatedFile(f"{data_path}: {raw.shape[0]} bytes is not a whole number of I/Q pairs")
    inter = raw.view(SAMPLE_DTYPE)
    # assign the parts directly; re + 1j * im would turn -0.0 into +0.0
    samples = np.empty(inter.shape[0] // 2, dtype=np.complex128)
    samples.real = inter[0::2]
    samples.imag = inter[1::2]
    return IqBuffer(samples, meta.sample_rate_hz), meta


# -- datasets ----------------------------------------------------------------

@dataclass
class ManifestEntry:
    path: str
    label: str
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {"path": self.path, "label": self.label, "params": self.params, "seed": self.seed}


class Dataset:
    """Manifest-backed collection of labeled captures, read lazily.

    Construction validates the manifest (labels, paths); samples are only
    read while iterating.
    """

    def __init__(self, manifest_path: PathLike, entries: List[ManifestEntry], info: Optional[dict] = None):
        self.manifest_path = Path(manifest_path)
        self.root = self.manifest_path.parent
        self.entries = entries
        self.info = info or {}

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def __iter__(self) -> Iterator[Tuple[IqBuffer, str]]:
        for entry in self.entries:
            sig, _ = read_capture(self.resolve(entry))
            yield sig, entry.label

    def items(self) -> Iterator[Tuple[ManifestEntry, IqBuffer, CaptureMeta]]:
        for entry in self.entries:
            sig, meta = read_capture(self.resolve(entry))
            yield entry, sig, meta

    def labels(self) -> List[str]:
        return [e.label for e in self.entries]


def write_manifest(path: PathLike, entries: List[ManifestEntry], info: Optional[dict] = None) -> Path:
    path = Path(path)
    doc = {"format": DATASET_FORMAT, "version": DATASET_VERSION, "info": info or {},
           "entries": [e.to_dict() for e in entries]}
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def load_dataset(manifest_path: PathLike) -> Dataset:
    manifest_path = Path(manifest_path)
    try:
        with open(manifest_path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ManifestError(f"{manifest_path}: manifest not found") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestError(f"{manifest_path}: {exc}") from None
    if isinstance(doc, list):
        raw_entries, info = doc, {}
    elif isinstance(doc, dict):
        raw_entries, info = doc.get("entries", []), doc.get("info", {})
    else:
        raise ManifestError(f"{manifest_path}: manifest must be an object or a list")
    if not isinstance(raw_entries, list):
        raise ManifestError(f"{manifest_path}: 'entries' must be a list")

    entries = []
    ds = Dataset(manifest_path, entries, info)
    for i, e in enumerate(raw_entries):
        if not isinstance(e, dict) or "path" not in e or "label" not in e:
            raise ManifestError(f"{manifest_path}: entry {i} needs 'path' and 'label'")
        if e["label"] not in LABELS:
            raise ManifestError(f"{manifest_path}: entry {i} ({e['path']}) has unknown label {e['label']!r}")
        seed = e.get("seed")
        entry = ManifestEntry(str(e["path"]), e["label"], dict(e.get("params") or {}),
                              None if seed is None else int(seed))
        data_path, header_path = capture_paths(ds.resolve(entry))
        if not data_path.exists() or not header_path.exists():
            raise ManifestError(f"{manifest_path}: entry {i} points at missing capture {entry.path}")
        entries.append(entry)
    return ds
