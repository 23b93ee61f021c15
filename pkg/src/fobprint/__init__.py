"""RF fingerprinting of key-fob transmissions for relay and replay detection.

Modules
-------
signal    sample containers and spectra
synth     fob transmitter, channel and attacker hardware simulation
dsp       receiver filtering, demodulation and preamble segmentation
features  fingerprint features
detector  one-class scorers, z-normalization and verdicts
relief    ReliefF feature ranking
io        capture files and dataset manifests
harness   scenario presets and experiments
cli       ``fobprint`` command line
"""

from .errors import FobprintError
from .signal import IqBuffer, ModulationScheme, PulseSignal
from .features import FeatureVector, extract_features
from .synth import AttackChain, ChannelProfile, DeviceProfile, ReceiverConfig, capture
from .detector import DetectorModel, Verdict, detect, train_detector

__version__ = "0.1.0"

__all__ = [
    "AttackChain", "ChannelProfile", "DetectorModel", "DeviceProfile", "FeatureVector", "FobprintError",
    "IqBuffer", "ModulationScheme", "PulseSignal", "ReceiverConfig", "Verdict", "capture", "detect",
    "extract_features", "train_detector",
]
