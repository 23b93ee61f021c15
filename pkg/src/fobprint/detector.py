"""One-class scorers, score normalization and the accept/reject decision rules.

Two scorers are provided, both trained on legitimate captures only:

* :class:`KnnModel` scores a vector by its standardized Euclidean distance to
  the k-th nearest training vector.
* :class:`SvmModel` is a one-class SVM with an RBF kernel, solved with a
  sequential minimal optimization loop.  Its score is
  ``log(rho) - log(sum_i a_i K(x_i, x))``: positive exactly outside the
  learned boundary, and for distant probes it grows like ``gamma * d**2``
  instead of saturating at ``rho`` the way the plain decision value does.

Raw scores are turned into z-scores with parameters estimated by repeated
90/10 hold-out splits of the training set (:func:`npc`).
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidInput, InvalidTrainingSet, TrainingFailed
from .features import FeatureVector
from .signal import ModulationScheme

MODEL_FORMAT = "fobprint-detector"
MODEL_VERSION = 1

DEFAULT_NU = 0.05
KKT_TOL = 1e-6
MAX_SMO_ITER = 1_000_000
NPC_ROUNDS = 10
NPC_HOLDOUT = 0.1
SIGMA_FLOOR = 1e-9
MAX_RKE_PREAMBLES = 5

# default Gamma per (system, scorer)
DEFAULT_THRESHOLDS = {
    ("pkes", "knn"): 4.0,
    ("pkes", "svm"): 5.0,
    ("rke", "knn"): 4.5,
    ("rke", "svm"): 5.0,
}
# the ASK preset uses a much looser threshold for both scorers
ASK_PRESET_THRESHOLD = 70.0


class System(str, enum.Enum):
    PKES = "pkes"
    RKE = "rke"


class Decision(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


def _as_matrix(vectors) -> Tuple[np.ndarray, Optional[Tuple[str, ...]]]:
    """Stack feature vectors (or raw rows) into an ``(n, d)`` float array."""
    if isinstance(vectors, np.ndarray):
        x = np.asarray(vectors, dtype=np.float64)
        names = None
    else:
        vectors = list(vectors)
        if not vectors:
            raise InvalidTrainingSet("empty training set")
        names = None
        if isinstance(vectors[0], FeatureVector):
            names = vectors[0].names
            for v in vectors:
                if not isinstance(v, FeatureVector) or v.names != names:
                    raise InvalidTrainingSet("training vectors disagree on feature names")
            vectors = [v.values for v in vectors]
        dims = {np.shape(v) for v in vectors}
        if len(dims) != 1:
            raise InvalidTrainingSet(f"training vectors have mismatched shapes {sorted(dims)}")
        x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidTrainingSet("training data must be a 2-D array of vectors")
    if not np.all(np.isfinite(x)):
        raise InvalidTrainingSet("training data contains non-finite values")
    return x, names


def _safe_std(x: np.ndarray) -> np.ndarray:
    std = x.std(axis=0)
    zero = ~(std > 0)
    if np.any(zero):
        warnings.warn(f"zero variance in dimension(s) {np.flatnonzero(zero).tolist()}; using std=1",
                      RuntimeWarning, stacklevel=3)
        std = np.where(zero, 1.0, std)
    return std


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KnnModel:
    training_vectors: np.ndarray
    std: np.ndarray
    k: int = 1

    kind = "knn"

    def __post_init__(self):
        object.__setattr__(self, "training_vectors", _frozen(self.training_vectors))
        object.__setattr__(self, "std", _frozen(self.std))
        if self.k < 1 or self.k > self.training_vectors.shape[0]:
            raise InvalidTrainingSet(f"k={self.k} outside [1, {self.training_vectors.shape[0]}]")
        if not np.all(self.std > 0):
            raise InvalidTrainingSet("standard deviations must be positive")

    @property
    def dim(self) -> int:
        return self.training_vectors.shape[1]

    def score_many(self, x: np.ndarray) -> np.ndarray:
        z = (x[:, None, :] - self.training_vectors[None, :, :]) / self.std
        d = np.sqrt(np.einsum("ijk,ijk->ij", z, z))
        if self.k == 1:
            return d.min(axis=1)
        return np.partition(d, self.k - 1, axis=1)[:, self.k - 1]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k, "std": self.std.tolist(),
                "training_vectors": self.training_vectors.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "KnnModel":
        return cls(np.array(d["training_vectors"], dtype=np.float64),
                   np.array(d["std"], dtype=np.float64), int(d["k"]))


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray   # standardized coordinates
    coefficients: np.ndarray
    bias: float                   # rho
    rbf_gamma: float
    nu: float
    mean: np.ndarray
    std: np.ndarray
    # solver tolerance in score units; |score| below this is on the boundary
    margin_tol: float = 0.0

    kind = "svm"

    def __post_init__(self):
        for name in ("support_vectors", "coefficients", "mean", "std"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def _log_terms(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mean) / self.std
        d2 = (np.sum(z * z, axis=1)[:, None] + np.sum(self.support_vectors ** 2, axis=1)[None, :]
              - 2.0 * z @ self.support_vectors.T)
        return np.log(self.coefficients)[None, :] - self.rbf_gamma * np.maximum(d2, 0.0)

    def kernel_sum(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self._log_terms(x)).sum(axis=1)

    def decision_value(self, x: np.ndarray) -> np.ndarray:
        """``rho - sum_i a_i K(x_i, x)``; positive on the outlier side."""
        return self.bias - self.kernel_sum(x)

    def score_many(self, x: np.ndarray) -> np.ndarray:
        return math.log(self.bias) - logsumexp(self._log_terms(x), axis=1)

    def outlier_mask(self, x: np.ndarray) -> np.ndarray:
        """Points strictly on the outlier side of the boundary."""
        return self.decision_value(x) > self.margin_tol

    def to_dict(self) -> dict:
        return {"kind": self.kind, "nu": self.nu, "rbf_gamma": self.rbf_gamma, "bias": self.bias,
                "margin_tol": self.margin_tol,
                "mean": self.mean.tolist(), "std": self.std.tolist(),
                "coefficients": self.coefficients.tolist(),
                "support_vectors": self.support_vectors.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        dim = len(d["mean"])
        sv = np.array(d["support_vectors"], dtype=np.float64).reshape(-1, dim)
        return cls(sv, np.array(d["coefficients"], dtype=np.float64), float(d["bias"]),
                   float(d["rbf_gamma"]), float(d["nu"]),
                   np.array(d["mean"], dtype=np.float64), np.array(d["std"], dtype=np.float64),
                   float(d.get("margin_tol", 0.0)))


Scorer = Union[KnnModel, SvmModel]


def train_knn(train, k: int = 1) -> KnnModel:
    """Store the training vectors and their per-dimension (population) std."""
    x, _ = _as_matrix(train)
    if x.shape[0] < 2:
        raise InvalidTrainingSet("k-NN needs at least 2 training vectors")
    return KnnModel(x, _safe_std(x), k)


def _rbf_gram(z: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(z * z, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * z @ z.T, 0.0)
    return np.exp(-gamma * d2)


def solve_one_class(q: np.ndarray, nu: float, tol: float = KKT_TOL,
                    max_iter: int = MAX_SMO_ITER) -> Tuple[np.ndarray, float]:
    """Solve ``min 1/2 a'Qa`` s.t. ``0 <= a_i <= 1``, ``sum a = nu * n``.

    This is the unscaled one-class dual.  Pairs are chosen with
    second-order working-set selection and updated analytically until the
    maximal KKT violation drops below ``tol``.  Returns ``(alpha, rho)``.
    """
    n = q.shape[0]
    total = nu * n
    alpha = np.zeros(n)
    full = int(math.floor(total))
    alpha[:full] = 1.0
    if full < n:
        alpha[full] = total - full
    grad = q @ alpha
    qd = np.diag(q).copy()
    tau = 1e-12

    for _ in range(max_iter):
        up = alpha < 1.0
        low = alpha > 0.0
        # i maximizes -G over the set allowed to increase
        neg_g = np.where(up, -grad, -np.inf)
        i = int(np.argmax(neg_g))
        g_max = neg_g[i]
        g_min = np.min(np.where(low, -grad, np.inf))
        if g_max - g_min < tol:
            break
        # j minimizes the second-order objective decrease among violators
        b = g_max + grad
        cand = low & (b > 0)
        a = qd[i] + qd - 2.0 * q[i]
        a = np.where(a > 0, a, tau)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))

        quad = max(qd[i] + qd[j] - 2.0 * q[i, j], tau)
        t = (grad[j] - grad[i]) / quad
        t = min(t, 1.0 - alpha[i], alpha[j])
        alpha[i] += t
        alpha[j] -= t
        grad += t * (q[:, i] - q[:, j])
    else:
        raise TrainingFailed(f"SMO did not reach KKT tolerance {tol} in {max_iter} iterations")

    free = (alpha > 0.0) & (alpha < 1.0)
    if np.any(free):
        rho = float(np.mean(grad[free]))
    else:
        ub = np.min(np.where(alpha < 1.0, grad, np.inf))
        lb = np.max(np.where(alpha > 0.0, grad, -np.inf))
        rho = float((ub + lb) / 2)
    return alpha, rho


def train_svm(train, nu: float = DEFAULT_NU, gamma: Optional[float] = None,
              tol: float = KKT_TOL, max_iter: int = MAX_SMO_ITER) -> SvmModel:
    """Fit a one-class SVM with an RBF kernel on standardized training data.

    ``gamma`` defaults to ``1 / dim``: after standardization every dimension
    has unit variance, so this is the usual ``1 / (dim * var)`` heuristic.
    Coefficients are rescaled to sum to one (bounded by ``1 / (nu n)``).
    """
    x, _ = _as_matrix(train)
    n, dim = x.shape
    if n < 5:
        raise InvalidTrainingSet("one-class SVM needs at least 5 training vectors")
    if not 0 < nu <= 1:
        raise InvalidTrainingSet(f"nu must lie in (0, 1], got {nu}")
    gamma = 1.0 / dim if gamma is None else float(gamma)
    if not gamma > 0:
        raise InvalidTrainingSet("rbf gamma must be positive")
    mean = x.mean(axis=0)
    std = _safe_std(x)
    z = (x - mean) / std
    alpha, rho = solve_one_class(_rbf_gram(z, gamma), nu, tol, max_iter)
    if not rho > 0:
        raise TrainingFailed(f"non-positive offset rho={rho}")
    scale = nu * n
    sv = alpha > 0
    return SvmModel(z[sv], alpha[sv] / scale, rho / scale, gamma, float(nu), mean, std, tol / scale)


def train_scorer(train, kind: str = "knn", **kw) -> Scorer:
    if kind == "knn":
        return train_knn(train, **kw)
    if kind == "svm":
        return train_svm(train, **kw)
    raise InvalidInput(f"unknown scorer kind {kind!r}")


def _row(model: Scorer, v, names: Optional[Sequence[str]] = None) -> np.ndarray:
    if isinstance(v, FeatureVector):
        if names is not None and tuple(names) != v.names:
            try:
                v = v.subset(names)
            except ValueError:
                raise InvalidInput(f"vector features {v.names} do not cover {tuple(names)}") from None
        x = v.values
    else:
        x = np.asarray(v, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.dim:
        raise InvalidInput(f"expected a {model.dim}-dimensional vector, got shape {x.shape}")
    return x


def score(model, v) -> float:
    """Raw anomaly score of one vector (larger = more anomalous)."""
    if isinstance(model, DetectorModel):
        return float(model.scorer.score_many(_row(model.scorer, v, model.feature_names)[None, :])[0])
    return float(model.score_many(_row(model, v)[None, :])[0])


def score_batch(model: Scorer, vectors) -> np.ndarray:
    x, _ = _as_matrix(vectors)
    if x.shape[1] != model.dim:
        raise InvalidInput(f"expected {model.dim}-dimensional vectors, got {x.shape[1]}")
    return model.score_many(x)


@dataclass(frozen=True)
class NormParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidInput("sigma must be positive")

    def z(self, raw: float) -> float:
        return abs(raw - self.mu) / self.sigma


def npc(train, kind: str = "knn", rng=0, rounds: int = NPC_ROUNDS,
        holdout: float = NPC_HOLDOUT, **scorer_kw) -> NormParams:
    """Estimate z-score parameters from repeated random hold-out splits.

    Each round fits the scorer on a random 90 % of ``train`` (drawn without
    replacement) and scores the remaining 10 %.  The mean and std of all
    held-out scores are returned; the std is floored at ``1e-9``.
    """
    x, _ = _as_matrix(train)
    n = x.shape[0]
    if n < 10:
        raise InvalidTrainingSet("NPC needs at least 10 training vectors")
    rng = np.random.default_rng(rng)
    n_hold = int(math.ceil(holdout * n))
    scores = []
    for _ in range(rounds):
        perm = rng.permutation(n)
        held, fit = perm[:n_hold], perm[n_hold:]
        model = train_scorer(x[fit], kind, **scorer_kw)
        scores.append(model.score_many(x[held]))
    s = np.concatenate(scores)
    return NormParams(float(s.mean()), max(float(s.std()), SIGMA_FLOOR))


@dataclass(frozen=True, eq=False)
class DetectorModel:
    scorer: Scorer
    norm: NormParams
    threshold_gamma: float
    system: System = System.PKES
    feature_names: Optional[Tuple[str, ...]] = None
    modulation: Optional[ModulationScheme] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.threshold_gamma > 0:
            raise InvalidInput("threshold must be positive")
        object.__setattr__(self, "system", System(self.system))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def z_score(self, v) -> Tuple[float, float]:
        raw = score(self, v)
        return self.norm.z(raw), raw

    def with_threshold(self, gamma: float) -> "DetectorModel":
        return DetectorModel(self.scorer, self.norm, gamma, self.system, self.feature_names,
                             self.modulation, dict(self.meta))

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "system": self.system.value,
            "threshold": self.threshold_gamma,
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "modulation": self.modulation.to_dict() if self.modulation else None,
            "npc": {"mu": self.norm.mu, "sigma": self.norm.sigma},
            "scorer": self.scorer.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorModel":
        if d.get("format") != MODEL_FORMAT:
            raise InvalidInput(f"not a detector model document (format={d.get('format')!r})")
        if d.get("version") != MODEL_VERSION:
            raise InvalidInput(f"unsupported model version {d.get('version')!r}")
        s = d["scorer"]
        scorer = KnnModel.from_dict(s) if s["kind"] == "knn" else SvmModel.from_dict(s)
        mod = ModulationScheme.from_dict(d["modulation"]) if d.get("modulation") else None
        return cls(scorer, NormParams(float(d["npc"]["mu"]), float(d["npc"]["sigma"])),
                   float(d["threshold"]), System(d["system"]), d.get("feature_names"), mod,
                   d.get("meta") or {})


def save_model(model: DetectorModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=1)
        fh.write("\n")


def load_model(path) -> DetectorModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: {exc}") from None
    return DetectorModel.from_dict(doc)


def default_threshold(system, kind: str) -> float:
    return DEFAULT_THRESHOLDS[(System(system).value, kind)]


def train_detector(train: Sequence[FeatureVector], kind: str = "knn", system="pkes",
                   threshold: Optional[float] = None, rng=0, **scorer_kw) -> DetectorModel:
    """Fit a scorer on all of ``train`` and its NPC parameters.

    For the RKE system the vectors are reduced to ``f_peak`` and
    ``spectral_brightness`` first.
    """
    from .features import RKE_FEATURES

    system = System(system)
    train = list(train)
    if not train:
        raise InvalidTrainingSet("empty training set")
    if system is System.RKE and isinstance(train[0], FeatureVector):
        train = [v.subset(RKE_FEATURES) for v in train]
    names = train[0].names if isinstance(train[0], FeatureVector) else None
    mod = train[0].modulation if isinstance(train[0], FeatureVector) else None
    scorer = train_scorer(train, kind, **scorer_kw)
    norm = npc(train, kind, rng, **scorer_kw)
    gamma = default_threshold(system, kind) if threshold is None else float(threshold)
    return DetectorModel(scorer, norm, gamma, system, names, mod)


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    z_score: float
    raw_score: float
    per_preamble: Optional[Tuple[Tuple[float, bool], ...]] = None

    @property
    def rejected(self) -> bool:
        return self.decision is Decision.REJECT

    def to_dict(self) -> dict:
        d = {"decision": self.decision.value, "z_score": self.z_score, "raw_score": self.raw_score}
        if self.per_preamble is not None:
            d["per_preamble"] = [{"z_score": z, "flagged": f} for z, f in self.per_preamble]
        return d


def detect_pkes(model: DetectorModel, v) -> Verdict:
    """Reject iff the z-score of ``v`` exceeds the model threshold."""
    if model.system is not System.PKES:
        raise InvalidInput("detect_pkes needs a PKES model")
    z, raw = model.z_score(v)
    return Verdict(Decision.REJECT if z > model.threshold_gamma else Decision.ACCEPT, z, raw)


def rke_vote(flags: Sequence[bool]) -> bool:
    """Majority rule over N <= 5 preambles: attack iff flagged > floor(N/2)."""
    n = len(flags)
    if not 1 <= n <= MAX_RKE_PREAMBLES:
        raise InvalidInput(f"RKE voting takes 1..{MAX_RKE_PREAMBLES} preambles, got {n}")
    return sum(bool(f) for f in flags) > n // 2


def detect_rke(model: DetectorModel, preambles: Sequence) -> Verdict:
    """Vote over the per-preamble z-score decisions of one RKE transmission.

    The reported ``z_score``/``raw_score`` are the medians over preambles.
    """
    if model.system is not System.RKE:
        raise InvalidInput("detect_rke needs an RKE model")
    preambles = list(preambles)
    if not preambles:
        raise InvalidInput("no preambles to vote on")
    per = [model.z_score(v) for v in preambles]
    flags = [z > model.threshold_gamma for z, _ in per]
    attack = rke_vote(flags)
    zs = np.array([z for z, _ in per])
    raws = np.array([r for _, r in per])
    return Verdict(Decision.REJECT if attack else Decision.ACCEPT, float(np.median(zs)),
                   float(np.median(raws)), tuple((float(z), bool(f)) for (z, _), f in zip(per, flags)))


def detect(model: DetectorModel, v) -> Verdict:
    if model.system is System.RKE:
        return detect_rke(model, v if isinstance(v, (list, tuple)) else [v])
    return detect_pkes(model, v)
