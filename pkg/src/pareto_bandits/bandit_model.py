"""Bandit instances, observation sampling, and instance file I/O.

Randomness is counter-based: a RngStream owns one Philox substream per arm
(plus a reserved one for instance generation), keyed by (seed, lane). An
arm's n-th observation therefore depends only on (seed, arm, n) and never on
how pulls interleave, which also makes block pre-generation safe.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .pareto_core import as_mean_matrix

__all__ = [
    "BanditInstance",
    "BernoulliIndependent",
    "GaussianDiagonal",
    "InstanceParseError",
    "RngStream",
    "covboost_instance",
    "default_sigma",
    "gen_lower_bound_instance",
    "gen_random_bernoulli",
    "load_instance",
    "sample",
    "write_instance",
]

_U64 = 2**64


class InstanceParseError(ValueError):
    """Malformed instance file; message names the offending row/column."""


@dataclass(frozen=True)
class GaussianDiagonal:
    """Gaussian marginals with one shared diagonal variance vector."""

    variances: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("variances must be a finite non-negative D-vector")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "variances", v)


@dataclass(frozen=True)
class BernoulliIndependent:
    """Independent Bernoulli coordinates; means must lie in [0, 1]."""


@dataclass(frozen=True)
class BanditInstance:
    means: np.ndarray
    family: GaussianDiagonal | BernoulliIndependent
    scale: np.ndarray = None
    labels: tuple = None

    def __post_init__(self):
        arr = as_mean_matrix(self.means)
        if arr.shape[0] < 2:
            raise ValueError("instances need K >= 2 arms")
        object.__setattr__(self, "means", arr)
        K, D = arr.shape
        if isinstance(self.family, GaussianDiagonal):
            if self.family.variances.shape != (D,):
                raise ValueError("variance vector length must match D")
        elif isinstance(self.family, BernoulliIndependent):
            if np.any(arr < 0) or np.any(arr > 1):
                raise ValueError("Bernoulli means must lie in [0, 1]")
        else:
            raise TypeError(f"unknown family: {self.family!r}")
        scale = np.ones(D) if self.scale is None else np.asarray(self.scale, dtype=np.float64)
        if scale.shape != (D,) or not np.all(np.isfinite(scale)) or np.any(scale <= 0):
            raise ValueError("scale must be a strictly positive D-vector")
        scale = scale.copy()
        scale.flags.writeable = False
        object.__setattr__(self, "scale", scale)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != K:
                raise ValueError("labels length must match K")
            object.__setattr__(self, "labels", labels)

    @property
    def n_arms(self) -> int:
        return self.means.shape[0]

    @property
    def n_objectives(self) -> int:
        return self.means.shape[1]

    def digest(self) -> str:
        """Stable short content hash (means, family, scale)."""
        h = hashlib.sha256()
        h.update(self.means.tobytes())
        if isinstance(self.family, GaussianDiagonal):
            h.update(b"gaussian")
            h.update(self.family.variances.tobytes())
        else:
            h.update(b"bernoulli")
        h.update(self.scale.tobytes())
        return h.hexdigest()[:12]


def default_sigma(instance: BanditInstance) -> float:
    """Default subgaussian constant: 1/2 for Bernoulli, 1 for Gaussian."""
    return 0.5 if isinstance(instance.family, BernoulliIndependent) else 1.0


class RngStream:
    """Counter-based random stream with one Philox lane per arm.

    Lane 0 is reserved for instance generation; arm a uses lane a + 1. The
    same seed always reproduces the same observation sequence.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not (0 <= seed < _U64):
            raise ValueError("seed must fit in 64 bits")
        self.seed = seed
        self._gens: dict[int, np.random.Generator] = {}

    def _lane(self, lane: int) -> np.random.Generator:
        gen = self._gens.get(lane)
        if gen is None:
            gen = np.random.Generator(np.random.Philox(key=self.seed * _U64 + lane))
            self._gens[lane] = gen
        return gen

    def generation_stream(self) -> np.random.Generator:
        return self._lane(0)

    def draw_block(self, instance: BanditInstance, arm: int, n: int) -> np.ndarray:
        """Next n observations of one arm, shape (n, D), already rescaled."""
        if not (0 <= arm < instance.n_arms):
            raise IndexError(f"arm index out of range: {arm}")
        gen = self._lane(arm + 1)
        D = instance.n_objectives
        if isinstance(instance.family, GaussianDiagonal):
            noise = gen.standard_normal((n, D))
            obs = instance.means[arm] + noise * np.sqrt(instance.family.variances)
        else:
            obs = (gen.random((n, D)) < instance.means[arm]).astype(np.float64)
        obs /= instance.scale
        return obs


def sample(instance: BanditInstance, arm: int, rng: RngStream) -> np.ndarray:
    """One observation vector for an arm (coordinate-wise rescaled by scale)."""
    return rng.draw_block(instance, arm, 1)[0]


def gen_random_bernoulli(K: int, D: int, rng: RngStream) -> BanditInstance:
    """Bernoulli instance with means drawn uniformly on [0, 1]."""
    if K < 2:
        raise ValueError("K must be >= 2")
    if D < 1:
        raise ValueError("D must be >= 1")
    means = rng.generation_stream().random((K, D))
    return BanditInstance(means=means, family=BernoulliIndependent())


def gen_lower_bound_instance(
    p: int,
    omega: float,
    mu0=0.0,
    D: int = 2,
    alphas=(),
) -> BanditInstance:
    """Hard two-coordinate Gaussian family with p Pareto-optimal arms.

    Arms i = 1..p (row i-1) put +/- multiples of omega in the first two
    coordinates and copy the base point elsewhere: the last three arms use
    2^(p-i) * omega, the remaining ones (4 + 2i) * omega. Optional extra arms
    mu0 - alpha with 0 < alpha < omega can be appended; their gap values are
    whatever the base point makes them.
    """
    if p < 3:
        raise ValueError("p must be >= 3")
    if omega <= 0:
        raise ValueError("omega must be > 0")
    if D < 2:
        raise ValueError("D must be >= 2")
    base = np.broadcast_to(np.asarray(mu0, dtype=np.float64), (D,)).copy()
    rows = []
    for i in range(1, p + 1):
        lead = (2 ** (p - i)) * omega if i >= p - 2 else (4 + 2 * i) * omega
        row = base.copy()
        row[0], row[1] = lead, -lead
        rows.append(row)
    for a in alphas:
        a = float(a)
        if not (0 < a < omega):
            raise ValueError("extra-arm offsets must satisfy 0 < alpha < omega")
        rows.append(base - a)
    return BanditInstance(
        means=np.stack(rows), family=GaussianDiagonal(np.ones(D))
    )


# ---------------------------------------------------------------------------
# COV-BOOST immunogenicity data (log-scale titres, two prime schedules x ten
# boosters; three objectives). Pooled variances are shared across arms, and
# observations are rescaled by the pooled standard deviation so the marginals
# the algorithms see are unit-variance.
# ---------------------------------------------------------------------------

_COVBOOST_VARIANCES = (0.70, 0.83, 1.54)

_COVBOOST_ROWS = [
    # prime BNT/BNT
    ("BNT/BNT+ChAd", 9.50, 6.86, 4.56),
    ("BNT/BNT+NVX", 9.29, 6.64, 4.04),
    ("BNT/BNT+NVX-half", 9.05, 6.41, 3.56),
    ("BNT/BNT+BNT", 10.21, 7.49, 4.43),
    ("BNT/BNT+BNT-half", 10.05, 7.20, 4.36),
    ("BNT/BNT+VLA", 8.34, 5.67, 3.51),
    ("BNT/BNT+VLA-half", 8.22, 5.46, 3.64),
    ("BNT/BNT+Ad26", 9.75, 7.27, 4.71),
    ("BNT/BNT+m1273", 10.43, 7.61, 4.72),
    ("BNT/BNT+CVn", 8.94, 6.19, 3.84),
    # prime ChAd/ChAd
    ("ChAd/ChAd+ChAd", 7.81, 5.26, 3.97),
    ("ChAd/ChAd+NVX", 8.85, 6.59, 4.73),
    ("ChAd/ChAd+NVX-half", 8.44, 6.15, 4.59),
    ("ChAd/ChAd+BNT", 9.93, 7.39, 4.75),
    ("ChAd/ChAd+BNT-half", 8.71, 7.20, 4.91),
    ("ChAd/ChAd+VLA", 7.51, 5.31, 3.96),
    ("ChAd/ChAd+VLA-half", 7.27, 4.99, 4.02),
    ("ChAd/ChAd+Ad26", 8.62, 6.33, 4.66),
    ("ChAd/ChAd+m1273", 10.35, 7.77, 5.00),
    ("ChAd/ChAd+CVn", 8.29, 5.92, 3.87),
]


def covboost_instance() -> BanditInstance:
    """The 20-arm, 3-objective vaccine booster instance, in table order."""
    means = np.array([row[1:] for row in _COVBOOST_ROWS])
    labels = tuple(row[0] for row in _COVBOOST_ROWS)
    variances = np.asarray(_COVBOOST_VARIANCES)
    return BanditInstance(
        means=means,
        family=GaussianDiagonal(variances),
        scale=np.sqrt(variances),
        labels=labels,
    )


# ---------------------------------------------------------------------------
# CSV round trip. Header: arm,label,family,param_kind,c1..cD. One `means`
# row per arm; Gaussian instances add a `variance` row; `scale` optional.
# UTF-8, comma separator, '.' decimal point.
# ---------------------------------------------------------------------------

def write_instance(instance: BanditInstance, path) -> None:
    K, D = instance.means.shape
    fam = "gaussian" if isinstance(instance.family, GaussianDiagonal) else "bernoulli"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arm", "label", "family", "param_kind"] + [f"c{d+1}" for d in range(D)])
        for a in range(K):
            label = instance.labels[a] if instance.labels else f"arm{a}"
            w.writerow([a, label, fam, "means"] + [repr(float(x)) for x in instance.means[a]])
        if fam == "gaussian":
            w.writerow(["", "", fam, "variance"] + [repr(float(x)) for x in instance.family.variances])
        if not np.all(instance.scale == 1.0):
            w.writerow(["", "", fam, "scale"] + [repr(float(x)) for x in instance.scale])


def _parse_float(cell: str, row: int, col: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise InstanceParseError(f"row {row}, column {col}: non-numeric cell {cell!r}") from None
    if math.isnan(v):
        raise InstanceParseError(f"row {row}, column {col}: NaN is not allowed")
    return v


def load_instance(path) -> BanditInstance:
    """Parse an instance CSV; raises InstanceParseError naming row/column."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise InstanceParseError("row 1: empty file")
    header = rows[0]
    if header[:4] != ["arm", "label", "family", "param_kind"]:
        raise InstanceParseError(
            "row 1: header must start with arm,label,family,param_kind"
        )
    D = len(header) - 4
    if D < 1 or header[4:] != [f"c{d+1}" for d in range(D)]:
        raise InstanceParseError("row 1: value columns must be labelled c1..cD")

    means: dict[int, list[float]] = {}
    labels: dict[int, str] = {}
    family = None
    variance = None
    scale = None
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 4 + D:
            raise InstanceParseError(
                f"row {r}, column {len(row)}: expected {4 + D} cells, got {len(row)}"
            )
        fam = row[2].strip().lower()
        if fam not in ("gaussian", "bernoulli"):
            raise InstanceParseError(f"row {r}, column 3: unknown family {row[2]!r}")
        if family is None:
            family = fam
        elif fam != family:
            raise InstanceParseError(f"row {r}, column 3: inconsistent family {row[2]!r}")
        kind = row[3].strip().lower()
        values = [_parse_float(row[4 + d], r, 5 + d) for d in range(D)]
        if kind == "means":
            try:
                arm = int(row[0])
            except ValueError:
                raise InstanceParseError(
                    f"row {r}, column 1: arm index must be an integer, got {row[0]!r}"
                ) from None
            if arm in means:
                raise InstanceParseError(f"row {r}, column 1: duplicate arm {arm}")
            means[arm] = values
            labels[arm] = row[1]
        elif kind == "variance":
            if variance is not None:
                raise InstanceParseError(f"row {r}, column 4: duplicate variance row")
            variance = values
        elif kind == "scale":
            if scale is not None:
                raise InstanceParseError(f"row {r}, column 4: duplicate scale row")
            scale = values
        else:
            raise InstanceParseError(f"row {r}, column 4: unknown param_kind {row[3]!r}")

    if family is None or not means:
        raise InstanceParseError("row 2: no means rows found")
    K = len(means)
    if sorted(means) != list(range(K)):
        raise InstanceParseError("row 2: arm indices must be 0..K-1 with no holes")
    if K < 2:
        raise ValueError("instances need K >= 2 arms")
    mean_matrix = np.array([means[a] for a in range(K)])
    if family == "gaussian":
        if variance is None:
            raise InstanceParseError("row 2: gaussian instance needs a variance row")
        fam_obj = GaussianDiagonal(np.asarray(variance))
    else:
        if variance is not None:
            raise InstanceParseError("row 2: bernoulli instances take no variance row")
        fam_obj = BernoulliIndependent()
    return BanditInstance(
        means=mean_matrix,
        family=fam_obj,
        scale=None if scale is None else np.asarray(scale),
        labels=tuple(labels[a] for a in range(K)),
    )
