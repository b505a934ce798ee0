"""Discretized 1-D type axis, distributions on it, and cross-reactivity kernels.

The type axis ("shape space") is the unit interval [0, 1] cut into M equal
bins with centers at (i + 0.5)/M.  Attacker and defender populations are
probability vectors over those bins; recognition between a defender bin d
and an attacker bin a is a Gaussian kernel in their distance.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class ShapeSpace:
    """Uniform discretization of the type axis [0, 1].

    M bins, centers at (i + 0.5)/M.  ``periodic`` identifies 0 with 1, which
    is required by cyclic-shift experiments.
    """

    M: int
    periodic: bool = False
    centers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.M < 2:
            raise ValueError(f"need at least 2 bins, got M={self.M}")
        object.__setattr__(
            self, "centers", (np.arange(self.M) + 0.5) / self.M
        )

    @property
    def bin_width(self) -> float:
        return 1.0 / self.M

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Pairwise |x - y|, wrapped around the circle if periodic."""
        d = np.abs(np.asarray(x) - np.asarray(y))
        if self.periodic:
            d = np.minimum(d, 1.0 - d)
        return d

    def nearest_bin(self, x: float) -> int:
        return int(np.argmin(np.abs(self.centers - x)))

    def __eq__(self, other):
        return (
            isinstance(other, ShapeSpace)
            and self.M == other.M
            and self.periodic == other.periodic
        )

    def __hash__(self):
        return hash((self.M, self.periodic))


def make_grid(M: int, periodic: bool = False) -> ShapeSpace:
    """Build the discretized type axis with M >= 2 bins."""
    return ShapeSpace(M=int(M), periodic=bool(periodic))


@dataclass(frozen=True)
class Distribution:
    """Probability vector over the bins of a ShapeSpace."""

    space: ShapeSpace
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.space.M,):
            raise ValueError(f"expected {self.space.M} probabilities, got shape {p.shape}")
        if np.any(p < 0):
            raise ValueError("negative probability mass")
        s = p.sum()
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {s}, not 1")
        if abs(s - 1.0) > SIMPLEX_TOL:
            p = p / s
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def mean(self) -> float:
        return float(self.p @ self.space.centers)

    def support_size(self, threshold: float = 1e-6) -> int:
        return int(np.count_nonzero(self.p > threshold))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_center", "probability"])
        for c, q in zip(self.space.centers, self.p):
            w.writerow([repr(float(c)), repr(float(q))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"centers": [float(c) for c in self.space.centers],
             "p": [float(q) for q in self.p]}
        )

    @classmethod
    def from_probabilities(cls, space: ShapeSpace, p) -> "Distribution":
        """Normalize a nonnegative weight vector onto the simplex."""
        p = np.asarray(p, dtype=float)
        total = p.sum()
        if total <= 0:
            raise ValueError("weights sum to zero; cannot normalize")
        return cls(space, p / total)

    @classmethod
    def from_csv(cls, text: str, periodic: bool = False) -> "Distribution":
        rows = [r for r in csv.reader(io.StringIO(text))
                if r and not r[0].startswith("#")]
        if rows and rows[0][0] == "bin_center":
            rows = rows[1:]
        p = np.array([float(r[1]) for r in rows])
        return cls.from_probabilities(make_grid(len(p), periodic), p)

    @classmethod
    def from_json(cls, text: str, periodic: bool = False) -> "Distribution":
        obj = json.loads(text)
        p = np.asarray(obj["p"], dtype=float)
        return cls.from_probabilities(make_grid(len(p), periodic), p)


def uniform_distribution(space: ShapeSpace) -> Distribution:
    return Distribution(space, np.full(space.M, 1.0 / space.M))


def one_hot_distribution(space: ShapeSpace, bin_index: int) -> Distribution:
    p = np.zeros(space.M)
    p[bin_index] = 1.0
    return Distribution(space, p)


def gaussian_distribution(space: ShapeSpace, mean: float, sigma_q: float) -> Distribution:
    """Discretized Gaussian on the grid; sigma_q = 0 degenerates to one-hot.

    On a periodic space the distance to the mean wraps around the circle.
    """
    if sigma_q < 0:
        raise ValueError(f"sigma_q must be >= 0, got {sigma_q}")
    if not 0.0 <= mean <= 1.0:
        raise ValueError(f"mean must lie in [0, 1], got {mean}")
    if sigma_q == 0:
        return one_hot_distribution(space, space.nearest_bin(mean))
    d = space.distance(space.centers, mean)
    w = np.exp(-0.5 * (d / sigma_q) ** 2)
    return Distribution.from_probabilities(space, w)


def lognormal_spike_distribution(
    space: ShapeSpace, kappa: float, n_spikes: int, seed=0
) -> Distribution:
    """Spiked attacker distribution: n_spikes random bins with log-normal weights.

    Weights are drawn log-normal with log-variance ln(1 + kappa^2), so their
    coefficient of variation is exactly kappa.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    if not 1 <= n_spikes <= space.M:
        raise ValueError(f"n_spikes must be in [1, {space.M}], got {n_spikes}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bins = rng.choice(space.M, size=n_spikes, replace=False)
    sigma_log = np.sqrt(np.log1p(kappa**2))
    weights = rng.lognormal(mean=0.0, sigma=sigma_log, size=n_spikes)
    p = np.zeros(space.M)
    p[bins] = weights
    return Distribution.from_probabilities(space, p)


def shift_distribution(dist: Distribution, k: int) -> Distribution:
    """Cyclic shift of bin masses by k bins (periodic spaces only)."""
    if not dist.space.periodic:
        raise TopologyError("shift_distribution requires a periodic shape space")
    return Distribution(dist.space, np.roll(dist.p, int(k)))


class TopologyError(ValueError):
    """Operation requires the other boundary topology."""


@dataclass(frozen=True)
class Kernel:
    """Recognition-probability matrix f[d, a] over defender x attacker bins.

    f[d, a] = f_max * exp(-dist(d, a)^2 / (2 sigma_d^2)); an exact type match
    recognizes with probability f_max.
    """

    space_d: ShapeSpace
    space_a: ShapeSpace
    f: np.ndarray
    sigma: np.ndarray
    f_max: float = 1.0

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if f.min() < 0 or f.max() > self.f_max + 1e-12:
            raise ValueError("kernel entries must lie in [0, f_max]")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def n_defender(self) -> int:
        return self.f.shape[0]

    @property
    def n_attacker(self) -> int:
        return self.f.shape[1]

    def scaled(self, gamma: float) -> "Kernel":
        """Same shape with peak recognition probability multiplied by gamma."""
        return Kernel(self.space_d, self.space_a, self.f * gamma,
                      self.sigma, self.f_max * gamma)


def gaussian_kernel(
    space_d: ShapeSpace,
    space_a: ShapeSpace,
    sigma,
    f_max: float = 1.0,
) -> Kernel:
    """Gaussian cross-reactivity kernel, scalar or per-defender-bin bandwidth.

    With a sigma vector (one entry per defender bin) each defender row gets
    its own bandwidth, the heterogeneous-platform variant.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if sigma.size == 1:
        sigma = np.full(space_d.M, sigma[0])
    if sigma.shape != (space_d.M,):
        raise ValueError(f"sigma must be scalar or length {space_d.M}")
    if np.any(sigma <= 0):
        raise ValueError("sigma entries must be > 0")
    if not 0 < f_max <= 1:
        raise ValueError(f"f_max must be in (0, 1], got {f_max}")
    if np.any(sigma < space_a.bin_width):
        warnings.warn(
            "kernel bandwidth below one bin width degrades to a one-bin kernel",
            RuntimeWarning,
            stacklevel=2,
        )
    d = space_a.distance(space_d.centers[:, None], space_a.centers[None, :])
    f = f_max * np.exp(-0.5 * (d / sigma[:, None]) ** 2)
    return Kernel(space_d, space_a, f, sigma, f_max)


def banded_sigma(space: ShapeSpace, sigmas) -> np.ndarray:
    """Per-bin bandwidth vector from equal contiguous bands of the domain."""
    sigmas = np.asarray(sigmas, dtype=float)
    edges = np.linspace(0, space.M, len(sigmas) + 1).astype(int)
    out = np.empty(space.M)
    for i, s in enumerate(sigmas):
        out[edges[i]:edges[i + 1]] = s
    return out


@dataclass(frozen=True)
class Coverage:
    """Total recognition probability per attacker bin under a defender mix."""

    space: ShapeSpace
    ptilde: np.ndarray

    def __post_init__(self):
        pt = np.asarray(self.ptilde, dtype=float)
        pt.setflags(write=False)
        object.__setattr__(self, "ptilde", pt)


def wasserstein1(p: Distribution, q: Distribution) -> float:
    """1-Wasserstein distance via the CDF integral on the line.

    Both distributions put mass at shared bin centers, so the integral of
    |F_p - F_q| reduces to bin_width * sum |cumsum(p - q)|.  The line (CDF)
    form is used even on periodic spaces.
    """
    if p.space != q.space:
        raise ValueError("distributions live on different shape spaces")
    cum = np.cumsum(p.p - q.p)
    return float(np.sum(np.abs(cum[:-1])) * p.space.bin_width)
