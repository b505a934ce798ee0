"""Coverage, per-type harm functionals, total harm, and the Gaussian optimum.

An attacker of type a is recognized per interaction with probability equal
to its coverage ptilde_a.  For power-law per-interaction harm m^alpha the
expected harm until recognition has the closed form Gamma(1+alpha) /
ptilde^alpha ("analytical harm"); integrating the interaction process
numerically gives the "empirical harm" cross-check.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import roots_laguerre

from .shapespace import Coverage, Distribution, Kernel, gaussian_distribution

_LAGUERRE_NODES, _LAGUERRE_WEIGHTS = roots_laguerre(64)

POWER_LAW = "power_law"
SATURATING = "saturating"


@dataclass(frozen=True)
class HarmParams:
    """Harm functional: power law m^alpha or saturating 1 - exp(-beta m).

    alpha is the ratio of the attacker-proliferation exponent to the
    interaction-rate exponent.
    """

    alpha: float = 1.0
    harm_form: str = POWER_LAW
    beta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha}")
        if self.harm_form not in (POWER_LAW, SATURATING):
            raise ValueError(f"unknown harm form {self.harm_form!r}")
        if self.harm_form == SATURATING and self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    def per_interaction(self, m):
        m = np.asarray(m, dtype=float)
        if self.harm_form == POWER_LAW:
            return m**self.alpha
        return 1.0 - np.exp(-self.beta * m)


def coverage(p_d: Distribution, kernel: Kernel) -> Coverage:
    """ptilde_a = sum_d f[d, a] p_d, the recognition probability per attacker bin."""
    if kernel.n_defender != p_d.space.M:
        raise ValueError(
            f"kernel defender axis has {kernel.n_defender} bins, "
            f"distribution has {p_d.space.M}"
        )
    return Coverage(kernel.space_a, kernel.f.T @ p_d.p)


def coverage_of(weights: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Coverage vector for a raw weight vector (no simplex checks)."""
    return kernel.f.T @ weights


def analytical_harm_per_type(cov: Coverage, params: HarmParams) -> np.ndarray:
    """Closed-form expected harm Gamma(1+alpha) / ptilde^alpha per attacker bin.

    Bins with zero coverage get an infinite sentinel instead of raising: the
    optimizer's objective then naturally repels zero-coverage regions.
    """
    if params.harm_form != POWER_LAW:
        raise ValueError("closed form applies to the power-law harm only")
    pt = cov.ptilde
    out = np.full_like(pt, np.inf)
    pos = pt > 0
    out[pos] = gamma_fn(1.0 + params.alpha) * pt[pos] ** (-params.alpha)
    return out


def _harm_integral(ptilde: float, params: HarmParams) -> float:
    # After s = m * ptilde the harm integral is int F(s/ptilde) e^{-s} ds.
    if params.harm_form == POWER_LAW:
        a = params.alpha
        if abs(a - round(a)) < 1e-12 and round(a) <= 60:
            # 64-node Gauss-Laguerre integrates integer powers exactly.
            moment = float(_LAGUERRE_WEIGHTS @ _LAGUERRE_NODES ** round(a))
        else:
            moment, _ = integrate.quad(
                lambda s: s**a * np.exp(-s), 0, np.inf,
                epsabs=0, epsrel=1e-10, limit=200,
            )
        return moment * ptilde ** (-a)
    val, _ = integrate.quad(
        lambda s: (1.0 - np.exp(-params.beta * s / ptilde)) * np.exp(-s),
        0, np.inf, epsabs=0, epsrel=1e-10, limit=200,
    )
    return val


def empirical_harm_quadrature(cov: Coverage, params: HarmParams) -> np.ndarray:
    """Numeric quadrature of the interaction-process harm integral per bin.

    Independent of the closed form: for the power law the two must agree to
    1e-6 relative.  Zero coverage again yields the infinite sentinel.
    """
    pt = cov.ptilde
    out = np.full_like(pt, np.inf)
    for i, p in enumerate(pt):
        if p > 0:
            out[i] = _harm_integral(float(p), params)
    return out


def total_harm(q_a: Distribution, fbar: np.ndarray) -> float:
    """Attack-weighted expected harm sum_a q_a fbar_a (inf propagates)."""
    fbar = np.asarray(fbar, dtype=float)
    if fbar.shape != (q_a.space.M,):
        raise ValueError("per-type harm length does not match the space")
    mask = q_a.p > 0
    if np.any(np.isinf(fbar[mask])):
        return math.inf
    return float(q_a.p[mask] @ fbar[mask])


def harm_of_distribution(
    q_a: Distribution, p_d: Distribution, kernel: Kernel, params: HarmParams
) -> float:
    """Total analytical harm of a defender distribution against q_a."""
    return total_harm(q_a, analytical_harm_per_type(coverage(p_d, kernel), params))


def dirac_collapse_threshold(sigma_q: float, alpha: float) -> float:
    """Kernel bandwidth above which the optimal defense is a point mass."""
    return sigma_q * math.sqrt(1.0 + alpha)


def gaussian_optimal_defender(
    sigma_q: float, sigma: float, alpha: float, space, mean: float = 0.5
) -> Distribution:
    """Closed-form optimum against a Gaussian attacker distribution.

    Below the collapse threshold sigma_q*sqrt(1+alpha) the optimum is a
    Gaussian with variance (1+alpha)*sigma_q^2 - sigma^2; at or above it, a
    point mass at the attacker mean.
    """
    if sigma_q <= 0 or sigma <= 0:
        raise ValueError("sigma_q and sigma must be > 0")
    var = (1.0 + alpha) * sigma_q**2 - sigma**2
    if var <= 0:
        return gaussian_distribution(space, mean, 0.0)
    return gaussian_distribution(space, mean, math.sqrt(var))


def harm_profile_csv(
    q_a: Distribution, p_d: Distribution, kernel: Kernel, params: HarmParams
) -> str:
    """Per-type harm table (bin_center, q_a, ptilde_a, fbar_a, q_fbar)."""
    cov = coverage(p_d, kernel)
    fbar = analytical_harm_per_type(cov, params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_center", "q_a", "ptilde_a", "fbar_a", "q_fbar"])
    for c, q, pt, fb in zip(q_a.space.centers, q_a.p, cov.ptilde, fbar):
        w.writerow([repr(float(c)), repr(float(q)), repr(float(pt)),
                    repr(float(fb)), repr(float(q * fb))])
    return buf.getvalue()
