"""Minimize total harm over the defender simplex.

Mirror descent with multiplicative updates keeps the iterate on the
probability simplex natively; optimality is certified by the KKT residual
(equalized descent signal on the support, no profitable bin off it).  For
translation-invariant kernels on periodic spaces a direct Fourier
deconvolution solution is available as an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .harm import POWER_LAW, SATURATING, HarmParams
from .shapespace import Distribution, Kernel, uniform_distribution


class DeconvolutionError(RuntimeError):
    """Kernel Fourier coefficients too small to divide by."""


@dataclass(frozen=True)
class OptimizerOptions:
    max_iters: int = 50_000
    kkt_tol: float = 1e-4
    support_threshold: float = 1e-6
    check_interval: int = 25
    init: np.ndarray | None = None


@dataclass(frozen=True)
class OptimizerReport:
    p_star: Distribution
    objective: float
    kkt_residual: float
    support_size: int
    iterations: int
    converged: bool
    objective_trajectory: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "support_size": self.support_size,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _fbar_and_slope(ptilde: np.ndarray, params: HarmParams):
    """Per-type harm and its derivative in coverage, with inf sentinels."""
    fbar = np.full_like(ptilde, np.inf)
    slope = np.full_like(ptilde, -np.inf)
    pos = ptilde > 0
    pt = ptilde[pos]
    if params.harm_form == POWER_LAW:
        g1 = gamma_fn(1.0 + params.alpha)
        fbar[pos] = g1 * pt ** (-params.alpha)
        slope[pos] = -params.alpha * g1 * pt ** (-params.alpha - 1.0)
    elif params.harm_form == SATURATING:
        b = params.beta
        fbar[pos] = b / (b + pt)
        slope[pos] = -b / (b + pt) ** 2
    else:
        raise ValueError(f"unknown harm form {params.harm_form!r}")
    return fbar, slope


def _objective(p: np.ndarray, fT: np.ndarray, q: np.ndarray, params: HarmParams,
               active: np.ndarray) -> float:
    pt = fT @ p
    fbar, _ = _fbar_and_slope(pt, params)
    vals = fbar[active]
    if np.any(np.isinf(vals)):
        return math.inf
    return float(q[active] @ vals)


def descent_signal(p: np.ndarray, q: np.ndarray, kernel: Kernel,
                   params: HarmParams) -> np.ndarray:
    """g_d = -dHarm/dp_d: the harm reduction rate of adding mass at bin d."""
    pt = kernel.f.T @ p
    _, slope = _fbar_and_slope(pt, params)
    contrib = np.where(q > 0, q * (-slope), 0.0)
    if np.any(np.isinf(contrib)):
        return np.full(p.shape, np.inf)
    return kernel.f @ contrib


def kkt_residual(
    p_d: Distribution,
    q_a: Distribution,
    kernel: Kernel,
    params: HarmParams,
    support_threshold: float = 1e-6,
) -> float:
    """Scale-free optimality residual of a candidate defender distribution.

    On the support the descent signal must equal its (probability-weighted)
    mean; off the support no bin may beat that mean.  Zero coverage on an
    attacked type makes the residual infinite.
    """
    p = p_d.p
    pt = kernel.f.T @ p
    if np.any((pt <= 0) & (q_a.p > 0)):
        return math.inf
    g = descent_signal(p, q_a.p, kernel, params)
    support = p > support_threshold
    lam = float(p[support] @ g[support]) / float(p[support].sum())
    if lam == 0:
        return math.inf
    on = float(np.max(np.abs(g[support] - lam))) / abs(lam)
    off = 0.0
    if np.any(~support):
        off = float(np.max(np.maximum(0.0, g[~support] - lam))) / abs(lam)
    return on + off


def minimize_harm(
    q_a: Distribution,
    kernel: Kernel,
    params: HarmParams,
    opts: OptimizerOptions = OptimizerOptions(),
) -> OptimizerReport:
    """Mirror-descent minimization of total harm over the defender simplex.

    Deterministic: uniform initialization unless ``opts.init`` warm-starts
    the iterate.  Non-convergence within max_iters is reported via the
    ``converged`` flag rather than raised.
    """
    if kernel.n_attacker != q_a.space.M:
        raise ValueError("kernel attacker axis does not match q_a")
    n_d = kernel.n_defender
    q = q_a.p
    active = q > 0
    fT = np.ascontiguousarray(kernel.f.T)

    if opts.init is not None:
        p = np.asarray(opts.init, dtype=float).copy()
        p = np.maximum(p, 1e-300)
        p /= p.sum()
    else:
        p = np.full(n_d, 1.0 / n_d)

    obj = _objective(p, fT, q, params, active)
    trajectory = [obj]
    eta = 1.0
    iterations = 0
    converged = False
    residual = math.inf

    for it in range(1, opts.max_iters + 1):
        iterations = it
        g = descent_signal(p, q, kernel, params)
        if not np.all(np.isfinite(g)):
            break
        # Multiplicative update; shifting g leaves it invariant, so center
        # on the max to keep the exponentials bounded.
        w = g - g.max()
        accepted = False
        for _ in range(60):
            cand = p * np.exp(eta * w)
            z = cand.sum()
            if z > 0 and np.all(np.isfinite(cand)):
                cand /= z
                cand_obj = _objective(cand, fT, q, params, active)
                if cand_obj <= obj + 1e-14 * max(1.0, abs(obj)):
                    accepted = True
                    break
            eta *= 0.5
        if not accepted:
            break
        improvement = obj - cand_obj
        p, obj = cand, cand_obj
        trajectory.append(obj)
        eta = min(eta * 1.3, 1e6)

        if it % opts.check_interval == 0 or improvement == 0.0:
            dist = Distribution.from_probabilities(kernel.space_d, p)
            residual = kkt_residual(dist, q_a, kernel, params,
                                    opts.support_threshold)
            if residual <= opts.kkt_tol:
                converged = True
                break

    p_star = Distribution.from_probabilities(kernel.space_d, p)
    residual = kkt_residual(p_star, q_a, kernel, params, opts.support_threshold)
    converged = residual <= opts.kkt_tol
    return OptimizerReport(
        p_star=p_star,
        objective=obj,
        kkt_residual=residual,
        support_size=p_star.support_size(opts.support_threshold),
        iterations=iterations,
        converged=converged,
        objective_trajectory=np.asarray(trajectory),
    )


@dataclass(frozen=True)
class FourierResult:
    distribution: Distribution | None
    feasible: bool
    min_entry: float


def fourier_solve(
    q_a: Distribution, kernel: Kernel, params: HarmParams
) -> FourierResult:
    """Deconvolution solution on a periodic space with a shared bandwidth.

    The interior optimality condition pins coverage at q^(1/(1+alpha)) up to
    scale (power-law harm); dividing its spectrum by the kernel's recovers
    the defender distribution.  Negative entries mean the nonnegativity
    constraints bind and the instance is flagged infeasible for this route.
    """
    space = q_a.space
    if not space.periodic:
        raise ValueError("fourier_solve requires a periodic shape space")
    if kernel.space_d != space or kernel.space_a != space:
        raise ValueError("kernel must be square on the same periodic space")
    sig = np.atleast_1d(kernel.sigma)
    if sig.size > 1 and not np.allclose(sig, sig[0]):
        raise ValueError("fourier_solve requires a translation-invariant kernel")
    if params.harm_form != POWER_LAW:
        raise ValueError("fourier_solve supports the power-law harm only")

    target = q_a.p ** (1.0 / (1.0 + params.alpha))
    g = kernel.f[0, :]  # circulant generator: defender bin 0 vs every attacker bin
    g_hat = np.fft.rfft(g)
    t_hat = np.fft.rfft(target)
    # Invert only modes above the target's information floor, and only where
    # the kernel spectrum is itself invertible (>= 1e-12 of its peak).  The
    # reconstruction check below catches real target energy that had to be
    # dropped, which is the ill-conditioned case.
    informative = np.abs(t_hat) >= 1e-6 * np.abs(t_hat).max()
    invertible = np.abs(g_hat) >= 1e-12 * np.abs(g_hat).max()
    keep = informative & invertible
    ratio = np.where(keep, t_hat / np.where(invertible, g_hat, 1.0), 0.0)
    v = np.fft.irfft(ratio, n=space.M)
    recon = np.fft.irfft(np.where(keep, t_hat, 0.0), n=space.M)
    if np.abs(recon - target).sum() > 1e-3 * np.abs(target).sum():
        raise DeconvolutionError(
            "kernel spectrum vanishes where the target has energy; "
            "deconvolution is ill-conditioned"
        )
    total = v.sum()
    if total <= 0:
        return FourierResult(None, False, float(v.min()))
    v = v / total
    min_entry = float(v.min())
    if min_entry < -1e-9:
        return FourierResult(None, False, min_entry)
    v = np.maximum(v, 0.0)
    return FourierResult(Distribution.from_probabilities(space, v), True, min_entry)
