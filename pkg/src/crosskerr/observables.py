"""Closed-form observables assembled from photon branches.

Poisson sums over the optical number are truncated by explicit tail bounds
and reduced in fixed n order with compensated summation, so results are
bit-stable no matter how many workers computed the branches.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .branches import PhotonBranch, compute_branch, polar_g2
from .config import SystemConfig
from .profiles import is_constant


def poisson_cutoff(mu_abs2: float, eps_tail: float) -> int:
    """Smallest n_max with Poisson tail beyond it below eps_tail."""
    if eps_tail <= 0:
        raise ValueError("eps_tail must be > 0")
    if mu_abs2 == 0.0:
        return 0
    w = math.exp(-mu_abs2)
    cum = w
    n = 0
    while 1.0 - cum >= eps_tail:
        n += 1
        w *= mu_abs2 / n
        cum += w
    return n


def poisson_weights(mu_abs2: float, n_max: int) -> np.ndarray:
    """e^{-|mu|^2} |mu|^{2n} / n! for n = 0..n_max, by stable recurrence."""
    w = np.zeros(n_max + 1)
    w[0] = math.exp(-mu_abs2)
    for n in range(1, n_max + 1):
        w[n] = w[n - 1] * mu_abs2 / n
    return w


def _kahan_sum(terms) -> np.ndarray:
    """Compensated summation over an iterable of equal-shape arrays."""
    total = None
    comp = None
    for t in terms:
        t = np.asarray(t, dtype=float)
        if total is None:
            total = t.copy()
            comp = np.zeros_like(t)
            continue
        y = t - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total


def chi2_is_zero(config: SystemConfig) -> bool:
    """True when both quadratic couplings are identically zero."""
    return all(is_constant(p) and p.value == 0.0
               for p in (config.g2_plus, config.g2_minus))


def compute_branches(config: SystemConfig, grid, n_max: int | None = None,
                     workers: int = 1) -> list[PhotonBranch]:
    """Branches for n = 0..n_max, optionally via a thread pool.

    Each branch is independent and deterministic; the returned list is
    ordered by n regardless of scheduling, so downstream fixed-order
    reductions are bit-stable across worker counts.
    """
    if n_max is None:
        n_max = poisson_cutoff(abs(config.mu) ** 2, config.eps_tail)
    ns = list(range(n_max + 1))
    _warn_if_hyperbolic(config, n_max)
    if workers <= 1:
        return [compute_branch(config, n, grid) for n in ns]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: compute_branch(config, n, grid), ns))


def _warn_if_hyperbolic(config: SystemConfig, n_max: int) -> None:
    if not (is_constant(config.g2_plus) and is_constant(config.g2_minus)
            and is_constant(config.g2_prime)):
        return
    polar = polar_g2(config.g2_plus.value, config.g2_minus.value)
    if polar.chi2 == 0.0:
        return
    weights = poisson_weights(abs(config.mu) ** 2, n_max)
    for n in range(n_max + 1):
        k = 1.0 + 2.0 * config.g2_prime.value * n
        if 4.0 * polar.chi2 ** 2 * n * n > k * k and weights[n] > config.eps_tail:
            warnings.warn(
                f"hyperbolic squeezing regime at n={n} with weight "
                f"{weights[n]:.2e}: truncation convergence should be checked",
                stacklevel=2)
            return


def phonon_number(config: SystemConfig, branches: list[PhotonBranch]) -> np.ndarray:
    """Mechanical occupation N_b(tau) on the branch grid."""
    nb0 = math.sinh(config.r_T) ** 2
    weights = poisson_weights(abs(config.mu) ** 2, len(branches) - 1)

    def terms():
        for n, br in enumerate(branches):
            beta2 = np.abs(br.beta) ** 2
            i2 = np.abs(br.disp_int) ** 2
            cross = np.real(br.alpha * np.conj(br.beta) * br.disp_int ** 2)
            yield weights[n] * ((1.0 + 2.0 * beta2) * (nb0 + n * n * i2)
                                + beta2 - 2.0 * n * n * cross)

    return _kahan_sum(terms())


def delta_phonon_no_squeezing(config: SystemConfig,
                              branches: list[PhotonBranch]) -> np.ndarray:
    """Phonon-number change for the chi2 = 0 scenario."""
    if not chi2_is_zero(config):
        raise ValueError("delta_phonon_no_squeezing requires chi2 == 0")
    mu2 = abs(config.mu) ** 2
    weights = poisson_weights(mu2, len(branches) - 1)

    def terms():
        for n in range(len(branches) - 1):
            i2 = np.abs(branches[n + 1].disp_int) ** 2
            yield mu2 * (n + 1) * weights[n] * i2

    out = _kahan_sum(terms())
    if out is None:
        out = np.zeros_like(branches[0].tau)
    return out


def mean_b(config: SystemConfig, branches: list[PhotonBranch]) -> np.ndarray:
    """<b(tau)> for the coherent x thermal initial state."""
    weights = poisson_weights(abs(config.mu) ** 2, len(branches) - 1)
    real = _kahan_sum(
        np.real(weights[n] * np.exp(-1j * br.theta2) * 1j * n
                * (br.beta * np.conj(br.disp_int) - br.alpha * br.disp_int))
        for n, br in enumerate(branches))
    imag = _kahan_sum(
        np.imag(weights[n] * np.exp(-1j * br.theta2) * 1j * n
                * (br.beta * np.conj(br.disp_int) - br.alpha * br.disp_int))
        for n, br in enumerate(branches))
    return real + 1j * imag


ENTROPY_VARIANTS = ("printed", "corrected")


def linear_entropy(config: SystemConfig, branches: list[PhotonBranch],
                   variant: str = "corrected") -> np.ndarray:
    """Linear entropy of the reduced mechanical state, chi2 = 0 only.

    Two selectable variants of the thermal-overlap kernel:

    * ``printed``: denominator cosh(r_T) and displacement differences taken
      without the final-time rotation, exactly as the closed-form sum is
      printed.
    * ``corrected``: denominator cosh(2 r_T) (the value forced by the
      initial thermal purity 1/cosh 2r) and differences of the
      rotation-aligned displacement amplitudes n e^{-i theta_n(tau)} I_n,
      which is what the oracle purity endorses.  The two variants coincide
      at r_T = 0 with g2_prime = 0.
    """
    if variant not in ENTROPY_VARIANTS:
        raise ValueError(f"unknown entropy variant {variant!r}")
    if not chi2_is_zero(config):
        raise ValueError("linear_entropy requires chi2 == 0")
    weights = poisson_weights(abs(config.mu) ** 2, len(branches) - 1)
    if variant == "printed":
        denom = math.cosh(config.r_T)
    else:
        denom = math.cosh(2.0 * config.r_T)
    grid = branches[0].tau
    out = np.empty_like(grid)
    ns = np.arange(len(branches))
    disp = np.stack([br.disp_int for br in branches])    # (N, T)
    theta = np.stack([br.theta2 for br in branches])     # (N, T)
    for i in range(grid.size):
        if variant == "printed":
            v = ns * disp[:, i]
        else:
            v = ns * np.exp(-1j * theta[:, i]) * disp[:, i]
        delta2 = np.abs(v[:, None] - v[None, :]) ** 2
        kernel = np.exp(-delta2 / denom) / denom
        out[i] = 1.0 - float(weights @ kernel @ weights)
    return out
