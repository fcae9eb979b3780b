"""Per-photon-number analytic quantities.

The full Hamiltonian commutes with the optical number operator, so every
operator-valued function of it restricts exactly to a number eigenvalue n.
This module evaluates, per n and on a shared time grid: the mechanical
rotation phase, the Bogoliubov coefficients of the squeezing sector (closed
form for constant couplings, 2x2 ODE otherwise), the displacement integral,
the accumulated quadrature-displacement coefficients and the Kerr-type
self-phase from the nested double integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .profiles import is_constant


class NumericalError(RuntimeError):
    """Raised when a numerical route fails its accuracy contract."""


# threshold below which sin(L*tau)/L switches to its power series
_SERIES_THRESHOLD = 1e-4


@dataclass(frozen=True)
class KerrPolar:
    """Polar form of the quadratic coupling pair: modulus chi2, angle phi2."""

    chi2: float
    phi2: float


def polar_g2(g2_plus: float, g2_minus: float) -> KerrPolar:
    """Modulus and half-angle of g2_plus + i*g2_minus.

    The angle lies in (-pi/2, pi/2]; both couplings zero gives (0, 0) by
    convention (the angle is unused when the modulus vanishes).
    """
    chi2 = math.hypot(g2_plus, g2_minus)
    if chi2 == 0.0:
        return KerrPolar(0.0, 0.0)
    phi2 = 0.5 * math.atan2(g2_minus, g2_plus)
    return KerrPolar(chi2, phi2)


def theta2(n: int, tau, g2_prime_profile):
    """Mechanical rotation phase: tau + 2*n * integral of g2_prime."""
    return np.asarray(tau, dtype=float) + 2.0 * n * g2_prime_profile.integral(tau)


def _sinc_lambda(lam: complex, tau):
    """sin(lam*tau)/lam, with the series fallback for small |lam*tau|.

    Valid for complex lam (principal square root), covering oscillatory,
    degenerate and hyperbolic regimes in one code path.
    """
    scalar = np.ndim(tau) == 0
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    z = lam * tau
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < _SERIES_THRESHOLD
    z2 = z[small] ** 2
    out[small] = tau[small] * (1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 ** 3 / 5040.0)
    big = ~small
    if np.any(big):
        out[big] = np.sin(z[big]) / lam
    return out[0] if scalar else out


def constant_case_params(n: int, chi2: float, g2_prime: float):
    """K_n and the principal complex square root Lambda_n."""
    K = 1.0 + 2.0 * g2_prime * n
    lam = np.sqrt(complex(K * K - 4.0 * chi2 * chi2 * n * n))
    return K, lam


def bogoliubov_constant(n: int, tau, chi2: float, phi2: float, g2_prime: float):
    """Closed-form Bogoliubov coefficients for constant couplings.

    alpha = e^{iK tau} [cos(L tau) - i (K/L) sin(L tau)]
    beta  = -2i chi2 n / L * e^{2i phi2} e^{iK tau} sin(L tau)
    with L the principal complex square root of K^2 - 4 chi2^2 n^2.
    """
    tau = np.asarray(tau, dtype=float)
    K, lam = constant_case_params(n, chi2, g2_prime)
    phase = np.exp(1j * K * tau)
    sinc = _sinc_lambda(lam, tau)
    alpha = phase * (np.cos(lam * tau) - 1j * K * sinc)
    beta = -2j * chi2 * n * np.exp(2j * phi2) * phase * sinc
    return alpha, beta


def constant_case_reals(n: int, tau, chi2: float, phi2: float,
                        g2_prime: float, g1_plus: float, g1_minus: float):
    """Closed forms of Re[g1 E2 (a*+b*)] and Im[g1 E2 (a*-b*)], constant case."""
    tau = np.asarray(tau, dtype=float)
    K, lam = constant_case_params(n, chi2, g2_prime)
    cos = np.cos(lam * tau)
    sinc = _sinc_lambda(lam, tau)
    two_chi_n = 2.0 * chi2 * n
    re_part = (g1_plus * (cos + two_chi_n * math.sin(2 * phi2) * sinc)
               - g1_minus * (K + two_chi_n * math.cos(2 * phi2)) * sinc)
    im_part = (g1_plus * (K - two_chi_n * math.cos(2 * phi2)) * sinc
               + g1_minus * (cos - two_chi_n * math.sin(2 * phi2) * sinc))
    return np.real(re_part), np.real(im_part)


@dataclass(frozen=True)
class PhotonBranch:
    """All analytic per-n quantities sampled on a common increasing grid."""

    n: int
    tau: np.ndarray
    theta2: np.ndarray       # real rotation phase
    alpha: np.ndarray        # complex Bogoliubov coefficient
    beta: np.ndarray         # complex Bogoliubov coefficient
    disp_int: np.ndarray     # complex displacement integral I_n
    f2: np.ndarray           # real Kerr self-phase F^(2)_n
    c_plus: np.ndarray       # real accumulated B_+ exponent coefficient
    c_minus: np.ndarray      # real accumulated B_- exponent coefficient

    def identity_residual(self) -> float:
        return float(np.max(np.abs(np.abs(self.alpha) ** 2
                                   - np.abs(self.beta) ** 2 - 1.0)))


def _branch_rhs_factory(config, n: int):
    g1p, g1m = config.g1_plus, config.g1_minus
    g2p, g2m = config.g2_plus, config.g2_minus
    g2pr = config.g2_prime

    def rhs(tau, y):
        alpha = y[0] + 1j * y[1]
        beta = y[2] + 1j * y[3]
        gp = float(g2p(tau))
        gm = float(g2m(tau))
        polar = polar_g2(gp, gm)
        th = float(tau + 2.0 * n * g2pr.integral(tau))
        a_coef = -2j * n * polar.chi2 * np.exp(2j * (polar.phi2 + th))
        d_alpha = a_coef * np.conj(beta)
        d_beta = a_coef * np.conj(alpha)
        g1 = float(g1p(tau)) + 1j * float(g1m(tau))
        e2 = np.exp(1j * th)
        d_disp = g1 * e2 * np.conj(alpha) + np.conj(g1) * np.conj(e2) * beta
        re_term = (g1 * e2 * (np.conj(alpha) + np.conj(beta))).real
        im_term = (g1 * e2 * (np.conj(alpha) - np.conj(beta))).imag
        inner = y[6]
        return [
            d_alpha.real, d_alpha.imag,
            d_beta.real, d_beta.imag,
            d_disp.real, d_disp.imag,
            re_term,
            2.0 * im_term * inner,
            n * im_term,
        ]

    return rhs


def compute_branch(config, n: int, grid) -> PhotonBranch:
    """Integrate the joint per-n system over the grid.

    The state couples the 2x2 squeezing-sector propagator with the running
    displacement integral, the inner prefix of the nested double integral,
    the Kerr self-phase and the quadrature exponent coefficients, so one
    adaptive pass yields every branch quantity consistently.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must increase from 0")
    y0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    rtol = max(config.eps_ode * 1e-2, 1e-13)
    sol = solve_ivp(
        _branch_rhs_factory(config, n), (0.0, grid[-1]), y0,
        t_eval=grid, method="DOP853",
        rtol=rtol, atol=rtol * 1e-3,
    )
    if not sol.success:
        raise NumericalError(f"branch ODE failed for n={n}: {sol.message}")
    y = sol.y
    alpha = y[0] + 1j * y[1]
    beta = y[2] + 1j * y[3]
    disp = y[4] + 1j * y[5]
    inner = y[6]
    f2 = y[7]
    c_minus = y[8]
    # exact identity values at tau = 0
    alpha[0], beta[0], disp[0], f2[0], c_minus[0] = 1.0, 0.0, 0.0, 0.0, 0.0
    inner[0] = 0.0
    residual = float(np.max(np.abs(np.abs(alpha) ** 2 - np.abs(beta) ** 2 - 1.0)))
    if residual > 100.0 * config.eps_ode:
        raise NumericalError(
            f"Bogoliubov identity violated for n={n}: residual {residual:.3e}")
    th = theta2(n, grid, config.g2_prime)
    return PhotonBranch(
        n=n, tau=grid, theta2=th, alpha=alpha, beta=beta,
        disp_int=disp, f2=f2, c_plus=n * inner, c_minus=c_minus,
    )


def bogoliubov_general(config, n: int, grid):
    """ODE route for (alpha, beta) alone, in the co-rotating frame.

    Substituting alpha = e^{i theta} alpha_s, beta = e^{i theta} beta_s
    removes the e^{2i theta} oscillation from the coupling coefficient:

        alpha_s' = -i K alpha_s - 2i n chi2 e^{2i phi2} conj(beta_s)
        beta_s'  = -i K beta_s  - 2i n chi2 e^{2i phi2} conj(alpha_s)

    with K = 1 + 2 n g2_prime.  Only the intrinsic Lambda rotation remains,
    so the integrator takes far larger steps; the internal tolerance is kept
    well below eps_ode because the contract bounds the global error.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must increase from 0")
    g2p, g2m, g2pr = config.g2_plus, config.g2_minus, config.g2_prime

    def rhs(tau, y):
        polar = polar_g2(float(g2p(tau)), float(g2m(tau)))
        k = 1.0 + 2.0 * n * float(g2pr(tau))
        c = -2j * n * polar.chi2 * np.exp(2j * polar.phi2)
        return [-1j * k * y[0] + c * np.conj(y[1]),
                -1j * k * y[1] + c * np.conj(y[0])]

    rtol = max(config.eps_ode * 1e-2, 1e-13)
    sol = solve_ivp(rhs, (0.0, grid[-1]), np.array([1.0 + 0j, 0j]),
                    t_eval=grid, method="DOP853", rtol=rtol, atol=rtol * 1e-3)
    if not sol.success:
        raise NumericalError(f"Bogoliubov ODE failed for n={n}: {sol.message}")
    phase = np.exp(1j * theta2(n, grid, g2pr))
    alpha = phase * sol.y[0]
    beta = phase * sol.y[1]
    alpha[0], beta[0] = 1.0, 0.0
    residual = float(np.max(np.abs(np.abs(alpha) ** 2 - np.abs(beta) ** 2 - 1.0)))
    if residual > 100.0 * config.eps_ode:
        raise NumericalError(
            f"Bogoliubov identity violated for n={n}: residual {residual:.3e}")
    return alpha, beta


def branch_constant(config, n: int, grid) -> PhotonBranch:
    """Branch with closed-form alpha/beta and quadrature-only integrals.

    Requires constant g2 couplings.  The displacement and phase integrals
    still need cumulative quadrature; they run on the same joint system but
    with alpha/beta pinned to the closed form through the shared RHS being
    exact for constant couplings, so this is provided mainly for the
    route-comparison tests.
    """
    if not (is_constant(config.g2_plus) and is_constant(config.g2_minus)
            and is_constant(config.g2_prime)):
        raise ValueError("branch_constant requires constant g2 couplings")
    grid = np.asarray(grid, dtype=float)
    polar = polar_g2(config.g2_plus.value, config.g2_minus.value)
    alpha, beta = bogoliubov_constant(n, grid, polar.chi2, polar.phi2,
                                      config.g2_prime.value)
    branch = compute_branch(config, n, grid)
    return PhotonBranch(
        n=n, tau=grid, theta2=branch.theta2, alpha=alpha, beta=beta,
        disp_int=branch.disp_int, f2=branch.f2,
        c_plus=branch.c_plus, c_minus=branch.c_minus,
    )
