"""Brute-force truncated-Fock-space ground truth.

The Hamiltonian conserves the optical photon number, so the two-mode
problem splits exactly into independent mechanical blocks labelled by n.
The oracle propagates each block with midpoint-sampled matrix exponentials
(exact for constant couplings), prepares coherent x thermal initial
ensembles, extracts observables and the reduced mechanical state, and can
also apply the decoupled operator product factor by factor for end-to-end
verification of the analytic route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.special import gammaln

from .branches import NumericalError, PhotonBranch
from .config import ConfigError, SystemConfig


@dataclass(frozen=True)
class FockSpace:
    n_a: int
    n_b: int

    def __post_init__(self):
        if self.n_a < 2 or self.n_b < 2:
            raise ConfigError("Fock cutoffs must be >= 2")


@dataclass(frozen=True)
class MechOperators:
    """Mechanical ladder and quadrature matrices on dimension n_b."""

    n_b: int
    b: np.ndarray
    bdag: np.ndarray
    b_plus: np.ndarray      # b^dag + b
    b_minus: np.ndarray     # i (b^dag - b)
    b2_plus: np.ndarray     # b^dag^2 + b^2
    b2_minus: np.ndarray    # i (b^dag^2 - b^2)
    number: np.ndarray


def build_mech_operators(n_b: int) -> MechOperators:
    if n_b < 2:
        raise ConfigError("n_b must be >= 2")
    b = np.diag(np.sqrt(np.arange(1, n_b, dtype=float)), k=1).astype(complex)
    bdag = b.conj().T
    b2 = b @ b
    bdag2 = bdag @ bdag
    return MechOperators(
        n_b=n_b, b=b, bdag=bdag,
        b_plus=bdag + b, b_minus=1j * (bdag - b),
        b2_plus=bdag2 + b2, b2_minus=1j * (bdag2 - b2),
        number=np.diag(np.arange(n_b, dtype=float)).astype(complex),
    )


def block_hamiltonian(config: SystemConfig, n: int, tau: float,
                      ops: MechOperators) -> np.ndarray:
    """Per-n mechanical block of the rescaled Hamiltonian."""
    h = float(config.omega_c(tau)) * n * np.eye(ops.n_b, dtype=complex) + ops.number
    if n:
        h = h + n * (
            float(config.g1_plus(tau)) * ops.b_plus
            + float(config.g1_minus(tau)) * ops.b_minus
            + float(config.g2_plus(tau)) * ops.b2_plus
            + float(config.g2_minus(tau)) * ops.b2_minus
            + 2.0 * float(config.g2_prime(tau)) * ops.number
        )
    return h


def full_hamiltonian(config: SystemConfig, tau: float, space: FockSpace) -> np.ndarray:
    """Full tensor-product Hamiltonian; only for tiny-cutoff structure checks."""
    ops = build_mech_operators(space.n_b)
    eye_b = np.eye(space.n_b)
    num_a = np.diag(np.arange(space.n_a, dtype=float))
    eye_a = np.eye(space.n_a)
    inter = (float(config.g1_plus(tau)) * ops.b_plus
             + float(config.g1_minus(tau)) * ops.b_minus
             + float(config.g2_plus(tau)) * ops.b2_plus
             + float(config.g2_minus(tau)) * ops.b2_minus
             + 2.0 * float(config.g2_prime(tau)) * ops.number)
    return (float(config.omega_c(tau)) * np.kron(num_a, eye_b)
            + np.kron(eye_a, ops.number)
            + np.kron(num_a, inter))


@dataclass
class FockState:
    """Ensemble of pure two-mode states, block-decomposed over optical n.

    Every ensemble member shares the optical amplitudes ``c`` over the
    retained numbers ``ns``; members differ only in their mechanical
    vectors ``phi`` of shape (members, len(ns), n_b).
    """

    ns: np.ndarray
    c: np.ndarray
    weights: np.ndarray
    phi: np.ndarray

    @property
    def n_b(self) -> int:
        return self.phi.shape[2]

    def member_norms(self) -> np.ndarray:
        dens = np.abs(self.c[None, :]) ** 2 * np.sum(np.abs(self.phi) ** 2, axis=2)
        return np.sqrt(np.sum(dens, axis=1))

    def copy(self) -> "FockState":
        return FockState(self.ns.copy(), self.c.copy(), self.weights.copy(),
                         self.phi.copy())


@dataclass(frozen=True)
class PropagatorOptions:
    dt: float = 1e-3
    unitarity_tol: float = 1e-8
    exact_constant: bool = True   # single-shot exponential when H is constant

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")


def poisson_block_count(mu_abs2: float, eps_tail: float) -> int:
    """Number of optical blocks needed so the coherent tail is < eps_tail."""
    if mu_abs2 == 0.0:
        return 1
    w = math.exp(-mu_abs2)
    cum = w
    n = 0
    while 1.0 - cum >= eps_tail:
        n += 1
        w *= mu_abs2 / n
        cum += w
        if n > 10000:
            raise NumericalError("coherent tail does not close; |mu| too large")
    return n + 1


def thermal_member_count(r_T: float, eps_tail: float) -> int:
    """Number of thermal number states needed so the weight tail is < eps_tail."""
    if r_T == 0.0:
        return 1
    t2 = math.tanh(r_T) ** 2
    # tail after P members is tanh^{2P}
    p = max(1, math.ceil(math.log(eps_tail) / math.log(t2)))
    return p


def prepare_initial(config: SystemConfig, space: FockSpace | None = None) -> FockState:
    """Coherent optical state times thermal mechanical ensemble."""
    if space is None:
        space = FockSpace(config.cutoff_a, config.cutoff_b)
    mu = complex(config.mu)
    mu2 = abs(mu) ** 2
    n_blocks = poisson_block_count(mu2, config.eps_tail)
    if n_blocks > space.n_a:
        raise ConfigError(
            f"cutoff_a={space.n_a} too small: coherent tail needs {n_blocks} blocks")
    p_members = thermal_member_count(config.r_T, config.eps_tail)
    if p_members > space.n_b:
        raise ConfigError(
            f"cutoff_b={space.n_b} too small: thermal tail needs {p_members} members")
    ns = np.arange(n_blocks)
    # log-stable coherent amplitudes c_n = e^{-|mu|^2/2} mu^n / sqrt(n!)
    if mu2 == 0.0:
        c = np.zeros(n_blocks, dtype=complex)
        c[0] = 1.0
    else:
        logmag = -0.5 * mu2 + ns * math.log(abs(mu)) - 0.5 * gammaln(ns + 1.0)
        c = np.exp(logmag) * np.exp(1j * ns * np.angle(mu))
    if config.r_T == 0.0:
        weights = np.array([1.0])
    else:
        t2 = math.tanh(config.r_T) ** 2
        weights = (t2 ** np.arange(p_members)) / math.cosh(config.r_T) ** 2
    phi = np.zeros((p_members, n_blocks, space.n_b), dtype=complex)
    for p in range(p_members):
        phi[p, :, p] = 1.0
    return FockState(ns=ns, c=c, weights=weights, phi=phi)


def _step_matrix(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) of a Hermitian matrix via eigendecomposition."""
    vals, vecs = eigh(h)
    return (vecs * np.exp(-1j * vals * dt)) @ vecs.conj().T


def propagate(state: FockState, config: SystemConfig, tau_end: float,
              options: PropagatorOptions | None = None,
              tau_start: float = 0.0) -> FockState:
    """Evolve every block of every ensemble member from tau_start to tau_end."""
    if options is None:
        options = PropagatorOptions(dt=config.oracle_dt)
    if tau_end < tau_start:
        raise ValueError("tau_end must be >= tau_start")
    out = state.copy()
    span = tau_end - tau_start
    if span == 0.0:
        return out
    ops = build_mech_operators(state.n_b)
    constant = config.all_constant() and options.exact_constant
    if constant:
        taus_h = [tau_start]
        steps = [span]
    else:
        n_steps = max(1, math.ceil(span / options.dt))
        h_step = span / n_steps
        taus_h = [tau_start + (k + 0.5) * h_step for k in range(n_steps)]
        steps = [h_step] * n_steps
    for i, n in enumerate(state.ns):
        block = out.phi[:, i, :].T.copy()   # (n_b, members)
        for t_mid, h_step in zip(taus_h, steps):
            u = _step_matrix(block_hamiltonian(config, int(n), t_mid, ops), h_step)
            block = u @ block
        out.phi[:, i, :] = block.T
    drift = np.max(np.abs(out.member_norms() - state.member_norms()))
    if drift > options.unitarity_tol:
        raise NumericalError(f"norm drift {drift:.3e} exceeds "
                             f"{options.unitarity_tol:.1e}")
    return out


def expect_phonons(state: FockState) -> float:
    m = np.arange(state.n_b, dtype=float)
    per = np.sum(np.abs(state.phi) ** 2 * m[None, None, :], axis=2)
    block = np.abs(state.c) ** 2
    return float(np.sum(state.weights[:, None] * block[None, :] * per))


def expect_b(state: FockState) -> complex:
    amp = np.sqrt(np.arange(1, state.n_b, dtype=float))
    # <phi| b |phi> = sum_m sqrt(m+1) conj(phi_m) phi_{m+1}
    per = np.sum(np.conj(state.phi[:, :, :-1]) * state.phi[:, :, 1:]
                 * amp[None, None, :], axis=2)
    block = np.abs(state.c) ** 2
    return complex(np.sum(state.weights[:, None] * block[None, :] * per))


def reduced_mech(state: FockState) -> np.ndarray:
    """Partial trace over the optical index: rho_m on dimension n_b."""
    w = state.weights[:, None] * (np.abs(state.c) ** 2)[None, :]
    phi = state.phi.reshape(-1, state.n_b)
    return np.einsum("k,km,kl->ml", w.reshape(-1), phi, phi.conj(), optimize=True)


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def fidelity(s1: FockState, s2: FockState):
    """Per-member |<s1|s2>|; returns (ensemble minimum, weighted mean)."""
    if s1.phi.shape != s2.phi.shape or not np.array_equal(s1.ns, s2.ns):
        raise ValueError("states live in different spaces")
    per_block = np.sum(np.conj(s1.phi) * s2.phi, axis=2)      # (P, N)
    amp = np.conj(s1.c)[None, :] * s2.c[None, :]
    overlaps = np.abs(np.sum(amp * per_block, axis=1))
    wsum = float(np.sum(s1.weights))
    return float(np.min(overlaps)), float(np.sum(s1.weights * overlaps) / wsum)


def block_fidelities(s1: FockState, s2: FockState) -> np.ndarray:
    """Min-over-members |<phi1_n|phi2_n>| per optical block (phase-free)."""
    norms1 = np.linalg.norm(s1.phi, axis=2)
    norms2 = np.linalg.norm(s2.phi, axis=2)
    overlap = np.abs(np.sum(np.conj(s1.phi) * s2.phi, axis=2))
    with np.errstate(invalid="ignore", divide="ignore"):
        f = overlap / (norms1 * norms2)
    f = np.where((norms1 > 0) & (norms2 > 0), f, 1.0)
    return np.min(f, axis=0)


def su11_disentangle(alpha, beta):
    """Normal-ordered squeeze factorization parameters from (alpha, beta).

    Returns (xi_plus, lambda0, xi_minus) for
    U = exp(xi_plus K+) exp(lambda0 K0) exp(xi_minus K-) with
    K+ = b^dag^2/2, K0 = (b^dag b + 1/2)/2, K- = b^2/2, so that
    U^dag b U = alpha b + beta b^dag.  For series input the logarithm
    branch is tracked continuously from the identity (metaplectic sign).
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    residual = np.max(np.abs(np.abs(alpha) ** 2 - np.abs(beta) ** 2 - 1.0))
    if residual > 1e-8:
        raise ValueError(f"Bogoliubov identity violated: residual {residual:.3e}")
    if np.min(np.abs(alpha)) < 1e-12:
        raise NumericalError("alpha ~ 0 (branch point); refine the time grid")
    ac = np.conj(alpha)
    xi_plus = beta / ac
    xi_minus = -np.conj(beta) / ac
    lam0 = -2.0 * (np.log(np.abs(ac)) + 1j * np.unwrap(np.angle(ac)))
    if alpha.size == 1:
        return xi_plus[0], lam0[0], xi_minus[0]
    return xi_plus, lam0, xi_minus


def _expm_bdag2(coeff: complex, n_b: int) -> np.ndarray:
    """exp(coeff * b^dag^2) exactly (nilpotent on the truncated space)."""
    out = np.zeros((n_b, n_b), dtype=complex)
    k = np.arange(n_b)
    for j in range(n_b // 2 + 1):
        rows = k + 2 * j
        keep = rows < n_b
        kk = k[keep]
        rr = rows[keep]
        if kk.size == 0:
            break
        logmag = 0.5 * (gammaln(rr + 1.0) - gammaln(kk + 1.0)) - gammaln(j + 1.0)
        out[rr, kk] += (coeff ** j) * np.exp(logmag)
    return out


def _expm_b2(coeff: complex, n_b: int) -> np.ndarray:
    return _expm_bdag2(np.conj(coeff), n_b).conj().T


def squeeze_unitary(xi_plus: complex, lam0: complex, xi_minus: complex,
                    n_b: int) -> np.ndarray:
    """Factorized squeeze operator; exact matrix elements per factor."""
    m = np.arange(n_b)
    mid = np.exp(lam0 * (m + 0.5) / 2.0)
    left = _expm_bdag2(xi_plus / 2.0, n_b)
    right = _expm_b2(xi_minus / 2.0, n_b)
    return (left * mid[None, :]) @ right


def displacement_matrix(z: complex, n_b: int) -> np.ndarray:
    """D(z) = exp(z b^dag - z* b) from exact normal-ordered factors."""
    m = np.arange(n_b)
    # <m|exp(z b^dag)|k> = z^{m-k} sqrt(m!/k!) / (m-k)!   for m >= k
    raise_m = np.zeros((n_b, n_b), dtype=complex)
    for j in range(n_b):
        rows = m + j
        keep = rows < n_b
        kk = m[keep]
        rr = rows[keep]
        if kk.size == 0:
            break
        logmag = 0.5 * (gammaln(rr + 1.0) - gammaln(kk + 1.0)) - gammaln(j + 1.0)
        raise_m[rr, kk] += (z ** j) * np.exp(logmag)
    lower_m = np.zeros((n_b, n_b), dtype=complex)
    w = -np.conj(z)
    for j in range(n_b):
        cols = m + j
        keep = cols < n_b
        rr = m[keep]
        cc = cols[keep]
        if rr.size == 0:
            break
        logmag = 0.5 * (gammaln(cc + 1.0) - gammaln(rr + 1.0)) - gammaln(j + 1.0)
        lower_m[rr, cc] += (w ** j) * np.exp(logmag)
    return math.exp(-0.5 * abs(z) ** 2) * (raise_m @ lower_m)


def decoupled_block_matrix(config: SystemConfig, branch: PhotonBranch,
                           index: int, n_b: int) -> np.ndarray:
    """The decoupled evolution operator restricted to one optical block.

    Factors, right to left: displacement from the B_- exponent, displacement
    from the B_+ exponent, the factorized squeeze operator, the mechanical
    rotation, and the scalar optical phase.
    """
    tau = float(branch.tau[index])
    n = branch.n
    d_minus = displacement_matrix(branch.c_minus[index], n_b)
    d_plus = displacement_matrix(-1j * branch.c_plus[index], n_b)
    xi_p, lam0, xi_m = su11_disentangle(branch.alpha[:index + 1],
                                        branch.beta[:index + 1])
    if np.ndim(xi_p) > 0:
        xi_p, lam0, xi_m = xi_p[-1], lam0[-1], xi_m[-1]
    u_sq = squeeze_unitary(xi_p, lam0, xi_m, n_b)
    rot = np.exp(-1j * branch.theta2[index] * np.arange(n_b))
    phase = np.exp(-1j * n * float(config.omega_c.integral(tau))
                   + 1j * branch.f2[index] * n * n)
    return phase * (rot[:, None] * (u_sq @ (d_plus @ d_minus)))


def apply_decoupled(config: SystemConfig, branches: list, index: int,
                    state: FockState) -> FockState:
    """Apply the decoupled operator product to an initial-time state."""
    out = state.copy()
    by_n = {b.n: b for b in branches}
    for i, n in enumerate(state.ns):
        if int(n) not in by_n:
            raise ValueError(f"no branch data for optical block n={int(n)}")
        u = decoupled_block_matrix(config, by_n[int(n)], index, state.n_b)
        out.phi[:, i, :] = (u @ out.phi[:, i, :].T).T
    return out
