"""Closed-form reference solutions.

* the dark-state line ``omega = omega0, Omega <= Omega0`` (segment x),
* approximate eigenstates of the collective lowering operator,
* the nuclear-only model obtained for strong electron damping,
* the quadratic master equation at the critical point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import OutOfSegmentError, ParameterDomainError, TruncationLossError
from .exact import LiouvillianSuperoperator, lindblad_superoperator, spin_matrices
from .gaussian import coefficients, drift_and_stability
from .params import ModelParams

__all__ = [
    "SegmentXSolution",
    "segment_x",
    "gamma_eff_near_critical",
    "theta_eff_near_critical",
    "squeeze_parameters",
    "lowering_eigenstate",
    "eigen_residual",
    "strong_dissipation_model",
    "CriticalModeReport",
    "critical_mode_check",
]

TRUNCATION_TOL = 1e-6


@dataclass(frozen=True)
class SegmentXSolution:
    """Closed-form steady state on segment x.

    Attributes
    ----------
    beta_minus, beta_plus : float
        Normal and anomalous displacements.
    gamma_eff : float
        Dissipation rate of the squeezed mode ``d = mu b + nu b^dag``; the
        leading drift eigenvalues are ``-gamma_eff/2 +- i theta_eff``.
    theta_eff : float
    xi_y2 : float
        Spin squeezing parameter along ``y``.
    mu, nu, r : float
        Squeezing transformation of the normal mode, ``cosh r = mu``.
    """

    beta_minus: float
    beta_plus: float
    gamma_eff: float
    theta_eff: float
    xi_y2: float
    mu: float
    nu: float
    r: float


def _on_segment(params: ModelParams, tol: float = 1e-12) -> float:
    if abs(params.omega - params.omega0()) > tol * params.a:
        raise OutOfSegmentError(f"segment x requires omega = omega0, got omega = {params.omega}")
    x = params.Omega / params.Omega0()
    if x < 0 or x > 1 + tol:
        raise OutOfSegmentError("this solution is only available if 0 <= Omega <= Omega0")
    return min(x, 1.0)


def squeeze_parameters(beta: float):
    """``(mu, nu, r)`` for a real displacement with ``|beta| < 1``."""
    b2 = beta * beta
    if b2 >= 1:
        raise ParameterDomainError("squeezing is defined for |beta| < 1")
    k = 2 - b2
    den = 2 * np.sqrt(2 * k * (1 - b2))
    mu = (2 * k - b2) / den
    nu = -b2 / den
    return mu, nu, float(np.arcsinh(-nu))


def segment_x(params: ModelParams) -> SegmentXSolution:
    """Closed-form displacements, rates and squeezing on segment x.

    Raises
    ------
    OutOfSegmentError
        If ``omega != omega0`` or ``Omega > Omega0``.
    """
    x = _on_segment(params)
    s = np.sqrt(max(1 - x * x, 0.0))
    a, g = params.a, params.gamma
    z = 1.0 / (g - 2j * a * s)
    # 1 - s = x^2 / (1 + s) avoids cancellation at weak drive
    bm, bp = -np.sqrt(x * x / (1 + s)), -np.sqrt(1 + s)
    if s > 0:
        mu, nu, r = squeeze_parameters(bm)
    else:
        mu, nu, r = np.inf, -np.inf, np.inf
    return SegmentXSolution(beta_minus=float(bm), beta_plus=float(bp),
                            gamma_eff=float(2 * a * a * z.real * s),
                            theta_eff=float(a * a * z.imag * s), xi_y2=float(s),
                            mu=float(mu), nu=float(nu), r=float(r))


def gamma_eff_near_critical(params: ModelParams) -> float:
    """Leading behaviour ``(2 a^2/gamma) sqrt(1 - (Omega/Omega0)^2)`` close to Omega0."""
    x = _on_segment(params)
    return float(2 * params.a**2 / params.gamma * np.sqrt(1 - x * x))


def theta_eff_near_critical(params: ModelParams) -> float:
    """Leading behaviour ``2 a^3/gamma^2 (1 - (Omega/Omega0)^2)`` of ``|theta_eff|``."""
    x = _on_segment(params)
    return float(2 * params.a**3 / params.gamma**2 * (1 - x * x))


def _boson_ops(dim: int):
    b = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    return b, b.conj().T


def lowering_eigenstate(J: float, beta: float, pad: int | None = None) -> np.ndarray:
    """Squeezed displaced vacuum ``D(sqrt(J) beta) S(-r) |J,-J>``.

    The boson ``b`` is the Holstein-Primakoff mode, ``|n> = |J, -J+n>``.
    Generators are exponentiated exactly on a padded boson space; the weight
    above ``n = 2J`` is the truncation loss.

    Returns
    -------
    ndarray
        Normalized vector of length ``2J + 1`` in ascending ``m``.

    Raises
    ------
    TruncationLossError
        If more than ``1e-6`` of the weight lies beyond ``m = +J``.
    """
    two_j = int(round(2 * J))
    if abs(two_j - 2 * J) > 1e-12 or two_j < 1:
        raise ParameterDomainError(f"invalid J = {J}")
    beta = float(np.real(beta))
    if abs(beta) >= 1:
        raise ParameterDomainError("lowering eigenstates need |beta| < 1")
    n = two_j + 1
    pad = max(40, n) if pad is None else pad
    dim = n + pad
    b, bd = _boson_ops(dim)
    _, _, r = squeeze_parameters(beta)
    alpha = np.sqrt(J) * beta
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    # S(-r) = exp((-r b^2 + r b^dag^2)/2) for real r
    psi = sla.expm(0.5 * r * (bd @ bd - b @ b)) @ vac
    psi = sla.expm(alpha * (bd - b)) @ psi
    lost = float(np.sum(np.abs(psi[n:]) ** 2))
    if lost > TRUNCATION_TOL:
        raise TruncationLossError(lost, TRUNCATION_TOL)
    psi = psi[:n]
    return psi / np.linalg.norm(psi)


def eigen_residual(J: float, beta: float, psi: np.ndarray) -> float:
    """``|| I^- psi - J sqrt(k) beta psi ||``."""
    _, im, _ = spin_matrices(int(round(2 * J)))
    lam = J * np.sqrt(2 - beta * beta) * beta
    return float(np.linalg.norm(im @ psi - lam * psi))


def strong_dissipation_model(params: ModelParams) -> LiouvillianSuperoperator:
    """Nuclear-only Liouvillian after eliminating a strongly damped electron.

    Collective decay ``I^-`` at rate ``a^2 / (J gamma)`` and Hamiltonian
    ``Omega_eff I_y + delta_omega I_z`` with ``Omega_eff = 2 a Omega / gamma``,
    in the same units as the full model (drive ``J Omega``, decay
    ``J gamma``). The dark state is the ``I^-`` eigenstate with eigenvalue
    ``-J Omega / Omega0``.
    """
    if params.gamma < 10 * params.a:
        warnings.warn("strong-dissipation reduction assumes gamma >> a (gamma < 10 a)",
                      RuntimeWarning, stacklevel=2)
    ip, im, iz = spin_matrices(params.two_j)
    iy = (ip - im) / 2j
    a, g, J = params.a, params.gamma, params.J
    H = (2 * a * params.Omega / g) * iy + params.delta_omega() * iz
    jumps = ((a * a / (J * g), sp.csr_matrix(im)),)
    L = lindblad_superoperator(sp.csr_matrix(H), jumps)
    return LiouvillianSuperoperator(matrix=L, hilbert_dim=params.two_j + 1, params=params,
                                    hamiltonian=sp.csr_matrix(H), j_norm=J, jumps=jumps)


@dataclass(frozen=True)
class CriticalModeReport:
    """Comparison of the fluctuation master equation with ``(a^2/2gamma) D[p]``.

    Deviations are absolute differences from the expected coefficients
    ``R_a = R_b = a^2/(8 gamma)``, ``c = -a^2/(4 gamma)``, ``chi = xi = 0``.
    """

    expected_rate: float
    rate: float
    dissipator_deviation: float
    hamiltonian_deviation: float
    sigma_eigenvalues: np.ndarray

    @property
    def max_deviation(self) -> float:
        return max(self.dissipator_deviation, self.hamiltonian_deviation,
                   float(np.max(np.abs(self.sigma_eigenvalues))))


def critical_mode_check(params: ModelParams) -> CriticalModeReport:
    """Verify the critical-point reduction to a single Hermitian jump ``p``."""
    if (abs(params.omega - params.omega0()) > 1e-12 * params.a
            or abs(params.Omega - params.Omega0()) > 1e-12 * params.a):
        raise ParameterDomainError("critical_mode_check needs omega = omega0, Omega = Omega0")
    co = coefficients(-1.0, params)
    g0 = params.a**2 / (2 * params.gamma)
    dev_d = max(abs(co.R_a - g0 / 4), abs(co.R_b - g0 / 4), abs(co.c + g0 / 2))
    dev_h = max(abs(co.chi), abs(co.xi))
    ev = drift_and_stability(co).eigenvalues
    return CriticalModeReport(expected_rate=g0, rate=2 * (co.R_a + co.R_b),
                              dissipator_deviation=float(dev_d),
                              hamiltonian_deviation=float(dev_h), sigma_eigenvalues=ev)
