"""Second-order fluctuations of the nuclear mode around a semiclassical root.

Adiabatic elimination of the electron gives a quadratic master equation for
the Holstein-Primakoff boson ``b``::

    d sigma/dt = 2 R_a D[b] + 2 R_b D[b^dag] + c (b s b - {bb, s}/2) + h.c.
                 - i [chi b^dag b + xi^* b^2 + xi b^dag^2, sigma]

whose coefficients follow from integrated electron correlation functions.
This module assembles those coefficients, the drift matrix of the first
moments, the stationary covariance and the spin squeezing witness.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NearSingularExpansionError, NoFixedPointError
from .params import ModelParams, beta_to_polarization
from .semiclassical import SemiclassicalRoot, bloch_steady, find_roots

__all__ = [
    "BlochMatrix",
    "EffectiveCoefficients",
    "DriftMatrix",
    "CovarianceSummary",
    "GaussianSolution",
    "bloch_matrix",
    "electron_density_matrix",
    "steady_correlation_matrix",
    "integrated_correlations",
    "coupling_vectors",
    "coefficients",
    "drift_and_stability",
    "moment_flow",
    "covariance_steady",
    "fluctuation_covariance",
    "squeezing_witness",
    "analyze_root",
    "solve_gaussian",
]

K_FLOOR = 1e-9

# electron operators in the {down, up} basis; S+ |down> = |up>
SP = np.array([[0, 0], [1, 0]], dtype=complex)
SM = SP.T.copy()
SZ = np.diag([-0.5, 0.5]).astype(complex)


def _beta(root) -> complex:
    return complex(root.beta) if isinstance(root, SemiclassicalRoot) else complex(root)


def _tilde_omega(beta: complex, params: ModelParams) -> complex:
    k = max(2 - abs(beta) ** 2, 0.0)
    return params.Omega + 0.5 * params.a * np.sqrt(k) * beta


@dataclass(frozen=True)
class BlochMatrix:
    """Generator of ``(dS^+, dS^-, dS_z)`` fluctuations under the electron Liouvillian."""

    m: np.ndarray


def bloch_matrix(root, params: ModelParams) -> BlochMatrix:
    b = _beta(root)
    om = _tilde_omega(b, params)
    jz = abs(b) ** 2 - 1
    g, a = params.gamma, params.a
    m = np.array([
        [-(g / 2 - 1j * a * jz), 0, -2j * np.conj(om)],
        [0, -(g / 2 + 1j * a * jz), 2j * om],
        [-1j * om, 1j * np.conj(om), -g],
    ], dtype=complex)
    return BlochMatrix(m)


def electron_density_matrix(root, params: ModelParams) -> np.ndarray:
    """2x2 electron quasi-steady state at the displacement of ``root``."""
    sp, sz, _ = bloch_steady(_beta(root), params)
    sp, sz = complex(sp), float(np.real(sz))
    # <S+> = rho[down, up]
    return np.array([[0.5 - sz, sp], [np.conj(sp), 0.5 + sz]], dtype=complex)


def steady_correlation_matrix(root, params: ModelParams) -> np.ndarray:
    """``S_ij = <dS_i dS_j^dag>`` for ``S = (S^+, S^-, S_z)``.

    Evaluated with the 2x2 electron matrices, so all operator products are
    exact.
    """
    rho = electron_density_matrix(root, params)
    ops = (SP, SM, SZ)
    mean = np.array([np.trace(rho @ o) for o in ops])
    s = np.empty((3, 3), dtype=complex)
    for i, oi in enumerate(ops):
        for j, oj in enumerate(ops):
            s[i, j] = np.trace(rho @ oi @ oj.conj().T) - mean[i] * np.conj(mean[j])
    return s


def integrated_correlations(mM, s: np.ndarray):
    """Integrated two-time correlations ``F1 = -M^{-1} S`` and ``F2 = F1^dag``.

    ``F1[i, j]`` is the time integral of ``<dS_i(t) dS_j^dag(0)>`` and
    ``F2[i, j]`` that of ``<dS_i(0) dS_j^dag(t)>``.
    """
    m = mM.m if isinstance(mM, BlochMatrix) else np.asarray(mM)
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError(f"Bloch matrix is singular (condition number {cond:.2e})")
    f1 = -np.linalg.solve(m, s)
    return f1, f1.conj().T


def coupling_vectors(beta: complex, params: ModelParams):
    """Vectors ``v, w`` with ``A = conj(v) . S`` and ``A^dag = conj(w) . S``."""
    a = params.a
    b2 = abs(beta) ** 2
    sk = np.sqrt(2 - b2)
    k = 2 - b2
    v = np.array([a * (2 * k - b2) / (4 * sk), -a * beta**2 / (4 * sk), beta * a])
    w = np.array([-a * np.conj(beta) ** 2 / (4 * sk), a * (2 * k - b2) / (4 * sk),
                  np.conj(beta) * a])
    return v, w


@dataclass(frozen=True)
class EffectiveCoefficients:
    """Coefficients of the quadratic nuclear master equation."""

    B: complex
    F: float
    R_a: float
    I_a: float
    R_b: float
    I_b: float
    c: complex
    alpha: complex
    chi: float
    xi: complex


def coefficients(root, params: ModelParams, k_floor: float = K_FLOOR) -> EffectiveCoefficients:
    """Assemble all second-order coefficients at ``root``.

    Raises
    ------
    NearSingularExpansionError
        If ``k = 2 - |beta|^2 <= k_floor``.
    """
    beta = _beta(root)
    b2 = abs(beta) ** 2
    k = 2 - b2
    if k <= k_floor:
        raise NearSingularExpansionError(f"k = {k:.3e} is below k_floor = {k_floor:.1e}")
    a = params.a
    sp, _, spsm = bloch_steady(beta, params)
    sp, spsm = complex(sp), float(np.real(spsm))
    sm = np.conj(sp)
    k32 = k ** 1.5
    B = -a * beta / (16 * k32) * ((4 * k + b2) * sm + beta**2 * sp)
    F = (-a / (8 * k32) * (4 * k + b2) * (beta * sp + np.conj(beta) * sm)
         + a * spsm + params.delta_omega())
    f1, f2 = integrated_correlations(bloch_matrix(beta, params),
                                     steady_correlation_matrix(beta, params))
    v, w = coupling_vectors(beta, params)
    g21 = np.conj(w) @ f1 @ w     # int <A^dag(t) A>
    g12 = np.conj(v) @ f1 @ v     # int <A(t) A^dag>
    g11 = np.conj(v) @ f1 @ w     # int <A(t) A>
    h11 = np.conj(v) @ f2 @ w     # int <A A(t)>
    c = g11 + h11
    alpha = (g11 - h11) / 2j
    R_a, I_a = float(g21.real), float(g21.imag)
    R_b, I_b = float(g12.real), float(g12.imag)
    F = float(np.real(F))
    return EffectiveCoefficients(B=complex(B), F=F, R_a=R_a, I_a=I_a, R_b=R_b, I_b=I_b,
                                 c=complex(c), alpha=complex(alpha),
                                 chi=I_a + I_b + F, xi=complex(np.conj(alpha) + B))


@dataclass(frozen=True)
class DriftMatrix:
    """Linear generator of ``(<b>, <b^dag>)``.

    ``eigenvalues`` are ordered by descending real part, then descending
    imaginary part, so ``eigenvalues[0]`` is the perturbative ADR of a stable
    root and carries ``Im >= 0`` when the pair is complex.
    """

    sigma: np.ndarray
    eigenvalues: np.ndarray

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))

    @property
    def adr(self) -> complex:
        return complex(self.eigenvalues[0])

    @property
    def overdamped(self) -> bool:
        """Real eigenvalue pair (squeezing-type Hamiltonian)."""
        return bool(abs(self.eigenvalues[0].imag) == 0.0)


def drift_and_stability(coeffs: EffectiveCoefficients) -> DriftMatrix:
    g = coeffs.R_a - coeffs.R_b
    chi, xi = coeffs.chi, coeffs.xi
    sigma = np.array([[-g - 1j * chi, -2j * xi],
                      [2j * np.conj(xi), -g + 1j * chi]], dtype=complex)
    disc = 4 * abs(xi) ** 2 - chi**2
    root = np.sqrt(disc) if disc >= 0 else 1j * np.sqrt(-disc)
    ev = np.array([-g + root, -g - root], dtype=complex)
    ev = ev[np.lexsort((-ev.imag, -ev.real))]
    return DriftMatrix(sigma=sigma, eigenvalues=ev)


def moment_flow(coeffs: EffectiveCoefficients, n: float, m: complex):
    """Time derivatives of ``n = <b^dag b>`` and ``m = <b^2>``."""
    g = coeffs.R_a - coeffs.R_b
    chi, xi, c = coeffs.chi, coeffs.xi, coeffs.c
    dn = -2 * g * n + 2 * coeffs.R_b - 4 * np.imag(np.conj(xi) * m)
    dm = -2 * g * m - 2j * chi * m - 2j * xi * (2 * n + 1) - np.conj(c)
    return float(np.real(dn)), complex(dm)


@dataclass(frozen=True)
class CovarianceSummary:
    """Stationary Gaussian state of the nuclear fluctuation mode.

    Attributes
    ----------
    gamma_cm : ndarray
        Real symmetric covariance matrix, vacuum = identity.
    d_purity : float
        ``sqrt(det gamma_cm)``, inverse purity.
    m_squeeze : float
        Squeezing invariant, ``gamma_cm = D O diag(M^2, M^-2) O^T``.
    t_eff : float
        Dimensionless effective temperature.
    lambda_min : float
        Smallest eigenvalue of ``gamma_cm``.
    c_witness : float
        Spin squeezing witness; ``nan`` until filled by ``squeezing_witness``.
    n, m : float, complex
        Stationary ``<b^dag b>`` and ``<b^2>``.
    """

    gamma_cm: np.ndarray
    d_purity: float
    m_squeeze: float
    t_eff: float
    lambda_min: float
    c_witness: float = float("nan")
    n: float = 0.0
    m: complex = 0j


def effective_temperature(d_purity: float) -> float:
    x = np.sqrt(d_purity) - 1
    if x <= 1e-15:
        return 0.0
    return float(1.0 / np.log(2.0 / x + 1.0))


def covariance_steady(coeffs: EffectiveCoefficients) -> CovarianceSummary:
    """Solve the stationary moment flow and derive the symplectic invariants.

    Raises
    ------
    NoFixedPointError
        If the drift is not strictly stable.
    """
    drift = drift_and_stability(coeffs)
    if not drift.stable:
        raise NoFixedPointError(f"drift eigenvalues {drift.eigenvalues} are not all stable")
    # unknowns u = (n, Re m, Im m); the flow is affine, u' = A u + b
    def flow(u):
        dn, dm = moment_flow(coeffs, u[0], u[1] + 1j * u[2])
        return np.array([dn, dm.real, dm.imag])

    b0 = flow(np.zeros(3))
    amat = np.column_stack([flow(e) - b0 for e in np.eye(3)])
    u = np.linalg.solve(amat, -b0)
    n, m = float(u[0]), complex(u[1], u[2])
    return _summary_from_moments(n, m)


def _summary_from_moments(n: float, m: complex) -> CovarianceSummary:
    gam = np.array([[2 * n + 1 + 2 * m.real, 2 * m.imag],
                    [2 * m.imag, 2 * n + 1 - 2 * m.real]])
    lam = np.linalg.eigvalsh(gam)
    det = float(lam[0] * lam[1])
    d = float(np.sqrt(max(det, 0.0)))
    m_sq = float((lam[1] / lam[0]) ** 0.25) if lam[0] > 0 else float("inf")
    return CovarianceSummary(gamma_cm=gam, d_purity=d, m_squeeze=m_sq,
                             t_eff=effective_temperature(d), lambda_min=float(lam[0]),
                             n=n, m=m)


def _fluct_coeffs(beta: complex) -> np.ndarray:
    """``c_j`` with ``J1^j = c_j b + conj(c_j) b^dag`` for j = x, y, z."""
    k = 2 - abs(beta) ** 2
    sk = np.sqrt(k)
    p = (2 * k - abs(beta) ** 2) / (2 * sk)
    q = -beta**2 / (2 * sk)
    return np.array([(p + np.conj(q)) / 2, (np.conj(q) - p) / 2j, np.conj(beta)])


def fluctuation_covariance(beta: complex, cov: CovarianceSummary) -> np.ndarray:
    """Symmetrized 3x3 covariance of the first-order nuclear fluctuations (per J)."""
    c = _fluct_coeffs(beta)
    cc = np.outer(c, c)
    return 2 * np.real(cc * cov.m) + np.real(np.outer(c, np.conj(c))) * (2 * cov.n + 1)


def squeezing_witness(root, cov: CovarianceSummary, params: Optional[ModelParams] = None):
    """Entanglement witness ``C`` and squeezing parameter along ``y``.

    Returns
    -------
    c : float
        ``max(0, 1 - lambda_min(Q))`` with ``Q = 2 Cov(J1) + J0 J0^T``.
    xi_y2 : float
        ``2 <dI_y^2> / |<I>|`` to leading order in ``1/J``.
    """
    beta = _beta(root)
    j0 = beta_to_polarization(beta)
    cov1 = fluctuation_covariance(beta, cov)
    q = 2 * cov1 + np.outer(j0, j0)
    c = max(0.0, 1.0 - float(np.linalg.eigvalsh(q)[0]))
    xi_y2 = 2 * cov1[1, 1] / float(np.linalg.norm(j0))
    return min(c, 1.0), float(xi_y2)


@dataclass(frozen=True)
class GaussianSolution:
    """Fluctuation analysis of one root.

    ``cov`` and ``xi_y2`` are ``None`` for unstable roots.
    """

    root: SemiclassicalRoot
    coeffs: Optional[EffectiveCoefficients]
    drift: Optional[DriftMatrix]
    cov: Optional[CovarianceSummary] = None
    xi_y2: float = float("nan")
    flags: frozenset = field(default_factory=frozenset)

    @property
    def stable(self) -> bool:
        return bool(self.root.stable)


def analyze_root(root: SemiclassicalRoot, params: ModelParams) -> GaussianSolution:
    """Coefficients, drift, and (if stable) covariance and witness of ``root``."""
    if root.boundary or 2 - abs(root.beta) ** 2 <= K_FLOOR:
        # fully inverted pole; fluctuation expansion undefined, treated as unstable
        return GaussianSolution(root=root.with_stability(False), coeffs=None, drift=None,
                                flags=frozenset({"boundary-root"}))
    co = coefficients(root, params)
    dr = drift_and_stability(co)
    root = root.with_stability(dr.stable)
    if not dr.stable:
        return GaussianSolution(root=root, coeffs=co, drift=dr)
    cov = covariance_steady(co)
    c, xi2 = squeezing_witness(root, cov, params)
    cov = dataclasses.replace(cov, c_witness=c)
    flags = {"expansion-valid"} if cov.d_purity <= params.J / 10 else set()
    return GaussianSolution(root=root, coeffs=co, drift=dr, cov=cov, xi_y2=xi2,
                            flags=frozenset(flags))


def solve_gaussian(params: ModelParams, roots=None, grid_density: int = 40):
    """Analyse every root and return ``(stable_solution_or_None, all_solutions)``.

    If several roots are stable, the one with the most negative ADR is
    returned first.
    """
    if roots is None:
        roots = find_roots(params, grid_density=grid_density)
    sols = [analyze_root(r, params) for r in roots]
    stable = [s for s in sols if s.stable]
    if not stable:
        return None, sols
    stable.sort(key=lambda s: s.drift.adr.real)
    return stable[0], sols
