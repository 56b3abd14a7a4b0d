"""Exact finite-J Liouvillian: construction, steady states and low spectrum.

Operators act on electron {down, up} (x) nuclear |J, m>, m = -J..J. Density
matrices are vectorized row by row, so ``vec(A X B) = (A kron B^T) vec(X)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (ConvergenceError, NumericalDegeneracyError, PreconditionError,
                     ResourceError)
from .params import ModelParams

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_MEMORY_BUDGET",
    "NULL_TOL",
    "BISTABLE_TOL",
    "spin_matrices",
    "electron_operators",
    "estimate_bytes",
    "lindblad_superoperator",
    "LiouvillianSuperoperator",
    "DensityOperator",
    "SpectrumSlice",
    "SteadyState",
    "Observables",
    "BistablePair",
    "build_liouvillian",
    "build_from_nuclear_operators",
    "steady_state",
    "low_spectrum",
    "observables",
    "bistable_pair",
]

DEFAULT_MEMORY_BUDGET = 4 * 2**30
# peak bytes per superoperator row of the sparse LU, measured up to J = 150
BYTES_PER_ROW = 6500
NULL_TOL = 1e-8
BISTABLE_TOL = 1e-5
POS_TOL = 1e-7
DENSE_LIMIT = 900
DEFAULT_SHIFT = 0.02


def spin_matrices(two_j: int):
    """Sparse ``(I^+, I^-, I_z)`` for spin ``two_j / 2`` in ascending ``m``."""
    J = two_j / 2
    m = np.arange(two_j + 1) - J
    up = np.sqrt(J * (J + 1) - m[:-1] * (m[:-1] + 1))
    ip = sp.diags(up, -1, format="csr", dtype=complex)
    return ip, ip.T.tocsr(), sp.diags(m, 0, format="csr", dtype=complex)


def electron_operators():
    """Sparse ``(S^+, S^-, S_z)`` on {down, up}."""
    spl = sp.csr_matrix(np.array([[0, 0], [1, 0]], dtype=complex))
    return spl, spl.T.tocsr(), sp.diags([-0.5, 0.5], 0, format="csr", dtype=complex)


def estimate_bytes(hilbert_dim: int) -> int:
    """Heuristic peak memory of building and factorizing the superoperator."""
    return int(BYTES_PER_ROW) * hilbert_dim**2


def lindblad_superoperator(H, jumps: Sequence) -> sp.csc_matrix:
    """Row-stacked superoperator of ``-i[H, .] + sum_k rate_k D[c_k]``.

    Parameters
    ----------
    H : sparse matrix
    jumps : sequence of ``(rate, c)`` pairs
    """
    d = H.shape[0]
    eye = sp.identity(d, format="csr", dtype=complex)
    L = -1j * (sp.kron(H, eye) - sp.kron(eye, H.T))
    for rate, c in jumps:
        c = sp.csr_matrix(c)
        cdc = (c.conj().T @ c).tocsr()
        L = L + rate * (sp.kron(c, c.conj()) - 0.5 * sp.kron(cdc, eye)
                        - 0.5 * sp.kron(eye, cdc.T))
    return sp.csc_matrix(L)


@dataclass(frozen=True, eq=False)
class LiouvillianSuperoperator:
    """Sparse generator ``d vec(rho)/dt = matrix @ vec(rho)``.

    Attributes
    ----------
    matrix : scipy.sparse.csc_matrix
    hilbert_dim : int
        Dimension ``d`` of the underlying Hilbert space.
    params : ModelParams or None
    nuclear_ops : tuple
        ``(I^+, I^-, I_z)`` embedded in the full space, used for observables.
    hamiltonian : sparse matrix
    j_norm : float
        Normalization of nuclear moments (``J``, or the total shell spin).
    jumps : tuple
        ``(rate, operator)`` pairs of the dissipator.
    steady_method : str
        Default method of :func:`steady_state` for this generator.
    """

    matrix: sp.csc_matrix
    hilbert_dim: int
    params: Optional[ModelParams] = None
    nuclear_ops: tuple = ()
    hamiltonian: Optional[sp.spmatrix] = None
    j_norm: float = 1.0
    jumps: tuple = ()
    steady_method: str = "shift-invert"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.hilbert_dim**2

    def apply(self, X: np.ndarray) -> np.ndarray:
        """``L[X]`` for a ``d x d`` operator."""
        d = self.hilbert_dim
        return (self.matrix @ np.asarray(X, dtype=complex).reshape(d * d)).reshape(d, d)

    @cached_property
    def norm1(self) -> float:
        return float(spla.norm(self.matrix, 1))

    @cached_property
    def _lu_perm(self) -> np.ndarray:
        # put the electron index last, which lowers LU fill for these models
        d = self.hilbert_dim
        r = d // 2
        q = np.arange(d)
        ph = (q % 2) * r + q // 2
        return (ph[:, None] * d + ph[None, :]).ravel()


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace operator with cached spectrum checks."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def check(self, herm_tol=1e-10, trace_tol=1e-10, pos_tol=1e-8) -> bool:
        return (self.hermiticity_error() <= herm_tol and abs(self.trace - 1) <= trace_tol
                and self.min_eigenvalue >= -pos_tol)

    @classmethod
    def from_vector(cls, v: np.ndarray, d: int) -> "DensityOperator":
        X = np.asarray(v, dtype=complex).reshape(d, d)
        X = X / np.trace(X)
        return cls(0.5 * (X + X.conj().T))

    def reshape4(self):
        d = self.dim
        return self.matrix.reshape(2, d // 2, 2, d // 2)

    def electron_state(self) -> np.ndarray:
        return np.einsum("iaja->ij", self.reshape4())

    def nuclear_state(self) -> np.ndarray:
        return np.einsum("iaib->ab", self.reshape4())


@dataclass(frozen=True)
class SpectrumSlice:
    """Eigenvalues of largest real part and the asymptotic decay rate.

    ``vectors`` (optional) holds the matching right eigenvectors as columns.
    """

    eigenvalues: np.ndarray
    adr: complex
    null_tol: float
    vectors: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def multiplicity(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= self.null_tol))


@dataclass(frozen=True)
class SteadyState:
    """Steady state with solver diagnostics.

    ``multiplicity`` counts eigenvalues with ``|lambda| <= null_tol``;
    values above one signal a (quasi-)degenerate null space.
    """

    rho: DensityOperator
    residual: float
    multiplicity: int
    method: str
    spectrum: Optional[SpectrumSlice] = None


def _embedded_ops(two_j: int):
    ip, im, iz = spin_matrices(two_j)
    e2 = sp.identity(2, format="csr", dtype=complex)
    s_p, s_m, s_z = electron_operators()
    n = two_j + 1
    en = sp.identity(n, format="csr", dtype=complex)
    S = tuple(sp.kron(o, en, format="csr") for o in (s_p, s_m, s_z))
    I = tuple(sp.kron(e2, o, format="csr") for o in (ip, im, iz))
    return S, I


def build_from_nuclear_operators(params: ModelParams, ip, im, iz, scale: float,
                                 j_norm: float, memory_budget: Optional[int] = None,
                                 steady_method: str = "shift-invert"
                                 ) -> LiouvillianSuperoperator:
    """Liouvillian with arbitrary nuclear operators ``(I^+, I^-, I_z)``.

    ``ip, im, iz`` act on the nuclear factor only; ``scale`` multiplies the
    drive and the electron decay (``J`` for the homogeneous model).
    """
    n = ip.shape[0]
    d = 2 * n
    budget = DEFAULT_MEMORY_BUDGET if memory_budget is None else memory_budget
    need = estimate_bytes(d)
    if need > budget:
        raise ResourceError(need, budget, f"Liouvillian of Hilbert dimension {d}")
    s_p, s_m, _ = electron_operators()
    e2 = sp.identity(2, format="csr", dtype=complex)
    en = sp.identity(n, format="csr", dtype=complex)
    Sp, Sm = sp.kron(s_p, en, format="csr"), sp.kron(s_m, en, format="csr")
    Ip, Im, Iz = (sp.kron(e2, o, format="csr") for o in (ip, im, iz))
    a = params.a
    H = (scale * params.Omega * (Sp + Sm) + params.delta_omega() * Iz
         + 0.5 * a * (Sp @ Im + Sm @ Ip) + a * (Sp @ Sm) @ Iz).tocsr()
    jumps = ((scale * params.gamma, Sm),)
    L = lindblad_superoperator(H, jumps)
    return LiouvillianSuperoperator(matrix=L, hilbert_dim=d, params=params,
                                    nuclear_ops=(Ip, Im, Iz), hamiltonian=H,
                                    j_norm=float(j_norm), jumps=jumps,
                                    steady_method=steady_method)


def build_liouvillian(params: ModelParams, memory_budget: Optional[int] = None
                      ) -> LiouvillianSuperoperator:
    """Exact Liouvillian of the homogeneous model in the maximal-J sector.

    Raises
    ------
    ResourceError
        If the estimated memory exceeds ``memory_budget`` (bytes).
    """
    ip, im, iz = spin_matrices(params.two_j)
    return build_from_nuclear_operators(params, ip, im, iz, scale=params.J,
                                        j_norm=params.J, memory_budget=memory_budget)


def _eig_dense(L: LiouvillianSuperoperator):
    w, v = sla.eig(L.matrix.toarray())
    return w, v


def _eig_shift_invert(L: LiouvillianSuperoperator, k: int, sigma: float, tol: float):
    perm = L._lu_perm
    A = L.matrix[perm][:, perm].tocsc()
    N = A.shape[0]
    shifted = (A - sigma * sp.identity(N, format="csc", dtype=complex)).tocsc()
    lu = spla.splu(shifted)
    del shifted
    op = spla.LinearOperator((N, N), matvec=lu.solve, dtype=complex)
    ncv = min(N - 1, max(2 * k + 1, 6 * k))
    try:
        w, v = spla.eigs(A, k=k, sigma=sigma, OPinv=op, tol=tol, ncv=ncv, maxiter=5000)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError("shift-invert Arnoldi did not converge",
                               float("nan")) from exc
    out = np.empty_like(v)
    out[perm] = v
    return w, out


def _spectrum(L: LiouvillianSuperoperator, k: int, sigma: float, tol: float = 1e-12):
    """Cached ``(eigenvalues, vectors)`` sorted by descending real part."""
    for (kk, ss, tt), val in L._cache.items():
        if kk >= k and ss == sigma and tt <= tol:
            return val
    dense = L.dim <= DENSE_LIMIT
    w, v = _eig_dense(L) if dense else _eig_shift_invert(L, k, sigma, tol)
    order = np.lexsort((-w.imag, -np.round(w.real, 13)))
    w, v = w[order], v[:, order]
    L._cache[(L.dim if dense else k, sigma, tol)] = (w, v)
    return w, v


def low_spectrum(L: LiouvillianSuperoperator, k: int = 8, null_tol: float = NULL_TOL,
                 sigma: Optional[float] = None) -> SpectrumSlice:
    """The ``k`` eigenvalues of largest real part and the ADR.

    The ADR is the first eigenvalue outside ``|lambda| <= null_tol``; when
    it belongs to a conjugate pair the member with ``Im >= 0`` is returned.

    Uses shift-invert Arnoldi at a small positive real shift (dense
    diagonalization for tiny systems). Internally ``max(k, 10)`` eigenvalues
    are requested so that weakly damped modes with large imaginary parts are
    not missed.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    shift = DEFAULT_SHIFT * _energy_scale(L) if sigma is None else sigma
    w, v = _spectrum(L, max(k, 10), shift)
    w, v = w[:k], v[:, :k]
    nonzero = np.flatnonzero(np.abs(w) > null_tol)
    if nonzero.size:
        i = nonzero[0]
        # of a conjugate pair, report the member with Im >= 0
        partner = np.flatnonzero(np.abs(w - np.conj(w[i])) <= 1e-8 * max(1.0, abs(w[i])))
        adr = complex(w[max([i, *partner], key=lambda j: w[j].imag)])
    else:
        adr = complex("nan")
    return SpectrumSlice(eigenvalues=w, adr=adr, null_tol=null_tol, vectors=v)


def _energy_scale(L: LiouvillianSuperoperator) -> float:
    return L.params.a if L.params is not None else 1.0


def _trace_functional(d: int) -> np.ndarray:
    t = np.zeros(d * d)
    t[np.arange(d) * (d + 1)] = 1.0
    return t


def _direct_steady(L: LiouvillianSuperoperator) -> np.ndarray:
    d = L.hilbert_dim
    A = L.matrix.tolil()
    A[0, :] = _trace_functional(d)
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    perm = L._lu_perm
    Ap = A.tocsr()[perm][:, perm].tocsc()
    x = spla.splu(Ap).solve(rhs[perm])
    out = np.empty_like(x)
    out[perm] = x
    return out


KRYLOV_SHIFT = 1e-4
KRYLOV_RTOL_FLOOR = 1e-13
POSITIVITY_TOL = 1e-8


def _krylov_steady(L: LiouvillianSuperoperator, rtol: float, maxiter: int) -> np.ndarray:
    """Bordered system ``L x + v tr(x) = v`` solved by GCROT(m,k).

    Right preconditioner: inverse of ``s - K`` with the no-jump generator
    ``K x = -i (H_eff x - x H_eff^dag)``, applied elementwise in the
    eigenbasis of ``H_eff``.
    """
    if L.hamiltonian is None or not L.jumps:
        raise PreconditionError("krylov steady state needs the Hamiltonian and jump operators")
    d = L.hilbert_dim
    heff = L.hamiltonian.toarray().astype(complex)
    for rate, c in L.jumps:
        c = c.toarray() if sp.issparse(c) else np.asarray(c)
        heff -= 0.5j * rate * (c.conj().T @ c)
    lam, V = np.linalg.eig(heff)
    Vi = np.linalg.inv(V)
    Vh, Vih = V.conj().T, Vi.conj().T
    den = KRYLOV_SHIFT * _energy_scale(L) + 1j * (lam[:, None] - lam.conj()[None, :])
    A = L.matrix.tocsr()
    tr = _trace_functional(d)
    v = tr / d

    def prec(y):
        return (V @ ((Vi @ y.reshape(d, d) @ Vih) / den) @ Vh).ravel()

    def mv(x):
        z = prec(x)
        return A @ z + v * (tr @ z)

    op = spla.LinearOperator((d * d, d * d), matvec=mv, dtype=complex)
    y, info = spla.gcrotmk(op, v.astype(complex), rtol=rtol, atol=0.0, maxiter=maxiter)
    if info != 0:
        log.info("gcrotmk stopped with info=%d", info)
    return prec(y)


def steady_state(L: LiouvillianSuperoperator, null_tol: float = NULL_TOL,
                 k: int = 10, method: Optional[str] = None,
                 maxiter: int = 2000) -> SteadyState:
    """Steady state of ``L``, Hermitized and trace normalized.

    Parameters
    ----------
    null_tol : float
        Eigenvalues with ``|lambda| <= null_tol`` count towards the null-space
        multiplicity, and the residual ``||L rho||_2`` must not exceed
        ``null_tol * max(1, ||L||_1)``.
    method : {"shift-invert", "direct", "krylov"}, optional
        Defaults to ``L.steady_method``. ``direct`` solves ``L x = 0`` with
        one equation replaced by the trace constraint; shift-invert falls
        back to it when its residual is too large. ``krylov`` avoids sparse
        LU altogether (for multi-shell models, whose LU fill is prohibitive)
        and reports no spectrum.

    Raises
    ------
    ConvergenceError
        If neither method reaches the residual bound.
    """
    d = L.hilbert_dim
    bound = null_tol * max(1.0, L.norm1)
    spec = None
    method = L.steady_method if method is None else method
    if method == "krylov":
        # the null space may be quasi-degenerate (multi-shell models at weak
        # drive); a loosely converged mixture of its members can lose
        # positivity, so tighten the tolerance until it is restored
        rtol = null_tol
        while True:
            rho = DensityOperator.from_vector(_krylov_steady(L, rtol, maxiter), d)
            if rho.min_eigenvalue >= -POSITIVITY_TOL or rtol <= KRYLOV_RTOL_FLOOR:
                break
            rtol = max(rtol * 1e-3, KRYLOV_RTOL_FLOOR)
        res = float(np.linalg.norm(L.matrix @ rho.matrix.ravel()))
        if res > bound:
            raise ConvergenceError("krylov steady state did not reach tolerance", res)
        return _finish(rho, res, 1, "krylov", None)
    if method == "shift-invert":
        spec = low_spectrum(L, k=k, null_tol=null_tol)
        i0 = int(np.argmin(np.abs(spec.eigenvalues)))
        vec = spec.vectors[:, i0]
        rho = DensityOperator.from_vector(vec, d)
        res = float(np.linalg.norm(L.matrix @ rho.matrix.ravel()))
        if res <= bound:
            return _finish(rho, res, spec.multiplicity, "shift-invert", spec)
        log.info("shift-invert residual %.2e above %.2e, falling back to direct LU", res, bound)
    elif method != "direct":
        raise ValueError(f"unknown method {method!r}")
    rho = DensityOperator.from_vector(_direct_steady(L), d)
    res = float(np.linalg.norm(L.matrix @ rho.matrix.ravel()))
    if res > bound:
        raise ConvergenceError("steady state solve did not reach tolerance", res)
    mult = spec.multiplicity if spec is not None else 1
    return _finish(rho, res, mult, "direct", spec)


def _finish(rho, res, mult, method, spec):
    if rho.min_eigenvalue < -POSITIVITY_TOL:
        warnings.warn(f"steady state has negative eigenvalue {rho.min_eigenvalue:.2e}",
                      RuntimeWarning, stacklevel=3)
    return SteadyState(rho=rho, residual=res, multiplicity=mult, method=method, spectrum=spec)


@dataclass(frozen=True)
class Observables:
    """First and second moments of a state.

    Attributes
    ----------
    s : ndarray
        ``<S_x>, <S_y>, <S_z>``.
    i : ndarray
        ``<I_x>, <I_y>, <I_z>``.
    i_over_j : ndarray
    correlations : ndarray
        3x3 connected ``<S_a I_b> - <S_a><I_b>``.
    nuclear_cov : ndarray
        3x3 symmetrized ``<{dI_a, dI_b}>/2``.
    populations : ndarray
        ``p(m)`` of the reduced nuclear state, ascending ``m``.
    purity : float
    """

    s: np.ndarray
    i: np.ndarray
    i_over_j: np.ndarray
    correlations: np.ndarray
    nuclear_cov: np.ndarray
    populations: np.ndarray
    purity: float


def _cartesian(p, m, z):
    return [0.5 * (p + m), (p - m) / 2j, z]


def observables(rho, L: Optional[LiouvillianSuperoperator] = None,
                j_norm: Optional[float] = None) -> Observables:
    """Moments of ``rho``.

    Nuclear operators are taken from ``L`` when given (needed for shell
    models); otherwise a single spin ``J = (d/2 - 1)/2`` is assumed.
    """
    R = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    d = R.shape[0]
    n = d // 2
    if L is not None and L.nuclear_ops:
        ip, im, iz = L.nuclear_ops
        norm = L.j_norm if j_norm is None else j_norm
    else:
        two_j = n - 1
        _, (ip, im, iz) = _embedded_ops(two_j)
        norm = two_j / 2 if j_norm is None else j_norm
    s_p, s_m, s_z = electron_operators()
    en = sp.identity(n, format="csr", dtype=complex)
    S = [sp.kron(o, en, format="csr") for o in _cartesian(s_p, s_m, s_z)]
    I = _cartesian(ip, im, iz)
    I = [sp.csr_matrix(o) for o in I]

    def ev(op):
        # Tr(rho op) = sum_ij rho_ij op_ji
        return complex(np.sum(op.T.multiply(R)))

    s = np.array([ev(o).real for o in S])
    iv = np.array([ev(o).real for o in I])
    corr = np.array([[ev(a @ b).real - s[x] * iv[y] for y, b in enumerate(I)]
                     for x, a in enumerate(S)])
    cov = np.empty((3, 3))
    for x in range(3):
        for y in range(x, 3):
            sym = 0.5 * (I[x] @ I[y] + I[y] @ I[x])
            cov[x, y] = cov[y, x] = ev(sym).real - iv[x] * iv[y]
    pops = np.real(np.diag(DensityOperator(R).nuclear_state()))
    purity = float(np.real(np.vdot(R, R)))
    return Observables(s=s, i=iv, i_over_j=iv / norm, correlations=corr,
                       nuclear_cov=cov, populations=pops, purity=purity)


@dataclass(frozen=True)
class BistablePair:
    """Extreme positive members of the quasi-degenerate steady-state family.

    Iterating yields ``(rho_lo, rho_up)``.
    """

    rho_lo: DensityOperator
    rho_up: DensityOperator
    rho0: DensityOperator
    rho1: np.ndarray
    interval: tuple
    adr: complex

    def __iter__(self):
        return iter((self.rho_lo, self.rho_up))


def _admissible_interval(P_isqrt: np.ndarray, r1: np.ndarray):
    mu = np.linalg.eigvalsh(P_isqrt @ r1 @ P_isqrt)
    pos, neg = mu[mu > 0], mu[mu < 0]
    lo = float(np.max(-1.0 / pos)) if pos.size else -np.inf
    hi = float(np.min(-1.0 / neg)) if neg.size else np.inf
    return lo, hi


def bistable_pair(L: LiouvillianSuperoperator, null_tol: float = BISTABLE_TOL,
                  pos_tol: float = POS_TOL, n_angles: int = 90) -> BistablePair:
    """Two positive steady states spanning a quasi-degenerate null space.

    ``rho(lam) = rho0 + lam * rho1`` with ``rho1`` the Hermitized, traceless
    ADR eigenmatrix (normalized to unit trace norm). The admissible interval
    is where ``rho(lam) >= -pos_tol``; its endpoints give the pair.

    Raises
    ------
    PreconditionError
        If ``|ADR| > null_tol``.
    NumericalDegeneracyError
        If the admissible interval is empty or unbounded.
    """
    spec = low_spectrum(L, k=10, null_tol=NULL_TOL)
    if not abs(spec.adr) <= null_tol:
        raise PreconditionError(f"|ADR| = {abs(spec.adr):.3e} exceeds {null_tol:.1e}")
    ss = steady_state(L, null_tol=NULL_TOL)
    rho0 = ss.rho
    d = L.hilbert_dim
    i1 = int(np.flatnonzero(spec.eigenvalues == spec.adr)[0])
    X = spec.vectors[:, i1].reshape(d, d)
    h1 = 0.5 * (X + X.conj().T)
    h2 = (X - X.conj().T) / 2j
    if abs(spec.adr.imag) <= 1e-12 * max(1.0, abs(spec.adr)) or abs(spec.adr) == 0:
        cands = [h1 if np.linalg.norm(h1) >= np.linalg.norm(h2) else h2]
    else:
        cands = [np.cos(t) * h1 + np.sin(t) * h2
                 for t in np.linspace(0, np.pi, n_angles, endpoint=False)]
    w0, V0 = np.linalg.eigh(rho0.matrix)
    P_isqrt = (V0 / np.sqrt(np.clip(w0, 0, None) + pos_tol)) @ V0.conj().T
    best = None
    for c in cands:
        c = c - np.trace(c).real * rho0.matrix
        nrm = np.abs(np.linalg.eigvalsh(c)).sum()
        if nrm == 0:
            continue
        c = c / nrm
        lo, hi = _admissible_interval(P_isqrt, c)
        if best is None or (hi - lo) > best[0]:
            best = (hi - lo, lo, hi, c)
    if best is None or not np.isfinite(best[0]) or best[0] <= 0:
        raise NumericalDegeneracyError("admissible interval is empty")
    _, lo, hi, r1 = best
    ra = DensityOperator(rho0.matrix + lo * r1)
    rb = DensityOperator(rho0.matrix + hi * r1)
    (_, _, iz) = _embedded_ops(L.hilbert_dim // 2 - 1)[1] if not L.nuclear_ops else L.nuclear_ops
    za = float(np.real(np.sum(iz.T.multiply(ra.matrix))))
    zb = float(np.real(np.sum(iz.T.multiply(rb.matrix))))
    lo_rho, up_rho = (ra, rb) if za <= zb else (rb, ra)
    return BistablePair(rho_lo=lo_rho, rho_up=up_rho, rho0=rho0, rho1=r1,
                        interval=(lo, hi), adr=spec.adr)
