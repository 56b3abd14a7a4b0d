"""Self-consistent semiclassical displacements of the nuclear mode.

The nuclear field enters the electron dynamics through the displacement
``beta`` of the Holstein-Primakoff boson. For a given ``beta`` the electron
relaxes to the steady state of its optical Bloch equations; ``beta`` is
self-consistent when the expectation of the first-order coupling operator
``A`` vanishes in that electron state.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterDomainError, SearchFailureError, SingularPointError
from .params import ModelParams, beta_to_polarization

__all__ = [
    "SemiclassicalRoot",
    "bloch_steady",
    "residual",
    "precession_residual",
    "partner_beta",
    "find_roots",
    "refine_root",
    "make_root",
]

ROOT_TOL = 1e-10
DEDUP_DIST = 1e-6
BOUNDARY_DIST = 1e-6
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class SemiclassicalRoot:
    """A self-consistent displacement with its mean-field vectors.

    Attributes
    ----------
    beta : complex
        Displacement, ``|beta| <= sqrt(2)``.
    electron : ndarray
        ``(<S_x>, <S_y>, <S_z>)`` in the electron quasi-steady state.
    nuclear0 : ndarray
        Unit mean-field vector of the nuclear spin per J.
    branch : str
        ``"normal"`` when the nuclear polarization points along the
        pumping direction (``-z``), ``"anomalous"`` otherwise.
    stable : bool or None
        Second-order stability, filled in by the fluctuation analysis.
    boundary : bool
        Root sits on ``|beta| = sqrt(2)`` (fully inverted nuclei).
    residual : float
        ``|<A>|`` at the root (precession residual for boundary roots).
    """

    beta: complex
    electron: np.ndarray
    nuclear0: np.ndarray
    branch: str
    stable: Optional[bool] = None
    boundary: bool = False
    residual: float = 0.0

    def with_stability(self, stable: bool) -> "SemiclassicalRoot":
        return dataclasses.replace(self, stable=bool(stable))

    def with_branch(self, branch: str) -> "SemiclassicalRoot":
        return dataclasses.replace(self, branch=branch)


def _check_domain(b2):
    if np.any(b2 > 2 + 1e-12):
        raise ParameterDomainError("|beta|^2 must not exceed 2")


def bloch_steady(beta, params: ModelParams):
    """Electron steady state of the Bloch equations at displacement ``beta``.

    Returns
    -------
    sp : complex or ndarray
        ``<S^+>``.
    sz : float or ndarray
        ``<S_z>``.
    spsm : float or ndarray
        ``<S^+ S^-> = <S_z> + 1/2``.
    """
    b = np.asarray(beta, dtype=complex)
    _check_domain(np.abs(b) ** 2)
    return _bloch(b, params)


def _bloch(b, params: ModelParams):
    # unchecked; k is clipped at zero so finite differences may graze the rim
    b2 = np.abs(b) ** 2
    a, g = params.a, params.gamma
    k = np.clip(2 - b2, 0, None)
    om_t = params.Omega + 0.5 * a * np.sqrt(k) * b
    jz = b2 - 1
    lor = g**2 + 4 * a**2 * jz**2
    den = lor + 8 * np.abs(om_t) ** 2
    sp = 2j * np.conj(om_t) * (g + 2j * a * jz) / den
    sz = -0.5 * lor / den
    return sp, sz, sz + 0.5


def _scaled_residual(b, params: ModelParams):
    # sqrt(k) <A>, finite on the whole closed disc
    b2 = np.abs(b) ** 2
    k = np.clip(2 - b2, 0, None)
    sp, _, spsm = _bloch(b, params)
    a = params.a
    bc = np.conj(b)
    return (np.sqrt(k) * bc * (a * spsm + params.delta_omega())
            + 0.25 * a * ((2 * k - b2) * sp - bc**2 * np.conj(sp)))


def residual(beta, params: ModelParams):
    """Expectation ``<A>`` of the first-order coupling operator.

    Raises
    ------
    SingularPointError
        On the boundary ``|beta|^2 = 2`` where ``sqrt(k)`` vanishes.
    """
    b = np.asarray(beta, dtype=complex)
    k = 2 - np.abs(b) ** 2
    _check_domain(-k + 2)
    if np.any(k <= 0):
        raise SingularPointError("residual is singular at |beta|^2 = 2")
    out = _scaled_residual(b, params) / np.sqrt(k)
    return out.item() if out.ndim == 0 else out


def electron_vector(beta, params: ModelParams) -> np.ndarray:
    sp, sz, _ = bloch_steady(beta, params)
    return np.stack([np.real(sp), np.imag(sp), np.real(sz)], axis=-1)


def precession_residual(electron, nuclear0, params: ModelParams) -> np.ndarray:
    """Torque on the nuclear mean field, ``(a<S> + omega z) x J0``.

    The fixed-point condition of the mean-field nuclear dynamics, written
    independently of the displacement parametrization.
    """
    field = params.a * np.asarray(electron, dtype=float)
    field = field + np.array([0.0, 0.0, params.omega])
    return np.cross(field, np.asarray(nuclear0, dtype=float))


def partner_beta(beta: complex) -> complex:
    """Image of ``beta`` under the symmetry ``(Jx, Jy, Jz) -> (Jx, -Jy, -Jz)``."""
    r = abs(beta)
    if r == 0:
        return complex(-SQRT2)
    k = max(2 - r * r, 0.0)
    return complex(np.sqrt(k) * np.conj(beta) / r)


def make_root(beta: complex, params: ModelParams, boundary: bool = False) -> SemiclassicalRoot:
    """Assemble a root record (no root check performed)."""
    beta = complex(beta)
    el = electron_vector(beta, params)
    nu = beta_to_polarization(beta)
    if boundary:
        res = float(np.linalg.norm(precession_residual(el, nu, params)))
    else:
        res = float(abs(residual(beta, params)))
    branch = "normal" if nu[2] <= 1e-12 else "anomalous"
    return SemiclassicalRoot(beta=beta, electron=el, nuclear0=nu, branch=branch,
                             boundary=boundary, residual=res)


def _jacobian(f, b, h=1e-7):
    fx = (f(b + h) - f(b - h)) / (2 * h)
    fy = (f(b + 1j * h) - f(b - 1j * h)) / (2 * h)
    return fx, fy


def _newton(b0, func, max_iter=200, ftol=1e-15, xtol=1e-15):
    """Vectorized damped Newton on the two real components of ``func``.

    Steps are backtracked until the residual modulus decreases and clipped
    so that iterates stay inside the closed disc.
    """
    b = np.array(b0, dtype=complex).ravel()
    f = func(b)
    active = np.ones(b.size, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active & (np.abs(f) > ftol))
        if idx.size == 0:
            break
        bi, fi = b[idx], f[idx]
        fx, fy = _jacobian(func, bi)
        # [[Re fx, Re fy], [Im fx, Im fy]] d = -[Re f, Im f]
        j11, j12, j21, j22 = fx.real, fy.real, fx.imag, fy.imag
        det = j11 * j22 - j12 * j21
        ok = np.abs(det) > 1e-300
        det = np.where(ok, det, 1.0)
        dx = -(j22 * fi.real - j12 * fi.imag) / det
        dy = -(-j21 * fi.real + j11 * fi.imag) / det
        # steepest descent where the Jacobian is singular
        gx = j11 * fi.real + j21 * fi.imag
        gy = j12 * fi.real + j22 * fi.imag
        dx = np.where(ok, dx, -gx)
        dy = np.where(ok, dy, -gy)
        step = dx + 1j * dy
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        bnew, fnew = bi.copy(), fi.copy()
        for _ in range(40):
            pending = ~accepted
            if not pending.any():
                break
            trial = bi[pending] + t[pending] * step[pending]
            r = np.abs(trial)
            over = r > SQRT2
            trial[over] *= SQRT2 / r[over]
            ft = func(trial)
            better = np.abs(ft) < (1 - 1e-4 * t[pending]) * np.abs(fi[pending])
            better |= np.abs(ft) <= ftol
            sel = np.flatnonzero(pending)[better]
            bnew[sel], fnew[sel] = trial[better], ft[better]
            accepted[sel] = True
            t[~accepted] *= 0.5
        moved = np.abs(bnew - bi)
        b[idx], f[idx] = bnew, fnew
        stalled = ~accepted | (moved < xtol)
        active[idx[stalled]] = False
    return b, f


def _grid(density: int) -> np.ndarray:
    x = np.linspace(-SQRT2, SQRT2, density)
    X, Y = np.meshgrid(x, x)
    b = (X + 1j * Y).ravel()
    return b[np.abs(b) ** 2 < 2 * (1 - 1e-9)]


def _polish(beta: complex, params: ModelParams, tol: float):
    """Newton on the unscaled residual to reach the absolute tolerance."""
    func = lambda z: residual(z, params)  # noqa: E731
    try:
        b, f = _newton(np.array([beta]), func, max_iter=30, ftol=tol * 1e-3)
    except SingularPointError:
        return beta, np.inf
    return complex(b[0]), float(abs(f[0]))


def _classify_candidate(beta, params, tol):
    """Return ``(beta, boundary)`` for an admissible root or ``None``."""
    r = abs(beta)
    if SQRT2 - r <= BOUNDARY_DIST:
        # the pole: accept only if the mean-field torque vanishes there
        pole = complex(-SQRT2)
        el = electron_vector(pole, params)
        torque = precession_residual(el, np.array([0.0, 0.0, 1.0]), params)
        if np.linalg.norm(torque) <= 1e-9 * params.a:
            return pole, True
        return None
    if r * r > 2 - 1e-12:
        return None
    b, res = _polish(beta, params, tol)
    if res <= tol * params.a and abs(b) ** 2 < 2:
        return b, False
    return None


def _dedupe(cands):
    out = []
    for b, bd in cands:
        if bd:
            if not any(o[1] for o in out):
                out.append((b, bd))
            continue
        if all(abs(b - o[0]) > DEDUP_DIST for o in out if not o[1]):
            out.append((b, bd))
    return out


def refine_root(seed: complex, params: ModelParams, tol: float = ROOT_TOL):
    """Newton from a single seed; returns a root or ``None``."""
    func = lambda z: _scaled_residual(z, params)  # noqa: E731
    b, _ = _newton(np.array([seed]), func)
    c = _classify_candidate(complex(b[0]), params, tol)
    if c is None:
        return None
    return make_root(c[0], params, boundary=c[1])


def find_roots(params: ModelParams, grid_density: int = 40,
               seeds=None, tol: float = ROOT_TOL) -> list:
    """All self-consistent displacements in the closed disc.

    Multi-start damped Newton over a uniform grid restricted to
    ``|beta| <= sqrt(2)``, plus optional extra ``seeds``. The symmetry
    partner of each root is added after verification, and roots are
    returned sorted by ``<I_z>`` (normal branch first).

    Raises
    ------
    SearchFailureError
        If no admissible root is found.
    """
    func = lambda z: _scaled_residual(z, params)  # noqa: E731
    starts = _grid(grid_density) if grid_density > 0 else np.empty(0, complex)
    if seeds is not None:
        starts = np.concatenate([np.atleast_1d(np.asarray(seeds, dtype=complex)), starts])
    if starts.size == 0:
        raise SearchFailureError("no start points", np.inf)
    b, f = _newton(starts, func)
    order = np.argsort(np.abs(f))
    cands = []
    for i in order:
        if np.abs(f[i]) > 1e-6 * params.a:
            break
        if any(abs(b[i] - c[0]) <= DEDUP_DIST for c in cands):
            continue
        c = _classify_candidate(complex(b[i]), params, tol)
        if c is not None:
            cands.append(c)
    cands = _dedupe(cands)
    # symmetry partners
    for bb, bd in list(cands):
        c = _classify_candidate(partner_beta(bb) if not bd else 0j, params, tol)
        if c is not None:
            cands.append(c)
    cands = _dedupe(cands)
    if not cands:
        raise SearchFailureError("no self-consistent displacement found",
                                 float(np.min(np.abs(f))))
    roots = [make_root(bb, params, boundary=bd) for bb, bd in cands]
    roots.sort(key=lambda r: (r.nuclear0[2], r.beta.real, r.beta.imag))
    return roots


def pair_roots(roots: list) -> list:
    """Group roots into symmetry pairs ``(root, partner_or_None)``."""
    used = set()
    pairs = []
    for i, r in enumerate(roots):
        if i in used:
            continue
        used.add(i)
        target = partner_beta(r.beta) if not r.boundary else 0j
        match = None
        for j, s in enumerate(roots):
            if j in used:
                continue
            if (s.boundary and r.beta == 0) or abs(s.beta - target) <= 1e-6:
                match = j
                break
        if match is not None:
            used.add(match)
            pairs.append((r, roots[match]))
        else:
            pairs.append((r, None))
    return pairs
