import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad_vec

from centralspin import ModelParams, NearSingularExpansionError, NoFixedPointError
from centralspin.analytic import gamma_eff_near_critical, segment_x
from centralspin.gaussian import (SM, SP, SZ, CovarianceSummary, bloch_matrix, coefficients,
                                  coupling_vectors, covariance_steady, drift_and_stability,
                                  effective_temperature, electron_density_matrix,
                                  integrated_correlations, moment_flow, solve_gaussian,
                                  squeezing_witness, steady_correlation_matrix)
from centralspin.semiclassical import find_roots, pair_roots

# stable points off segment x, spanning phases A, B, D and the supercritical side
OFF_X = [(1.5, 0.5), (1.5, 0.8), (1.5, 1.25), (1.5, 2.0), (0.5, 0.8), (0.5, 1.5)]


def _stable_root(w, O, gamma=1.0):
    p = ModelParams.from_ratios(w, O, gamma=gamma)
    best, _ = solve_gaussian(p)
    assert best is not None
    return p, best


def _x_root(x, gamma=1.0):
    p = ModelParams.from_ratios(1.0, x, gamma=gamma)
    return p, segment_x(p).beta_minus


# ---------------------------------------------------------------- electron oracle

def _electron_liouvillian(beta, p):
    """4x4 electron generator, row-stacked, built from scratch."""
    k = 2 - abs(beta) ** 2
    om = p.Omega + 0.5 * p.a * np.sqrt(k) * beta
    H = p.a * (abs(beta) ** 2 - 1) * SZ + om * SP + np.conj(om) * SM
    e = np.eye(2)
    spsm = SP @ SM
    return (-1j * (np.kron(H, e) - np.kron(e, H.T))
            + p.gamma * (np.kron(SM, SM.conj()) - 0.5 * np.kron(spsm, e)
                         - 0.5 * np.kron(e, spsm.T)))


def _electron_steady(L):
    w, v = np.linalg.eig(L)
    rho = v[:, np.argmin(abs(w))].reshape(2, 2)
    return rho / np.trace(rho)


def _qrt_integral(L, rho, left, right, after, T):
    """Integral over [0, T] of <d(left)(t) d(right)(0)> (after=False) or
    <d(right)(0) d(left)(t)> (after=True), by the regression theorem."""
    mean = np.trace(rho @ left) * np.trace(rho @ right)
    seed = (rho @ right) if after else (right @ rho)

    def f(t):
        x = (sla.expm(L * t) @ seed.ravel()).reshape(2, 2)
        return np.array([np.trace(left @ x) - mean])

    return quad_vec(f, 0, T, epsabs=1e-13, epsrel=1e-11, limit=400)[0][0]


@pytest.mark.parametrize("w,O", OFF_X[:3] + [(0.5, 0.8)])
def test_electron_state_matches_lindblad_null_space(w, O):
    p, sol = _stable_root(w, O)
    rho = _electron_steady(_electron_liouvillian(sol.root.beta, p))
    np.testing.assert_allclose(electron_density_matrix(sol.root, p), rho, atol=1e-12)
    ops = (SP, SM, SZ)
    mean = [np.trace(rho @ o) for o in ops]
    S = np.array([[np.trace(rho @ a @ b.conj().T) - mean[i] * np.conj(mean[j])
                   for j, b in enumerate(ops)] for i, a in enumerate(ops)])
    np.testing.assert_allclose(steady_correlation_matrix(sol.root, p), S, atol=1e-12)


def test_correlation_matrix_dark_state():
    p, beta = _x_root(0.5)
    S = steady_correlation_matrix(beta, p)
    assert S[0, 0] == pytest.approx(0) and S[1, 1] == pytest.approx(1) and S[2, 2] == pytest.approx(0)
    np.testing.assert_allclose(S, S.conj().T, atol=1e-15)


def test_bloch_matrix_examples():
    p, beta = _x_root(0.5)
    m = bloch_matrix(beta, p).m
    assert np.trace(m) == pytest.approx(-2 * p.gamma)
    ev = np.sort_complex(np.linalg.eigvals(m))
    np.testing.assert_allclose(sorted(ev.real), [-1.0, -0.5, -0.5], atol=1e-12)
    np.testing.assert_allclose(sorted(abs(ev.imag)), [0, np.sqrt(0.75), np.sqrt(0.75)], atol=1e-12)
    for w, O in OFF_X:
        q, sol = _stable_root(w, O)
        assert np.all(np.linalg.eigvals(bloch_matrix(sol.root, q).m).real < 0)


@pytest.mark.parametrize("w,O", [(1.5, 0.8), (0.5, 0.8)])
def test_integrated_correlations_time_domain(w, O):
    p, sol = _stable_root(w, O)
    L = _electron_liouvillian(sol.root.beta, p)
    rho = _electron_steady(L)
    f1, f2 = integrated_correlations(bloch_matrix(sol.root, p), steady_correlation_matrix(sol.root, p))
    np.testing.assert_array_equal(f2, f1.conj().T)
    T = 50 / p.gamma
    ops = (SP, SM, SZ)
    for i, a in enumerate(ops):
        for j, b in enumerate(ops):
            ref = _qrt_integral(L, rho, a, b.conj().T, False, T)
            assert abs(f1[i, j] - ref) <= 1e-6 * max(abs(ref), np.abs(f1).max())


@pytest.mark.parametrize("w,O", [(1.5, 0.5), (1.5, 1.25), (0.5, 0.8), (0.5, 1.5)])
def test_coefficients_brute_force_oracle(w, O):
    """All coefficients against direct regression-theorem integrals of the
    coupling operator, built as a 2x2 matrix."""
    p, sol = _stable_root(w, O)
    beta = sol.root.beta
    co = coefficients(sol.root, p)
    L = _electron_liouvillian(beta, p)
    rho = _electron_steady(L)
    v, wv = coupling_vectors(beta, p)
    A = sum(np.conj(v[i]) * o for i, o in enumerate((SP, SM, SZ)))
    Ad = sum(np.conj(wv[i]) * o for i, o in enumerate((SP, SM, SZ)))
    np.testing.assert_allclose(Ad, A.conj().T, atol=1e-14)
    T = 50 / p.gamma
    g21 = _qrt_integral(L, rho, Ad, A, False, T)
    g12 = _qrt_integral(L, rho, A, Ad, False, T)
    g11 = _qrt_integral(L, rho, A, A, False, T)
    h11 = _qrt_integral(L, rho, A, A, True, T)

    def close(x, ref):
        assert abs(x - ref) <= 1e-6 * max(abs(ref), 1e-3 * p.a)

    close(co.R_a + 1j * co.I_a, g21)
    close(co.R_b + 1j * co.I_b, g12)
    close(co.c, g11 + h11)
    close(co.alpha, (g11 - h11) / 2j)
    # mean-field terms from the 2x2 steady state
    k = 2 - abs(beta) ** 2
    sp_, sm_ = np.trace(rho @ SP), np.trace(rho @ SM)
    spsm = np.trace(rho @ SP @ SM).real
    B = -p.a * beta / (16 * k**1.5) * ((4 * k + abs(beta) ** 2) * sm_ + beta**2 * sp_)
    F = (-p.a / (8 * k**1.5) * (4 * k + abs(beta) ** 2) * (beta * sp_ + np.conj(beta) * sm_)
         + p.a * spsm + p.delta_omega()).real
    close(co.B, B)
    close(co.F, F)
    assert co.chi == co.I_a + co.I_b + co.F
    assert co.xi == np.conj(co.alpha) + co.B
    assert co.R_a >= 0 and co.R_b >= 0


def test_segment_x_b_and_f_vanish():
    p, beta = _x_root(0.6)
    co = coefficients(beta, p)
    assert abs(co.B) < 1e-15 and abs(co.F) < 1e-15


def test_near_singular_expansion():
    p = ModelParams()
    with pytest.raises(NearSingularExpansionError):
        coefficients(-np.sqrt(2) + 1e-12, p)


# ---------------------------------------------------------------- drift

@pytest.mark.parametrize("x", [0.1, 0.4, 0.7, 0.95])
@pytest.mark.parametrize("gamma", [0.3, 1.0, 4.0])
def test_segment_x_drift_eigenvalues(x, gamma):
    p, beta = _x_root(x, gamma)
    d = drift_and_stability(coefficients(beta, p))
    sx = segment_x(p)
    assert d.stable
    assert d.adr.real == pytest.approx(-sx.gamma_eff / 2, abs=1e-10)
    np.testing.assert_allclose(sorted(d.eigenvalues.imag), sorted([-sx.theta_eff, sx.theta_eff]),
                               atol=1e-10)


@pytest.mark.parametrize("gap", [1e-3, 3e-4, 1e-4])
def test_near_critical_gap_asymptotics(gap):
    p, beta = _x_root(1 - gap)
    d = drift_and_stability(coefficients(beta, p))
    assert -2 * d.adr.real == pytest.approx(gamma_eff_near_critical(p), rel=0.01)


@pytest.mark.parametrize("w,O", OFF_X + [(1.0, 0.5), (1.5, 1.3), (2.0, 1.0)])
def test_stability_antisymmetry_across_pairs(w, O):
    p = ModelParams.from_ratios(w, O)
    for r, s in pair_roots(find_roots(p)):
        if s is None or r.boundary or s.boundary:
            continue
        lr = drift_and_stability(coefficients(r, p)).eigenvalues.real
        ls = drift_and_stability(coefficients(s, p)).eigenvalues.real
        assert np.sort(lr) == pytest.approx(np.sort(-ls), abs=1e-9)


@pytest.mark.parametrize("w,O", OFF_X)
def test_drift_structure(w, O):
    p, sol = _stable_root(w, O)
    s = sol.drift.sigma
    assert s[0, 0] == pytest.approx(np.conj(s[1, 1]))
    assert s[0, 1] == pytest.approx(np.conj(s[1, 0]))
    for ev in np.linalg.eigvals(s):
        assert np.min(abs(sol.drift.eigenvalues - ev)) < 1e-12


def test_region_d_real_eigenvalues():
    _, sol = _stable_root(0.5, 0.8)
    co = sol.coeffs
    assert co.chi**2 < 4 * abs(co.xi) ** 2
    assert sol.drift.overdamped
    assert np.all(sol.drift.eigenvalues.imag == 0)


# ---------------------------------------------------------------- covariance

def _fock_steady(co, nmax):
    """Steady state of the quadratic master equation on a truncated Fock space."""
    b = sp.diags(np.sqrt(np.arange(1, nmax)), 1, format="csr", dtype=complex)
    bd = b.T.conj().tocsr()
    eye = sp.identity(nmax, format="csr", dtype=complex)

    def lmul(x):
        return sp.kron(x, eye)

    def rmul(x):
        return sp.kron(eye, x.T)

    def dis(x, y):  # x sigma y - 1/2 {y x, sigma}
        return sp.kron(x, y.T) - 0.5 * lmul(y @ x) - 0.5 * rmul(y @ x)

    H = (co.I_a + co.I_b + co.F) * (bd @ b) + (co.alpha + np.conj(co.B)) * (b @ b) \
        + (np.conj(co.alpha) + co.B) * (bd @ bd)
    L = (2 * co.R_a * dis(b, bd) + 2 * co.R_b * dis(bd, b) + co.c * dis(b, b)
         + np.conj(co.c) * dis(bd, bd) - 1j * (lmul(H) - rmul(H)))
    d = nmax * nmax
    tr = sp.csr_matrix(np.eye(nmax).ravel().reshape(1, -1).astype(complex))
    A = sp.vstack([L, tr]).tocsc()
    rhs = np.zeros(d + 1, complex)
    rhs[-1] = 1
    AhA = (A.conj().T @ A).tocsc()
    x = spla.spsolve(AhA, A.conj().T @ rhs)
    rho = x.reshape(nmax, nmax)
    return np.trace(rho @ (bd @ b).toarray()).real, np.trace(rho @ (b @ b).toarray())


@pytest.mark.parametrize("w,O", [(1.5, 0.5), (0.5, 0.8), (1.5, 1.25), (0.5, 1.5)])
def test_covariance_matches_fock_space_master_equation(w, O):
    _, sol = _stable_root(w, O)
    n, m = _fock_steady(sol.coeffs, 60)
    assert sol.cov.n == pytest.approx(n, rel=1e-6, abs=1e-9)
    assert abs(sol.cov.m - m) <= 1e-6 * max(abs(m), 1e-9) + 1e-9


@pytest.mark.parametrize("w,O", OFF_X + [(1.0, 0.5), (1.0, 0.9)])
def test_covariance_invariants(w, O):
    p, sol = _stable_root(w, O)
    cov = sol.cov
    g = cov.gamma_cm
    np.testing.assert_allclose(g, g.T)
    assert cov.d_purity >= 1 - 1e-10
    assert np.linalg.det(g) == pytest.approx(cov.d_purity**2, abs=1e-8)
    symp = np.array([[0, 1], [-1, 0]])
    assert np.linalg.eigvalsh(g + 1j * symp).min() >= -1e-8
    dn, dm = moment_flow(sol.coeffs, cov.n, cov.m)
    assert abs(dn) <= 1e-10 and abs(dm) <= 1e-10
    assert 0 <= cov.c_witness <= 1


@pytest.mark.parametrize("x", [0.0, 0.3, 0.8, 0.99])
def test_segment_x_pure_squeezed_vacuum(x):
    p, beta = _x_root(x)
    cov = covariance_steady(coefficients(beta, p))
    assert cov.d_purity == pytest.approx(1.0, abs=1e-9)
    assert cov.t_eff == 0.0


def test_effective_temperature_limits():
    assert effective_temperature(1.0) == 0.0
    assert effective_temperature(4.0) == pytest.approx(1 / np.log(3))
    assert effective_temperature(1e6) > 100


def test_unstable_root_has_no_fixed_point():
    p = ModelParams.from_ratios(1.5, 0.5)
    _, sols = solve_gaussian(p)
    bad = [s for s in sols if not s.stable and s.coeffs is not None]
    assert bad
    with pytest.raises(NoFixedPointError):
        covariance_steady(bad[0].coeffs)


# ---------------------------------------------------------------- witness

def test_witness_coherent_state():
    cov = CovarianceSummary(gamma_cm=np.eye(2), d_purity=1, m_squeeze=1, t_eff=0,
                            lambda_min=1, n=0.0, m=0j)
    c, xi2 = squeezing_witness(0.0, cov)
    assert c == pytest.approx(0.0, abs=1e-14) and xi2 == pytest.approx(1.0)


@pytest.mark.parametrize("x", [0.3, 0.6, 0.8, 0.95])
def test_segment_x_squeezing(x):
    p, beta = _x_root(x)
    cov = covariance_steady(coefficients(beta, p))
    c, xi2 = squeezing_witness(beta, cov, p)
    assert xi2 == pytest.approx(np.sqrt(1 - x * x), abs=1e-9)
    assert c == pytest.approx(1 - np.sqrt(1 - x * x), abs=1e-9)


def test_witness_approaches_one_at_critical_point():
    cs = []
    for x in (0.9, 0.99, 0.999, 0.9999):
        p, beta = _x_root(x)
        cs.append(squeezing_witness(beta, covariance_steady(coefficients(beta, p)), p)[0])
    assert np.all(np.diff(cs) > 0) and cs[-1] > 0.98
