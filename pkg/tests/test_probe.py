import numpy as np
import pytest
import scipy.linalg as sla
from scipy.optimize import brentq

from centralspin import ConvergenceError, ModelParams, ParameterDomainError
from centralspin.exact import build_liouvillian, steady_state
from centralspin.probe import (TARGET_FIDELITY, fidelity, initial_state, relaxation_time,
                               spin_pumping_rate_probe)


def test_fidelity_pure_and_commuting_states():
    rng = np.random.default_rng(0)
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    pa, pb = np.outer(a, a.conj()), np.outer(b, b.conj())
    assert fidelity(pa, pb) == pytest.approx(abs(np.vdot(a, b)) ** 2, abs=1e-10)
    p, q = np.array([0.1, 0.2, 0.3, 0.4]), np.array([0.4, 0.3, 0.2, 0.1])
    assert fidelity(np.diag(p), np.diag(q)) == pytest.approx(np.sum(np.sqrt(p * q)) ** 2)
    assert fidelity(pa, pa) == pytest.approx(1.0, abs=1e-10)


def test_initial_states():
    p = ModelParams(J=2)
    mixed = initial_state(p, "mixed")
    assert np.trace(mixed) == pytest.approx(1) and np.allclose(mixed, np.eye(10) / 10)
    up = initial_state(p, "polarized-up")
    # electron down, nucleus at m = +J (last nuclear level of the down block)
    assert up[4, 4] == 1 and np.trace(up) == 1
    with pytest.raises(ParameterDomainError):
        initial_state(p, "thermal")


def test_spectral_estimate_is_single_mode_formula():
    L = build_liouvillian(ModelParams.from_ratios(0.5, 1.0, J=6))
    t = relaxation_time(L, initial_state(L.params, "mixed"), method="spectral")
    assert t.time == pytest.approx(np.log(100) / abs(t.adr.real))


def test_propagation_matches_dense_exponential():
    p = ModelParams.from_ratios(1.5, 0.8, J=1.5)
    L = build_liouvillian(p)
    rho0 = initial_state(p, "mixed")
    rho_ss = steady_state(L).rho.matrix
    M = L.matrix.toarray()
    d = L.hilbert_dim

    def gap(t):
        rho = (sla.expm(M * t) @ rho0.ravel()).reshape(d, d)
        return fidelity(rho, rho_ss) - TARGET_FIDELITY

    ts = np.linspace(0, 200, 2001)
    i = next(k for k, t in enumerate(ts) if gap(t) >= 0)
    ref = brentq(gap, ts[i - 1], ts[i], xtol=1e-10)
    got = relaxation_time(L, rho0).time
    assert got == pytest.approx(ref, rel=2e-2)


def test_zero_drive_baseline():
    p = ModelParams.from_ratios(1.3, 0.0, J=5)
    r = spin_pumping_rate_probe(p)
    assert r.speedup == pytest.approx(1.0)
    assert r.probe.time == r.baseline.time > 0


def test_non_convergence_raises():
    with pytest.raises(ConvergenceError):
        spin_pumping_rate_probe(ModelParams.from_ratios(0.5, 1.0, J=5), t_max=1e-3)


def test_propagation_limited_to_small_j():
    with pytest.raises(ParameterDomainError):
        spin_pumping_rate_probe(ModelParams.from_ratios(0.5, 1.0, J=41))


def test_speedup_tracks_adr_ratio_j20():
    p = ModelParams.from_ratios(0.5, 1.0, gamma=0.1, J=20)
    r = spin_pumping_rate_probe(p)
    assert r.speedup > 1
    assert r.speedup / r.adr_ratio == pytest.approx(1.0, rel=0.25)


@pytest.mark.slow
def test_enhanced_pumping_j40():
    r = spin_pumping_rate_probe(ModelParams.from_ratios(0.5, 1.0, gamma=0.1, J=40))
    assert r.speedup >= 3
