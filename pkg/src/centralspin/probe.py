"""Spin pumping speed: time to approach the steady state from a given start."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, ParameterDomainError
from .exact import LiouvillianSuperoperator, build_liouvillian, steady_state
from .params import ModelParams

__all__ = ["PumpTime", "PumpProbeResult", "initial_state", "fidelity",
           "relaxation_time", "spin_pumping_rate_probe"]

TARGET_FIDELITY = 0.99


def initial_state(params: ModelParams, kind: str) -> np.ndarray:
    """``mixed``: identity / d. ``polarized-up``: ``|down> (x) |J, +J>``."""
    d = 2 * params.dim_nuclear
    if kind == "mixed":
        return np.eye(d, dtype=complex) / d
    if kind == "polarized-up":
        rho = np.zeros((d, d), dtype=complex)
        rho[params.dim_nuclear - 1, params.dim_nuclear - 1] = 1.0
        return rho
    raise ParameterDomainError(f"unknown initial state {kind!r}")


class _Fidelity:
    """Uhlmann fidelity against a fixed state, with its square root cached."""

    def __init__(self, target: np.ndarray):
        w, v = np.linalg.eigh(target)
        self.sqrt = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T

    def __call__(self, rho: np.ndarray) -> float:
        m = self.sqrt @ ((rho + rho.conj().T) / 2) @ self.sqrt
        ev = np.linalg.eigvalsh((m + m.conj().T) / 2)
        # round-off eigenvalues would each add sqrt(eps) to the sum
        ev[ev < len(ev) * np.finfo(float).eps * max(ev.max(), 0.0)] = 0.0
        return float(np.sum(np.sqrt(ev)) ** 2)


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    return _Fidelity(sigma)(rho)


@dataclass(frozen=True)
class PumpTime:
    time: float
    adr: complex
    method: str


def _crossing(ts, fs, target):
    """Interpolate the first crossing of ``target`` in ``log(1 - F)``."""
    for i in range(1, len(ts)):
        if fs[i] >= target:
            if i == 0 or fs[i - 1] >= target:
                return ts[i]
            y0, y1 = np.log(1 - min(fs[i - 1], 1 - 1e-300)), np.log(max(1 - fs[i], 1e-300))
            yt = np.log(1 - target)
            return ts[i - 1] + (ts[i] - ts[i - 1]) * (yt - y0) / (y1 - y0)
    return None


def _propagate(L: LiouvillianSuperoperator, rho0, rho_ss, target, t_max):
    fid = _Fidelity(rho_ss)
    d = L.hilbert_dim
    A = L.matrix.tocsr()
    v = rho0.ravel().astype(complex)
    t, dt = 0.0, 1.0 / max(L.norm1, 1.0)
    ts, fs = [0.0], [fid(rho0)]
    while t < t_max:
        block = spla.expm_multiply(A, v, start=0.0, stop=dt, num=9, endpoint=True)
        for j, vj in enumerate(block[1:], 1):
            ts.append(t + dt * j / 8)
            fs.append(fid(vj.reshape(d, d)))
        v = block[-1]
        t += dt
        hit = _crossing(ts, fs, target)
        if hit is not None:
            return hit
        dt *= 2
    raise ConvergenceError(f"fidelity {fs[-1]:.4f} below {target} at t_max={t_max}", 1 - fs[-1])


def relaxation_time(L: LiouvillianSuperoperator, rho0: np.ndarray, method: str = "propagate",
                    target: float = TARGET_FIDELITY, t_max: float = 1e7) -> PumpTime:
    """Time until ``F(rho(t), rho_ss) >= target``.

    ``propagate`` integrates the master equation with ``expm_multiply``.
    ``spectral`` is the single-mode estimate ``ln(1/(1 - target)) / |Re ADR|``,
    which ignores the overlap of the initial state with the slow mode.

    Raises
    ------
    ConvergenceError
        If the target is not reached before ``t_max``.
    """
    ss = steady_state(L, method="shift-invert")
    adr = ss.spectrum.adr
    if method == "spectral":
        t = np.log(1.0 / (1.0 - target)) / abs(adr.real)
    elif method == "propagate":
        t = _propagate(L, rho0, ss.rho.matrix, target, t_max)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PumpTime(time=float(t), adr=adr, method=method)


@dataclass(frozen=True)
class PumpProbeResult:
    """Relaxation time at the requested drive and at ``Omega = 0``.

    ``speedup`` is ``baseline.time / probe.time``.
    """

    probe: PumpTime
    baseline: PumpTime

    @property
    def speedup(self) -> float:
        return self.baseline.time / self.probe.time

    @property
    def adr_ratio(self) -> float:
        return abs(self.probe.adr.real) / abs(self.baseline.adr.real)


def spin_pumping_rate_probe(params: ModelParams, initial: str = "mixed",
                            method: str = "propagate", target: float = TARGET_FIDELITY,
                            t_max: float = 1e7) -> PumpProbeResult:
    """Compare the pumping time at ``params`` with the undriven case."""
    if params.J > 40 and method == "propagate":
        raise ParameterDomainError("propagation is limited to J <= 40")
    out = []
    for p in (params, params.replace(Omega=0.0)):
        L = build_liouvillian(p)
        out.append(relaxation_time(L, initial_state(p, initial), method, target, t_max))
    return PumpProbeResult(probe=out[0], baseline=out[1])
