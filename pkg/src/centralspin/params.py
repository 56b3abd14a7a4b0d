"""Model parameters, derived scales and displacement conventions."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import ParameterDomainError

__all__ = [
    "ModelParams",
    "Scales",
    "SpinExpectations",
    "derived_scales",
    "beta_to_polarization",
]


def _twice(J) -> int:
    twice = Fraction(J).limit_denominator(4) * 2
    if twice.denominator != 1 or abs(float(twice) - 2 * float(J)) > 1e-12:
        raise ParameterDomainError(f"J={J} is not a multiple of 1/2")
    return int(twice)


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the driven central spin model.

    Parameters
    ----------
    Omega : float
        Rescaled Rabi drive; the Hamiltonian carries ``J * Omega``.
    omega : float
        Hyperfine detuning, ``delta_omega = omega - a/2``.
    gamma : float
        Electron decay rate; the dissipator carries ``J * gamma``.
    J : float
        Collective nuclear spin (integer or half-integer). Stored exactly
        as ``two_j``.
    a : float
        Hyperfine coupling, the energy unit.

    Notes
    -----
    All solvers are written with explicit powers of ``a``, so nothing is
    rescaled internally and quantities come back in the units of the input.
    """

    Omega: float = 0.0
    omega: float = 0.5
    gamma: float = 1.0
    J: float = 1.0
    a: float = 1.0
    two_j: int = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("Omega", "omega", "gamma", "a"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ParameterDomainError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.a <= 0:
            raise ParameterDomainError(f"a must be positive, got {self.a}")
        if self.gamma <= 0:
            raise ParameterDomainError(f"gamma must be positive, got {self.gamma}")
        two_j = _twice(self.J)
        if two_j < 1:
            raise ParameterDomainError(f"J must be >= 1/2, got {self.J}")
        object.__setattr__(self, "two_j", two_j)
        object.__setattr__(self, "J", two_j / 2)

    @classmethod
    def from_ratios(cls, omega_ratio: float, Omega_ratio: float, gamma: float = 1.0,
                    J: float = 1.0, a: float = 1.0) -> "ModelParams":
        """Build from ``omega/omega0`` and ``Omega/Omega0`` ratios."""
        return cls(Omega=Omega_ratio * a / 2, omega=omega_ratio * a / 2,
                   gamma=gamma, J=J, a=a)

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    @property
    def dim_nuclear(self) -> int:
        return self.two_j + 1

    def Omega0(self) -> float:
        return self.a / 2

    def omega0(self) -> float:
        return self.a / 2

    def delta_omega(self) -> float:
        return self.omega - self.a / 2

    def epsilon(self) -> float:
        return 1.0 / np.sqrt(self.J)


class Scales(NamedTuple):
    Omega0: float
    omega0: float
    delta_omega: float
    epsilon: float


def derived_scales(params: ModelParams) -> Scales:
    """Critical drive and detuning, hyperfine mismatch and expansion parameter.

    Examples
    --------
    >>> derived_scales(ModelParams(omega=3.0, a=2.0)).delta_omega
    2.0
    """
    if not isinstance(params, ModelParams):
        raise ParameterDomainError("expected ModelParams")
    return Scales(params.Omega0(), params.omega0(), params.delta_omega(), params.epsilon())


@dataclass(frozen=True)
class SpinExpectations:
    """Electron moments and nuclear moments per J."""

    s: np.ndarray
    i_over_j: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).reshape(3)
        i = np.asarray(self.i_over_j, dtype=float).reshape(3)
        if np.linalg.norm(s) > 0.5 + 1e-8 or np.linalg.norm(i) > 1 + 1e-8:
            raise ParameterDomainError("spin expectation vector exceeds its maximal length")
        s.setflags(write=False)
        i.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "i_over_j", i)


def beta_to_polarization(beta) -> np.ndarray:
    """Mean nuclear polarization per J for displacement ``beta``.

    Uses ``I^- = I_x - i I_y`` so that ``<I^->/J = sqrt(k) beta`` gives
    ``(sqrt(k) Re beta, -sqrt(k) Im beta, |beta|^2 - 1)`` with
    ``k = 2 - |beta|^2``. Vectorized over array input (last axis is xyz).
    """
    b = np.asarray(beta, dtype=complex)
    b2 = np.abs(b) ** 2
    if np.any(b2 > 2 + 1e-12):
        raise ParameterDomainError("|beta|^2 must not exceed 2")
    sk = np.sqrt(np.clip(2 - b2, 0, None))
    return np.stack([sk * b.real, -sk * b.imag, b2 - 1], axis=-1)
