"""Several nuclear shells with distinct hyperfine weights.

Each shell ``i`` is kept in its maximal symmetric sector ``J_i`` and enters
through the weighted collective operators ``A_alpha = sum_i g_i A_alpha^(i)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .analytic import lowering_eigenstate
from .errors import ParameterDomainError
from .exact import LiouvillianSuperoperator, build_from_nuclear_operators, spin_matrices
from .params import ModelParams

__all__ = ["ShellConfig", "build_shell_liouvillian", "weighted_operators",
           "ShellEigenstate", "shell_eigenstate"]


@dataclass(frozen=True)
class ShellConfig:
    """Shell weights and sizes.

    Parameters
    ----------
    shells : sequence of (g_i, J_i)
    params : ModelParams
        ``a, gamma, Omega, omega``. Its ``J`` is replaced by the total
        ``J_tot = sum_i J_i``, which scales the drive and the decay.
    """

    shells: tuple
    params: ModelParams

    def __post_init__(self):
        sh = tuple((float(g), float(j)) for g, j in self.shells)
        if not sh:
            raise ParameterDomainError("at least one shell is required")
        for g, j in sh:
            if not g > 0:
                raise ParameterDomainError(f"shell weight must be positive, got {g}")
            ModelParams(J=j)  # validates half-integer J >= 1/2
        object.__setattr__(self, "shells", sh)
        object.__setattr__(self, "params", self.params.replace(J=sum(j for _, j in sh)))

    @property
    def weights(self) -> np.ndarray:
        return np.array([g for g, _ in self.shells])

    @property
    def spins(self) -> np.ndarray:
        return np.array([j for _, j in self.shells])

    @property
    def nuclear_dim(self) -> int:
        return int(np.prod([int(round(2 * j)) + 1 for j in self.spins]))

    @property
    def hilbert_dim(self) -> int:
        return 2 * self.nuclear_dim


def weighted_operators(config: ShellConfig):
    """Sparse ``(A^+, A^-, A_z)`` on the product of shell spaces."""
    mats = [spin_matrices(int(round(2 * j))) for j in config.spins]
    eyes = [sp.identity(m[0].shape[0], format="csr", dtype=complex) for m in mats]
    out = []
    for c in range(3):
        total = None
        for i, g in enumerate(config.weights):
            factors = eyes[:i] + [sp.csr_matrix(mats[i][c])] + eyes[i + 1:]
            term = g * reduce(lambda x, y: sp.kron(x, y, format="csr"), factors)
            total = term if total is None else total + term
        out.append(total.tocsr())
    return tuple(out)


def build_shell_liouvillian(config: ShellConfig, memory_budget: Optional[int] = None
                            ) -> LiouvillianSuperoperator:
    """Liouvillian with ``I -> A`` in the hyperfine and Zeeman terms.

    Nuclear moments reported by ``observables`` are normalized by ``J_tot``.
    With more than one shell the steady state defaults to the Krylov solver:
    sparse LU of the product-space Liouvillian fills in too much. The
    multi-shell spectrum has exponentially slow modes, so runtimes grow
    quickly beyond ``J_i ~ 5``.

    Raises
    ------
    ResourceError
        If the superoperator does not fit the memory budget.
    """
    ap, am, az = weighted_operators(config)
    p = config.params
    method = "krylov" if len(config.shells) > 1 else "shift-invert"
    return build_from_nuclear_operators(p, ap, am, az, scale=p.J, j_norm=p.J,
                                        memory_budget=memory_budget, steady_method=method)


@dataclass(frozen=True)
class ShellEigenstate:
    state: np.ndarray
    eigenvalue: float
    residual: float


def shell_eigenstate(config: ShellConfig, displacements: Sequence[float]) -> ShellEigenstate:
    """Product of per-shell squeezed displaced states and its ``A^-`` residual.

    The eigenvalue estimate is ``sum_i g_i J_i sqrt(k_i) beta_i``.

    Raises
    ------
    TruncationLossError
        If any shell loses more than ``1e-6`` of its weight.
    """
    betas = np.asarray(displacements, dtype=float)
    if betas.shape != (len(config.shells),):
        raise ParameterDomainError("one displacement per shell is required")
    states = [lowering_eigenstate(j, b) for j, b in zip(config.spins, betas)]
    psi = reduce(np.kron, states)
    lam = float(np.sum(config.weights * config.spins * np.sqrt(2 - betas**2) * betas))
    _, am, _ = weighted_operators(config)
    return ShellEigenstate(state=psi, eigenvalue=lam,
                           residual=float(np.linalg.norm(am @ psi - lam * psi)))
