"""Passive linear quantum networks as complex state-space models.

A network of ``n`` coupled modes driven by one field channel is fixed by a
Hermitian matrix ``omega`` and a coupling row ``c_row``; the drift is
``A = -i*omega - c_row^H c_row / 2``.  This module builds such models and
answers structural questions about them: stability, controllability, the
split into field-coupled (buffer) and decoupled (memory) modes, the
transfer function and its zeros.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment
from scipy.stats import unitary_group

from .errors import (
    BlockStructureViolation,
    DimensionMismatch,
    EigenFailure,
    NotHermitian,
    SingularResolvent,
)

HERMITIAN_TOL = 1e-12
RANK_TOL = 1e-10
BLOCK_TOL = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PassiveLinearSystem:
    """Immutable (omega, C) pair with the derived drift matrix.

    Use :func:`build_system` rather than calling the constructor directly;
    it validates and symmetrizes the input.
    """

    omega: np.ndarray
    c_row: np.ndarray
    a_drift: np.ndarray = field(init=False)

    def __post_init__(self):
        omega = _readonly(self.omega)
        c_row = _readonly(np.atleast_2d(self.c_row))
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "c_row", c_row)
        a = -1j * omega - 0.5 * (c_row.conj().T @ c_row)
        object.__setattr__(self, "a_drift", _readonly(a))

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def c_dag(self) -> np.ndarray:
        """Column vector C^dagger, shape (n,)."""
        return self.c_row[0].conj()

    def eigenvalues(self) -> np.ndarray:
        return _eigvals(self.a_drift)

    def spectral_abscissa(self) -> float:
        return float(np.max(self.eigenvalues().real))

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues())))

    def transformed(self, u: np.ndarray) -> "PassiveLinearSystem":
        """Return the same network in the mode basis ``a' = u^H a``.

        The drift becomes ``u^H A u`` and the coupling ``C u``.
        """
        u = np.asarray(u, dtype=complex)
        _check_unitary(u, self.n)
        return PassiveLinearSystem(u.conj().T @ self.omega @ u, self.c_row @ u)

    def same_as(self, other: "PassiveLinearSystem", tol: float = 1e-12) -> bool:
        if self.n != other.n:
            return False
        scale = max(1.0, np.max(np.abs(self.a_drift)))
        return bool(
            np.max(np.abs(self.a_drift - other.a_drift)) <= tol * scale
            and np.max(np.abs(self.c_row - other.c_row)) <= tol * scale
        )

    def __repr__(self):
        return f"PassiveLinearSystem(n={self.n})"


@dataclass(frozen=True, eq=False)
class ModeDecomposition:
    """Orthonormal split of the modes into buffer (coupled) and memory (DF) parts.

    Columns ``u[:, :buffer_dim]`` span the controllable subspace; the
    remaining columns span its orthogonal complement, the memory modes.
    """

    u: np.ndarray
    buffer_dim: int
    memory_dim: int
    a_transformed: np.ndarray
    c_transformed: np.ndarray
    block_residual: float

    @property
    def a_buffer(self) -> np.ndarray:
        m = self.buffer_dim
        return self.a_transformed[:m, :m]

    @property
    def c_buffer(self) -> np.ndarray:
        return self.c_transformed[:, : self.buffer_dim]

    @property
    def buffer_basis(self) -> np.ndarray:
        return self.u[:, : self.buffer_dim]

    @property
    def memory_basis(self) -> np.ndarray:
        return self.u[:, self.buffer_dim:]


def _eigvals(a: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigenvalue iteration did not converge: {exc}") from exc


def _check_unitary(u: np.ndarray, n: int, tol: float = 1e-10):
    if u.shape != (n, n):
        raise DimensionMismatch(f"basis change must be {n}x{n}, got {u.shape}")
    resid = np.max(np.abs(u.conj().T @ u - np.eye(n)))
    if resid > tol:
        raise ValueError(f"basis change is not unitary (residual {resid:.3e})")


def build_system(omega, c_row) -> PassiveLinearSystem:
    """Validate ``(omega, C)`` and return the passive system.

    ``omega`` must be square and Hermitian up to
    ``1e-12 * max(1, max|omega|)``; the small residual is symmetrized away.
    """
    omega = np.atleast_2d(np.asarray(omega, dtype=complex))
    c_row = np.atleast_2d(np.asarray(c_row, dtype=complex))
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise DimensionMismatch(f"omega must be square, got shape {omega.shape}")
    n = omega.shape[0]
    if c_row.shape != (1, n):
        raise DimensionMismatch(
            f"coupling row must have shape (1, {n}), got {c_row.shape}"
        )
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(c_row))):
        raise ValueError("system matrices contain non-finite entries")
    resid = np.max(np.abs(omega - omega.conj().T))
    if resid > HERMITIAN_TOL * max(1.0, np.max(np.abs(omega))):
        raise NotHermitian(f"omega is not Hermitian (max residual {resid:.3e})")
    omega = 0.5 * (omega + omega.conj().T)
    return PassiveLinearSystem(omega, c_row)


def system_from_drift(a_drift, c_row) -> PassiveLinearSystem:
    """Recover ``omega = i(A + C^H C / 2)`` and build the system."""
    a_drift = np.asarray(a_drift, dtype=complex)
    c_row = np.atleast_2d(np.asarray(c_row, dtype=complex))
    omega = 1j * (a_drift + 0.5 * (c_row.conj().T @ c_row))
    return build_system(omega, c_row)


def is_hurwitz(sys: PassiveLinearSystem, tol: float = 1e-10) -> bool:
    return bool(np.max(sys.eigenvalues().real) < -tol)


def controllability_matrix(sys: PassiveLinearSystem) -> np.ndarray:
    cols = [sys.c_dag]
    for _ in range(sys.n - 1):
        cols.append(sys.a_drift @ cols[-1])
    return np.column_stack(cols)


def _controllable_split(sys: PassiveLinearSystem):
    k = controllability_matrix(sys)
    u, sv, _ = sla.svd(k)
    if sv[0] == 0.0:
        return u, 0
    rank = int(np.sum(sv > RANK_TOL * sv[0]))
    return u, rank


def controllable_subspace(sys: PassiveLinearSystem) -> np.ndarray:
    """Orthonormal basis (n x m) of span{C^H, A C^H, ..., A^(n-1) C^H}."""
    u, rank = _controllable_split(sys)
    return u[:, :rank]


def df_decompose(sys: PassiveLinearSystem) -> ModeDecomposition:
    """Split the network into buffer and decoherence-free memory modes.

    In the returned basis ``U`` the drift ``U^H A U`` must have the block
    form ``[[A_B, 0], [0, 0]]`` and ``C U = [C_B, 0]``.  A memory block
    with nonzero entries (including an internal Hamiltonian among memory
    modes) raises :class:`BlockStructureViolation`.
    """
    u, m = _controllable_split(sys)
    a_t = u.conj().T @ sys.a_drift @ u
    c_t = sys.c_row @ u
    n = sys.n
    resid = 0.0
    if m < n:
        resid = max(
            np.max(np.abs(a_t[m:, :])),
            np.max(np.abs(a_t[:, m:])),
            np.max(np.abs(c_t[:, m:])),
        )
    if resid > BLOCK_TOL:
        raise BlockStructureViolation(
            f"decoupled modes are not of decoherence-free form "
            f"(block residual {resid:.3e})",
            residual=resid,
        )
    return ModeDecomposition(
        u=_readonly(u),
        buffer_dim=m,
        memory_dim=n - m,
        a_transformed=_readonly(a_t),
        c_transformed=_readonly(c_t),
        block_residual=float(resid),
    )


def transfer_function(sys: PassiveLinearSystem, s: complex) -> complex:
    """Evaluate ``G[s] = 1 - C (sI - A)^-1 C^H`` by a linear solve."""
    s = complex(s)
    dist = np.min(np.abs(sys.eigenvalues() - s))
    if dist <= 1e-12:
        raise SingularResolvent(f"s={s} lies on the spectrum of A")
    m = s * np.eye(sys.n) - sys.a_drift
    try:
        x = sla.solve(m, sys.c_dag)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise SingularResolvent(str(exc)) from exc
    return complex(1.0 - sys.c_row[0] @ x)


def pair_spectra(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Match two eigenvalue lists one-to-one; return the permutation of ``b`` and max distance."""
    a = np.asarray(a)
    b = np.asarray(b)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = cols[np.argsort(rows)]
    return perm, float(np.max(cost[rows, cols])) if len(a) else 0.0


def transmission_zeros(sys: PassiveLinearSystem, tol: float = 1e-8) -> np.ndarray:
    """Zeros of ``G`` computed as the eigenvalues of ``A + C^H C``.

    For passive systems this equals ``-A^H``; both are computed and must
    agree within ``tol`` (scaled by the spectral size).
    """
    z = _eigvals(sys.a_drift + np.outer(sys.c_dag, sys.c_row[0]))
    mirror = _eigvals(-sys.a_drift.conj().T)
    perm, err = pair_spectra(z, mirror)
    if err > tol * max(1.0, np.max(np.abs(z))):
        raise EigenFailure(f"zero/mirror-pole mismatch {err:.3e}")
    order = np.lexsort((z.imag, z.real))
    return z[order]


def cascade_system(kappas, detunings) -> PassiveLinearSystem:
    """Series connection of single-mode cavities, mode 1 first in the field.

    The drift is lower triangular with diagonal ``-kappa_k/2 - i detuning_k``,
    so the poles are set directly by the parameters.
    """
    kappas = np.asarray(kappas, dtype=float)
    detunings = np.asarray(detunings, dtype=float)
    if kappas.shape != detunings.shape or kappas.ndim != 1:
        raise DimensionMismatch("kappas and detunings must be 1-D of equal length")
    root = np.sqrt(kappas)
    half = 0.5 * np.outer(root, root)
    omega = np.diag(detunings).astype(complex) + 1j * (np.triu(half, 1) - np.tril(half, -1))
    return build_system(omega, root[None, :])


def random_passive_system(
    n: int,
    rng: np.random.Generator,
    rate_range: tuple[float, float] = (0.4, 3.0),
    detuning_range: tuple[float, float] = (-2.0, 2.0),
) -> PassiveLinearSystem:
    """Random Hurwitz passive system with spectrum inside a known box.

    A cascade of cavities with random rates and detunings is rotated by a
    Haar-random unitary and a random coupling phase.  Every pole satisfies
    ``Re = -kappa/2`` with ``kappa`` in ``rate_range``.
    """
    kappas = rng.uniform(*rate_range, size=n)
    det = rng.uniform(*detuning_range, size=n)
    base = cascade_system(kappas, det)
    q = unitary_group.rvs(n, random_state=rng) if n > 1 else np.eye(1, dtype=complex)
    phase = np.exp(2j * np.pi * rng.uniform())
    return build_system(q @ base.omega @ q.conj().T, phase * base.c_row @ q.conj().T)
