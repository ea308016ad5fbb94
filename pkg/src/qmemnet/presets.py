"""Concrete networks: single-mode cavity, four-node atomic network, active OPO."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import BlockStructureViolation, EpsilonTooLarge, NonPositiveRate
from .integrate import rk4_forced, simpson_weights, uniform_grid
from .linsys import PassiveLinearSystem, build_system, df_decompose

PRESETS = ("single-mode", "atomic-network", "active-opo")


def build_single_mode(kappa: float) -> PassiveLinearSystem:
    """One cavity mode with decay rate ``kappa``: ``A = -kappa/2``, ``C = sqrt(kappa)``."""
    if not kappa > 0:
        raise NonPositiveRate(f"kappa must be positive, got {kappa}")
    return build_system([[0.0]], [[np.sqrt(kappa)]])


@dataclass(frozen=True)
class AtomicNetworkParams:
    """Cavity decay ``kappa``, collective coupling ``g``, magnetic detuning ``delta``."""

    kappa: float = 2.0
    g: float = 1.0
    delta: float = 1.0


def atomic_network_hamiltonian(p: AtomicNetworkParams) -> np.ndarray:
    g, d = p.g, p.delta
    return np.array(
        [
            [0, 1j * g, 1j * g, 1j * g],
            [-1j * g, d, 0, 0],
            [-1j * g, 0, -d, 0],
            [-1j * g, 0, 0, 0],
        ],
        dtype=complex,
    )


def build_atomic_network(p: AtomicNetworkParams) -> PassiveLinearSystem:
    """Cavity mode ``a1`` coupled to three atomic ensembles ``a2..a4``.

    The magnetic field detunes ensembles 2 and 3 by ``+delta`` and ``-delta``;
    only the cavity couples to the field, ``C = [sqrt(kappa), 0, 0, 0]``.
    """
    if not p.kappa > 0:
        raise NonPositiveRate(f"kappa must be positive, got {p.kappa}")
    c = np.array([[np.sqrt(p.kappa), 0, 0, 0]], dtype=complex)
    return build_system(atomic_network_hamiltonian(p), c)


def reference_frame() -> np.ndarray:
    """Fixed basis change to (cavity, symmetric ensemble mode, two dark combinations).

    Columns 3 and 4 span the memory modes of the network at zero detuning.
    """
    r2, r3, r6 = np.sqrt(2), np.sqrt(3), np.sqrt(6)
    return np.array(
        [
            [1, 0, 0, 0],
            [0, 1 / r3, 2 / r6, 0],
            [0, 1 / r3, -1 / r6, 1 / r2],
            [0, 1 / r3, -1 / r6, -1 / r2],
        ],
        dtype=complex,
    )


def transformed_drift_expected(p: AtomicNetworkParams) -> np.ndarray:
    k, g, d = p.kappa, p.g, p.delta
    r2, r3, r6 = np.sqrt(2), np.sqrt(3), np.sqrt(6)
    return np.array(
        [
            [-k / 2, r3 * g, 0, 0],
            [-r3 * g, 0, -r2 * 1j * d / 2, r6 * 1j * d / 6],
            [0, -r2 * 1j * d / 2, -1j * d / 2, -r3 * 1j * d / 6],
            [0, r6 * 1j * d / 6, -r3 * 1j * d / 6, 1j * d / 2],
        ],
        dtype=complex,
    )


@dataclass(frozen=True)
class UnitaryCheckReport:
    a_prime: np.ndarray
    c_prime: np.ndarray
    drift_residual: float
    coupling_residual: float
    memory_dim: int | None
    principal_angles: np.ndarray | None

    @property
    def passed(self) -> bool:
        ok = self.drift_residual <= 1e-12 and self.coupling_residual <= 1e-12
        if self.principal_angles is not None and len(self.principal_angles):
            ok = ok and float(np.max(self.principal_angles)) <= 1e-8
        return ok


def reference_unitary_check(p: AtomicNetworkParams) -> UnitaryCheckReport:
    """Transform the network by :func:`reference_frame` and compare with the closed form.

    When the network has memory modes, the subspace found by
    :func:`qmemnet.linsys.df_decompose` is compared with the span of
    frame columns 3 and 4 via principal angles.
    """
    sys = build_atomic_network(p)
    u = reference_frame()
    a_p = u.conj().T @ sys.a_drift @ u
    c_p = sys.c_row @ u
    drift_res = float(np.max(np.abs(a_p - transformed_drift_expected(p))))
    c_expected = np.array([[np.sqrt(p.kappa), 0, 0, 0]])
    coup_res = float(np.max(np.abs(c_p - c_expected)))
    try:
        dec = df_decompose(sys)
    except BlockStructureViolation:
        dec = None
    angles = None
    mem_dim = None
    if dec is not None:
        mem_dim = dec.memory_dim
        if dec.memory_dim:
            angles = sla.subspace_angles(dec.memory_basis, u[:, 2:])
        else:
            angles = np.zeros(0)
    return UnitaryCheckReport(a_p, c_p, drift_res, coup_res, mem_dim, angles)


@dataclass(frozen=True)
class ActiveSystemParams:
    kappa: float = 2.0
    epsilon: float = 0.0


def _check_active(p: ActiveSystemParams):
    if not p.kappa > 0:
        raise NonPositiveRate(f"kappa must be positive, got {p.kappa}")
    if not 0 <= p.epsilon < p.kappa:
        raise EpsilonTooLarge(f"need 0 <= epsilon < kappa, got epsilon={p.epsilon}")


def active_transfer_amplitude(p: ActiveSystemParams) -> float:
    """Single-photon transfer amplitude ``sqrt(2(k^2 - e^2) / (2 k^2 - e^2))`` of the OPO."""
    _check_active(p)
    k2, e2 = p.kappa**2, p.epsilon**2
    return float(np.sqrt(2 * (k2 - e2) / (2 * k2 - e2)))


def active_pulses(p: ActiveSystemParams):
    """Return evaluators ``(xi1, xi2)`` for ``t <= 0`` (zero afterwards).

    ``xi1`` is the unit input pulse; ``xi2`` the shape of the unavoidable
    annihilation-side contamination.  ``xi2`` is identically zero for
    ``epsilon = 0``.
    """
    _check_active(p)
    k, e = p.kappa, p.epsilon
    c1 = np.sqrt(2 * k * (k**2 - e**2) / (2 * k**2 - e**2))

    def xi1(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 0, -c1 * np.exp(k * np.minimum(t, 0) / 2) * np.cosh(e * np.minimum(t, 0) / 2), 0.0)

    def xi2(t):
        t = np.asarray(t, dtype=float)
        if e == 0:
            return np.zeros_like(t)
        c2 = np.sqrt(2 * k * (k**2 - e**2) / e**2)
        tm = np.minimum(t, 0)
        return np.where(t <= 0, c2 * np.exp(k * tm / 2) * np.sinh(e * tm / 2), 0.0)

    return xi1, xi2


def active_pulse_norms(p: ActiveSystemParams, span: float | None = None, h: float = 1e-3):
    """Simpson estimates of ``integral |xi1|^2`` and ``integral |xi2|^2`` over ``(-span, 0]``."""
    _check_active(p)
    if span is None:
        span = 40.0 / (p.kappa - p.epsilon)
    times, h = uniform_grid(-span, 0.0, h, even=True)
    w = simpson_weights(len(times), h)
    xi1, xi2 = active_pulses(p)
    return float(w @ np.abs(xi1(times)) ** 2), float(w @ np.abs(xi2(times)) ** 2)


@dataclass(frozen=True)
class ActiveCrossCheck:
    amplitude: float
    creation_norm2: float  # integral of the b^* kernel squared
    annihilation_norm2: float  # integral of the b kernel squared
    kernel_error: float  # max deviation of the propagated kernels from cosh/sinh form


def active_transfer_ode(p: ActiveSystemParams, h: float = 1e-3, span: float | None = None) -> ActiveCrossCheck:
    """Recompute the transfer amplitude from the doubled (a, a^*) equations.

    The 2x2 propagator of the doubled drift is integrated by RK4 over the
    lag ``tau = t1 - s``; its second row gives the kernels multiplying
    ``b(s)`` and ``b^*(s)`` in ``a^*(t1)``.  The amplitude is the inverse
    norm of the ``b^*`` kernel.
    """
    _check_active(p)
    k, e = p.kappa, p.epsilon
    if span is None:
        span = 40.0 / (k - e)
    m = -0.5 * np.array([[k, -e], [-e, k]])
    lags, h = uniform_grid(0.0, span, h, even=True)
    phi0 = np.eye(2)
    table = np.zeros(2 * len(lags) - 1)
    states = np.array(rk4_forced(lambda y, _u: m @ y, phi0, h, table, len(lags) - 1))
    root_k = np.sqrt(k)
    ann = -root_k * states[:, 1, 0]
    cre = -root_k * states[:, 1, 1]
    w = simpson_weights(len(lags), h)
    cre2 = float(w @ cre**2)
    ann2 = float(w @ ann**2)
    exact_cre = -root_k * np.exp(-k * lags / 2) * np.cosh(e * lags / 2)
    exact_ann = -root_k * np.exp(-k * lags / 2) * np.sinh(e * lags / 2)
    err = float(max(np.max(np.abs(cre - exact_cre)), np.max(np.abs(ann - exact_ann))))
    return ActiveCrossCheck(1.0 / np.sqrt(cre2), cre2, ann2, err)
