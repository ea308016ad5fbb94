"""Quantum statistics of the writing stage.

Single photon: the correlation matrix ``N = (<a_i^* a_j>)`` in the
one-photon sector together with the cross vector ``a10 = <a^#>_10`` obey

    N'   = A^# N + N A^T - conj(xi) C^T a10^H - xi a10 C^#
    a10' = A^# a10 - C^T conj(xi)

Coherent input: the mean ``m`` follows the input-output equations and the
covariance ``V`` obeys ``V' = A^# V + V A^T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ModelError, WindowTooSmall
from .integrate import half_step_grid, rk4_forced, simpson_weights, uniform_grid
from .iosim import check_step, default_window, sample_input
from .linsys import PassiveLinearSystem
from .pulses import (
    COHERENT,
    SINGLE_PHOTON,
    InputSignal,
    default_step,
    writing_pulse,
)

HERMITIAN_DRIFT_TOL = 1e-10


def frame_photon_matrix(n_matrix: np.ndarray, u: np.ndarray | None) -> np.ndarray:
    """``<a'^* a'^T>`` for the modes ``a' = u^H a``; works on stacks too."""
    if u is None:
        return n_matrix
    return u.T @ n_matrix @ u.conj()


@dataclass(frozen=True, eq=False)
class PhotonStatistics:
    times: np.ndarray
    n_matrix: np.ndarray  # (steps, n, n)
    a10: np.ndarray  # (steps, n)
    hermitian_drift: float  # largest pre-symmetrization residual seen

    def mean_photon_numbers(self, frame: np.ndarray | None = None) -> np.ndarray:
        """Per-mode photon numbers, shape (steps, n), in the node frame or ``a' = frame^H a``."""
        return np.real(np.diagonal(frame_photon_matrix(self.n_matrix, frame), axis1=1, axis2=2))

    def amplitudes(self, frame: np.ndarray | None = None) -> np.ndarray:
        """One-photon amplitudes ``<0,0| a_k |Psi(t)>`` = ``conj(a10)``."""
        amp = self.a10.conj()
        if frame is not None:
            amp = amp @ frame.conj()
        return amp

    @property
    def final(self) -> np.ndarray:
        return self.n_matrix[-1]


@dataclass(frozen=True, eq=False)
class CoherentStatistics:
    times: np.ndarray
    mean: np.ndarray  # (steps, n)
    cov: np.ndarray  # (steps, n, n)
    input: np.ndarray
    output: np.ndarray

    def mean_in_frame(self, frame: np.ndarray | None = None) -> np.ndarray:
        return self.mean if frame is None else self.mean @ frame.conj()


def _grid(sys, signal, window, h):
    if window is None:
        window = default_window(sys, signal)
    if h is None:
        h = default_step(sys)
    times, h = uniform_grid(window[0], window[1], h)
    check_step(sys.a_drift, h)
    forcing = sample_input(signal, half_step_grid(times)) if len(times) > 1 else sample_input(signal, times)
    return times, h, forcing


def evolve_photon_stats(
    sys: PassiveLinearSystem,
    signal: InputSignal,
    window: tuple[float, float] | None = None,
    h: float | None = None,
) -> PhotonStatistics:
    """Co-integrate ``N`` and ``a10`` from zero with one coupled RK4 scheme."""
    if getattr(signal, "kind", SINGLE_PHOTON) != SINGLE_PHOTON:
        raise ModelError("photon statistics need a single-photon input")
    times, h, forcing = _grid(sys, signal, window, h)
    n = sys.n
    a_conj = sys.a_drift.conj()
    a_t = sys.a_drift.T
    c_t = sys.c_row[0]  # C^T as a flat vector
    c_conj = c_t.conj()

    def rhs(y, xi):
        nm = y[:n]
        a10 = y[n]
        d = np.empty_like(y)
        d[:n] = (
            a_conj @ nm
            + nm @ a_t
            - np.conj(xi) * np.outer(c_t, a10.conj())
            - xi * np.outer(a10, c_conj)
        )
        d[n] = a_conj @ a10 - c_t * np.conj(xi)
        return d

    drift = [0.0]

    def symmetrize(y):
        nm = y[:n]
        resid = np.max(np.abs(nm - nm.conj().T))
        if resid > drift[0]:
            drift[0] = float(resid)
        y[:n] = 0.5 * (nm + nm.conj().T)
        return y

    y0 = np.zeros((n + 1, n), dtype=complex)
    ys = np.array(rk4_forced(rhs, y0, h, forcing, len(times) - 1, post=symmetrize))
    return PhotonStatistics(times, ys[:, :n, :], ys[:, n, :], drift[0])


def lyapunov_closed_form(
    sys: PassiveLinearSystem,
    signal,
    t1: float | None = None,
    window: tuple[float, float] | None = None,
    h: float | None = None,
    tail_tol: float = 1e-12,
) -> np.ndarray:
    """``N(t1) = M^H M`` with ``M = integral xi(t) nu(t)^H dt`` by Simpson quadrature.

    ``nu`` is the writing family of ``sys`` switched at ``t1`` (default: the
    signal's own switch time).  The window must leave less than
    ``tail_tol`` of the family's Gramian mass outside.
    """
    if t1 is None:
        t1 = signal.family.switch_time
    family = writing_pulse(sys, t1)
    if window is None:
        window = family.support_window()
    lo = window[0]
    tail = family.tail_weight(t1 - lo)
    if tail > tail_tol:
        raise WindowTooSmall(f"window start {lo} leaves tail mass {tail:.3e}")
    if h is None:
        h = default_step(sys)
    times, h = uniform_grid(lo, t1, h, even=True)
    nu = family.sample(times)
    xi = sample_input(signal, times)
    w = simpson_weights(len(times), h)
    m = (w * xi) @ nu.conj()
    return np.outer(m.conj(), m)


def evolve_coherent_stats(
    sys: PassiveLinearSystem,
    signal: InputSignal,
    window: tuple[float, float] | None = None,
    h: float | None = None,
    v0=None,
) -> CoherentStatistics:
    """Mean and covariance of the coherent writing stage, from ``m = 0``."""
    if getattr(signal, "kind", COHERENT) != COHERENT:
        raise ModelError("coherent statistics need a coherent input")
    times, h, forcing = _grid(sys, signal, window, h)
    n = sys.n
    a = sys.a_drift
    a_conj = a.conj()
    a_t = a.T
    c_dag = sys.c_dag

    def rhs(y, f):
        d = np.empty_like(y)
        d[0] = a @ y[0] - c_dag * f
        d[1:] = a_conj @ y[1:] + y[1:] @ a_t
        return d

    y0 = np.zeros((n + 1, n), dtype=complex)
    if v0 is not None:
        y0[1:] = np.asarray(v0, dtype=complex)
    ys = np.array(rk4_forced(rhs, y0, h, forcing, len(times) - 1))
    mean = ys[:, 0, :]
    f_grid = forcing[0::2]
    return CoherentStatistics(
        times=times,
        mean=mean,
        cov=ys[:, 1:, :],
        input=f_grid,
        output=mean @ sys.c_row[0] + f_grid,
    )
