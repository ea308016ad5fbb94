"""Dark-state check for the single-mode cavity.

Driving the cavity with a rising exponential keeps the photon-counting
intensity of the output at zero.  Two reductions are integrated:

coherent input ``alpha(t)``, cavity amplitude ``beta``::

    beta' = -kappa/2 beta - sqrt(kappa) alpha,     N = |sqrt(kappa) beta + alpha|^2

single photon ``xi(t)``, excited population ``x`` and coherence ``z``::

    x' = -kappa x - sqrt(kappa) (xi z + conj(xi z))
    z' = -kappa/2 z - sqrt(kappa) conj(xi)
    N  = kappa x + sqrt(kappa) (xi z + conj(xi z)) + |xi|^2
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveRate, StepTooLarge
from .integrate import half_step_grid, rk4_forced, uniform_grid

STEP_LIMIT = 0.5
COHERENT = "coherent"
SINGLE_PHOTON = "single_photon"


@dataclass(frozen=True, eq=False)
class DarkStateRun:
    kappa: float
    input_kind: str
    grid: np.ndarray
    intensity: np.ndarray
    drive: np.ndarray  # alpha(t) or xi(t) on the grid
    state: np.ndarray  # beta, or columns (x, z)

    @property
    def peak_drive(self) -> float:
        return float(np.max(np.abs(self.drive)) ** 2)

    def max_intensity(self) -> float:
        return float(np.max(np.abs(self.intensity)))


def _check(kappa, h):
    if not kappa > 0:
        raise NonPositiveRate(f"kappa must be positive, got {kappa}")
    if kappa * h > STEP_LIMIT:
        raise StepTooLarge(f"kappa h = {kappa * h:.3g} exceeds {STEP_LIMIT}")


def rising_exponential(kappa: float, amplitude: complex, t0: float):
    def f(t):
        return amplitude * np.exp(kappa * (np.asarray(t, dtype=float) - t0) / 2)

    return f


def dark_state_coherent(
    kappa: float,
    alpha0: complex = 1.0,
    window: tuple[float, float] = (-10.0, 0.0),
    h: float = 1e-3,
    pulse=None,
) -> DarkStateRun:
    """Integrate the coherent reduction from ``beta(t0) = -alpha0 / sqrt(kappa)``.

    ``pulse`` overrides the default drive ``alpha0 exp(kappa (t - t0) / 2)``
    (used for negative controls).
    """
    _check(kappa, h)
    t0 = window[0]
    times, h = uniform_grid(window[0], window[1], h)
    drive = pulse or rising_exponential(kappa, alpha0, t0)
    f_half = np.asarray(drive(half_step_grid(times)), dtype=complex) * np.ones(2 * len(times) - 1)
    rk = np.sqrt(kappa)
    beta0 = np.array([-complex(alpha0) / rk])

    def rhs(y, a):
        return -0.5 * kappa * y - rk * a

    beta = np.array(rk4_forced(rhs, beta0, h, f_half, len(times) - 1))[:, 0]
    alpha = f_half[0::2]
    inten = np.abs(rk * beta + alpha) ** 2
    return DarkStateRun(kappa, COHERENT, times, inten, alpha, beta)


def dark_state_single_photon(
    kappa: float,
    xi0: float = 1.0,
    window: tuple[float, float] = (-10.0, 0.0),
    h: float = 1e-3,
    pulse=None,
    initial: str = "constraint",
) -> DarkStateRun:
    """Integrate the single-photon reduction for a real ``xi0``.

    ``initial="constraint"`` starts from ``x = 0`` and the ``z`` that makes
    the intensity vanish at ``t0``, ``z = -xi0 / (2 sqrt(kappa))``.
    ``initial="dark"`` starts on the invariant dark manifold
    ``x = xi0^2 / kappa``, ``z = -xi0 / sqrt(kappa)``.
    """
    _check(kappa, h)
    xi0 = float(np.real(xi0))
    t0 = window[0]
    times, h = uniform_grid(window[0], window[1], h)
    drive = pulse or rising_exponential(kappa, xi0, t0)
    f_half = np.asarray(drive(half_step_grid(times)), dtype=complex) * np.ones(2 * len(times) - 1)
    rk = np.sqrt(kappa)
    if initial == "constraint":
        y0 = np.array([0.0, -xi0 / (2 * rk)], dtype=complex)
    elif initial == "dark":
        y0 = np.array([xi0**2 / kappa, -xi0 / rk], dtype=complex)
    else:
        raise ValueError(f"unknown initial condition {initial!r}")

    def rhs(y, xi):
        x, z = y
        cross = 2 * np.real(xi * z)
        return np.array([-kappa * x - rk * cross, -0.5 * kappa * z - rk * np.conj(xi)])

    ys = np.array(rk4_forced(rhs, y0, h, f_half, len(times) - 1))
    xi = f_half[0::2]
    x = ys[:, 0].real
    z = ys[:, 1]
    inten = kappa * x + rk * 2 * np.real(xi * z) + np.abs(xi) ** 2
    return DarkStateRun(kappa, SINGLE_PHOTON, times, inten, xi, ys)
