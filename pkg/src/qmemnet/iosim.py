"""Classical input-output dynamics of pulse shapes and coherent means.

Both the single-photon pulse propagator ``eta`` and the coherent mean ``m``
obey

    x' = A x - C^H u(t),        y(t) = C x + u(t),

so one integrator serves both.  Input and output energies are integrated
alongside the state with the same RK4 scheme, which keeps the
energy-balance check at integrator accuracy rather than quadrature accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SingularResolvent, StepTooLarge
from .integrate import half_step_grid, rk4_forced, uniform_grid
from .linsys import PassiveLinearSystem, transfer_function
from .pulses import InputSignal, default_step, truncation_time

STABILITY_LIMIT = 0.5


def check_step(a: np.ndarray, h: float):
    norm = np.linalg.norm(a, 2)
    if norm * h > STABILITY_LIMIT:
        raise StepTooLarge(f"||A|| h = {norm * h:.3g} exceeds {STABILITY_LIMIT}")


def sample_input(signal, times: np.ndarray) -> np.ndarray:
    if signal is None:
        return np.zeros(len(times), dtype=complex)
    if hasattr(signal, "sample"):
        return np.asarray(signal.sample(times), dtype=complex)
    return np.asarray(signal(times), dtype=complex) * np.ones(len(times))


def default_window(sys: PassiveLinearSystem, signal) -> tuple[float, float]:
    """Writing window ``[t1 - T, t1]`` with ``T`` from the pulse truncation rule."""
    family = getattr(signal, "family", None)
    if family is not None:
        return family.support_window()
    span = truncation_time(sys.a_drift)
    return -span, 0.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    state: np.ndarray
    input: np.ndarray
    output: np.ndarray
    energy_in: np.ndarray
    energy_out: np.ndarray

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def energy_residual(self) -> np.ndarray:
        """``|x(t)|^2 + E_out(t) - E_in(t) - |x(t_start)|^2`` at each grid point."""
        x2 = np.sum(np.abs(self.state) ** 2, axis=1)
        return x2 + self.energy_out - self.energy_in - x2[0]

    def relative_energy_error(self) -> float:
        scale = max(self.energy_in[-1], float(np.sum(np.abs(self.state[0]) ** 2)))
        if scale == 0:
            return float(np.max(np.abs(self.energy_residual())))
        return float(np.max(np.abs(self.energy_residual())) / scale)


def _breakpoints(signal, window, breaks):
    if breaks is None:
        family = getattr(signal, "family", None)
        breaks = [] if family is None else [family.switch_time]
    lo, hi = window
    return sorted(float(b) for b in breaks if lo < b < hi)


def simulate_io(
    sys: PassiveLinearSystem,
    signal: InputSignal | None,
    window: tuple[float, float] | None = None,
    h: float | None = None,
    initial_state=None,
    breaks=None,
) -> Trajectory:
    """RK4 integration of the input-output equations from ``x(t_start) = initial_state``.

    ``signal`` may be an :class:`InputSignal`, any vectorized callable, or
    ``None`` for no input.  The step is shrunk so the grid ends exactly on
    ``t_end``.  ``breaks`` lists times where the input jumps (default: the
    switch time of an :class:`InputSignal`); integration restarts there and
    each segment sees the one-sided limits of the input at its ends.
    """
    if window is None:
        window = default_window(sys, signal)
    if h is None:
        h = default_step(sys)
    n = sys.n
    a = sys.a_drift
    c = sys.c_row[0]
    c_dag = sys.c_dag
    check_step(a, h)

    def rhs(y, u):
        x = y[:n]
        out = c @ x + u
        d = np.empty_like(y)
        d[:n] = a @ x - c_dag * u
        d[n] = abs(u) ** 2
        d[n + 1] = abs(out) ** 2
        return d

    y = np.zeros(n + 2, dtype=complex)
    if initial_state is not None:
        y[:n] = np.asarray(initial_state, dtype=complex)
    edges = [window[0]] + _breakpoints(signal, window, breaks) + [window[1]]
    all_times, all_states, all_inputs = [], [], []
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        times, h_seg = uniform_grid(lo, hi, h)
        if len(times) > 1:
            probe = half_step_grid(times)
            if k > 0:
                probe[0] = np.nextafter(lo, np.inf)
            if k < len(edges) - 2:
                probe[-1] = np.nextafter(hi, -np.inf)
            u_half = sample_input(signal, probe)
        else:
            u_half = sample_input(signal, times)
        ys = np.array(rk4_forced(rhs, y, h_seg, u_half, len(times) - 1))
        y = ys[-1]
        start = 0 if k == 0 else 1  # the break point keeps its left-limit sample
        all_times.append(times[start:])
        all_states.append(ys[start:])
        all_inputs.append(u_half[0::2][start:])
    times = np.concatenate(all_times)
    ys = np.concatenate(all_states)
    u_grid = np.concatenate(all_inputs)
    state = ys[:, :n]
    return Trajectory(
        times=times,
        state=state,
        input=u_grid,
        output=state @ c + u_grid,
        energy_in=ys[:, n].real,
        energy_out=ys[:, n + 1].real,
    )


@dataclass(frozen=True)
class ZeroOutputReport:
    max_abs: float
    tol: float
    passed: bool


def zero_output_check(traj: Trajectory, until: float, tol: float | None = None) -> ZeroOutputReport:
    """Is the output vacuum up to time ``until``?

    Default tolerance is ``1e-6 * sqrt(peak input power)``.
    """
    if not traj.times[0] <= until <= traj.times[-1] + 1e-12:
        raise ValueError(f"until={until} outside the trajectory grid")
    mask = traj.times <= until + 1e-12
    if tol is None:
        tol = 1e-6 * float(np.max(np.abs(traj.input))) if len(traj.input) else 0.0
    max_abs = float(np.max(np.abs(traj.output[mask])))
    return ZeroOutputReport(max_abs, tol, max_abs <= tol)


class SingleModeOutput(NamedTuple):
    xi_prime: np.ndarray
    xi_tilde: np.ndarray


def single_mode_closed_form(kappa: float, gamma: float, t) -> SingleModeOutput:
    """Exact single-mode response to ``xi(t) = sqrt(gamma) exp(gamma t / 2)``, ``t <= 0``.

    ``xi_prime = C eta`` is the system contribution to the output and
    ``xi_tilde = C eta + xi`` the output pulse over the whole period; both
    switch branches at ``t = 0``.  Written as a one-photon state, the
    output pulse is usually quoted with the opposite global sign,
    ``(kappa - gamma)/(kappa + gamma)`` before the switch.
    """
    if kappa <= 0 or gamma <= 0:
        raise ValueError("kappa and gamma must be positive")
    t = np.asarray(t, dtype=float)
    pre = t <= 0
    rise = np.exp(np.where(pre, gamma * t / 2, 0.0))
    fall = np.exp(np.where(pre, 0.0, -kappa * t / 2))
    root_g = np.sqrt(gamma)
    xi_prime = np.where(pre, rise, fall) * (-2 * kappa * root_g / (kappa + gamma))
    xi_tilde = np.where(
        pre,
        (gamma - kappa) / (kappa + gamma) * root_g * rise,
        xi_prime,
    )
    return SingleModeOutput(xi_prime, xi_tilde)


def fit_amplitude(times: np.ndarray, values: np.ndarray, template: np.ndarray) -> complex:
    """Least-squares coefficient ``c`` minimizing ``|values - c * template|``."""
    del times
    den = np.vdot(template, template)
    if den == 0:
        return 0j
    return complex(np.vdot(template, values) / den)


def emission_coefficient(traj: Trajectory, kappa: float, t1: float = 0.0) -> complex:
    """Fit the post-switch output to ``exp(-kappa (t - t1) / 2)``."""
    mask = traj.times > t1
    tt = traj.times[mask]
    template = np.exp(-kappa * (tt - t1) / 2)
    return fit_amplitude(tt, traj.output[mask], template)


def reflection_coefficient(
    traj: Trajectory, gamma: float, t1: float = 0.0, kappa: float | None = None
) -> complex:
    """Fit the pre-switch output to ``sqrt(gamma) exp(gamma (t - t1) / 2)``.

    With ``kappa`` given and output samples after ``t1``, the global phase
    is fixed so that the emitted tail ``exp(-kappa (t - t1) / 2)`` has a
    positive coefficient.  In that convention a single-mode system of rate
    ``kappa`` driven by the rising exponential of rate ``gamma`` reflects
    ``(kappa - gamma) / (kappa + gamma)``.  Without ``kappa`` the raw fit
    of the input-output equations, ``(gamma - kappa) / (kappa + gamma)``,
    is returned.
    """
    mask = traj.times <= t1
    tt = traj.times[mask]
    template = np.sqrt(gamma) * np.exp(gamma * (tt - t1) / 2)
    r = fit_amplitude(tt, traj.output[mask], template)
    if kappa is None or not np.any(traj.times > t1):
        return r
    e = emission_coefficient(traj, kappa, t1)
    if abs(e) == 0:
        return r
    return r * abs(e) / e


@dataclass(frozen=True)
class CancellationReport:
    samples: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    max_residual: float
    passed: bool


def transfer_cancellation_check(
    sys: PassiveLinearSystem,
    s_samples,
    eta1=None,
    rng: np.random.Generator | None = None,
    tol: float = 1e-8,
) -> CancellationReport:
    """Check ``G[s] * C (sI + A^H)^-1 eta1 == C (sI - A)^-1 eta1`` at each sample.

    The input-side zero of the rising exponential cancels the transfer
    function zero.  ``eta1`` defaults to a random complex vector.
    """
    n = sys.n
    if eta1 is None:
        rng = rng or np.random.default_rng(0)
        eta1 = rng.normal(size=n) + 1j * rng.normal(size=n)
    eta1 = np.asarray(eta1, dtype=complex).reshape(n)
    a = sys.a_drift
    c = sys.c_row[0]
    eye = np.eye(n)
    samples = np.atleast_1d(np.asarray(s_samples, dtype=complex))
    lhs = np.empty(len(samples), dtype=complex)
    rhs = np.empty(len(samples), dtype=complex)
    for i, s in enumerate(samples):
        try:
            xi_s = c @ np.linalg.solve(s * eye + a.conj().T, eta1)
            rhs[i] = c @ np.linalg.solve(s * eye - a, eta1)
        except np.linalg.LinAlgError as exc:
            raise SingularResolvent(f"resolvent singular at s={s}") from exc
        lhs[i] = transfer_function(sys, s) * xi_s
    scale = max(1.0, float(np.max(np.abs(rhs))) if len(rhs) else 1.0)
    resid = float(np.max(np.abs(lhs - rhs))) / scale if len(samples) else 0.0
    return CancellationReport(samples, lhs, rhs, resid, resid <= tol)
