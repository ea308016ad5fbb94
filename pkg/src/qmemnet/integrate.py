"""Fixed-step RK4 with tabulated forcing, plus grid and quadrature helpers."""
from __future__ import annotations

import math

import numpy as np


def uniform_grid(t_start: float, t_end: float, h: float, even: bool = False):
    """Grid from ``t_start`` to ``t_end`` whose step is the largest ``<= h``
    that lands exactly on ``t_end``.

    Returns ``(times, step)``.  With ``even=True`` the number of intervals is
    rounded up to an even count (Simpson's rule).
    """
    if h <= 0:
        raise ValueError("step must be positive")
    span = t_end - t_start
    if span < 0:
        raise ValueError(f"empty window [{t_start}, {t_end}]")
    if span == 0:
        return np.array([float(t_start)]), float(h)
    n = max(1, math.ceil(span / h - 1e-9))
    if even and n % 2:
        n += 1
    times = np.linspace(t_start, t_end, n + 1)
    return times, span / n


def half_step_grid(times: np.ndarray) -> np.ndarray:
    """Grid points plus midpoints, i.e. every RK4 stage time."""
    out = np.empty(2 * len(times) - 1)
    out[0::2] = times
    out[1::2] = 0.5 * (times[:-1] + times[1:])
    return out


def simpson_weights(count: int, h: float) -> np.ndarray:
    if count < 3 or count % 2 == 0:
        raise ValueError("composite Simpson needs an odd number (>= 3) of points")
    w = np.ones(count)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def rk4_forced(rhs, y0, h: float, forcing_half: np.ndarray, n_steps: int, post=None):
    """Integrate ``y' = rhs(y, u)`` with forcing tabulated at half steps.

    ``forcing_half[2*i]`` is the input at grid point ``i`` and
    ``forcing_half[2*i + 1]`` the input at the following midpoint, so no
    interpolation enters the stage evaluations.  ``post(y)`` may return a
    corrected state after each step (e.g. re-symmetrization).

    Returns the list of states at every grid point.
    """
    if len(forcing_half) < 2 * n_steps + 1:
        raise ValueError("forcing table too short for the requested steps")
    y = y0
    states = [y0]
    half = 0.5 * h
    sixth = h / 6.0
    for i in range(n_steps):
        u0 = forcing_half[2 * i]
        um = forcing_half[2 * i + 1]
        u1 = forcing_half[2 * i + 2]
        k1 = rhs(y, u0)
        k2 = rhs(y + half * k1, um)
        k3 = rhs(y + half * k2, um)
        k4 = rhs(y + h * k3, u1)
        y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if post is not None:
            y = post(y)
        states.append(y)
    return states
