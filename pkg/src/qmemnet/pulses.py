"""Optimal writing/reading pulse families and composed input pulses.

The writing family is the vector of rising exponentials

    nu(t) = -expm(-conj(A) (t - t1)) C^T      for t <= t1, zero afterwards,

and the reading family the decaying counterpart

    nu~(t) = expm(A^T (t - t2)) C^T           for t >= t2, zero before.

Both families are orthonormal in L2 when ``A`` is Hurwitz.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg as sla

from .errors import NormViolation, NotHurwitz, WindowTooSmall, DimensionMismatch
from .integrate import simpson_weights, uniform_grid
from .linsys import PassiveLinearSystem, is_hurwitz

WRITING = "writing"
READING = "reading"
SINGLE_PHOTON = "single_photon"
COHERENT = "coherent"

TRUNCATION_TOL = 1e-8
NORM_TOL = 1e-10


def default_step(sys: PassiveLinearSystem) -> float:
    """Integration/quadrature step ``0.01 / spectral radius``.

    The radius bounds the slowest decay rate from above, so this also
    satisfies ``h <= 0.01 / |max Re eig(A)|``.
    """
    r = sys.spectral_radius()
    return 0.01 / r if r > 0 else 0.01


def truncation_time(a: np.ndarray, tol: float = TRUNCATION_TOL, cap: float | None = None) -> float:
    """Smallest ``T`` (to 0.1% relative) with ``||expm(a T)||_2 <= tol``.

    ``a`` must be a passive Hurwitz drift, for which the norm is
    non-increasing in ``T``, so bisection is valid.  The search is capped at
    ``80 / |max Re eig(a)|``.
    """
    abscissa = float(np.max(np.linalg.eigvals(a).real))
    if abscissa >= 0:
        raise NotHurwitz("truncation needs a Hurwitz drift")
    if cap is None:
        cap = 80.0 / abs(abscissa)

    def norm_at(t):
        return np.linalg.norm(sla.expm(a * t), 2)

    hi = min(1.0 / abs(abscissa), cap)
    while norm_at(hi) > tol and hi < cap:
        hi = min(2 * hi, cap)
    if hi >= cap:
        return cap
    lo = 0.0
    while hi - lo > 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if norm_at(mid) > tol:
            lo = mid
        else:
            hi = mid
    return hi


def _power_orbit(step_matrix: np.ndarray, v0: np.ndarray, count: int, block: int = 256):
    """Rows ``step_matrix**k @ v0`` for ``k = 0..count-1``."""
    n = len(v0)
    out = np.empty((count, n), dtype=complex)
    if count == 0:
        return out
    b = min(block, count)
    powers = np.empty((b, n, n), dtype=complex)
    powers[0] = np.eye(n)
    for i in range(1, b):
        powers[i] = step_matrix @ powers[i - 1]
    jump = step_matrix @ powers[b - 1]
    w = np.asarray(v0, dtype=complex)
    for start in range(0, count, b):
        stop = min(start + b, count)
        out[start:stop] = powers[: stop - start] @ w
        w = jump @ w
    return out


def _is_uniform(times: np.ndarray) -> bool:
    if len(times) < 3:
        return False
    d = np.diff(times)
    return bool(d[0] > 0 and np.allclose(d, d[0], rtol=1e-9, atol=0.0))


@dataclass(frozen=True, eq=False)
class PulseFamily:
    """Vector-valued pulse ``nu(t)`` (or ``nu~(t)``) generated by ``(A, C)``."""

    generator_a: np.ndarray
    generator_c: np.ndarray
    switch_time: float
    direction: Literal["writing", "reading"]

    @property
    def n(self) -> int:
        return self.generator_a.shape[0]

    def _exponent(self) -> np.ndarray:
        if self.direction == WRITING:
            return -self.generator_a.conj()
        return self.generator_a.T

    def _sign(self) -> float:
        return -1.0 if self.direction == WRITING else 1.0

    def _active(self, t):
        if self.direction == WRITING:
            return t <= self.switch_time
        return t >= self.switch_time

    def __call__(self, t):
        """Closed-form evaluation; returns shape ``np.shape(t) + (n,)``."""
        t_arr = np.asarray(t, dtype=float)
        flat = t_arr.reshape(-1)
        out = np.zeros((flat.size, self.n), dtype=complex)
        act = self._active(flat)
        if np.any(act):
            u = flat[act] - self.switch_time
            e = sla.expm(u[:, None, None] * self._exponent()[None])
            out[act] = self._sign() * (e @ self.generator_c[0])
        return out.reshape(t_arr.shape + (self.n,))

    def sample(self, times) -> np.ndarray:
        """Evaluate on a grid; uniform grids use exact step propagators."""
        times = np.asarray(times, dtype=float)
        if not _is_uniform(times):
            return self(times)
        d = times[1] - times[0]
        out = np.zeros((len(times), self.n), dtype=complex)
        act = np.nonzero(self._active(times))[0]
        if act.size == 0:
            return out
        if self.direction == WRITING:
            last = act[-1]
            v = self(times[last])
            step = sla.expm(self.generator_a.conj() * d)
            orbit = _power_orbit(step, v, last + 1)
            out[: last + 1] = orbit[::-1]
        else:
            first = act[0]
            v = self(times[first])
            step = sla.expm(self.generator_a.T * d)
            out[first:] = _power_orbit(step, v, len(times) - first)
        return out

    def tail_weight(self, span: float) -> float:
        """Norm of the Gramian mass outside ``span`` time units of the switch.

        Exactly ``||expm(A span)||_2 ** 2`` for a passive generator.
        """
        if span <= 0:
            return float(np.linalg.norm(self.generator_c) ** 2)
        return float(np.linalg.norm(sla.expm(self.generator_a * span), 2) ** 2)

    def truncation(self, tol: float = TRUNCATION_TOL) -> float:
        return truncation_time(self.generator_a, tol)

    def support_window(self, tol: float = TRUNCATION_TOL) -> tuple[float, float]:
        span = self.truncation(tol)
        if self.direction == WRITING:
            return self.switch_time - span, self.switch_time
        return self.switch_time, self.switch_time + span


def _family(sys: PassiveLinearSystem, t_switch: float, direction) -> PulseFamily:
    if not is_hurwitz(sys):
        raise NotHurwitz(
            f"{direction} pulses need a Hurwitz drift "
            f"(max Re eig = {sys.spectral_abscissa():.3e})"
        )
    return PulseFamily(sys.a_drift, sys.c_row, float(t_switch), direction)


def writing_pulse(sys: PassiveLinearSystem, t1: float) -> PulseFamily:
    return _family(sys, t1, WRITING)


def reading_pulse(sys: PassiveLinearSystem, t2: float) -> PulseFamily:
    return _family(sys, t2, READING)


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration window and step; ``h=None`` picks ``0.01/spectral radius``."""

    t_start: float
    t_end: float
    h: float | None = None
    tail_tol: float = 1e-12


def _default_quad(family: PulseFamily) -> QuadratureSpec:
    lo, hi = family.support_window()
    return QuadratureSpec(lo, hi)


def _quad_grid(family: PulseFamily, quad: QuadratureSpec):
    if family.direction == WRITING:
        lo, hi = quad.t_start, min(quad.t_end, family.switch_time)
        span = family.switch_time - lo
    else:
        lo, hi = max(quad.t_start, family.switch_time), quad.t_end
        span = hi - family.switch_time
    tail = family.tail_weight(span)
    if tail > quad.tail_tol:
        raise WindowTooSmall(
            f"window [{quad.t_start}, {quad.t_end}] leaves tail mass {tail:.3e} "
            f"> {quad.tail_tol:.1e}"
        )
    h = quad.h
    if h is None:
        r = float(np.max(np.abs(np.linalg.eigvals(family.generator_a))))
        h = 0.01 / r if r > 0 else 0.01
    times, h_eff = uniform_grid(lo, hi, h, even=True)
    return times, h_eff


def gramian(family: PulseFamily, quad: QuadratureSpec | None = None) -> np.ndarray:
    """``integral nu^#(t) nu^T(t) dt`` by composite Simpson on a truncated window."""
    quad = quad or _default_quad(family)
    times, h = _quad_grid(family, quad)
    v = family.sample(times)
    w = simpson_weights(len(times), h)
    return (v.conj().T * w) @ v


@dataclass(frozen=True, eq=False)
class InputSignal:
    """A single-photon or coherent input carried by ``sum_k c_k nu_k(t)``.

    The all-zero coefficient vector is accepted for either kind and stands
    for an empty (vacuum) input.
    """

    kind: Literal["single_photon", "coherent"]
    coefficients: np.ndarray
    family: PulseFamily

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex).reshape(-1)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        if self.kind not in (SINGLE_PHOTON, COHERENT):
            raise ValueError(f"unknown input kind {self.kind!r}")
        if coeffs.size != self.family.n:
            raise DimensionMismatch(
                f"{coeffs.size} coefficients for a {self.family.n}-mode pulse family"
            )
        if self.kind == SINGLE_PHOTON and np.any(coeffs != 0):
            norm2 = float(np.vdot(coeffs, coeffs).real)
            if abs(norm2 - 1.0) > NORM_TOL:
                raise NormViolation(
                    f"single-photon coefficients must have unit norm (|s|^2 = {norm2:.12g})"
                )

    @property
    def energy(self) -> float:
        """Total pulse energy ``||c||^2`` (exact, by orthonormality)."""
        return float(np.vdot(self.coefficients, self.coefficients).real)

    def __call__(self, t):
        return self.family(t) @ self.coefficients

    def sample(self, times) -> np.ndarray:
        return self.family.sample(times) @ self.coefficients


def compose_input(family: PulseFamily, coefficients, kind: str = SINGLE_PHOTON) -> InputSignal:
    return InputSignal(kind, coefficients, family)


def pulse_overlaps(family: PulseFamily, pulse, quad: QuadratureSpec | None = None) -> np.ndarray:
    """Vector of ``integral pulse(t) conj(nu_j(t)) dt`` over the family's window.

    ``pulse`` is anything with ``sample(times)`` or a vectorized callable.
    """
    quad = quad or _default_quad(family)
    times, h = _quad_grid(family, quad)
    v = family.sample(times)
    x = pulse.sample(times) if hasattr(pulse, "sample") else np.asarray(pulse(times))
    w = simpson_weights(len(times), h)
    return (w * x) @ v.conj()
