"""Write / store / read orchestration with piecewise-constant system matrices.

The network runs with ``write_sys`` up to ``t1``, with ``store_sys`` on
``[t1, t2]`` and with ``read_sys`` (equal to ``write_sys``) afterwards.
All stages are linear in the one-photon amplitude vector (or the coherent
mean), so the whole protocol is tracked through that vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import BlockStructureViolation, ScheduleInvalid, UnsupportedCoefficients
from .integrate import simpson_weights, uniform_grid
from .iosim import simulate_io
from .linsys import ModeDecomposition, PassiveLinearSystem, df_decompose, is_hurwitz
from .pulses import (
    COHERENT,
    SINGLE_PHOTON,
    InputSignal,
    QuadratureSpec,
    default_step,
    pulse_overlaps,
    reading_pulse,
    writing_pulse,
)
from .stats import evolve_coherent_stats, evolve_photon_stats

FRAME_TOL = 1e-8
BUFFER_TOL = 1e-8
READ_WINDOW_FACTOR = 40.0


def _classify_columns(frame: np.ndarray, dec: ModeDecomposition):
    """Indices of frame columns lying in the memory / buffer subspace."""
    mem = dec.memory_basis
    memory, buffer = [], []
    for j in range(frame.shape[1]):
        col = frame[:, j]
        w_mem = float(np.linalg.norm(mem.conj().T @ col) ** 2) if mem.shape[1] else 0.0
        if abs(w_mem - 1.0) <= FRAME_TOL:
            memory.append(j)
        elif w_mem <= FRAME_TOL:
            buffer.append(j)
        else:
            raise ScheduleInvalid(
                f"frame column {j} mixes memory and buffer modes (memory weight {w_mem:.3e})"
            )
    return np.array(memory, dtype=int), np.array(buffer, dtype=int)


@dataclass(frozen=True, eq=False)
class StageSchedule:
    """Stage systems and switch times.

    ``frame`` is a unitary whose columns each lie in the memory or the
    buffer subspace of ``store_sys``; it defaults to the basis from
    :func:`qmemnet.linsys.df_decompose`.  Coefficients are reported in
    this frame.
    """

    write_sys: PassiveLinearSystem
    store_sys: PassiveLinearSystem
    read_sys: PassiveLinearSystem
    t1: float
    t2: float
    frame: np.ndarray | None = None
    decomposition: ModeDecomposition = field(init=False, repr=False)
    memory_columns: np.ndarray = field(init=False, repr=False)
    buffer_columns: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.t2 >= self.t1:
            raise ScheduleInvalid(f"need t2 >= t1, got t1={self.t1}, t2={self.t2}")
        n = self.write_sys.n
        if self.store_sys.n != n or self.read_sys.n != n:
            raise ScheduleInvalid("all stages must act on the same number of modes")
        if not is_hurwitz(self.write_sys):
            raise ScheduleInvalid("the writing system must be Hurwitz")
        if not self.read_sys.same_as(self.write_sys):
            raise ScheduleInvalid("the reading system must equal the writing system")
        try:
            dec = df_decompose(self.store_sys)
        except BlockStructureViolation as exc:
            raise ScheduleInvalid(f"storage system has no DF block form: {exc}") from exc
        if dec.memory_dim < 1:
            raise ScheduleInvalid("the storage system has no memory modes")
        frame = dec.u if self.frame is None else np.asarray(self.frame, dtype=complex)
        if frame.shape != (n, n):
            raise ScheduleInvalid(f"frame must be {n}x{n}, got {frame.shape}")
        if np.max(np.abs(frame.conj().T @ frame - np.eye(n))) > 1e-10:
            raise ScheduleInvalid("frame is not unitary")
        memory, buffer = _classify_columns(frame, dec)
        frame = frame.copy()
        frame.setflags(write=False)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "decomposition", dec)
        object.__setattr__(self, "memory_columns", memory)
        object.__setattr__(self, "buffer_columns", buffer)

    @property
    def n(self) -> int:
        return self.write_sys.n

    def writing_family(self, primed: bool = False):
        sys = self.write_sys.transformed(self.frame) if primed else self.write_sys
        return writing_pulse(sys, self.t1)

    def reading_family(self, primed: bool = False):
        sys = self.read_sys.transformed(self.frame) if primed else self.read_sys
        return reading_pulse(sys, self.t2)

    def echo(self) -> dict:
        return {"t1": self.t1, "t2": self.t2, "n": self.n,
                "memory_columns": self.memory_columns.tolist()}


def storage_decay(
    store_sys: PassiveLinearSystem,
    state,
    duration: float,
    decomposition: ModeDecomposition | None = None,
) -> np.ndarray:
    """Evolve a state given in the DF coordinates ``U^H x`` of ``store_sys``.

    Memory components are copied unchanged; buffer components are
    multiplied by ``expm(A_B * duration)``.
    """
    if duration < 0:
        raise ValueError("storage duration must be non-negative")
    dec = decomposition or df_decompose(store_sys)
    state = np.asarray(state, dtype=complex).reshape(-1)
    out = state.copy()
    m = dec.buffer_dim
    if m and duration > 0:
        out[:m] = sla.expm(dec.a_buffer * duration) @ state[:m]
    return out


def node_coefficients(schedule: StageSchedule, signal: InputSignal, h: float | None = None) -> np.ndarray:
    """Expansion ``s`` of the input on the node-frame writing family.

    Exact when the signal was composed on the writing family (node or
    frame coordinates); otherwise computed by overlap quadrature.
    """
    fam = signal.family
    coeffs = np.asarray(signal.coefficients)
    if fam.direction == "writing" and np.isclose(fam.switch_time, schedule.t1, rtol=0, atol=1e-12):
        if np.allclose(fam.generator_a, schedule.write_sys.a_drift, rtol=0, atol=1e-12) and np.allclose(
            fam.generator_c, schedule.write_sys.c_row, rtol=0, atol=1e-12
        ):
            return coeffs.copy()
        primed = schedule.write_sys.transformed(schedule.frame)
        if np.allclose(fam.generator_a, primed.a_drift, rtol=0, atol=1e-12) and np.allclose(
            fam.generator_c, primed.c_row, rtol=0, atol=1e-12
        ):
            return schedule.frame @ coeffs
    family = schedule.writing_family()
    lo, hi = family.support_window()
    return pulse_overlaps(family, signal, QuadratureSpec(lo, hi, h))


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    kind: str
    schedule: dict
    input_coefficients: np.ndarray  # node frame
    frame_coefficients: np.ndarray  # input in the schedule frame
    stored_state: np.ndarray  # frame coordinates at t1
    stored_coefficients: np.ndarray  # memory components of stored_state
    leakage: float
    state_after_storage: np.ndarray  # frame coordinates at t2
    retrieved_times: np.ndarray
    retrieved_pulse: np.ndarray
    target_pulse: np.ndarray
    retrieval_fidelity: float
    efficiency: float  # retrieved energy / input energy
    write_times: np.ndarray = field(repr=False, default=None)
    write_amplitudes: np.ndarray = field(repr=False, default=None)  # node frame, per step
    write_photon_numbers: np.ndarray = field(repr=False, default=None)

    def summary(self) -> dict:
        def cplx(v):
            return [[float(z.real), float(z.imag)] for z in np.asarray(v).reshape(-1)]

        return {
            "kind": self.kind,
            "schedule": self.schedule,
            "input_coefficients": cplx(self.frame_coefficients),
            "stored_coefficients": cplx(self.stored_coefficients),
            "leakage": self.leakage,
            "retrieval_fidelity": self.retrieval_fidelity,
            "efficiency": self.efficiency,
        }


def _even_step(span: float, h: float) -> float:
    n = max(2, int(np.ceil(span / h - 1e-9)))
    if n % 2:
        n += 1
    return span / n


def _read_window(schedule: StageSchedule) -> tuple[float, float]:
    span = READ_WINDOW_FACTOR / abs(schedule.read_sys.spectral_abscissa())
    return schedule.t2, schedule.t2 + span


def pulse_fidelity(r: np.ndarray, target: np.ndarray, h: float) -> float:
    """Normalized overlap ``|<target, r>|^2 / (|r|^2 |target|^2)`` by Simpson's rule."""
    w = simpson_weights(len(r), h)
    nr = float(w @ np.abs(r) ** 2)
    nt = float(w @ np.abs(target) ** 2)
    if nr == 0 or nt == 0:
        return 0.0
    ov = np.sum(w * np.conj(target) * r)
    return float(min(abs(ov) ** 2 / (nr * nt), 1.0 + 1e-10))


def run_protocol(
    schedule: StageSchedule,
    signal: InputSignal,
    h: float | None = None,
    t_start: float | None = None,
    t_switch: float | None = None,
) -> ProtocolReport:
    """Simulate writing up to ``t1``, storage on ``[t1, t2]`` and read-out.

    The writing stage integrates the photon statistics (or the coherent
    mean and covariance) from ``t_start``, by default the truncation window
    of the writing family.  ``t_switch < t1`` ends writing early; storage
    then starts at ``t_switch``.  Read-out lasts ``40 / |max Re eig(A)|``.
    """
    if h is None:
        h = default_step(schedule.write_sys)
    frame = schedule.frame
    s = node_coefficients(schedule, signal, h)
    s_frame = frame.conj().T @ s
    buffer_weight = float(np.sum(np.abs(s_frame[schedule.buffer_columns]) ** 2))
    if buffer_weight > BUFFER_TOL:
        raise UnsupportedCoefficients(
            f"input puts weight {buffer_weight:.3e} on buffer modes of the storage system"
        )
    family = schedule.writing_family()
    if t_start is None:
        t_start = family.support_window()[0]
    t_end = schedule.t1 if t_switch is None else float(t_switch)
    if t_end > schedule.t1 + 1e-12:
        raise ScheduleInvalid(f"t_switch={t_end} is after the scheduled t1={schedule.t1}")
    if t_start >= t_end:
        raise ScheduleInvalid("writing window starts after the switch time")
    window = (t_start, t_end)
    energy = float(np.vdot(s, s).real)

    read_lo, read_hi = _read_window(schedule)
    h_read = _even_step(read_hi - read_lo, default_step(schedule.read_sys) if h is None else h)

    if energy == 0:
        times, _ = uniform_grid(read_lo, read_hi, h_read)
        zeros_n = np.zeros(schedule.n, dtype=complex)
        zeros_m = np.zeros(len(schedule.memory_columns), dtype=complex)
        return ProtocolReport(
            kind=signal.kind, schedule=schedule.echo(), input_coefficients=s,
            frame_coefficients=s_frame, stored_state=zeros_n, stored_coefficients=zeros_m,
            leakage=0.0, state_after_storage=zeros_n, retrieved_times=times,
            retrieved_pulse=np.zeros(len(times), dtype=complex),
            target_pulse=np.zeros(len(times), dtype=complex),
            retrieval_fidelity=0.0, efficiency=0.0,
        )

    if signal.kind == SINGLE_PHOTON:
        st = evolve_photon_stats(schedule.write_sys, signal, window, h)
        write_amp = st.amplitudes()
        photon_numbers = st.mean_photon_numbers()
        write_times = st.times
    elif signal.kind == COHERENT:
        cs = evolve_coherent_stats(schedule.write_sys, signal, window, h)
        write_amp = cs.mean
        photon_numbers = np.abs(cs.mean) ** 2
        write_times = cs.times
    else:  # pragma: no cover - InputSignal validates kind
        raise ScheduleInvalid(f"unknown input kind {signal.kind!r}")

    x1 = write_amp[-1]
    x1_frame = frame.conj().T @ x1
    stored = x1_frame[schedule.memory_columns]
    leakage = max(0.0, energy - float(np.sum(np.abs(stored) ** 2)))

    dec = schedule.decomposition
    x1_df = dec.u.conj().T @ x1
    x2_df = storage_decay(schedule.store_sys, x1_df, schedule.t2 - t_end, dec)
    x2 = dec.u @ x2_df
    x2_frame = frame.conj().T @ x2
    x2_frame[schedule.memory_columns] = stored  # storage leaves memory amplitudes untouched

    traj = simulate_io(schedule.read_sys, None, (read_lo, read_hi), h_read, initial_state=frame @ x2_frame)
    target = schedule.reading_family().sample(traj.times) @ s
    fid = pulse_fidelity(traj.output, target, traj.h)
    w = simpson_weights(len(traj.times), traj.h)
    eff = float(w @ np.abs(traj.output) ** 2) / energy
    return ProtocolReport(
        kind=signal.kind,
        schedule=schedule.echo(),
        input_coefficients=s,
        frame_coefficients=s_frame,
        stored_state=x1_frame,
        stored_coefficients=stored,
        leakage=leakage,
        state_after_storage=x2_frame,
        retrieved_times=traj.times,
        retrieved_pulse=traj.output,
        target_pulse=target,
        retrieval_fidelity=fid,
        efficiency=eff,
        write_times=write_times,
        write_amplitudes=write_amp,
        write_photon_numbers=photon_numbers,
    )


@dataclass(frozen=True, eq=False)
class EarlySwitchResult:
    """One-photon content of the network when writing stops at ``t_switch``.

    ``amplitudes`` are frame amplitudes ``<0| a'_k |Psi>``.  After the
    switch the buffer part decays into the field, so the memory is left in
    the unnormalized mixture ``|m><m| + vacuum_weight |0><0|`` with
    ``m = memory_amplitudes``.
    """

    t_switch: float
    amplitudes: np.ndarray
    memory_amplitudes: np.ndarray
    buffer_weight: float
    field_weight: float  # photon probability still outside the network
    vacuum_weight: float  # memory vacuum probability after the buffer empties

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def memory_density_matrix(self) -> np.ndarray:
        """Memory state on the (vacuum, one photon in memory mode k ...) basis."""
        m = self.memory_amplitudes
        rho = np.zeros((len(m) + 1, len(m) + 1), dtype=complex)
        rho[0, 0] = self.vacuum_weight
        rho[1:, 1:] = np.outer(m, m.conj())
        return rho


def early_switch_experiment(
    schedule: StageSchedule,
    signal: InputSignal,
    t_switch: float,
    h: float | None = None,
    t_start: float | None = None,
) -> EarlySwitchResult:
    """Stop writing at ``t_switch <= t1`` and report the frame amplitudes."""
    if signal.kind != SINGLE_PHOTON:
        raise ScheduleInvalid("the early-switch experiment needs a single-photon input")
    if t_switch > schedule.t1 + 1e-12:
        raise ScheduleInvalid(f"t_switch={t_switch} is after the scheduled t1={schedule.t1}")
    if t_start is None:
        t_start = schedule.writing_family().support_window()[0]
    n = schedule.n
    if t_switch <= t_start:
        amp = np.zeros(n, dtype=complex)
    else:
        st = evolve_photon_stats(schedule.write_sys, signal, (t_start, t_switch), h)
        amp = schedule.frame.conj().T @ st.amplitudes()[-1]
    pops = np.abs(amp) ** 2
    mem = amp[schedule.memory_columns]
    buf = float(np.sum(pops[schedule.buffer_columns]))
    mem_w = float(np.sum(np.abs(mem) ** 2))
    energy = signal.energy
    return EarlySwitchResult(
        t_switch=float(t_switch),
        amplitudes=amp,
        memory_amplitudes=mem,
        buffer_weight=buf,
        field_weight=max(0.0, energy - mem_w - buf),
        vacuum_weight=max(0.0, energy - mem_w),
    )
