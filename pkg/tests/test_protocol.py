import numpy as np
import pytest

from qmemnet.errors import BlockStructureViolation, ScheduleInvalid, UnsupportedCoefficients
from qmemnet.linsys import build_system, df_decompose
from qmemnet.presets import reference_frame
from qmemnet.protocol import StageSchedule, early_switch_experiment, run_protocol, storage_decay
from qmemnet.pulses import compose_input, writing_pulse


@pytest.fixture(scope="module")
def schedule(atomic, atomic_store):
    return StageSchedule(atomic, atomic_store, atomic, 0.0, 5.0, frame=reference_frame())


@pytest.fixture(scope="module")
def matched_report(schedule, matched_signal):
    return run_protocol(schedule, matched_signal)


def test_schedule_classifies_frame(schedule):
    assert schedule.memory_columns.tolist() == [2, 3]
    assert schedule.buffer_columns.tolist() == [0, 1]


def test_schedule_validation(atomic, atomic_store):
    with pytest.raises(ScheduleInvalid):
        StageSchedule(atomic, atomic_store, atomic, 1.0, 0.0)
    with pytest.raises(ScheduleInvalid):
        StageSchedule(atomic_store, atomic_store, atomic_store, 0.0, 1.0)
    with pytest.raises(ScheduleInvalid):
        StageSchedule(atomic, atomic, atomic, 0.0, 1.0)  # no memory modes
    with pytest.raises(ScheduleInvalid):
        StageSchedule(atomic, atomic_store, atomic_store, 0.0, 1.0)
    with pytest.raises(ScheduleInvalid):
        StageSchedule(atomic, atomic_store, atomic, 0.0, 1.0, frame=np.eye(4))


def test_default_frame_is_df_split(atomic, atomic_store):
    sched = StageSchedule(atomic, atomic_store, atomic, 0.0, 1.0)
    dec = df_decompose(atomic_store)
    assert np.allclose(sched.frame, dec.u)
    assert sched.memory_columns.tolist() == [2, 3]


def test_matched_round_trip(matched_report):
    r = matched_report
    assert np.max(np.abs(r.stored_coefficients - 1 / np.sqrt(2))) <= 1e-3
    assert 0 <= r.leakage <= 1e-3
    assert r.retrieval_fidelity >= 1 - 1e-3
    assert r.retrieval_fidelity <= 1 + 1e-10
    assert r.efficiency == pytest.approx(1.0, abs=1e-3)


def test_memory_coefficients_survive_storage(matched_report):
    r = matched_report
    assert np.array_equal(r.state_after_storage[2:], r.stored_coefficients)


def test_retrieved_pulse_matches_target(matched_report):
    r = matched_report
    assert np.max(np.abs(r.retrieved_pulse - r.target_pulse)) <= 1e-5


def test_zero_input_report(schedule, atomic):
    fam = writing_pulse(atomic, 0.0)
    r = run_protocol(schedule, compose_input(fam, [0, 0, 0, 0]))
    assert r.leakage == 0 and r.retrieval_fidelity == 0 and r.efficiency == 0
    assert np.all(r.stored_coefficients == 0) and np.all(r.retrieved_pulse == 0)


def test_buffer_input_rejected(schedule, atomic):
    fam = writing_pulse(atomic, 0.0)
    with pytest.raises(UnsupportedCoefficients):
        run_protocol(schedule, compose_input(fam, [1, 0, 0, 0]))


def test_node_frame_input_is_accepted(schedule, atomic):
    s = reference_frame() @ np.array([0, 0, 0.6, 0.8j])
    r = run_protocol(schedule, compose_input(writing_pulse(atomic, 0.0), s))
    assert np.max(np.abs(r.stored_coefficients - [0.6, 0.8j])) <= 1e-3


def test_coherent_protocol(schedule, atomic):
    fam = writing_pulse(atomic.transformed(reference_frame()), 0.0)
    alpha = np.array([0, 0, 1.0, 1j])
    r = run_protocol(schedule, compose_input(fam, alpha, "coherent"))
    assert np.max(np.abs(r.stored_coefficients - alpha[2:])) <= 1e-6
    assert r.retrieval_fidelity >= 1 - 1e-6


def test_storage_decay_properties(atomic_store):
    dec = df_decompose(atomic_store)
    mem = np.array([0, 0, 0.3 - 0.1j, 0.7j])
    assert np.array_equal(storage_decay(atomic_store, mem, 123.4), mem)
    x = np.array([0.5, -0.2j, 0.1, 0.3])
    assert np.array_equal(storage_decay(atomic_store, x, 0.0), x)
    buf = np.array([1.0, 1.0j, 0, 0])
    late = storage_decay(atomic_store, buf, 60.0, dec)
    bound = np.exp(np.max(np.linalg.eigvals(dec.a_buffer).real) * 60.0) * 10
    assert np.linalg.norm(late) <= bound


def test_storage_needs_df_form():
    sys = build_system([[0, 0], [0, 1.0]], [[1.0, 0]])
    with pytest.raises(BlockStructureViolation):
        storage_decay(sys, [1, 0], 1.0)


def test_early_switch_at_schedule_time(schedule, matched_signal):
    res = early_switch_experiment(schedule, matched_signal, 0.0)
    assert np.max(np.abs(res.amplitudes - [0, 0, 1 / np.sqrt(2), 1 / np.sqrt(2)])) <= 1e-3
    assert res.vacuum_weight <= 1e-3


def test_early_switch_before_start(schedule, matched_signal):
    lo = matched_signal.family.support_window()[0]
    res = early_switch_experiment(schedule, matched_signal, lo - 1.0)
    assert np.all(res.amplitudes == 0)
    assert res.vacuum_weight == pytest.approx(1.0)


def test_early_switch_after_schedule_rejected(schedule, matched_signal):
    with pytest.raises(ScheduleInvalid):
        early_switch_experiment(schedule, matched_signal, 0.5)


def test_early_switch_memory_populations(schedule, matched_signal):
    # at kappa t / 2 = -1 the dark-mode populations are about 0.52 and 0.41
    res = early_switch_experiment(schedule, matched_signal, -1.0)
    assert res.populations[2] == pytest.approx(0.52, abs=0.02)
    assert res.populations[3] == pytest.approx(0.41, abs=0.02)
    rho = res.memory_density_matrix()
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)
    assert res.vacuum_weight == pytest.approx(1 - res.populations[2] - res.populations[3], abs=1e-12)


def test_leakage_shrinks_toward_switch(schedule, matched_signal):
    lo = -20.0
    leak = []
    for ts in np.linspace(lo / 2, 0.0, 6):
        res = early_switch_experiment(schedule, matched_signal, ts, h=0.01, t_start=-80.0)
        leak.append(res.vacuum_weight)
    assert all(b <= a + 1e-9 for a, b in zip(leak, leak[1:]))


def test_early_switch_protocol_lowers_fidelity(schedule, matched_signal):
    r = run_protocol(schedule, matched_signal, h=0.01, t_switch=-1.0)
    assert 0.5 < r.retrieval_fidelity < 0.95
