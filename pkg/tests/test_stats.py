import numpy as np
import pytest

from qmemnet.errors import ModelError, WindowTooSmall
from qmemnet.presets import reference_frame
from qmemnet.pulses import compose_input, writing_pulse
from qmemnet.stats import (
    evolve_coherent_stats,
    evolve_photon_stats,
    frame_photon_matrix,
    lyapunov_closed_form,
)

from conftest import unit_vector


def test_first_pulse_gives_first_mode(atomic):
    sig = compose_input(writing_pulse(atomic, 0.0), [1, 0, 0, 0])
    n = lyapunov_closed_form(atomic, sig)
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    assert np.max(np.abs(n - expected)) <= 1e-6


def test_matched_photon_matrix_is_rank_one(atomic, matched_signal):
    s = reference_frame() @ matched_signal.coefficients
    st = evolve_photon_stats(atomic, matched_signal, h=0.01)
    assert np.max(np.abs(st.final - np.outer(s.conj(), s))) <= 1e-4
    assert np.trace(st.final).real == pytest.approx(1.0, abs=1e-4)
    assert st.hermitian_drift <= 1e-10


def test_photon_matrix_is_outer_product_of_a10(atomic, matched_signal):
    st = evolve_photon_stats(atomic, matched_signal, (-40.0, 0.0), 0.01)
    outer = np.einsum("ti,tj->tij", st.a10, st.a10.conj())
    assert np.max(np.abs(st.n_matrix - outer)) <= 1e-8


def test_oracle_equivalence(suite):
    rng = np.random.default_rng(21)
    for sys in suite:
        sig = compose_input(writing_pulse(sys, 0.0), unit_vector(sys.n, rng))
        st = evolve_photon_stats(sys, sig, h=0.01)
        closed = lyapunov_closed_form(sys, sig, h=0.01)
        assert np.linalg.norm(st.final - closed) <= 1e-5
        assert st.hermitian_drift <= 1e-10


def test_frame_change(atomic, matched_signal):
    st = evolve_photon_stats(atomic, matched_signal, (-40.0, 0.0), 0.01)
    u = reference_frame()
    primed = st.mean_photon_numbers(u)[-1]
    direct = np.real(np.diag(u.T @ st.final @ u.conj()))
    assert np.allclose(primed, direct)
    assert np.allclose(frame_photon_matrix(st.final, None), st.final)
    # photon numbers are squared amplitudes for a one-photon state
    assert np.allclose(primed, np.abs(st.amplitudes(u)[-1]) ** 2, rtol=0, atol=1e-8)


def test_lyapunov_rejects_short_window(atomic, matched_signal):
    with pytest.raises(WindowTooSmall):
        lyapunov_closed_form(atomic, matched_signal, window=(-10.0, 0.0))


def test_kind_checks(atomic, matched_signal):
    with pytest.raises(ModelError):
        evolve_coherent_stats(atomic, matched_signal)
    coh = compose_input(matched_signal.family, [0, 0, 1, 1j], "coherent")
    with pytest.raises(ModelError):
        evolve_photon_stats(atomic, coh)


def test_coherent_mean_reaches_alpha(atomic):
    u = reference_frame()
    fam = writing_pulse(atomic.transformed(u), 0.0)
    alpha = np.array([0, 0, 1, 1j])
    cs = evolve_coherent_stats(atomic, compose_input(fam, alpha, "coherent"))
    assert np.max(np.abs(cs.mean_in_frame(u)[-1] - alpha)) <= 1e-6
    assert np.max(np.abs(cs.cov)) <= 1e-10
    assert np.max(np.abs(cs.output)) <= 1e-6


def test_zero_coherent_input(atomic):
    fam = writing_pulse(atomic, 0.0)
    cs = evolve_coherent_stats(atomic, compose_input(fam, [0, 0, 0, 0], "coherent"), (-5.0, 0.0), 0.01)
    assert np.all(cs.mean == 0) and np.all(cs.cov == 0)


def test_nonzero_covariance_decays(atomic):
    fam = writing_pulse(atomic, 0.0)
    v0 = np.eye(4)
    cs = evolve_coherent_stats(atomic, compose_input(fam, [0, 0, 0, 0], "coherent"), (-60.0, 0.0), 0.01, v0=v0)
    assert np.linalg.norm(cs.cov[-1]) < 0.1 * np.linalg.norm(v0)
