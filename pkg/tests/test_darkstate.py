import numpy as np
import pytest

from qmemnet.darkstate import dark_state_coherent, dark_state_single_photon
from qmemnet.errors import NonPositiveRate, StepTooLarge
from qmemnet.iosim import simulate_io, zero_output_check
from qmemnet.presets import build_single_mode


def gaussian(t):
    return np.exp(-((np.asarray(t) + 5.0) ** 2))


def test_coherent_dark_state():
    run = dark_state_coherent(2.0, 1.0)
    assert run.max_intensity() <= 1e-10 * np.abs(run.drive[-1]) ** 2
    assert np.all(run.intensity >= -1e-12)


def test_coherent_zero_amplitude():
    run = dark_state_coherent(2.0, 0.0)
    assert np.all(run.intensity == 0)


def test_coherent_negative_control():
    run = dark_state_coherent(2.0, 1.0, pulse=lambda t: np.ones_like(t))
    assert run.max_intensity() > 1e-3


def test_single_photon_dark_state():
    run = dark_state_single_photon(2.0, 1.0)
    assert run.max_intensity() <= 1e-8 * np.abs(run.drive[-1]) ** 2


def test_single_photon_zero_amplitude():
    run = dark_state_single_photon(2.0, 0.0)
    assert np.all(run.state == 0) and np.all(run.intensity == 0)


def test_single_photon_negative_control():
    run = dark_state_single_photon(2.0, 1.0, pulse=gaussian)
    assert run.max_intensity() > 1e-8 * run.peak_drive * 1e3


def test_constraint_start_population():
    # from x(t0) = 0 the population tracks (xi^2 - xi0^2) / kappa
    kappa = 2.0
    run = dark_state_single_photon(kappa, 1.0, window=(-6.0, 0.0))
    x = run.state[:, 0].real
    xi = run.drive.real
    assert np.max(np.abs(x - (xi**2 - 1.0) / kappa)) <= 1e-8 * np.max(xi**2)


def test_population_matches_single_mode_solution():
    # unit pulse sqrt(k) exp(k t / 2) started on the dark manifold: x(t) = exp(k t)
    kappa, t0 = 2.0, -8.0
    xi0 = np.sqrt(kappa) * np.exp(kappa * t0 / 2)
    run = dark_state_single_photon(kappa, xi0, window=(t0, 0.0), initial="dark")
    assert np.max(np.abs(run.state[:, 0].real - np.exp(kappa * run.grid))) <= 1e-6


def test_equivalent_to_zero_output():
    kappa = 2.0
    run = dark_state_coherent(kappa, 1.0, window=(-10.0, 0.0), h=1e-3)
    traj = simulate_io(build_single_mode(kappa), lambda t: np.exp(kappa * (np.asarray(t) + 10.0) / 2),
                       (-10.0, 0.0), 1e-3, initial_state=[-1.0 / np.sqrt(kappa)])
    assert zero_output_check(traj, 0.0).passed
    assert np.allclose(np.abs(traj.output) ** 2, run.intensity, atol=1e-12)


def test_errors():
    with pytest.raises(NonPositiveRate):
        dark_state_coherent(0.0)
    with pytest.raises(StepTooLarge):
        dark_state_single_photon(2.0, h=0.5)
    with pytest.raises(ValueError):
        dark_state_single_photon(2.0, initial="other")
