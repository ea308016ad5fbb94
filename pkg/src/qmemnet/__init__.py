"""Passive linear quantum networks as quantum memories.

Optimal (zero-dynamics) pulse synthesis, input-output simulation, photon
statistics and write/store/read protocol runs.
"""
from .errors import ModelError, NumericalError, QMemNetError
from .linsys import (
    PassiveLinearSystem,
    build_system,
    controllable_subspace,
    df_decompose,
    is_hurwitz,
    random_passive_system,
    transfer_function,
    transmission_zeros,
)
from .pulses import compose_input, gramian, reading_pulse, writing_pulse
from .iosim import simulate_io, zero_output_check
from .stats import evolve_coherent_stats, evolve_photon_stats, lyapunov_closed_form
from .protocol import StageSchedule, early_switch_experiment, run_protocol, storage_decay

__version__ = "0.1.0"

__all__ = [
    "ModelError",
    "NumericalError",
    "QMemNetError",
    "PassiveLinearSystem",
    "build_system",
    "controllable_subspace",
    "df_decompose",
    "is_hurwitz",
    "random_passive_system",
    "transfer_function",
    "transmission_zeros",
    "compose_input",
    "gramian",
    "reading_pulse",
    "writing_pulse",
    "simulate_io",
    "zero_output_check",
    "evolve_coherent_stats",
    "evolve_photon_stats",
    "lyapunov_closed_form",
    "StageSchedule",
    "early_switch_experiment",
    "run_protocol",
    "storage_decay",
]
