"""Command-line entry point: ``qmemnet <command> [--config PATH] ...``.

Exit codes: 0 success, 1 a checked threshold was missed, 2 configuration or
model error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, active_params, load_config
from .darkstate import dark_state_coherent, dark_state_single_photon
from .errors import BlockStructureViolation, ConfigError, ModelError, NumericalError
from .integrate import uniform_grid
from .iosim import reflection_coefficient, simulate_io, single_mode_closed_form, zero_output_check
from .linsys import df_decompose, is_hurwitz, transmission_zeros
from .output import complex_columns, dump_json, write_table
from .presets import (
    AtomicNetworkParams,
    active_pulse_norms,
    active_transfer_amplitude,
    active_transfer_ode,
    build_atomic_network,
    build_single_mode,
    reference_frame,
)
from .protocol import StageSchedule, early_switch_experiment, run_protocol
from .pulses import (
    COHERENT,
    QuadratureSpec,
    compose_input,
    default_step,
    gramian,
    reading_pulse,
    writing_pulse,
)
from .stats import evolve_coherent_stats, evolve_photon_stats

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
OUT_ENV = "QMEMNET_OUT"

# reference values for the reproduce targets
FIG5_T0 = -40.0
EARLY_SWITCH_TIME = -1.0
EARLY_SWITCH_REFERENCE = (0.1, 0.1, 0.52, 0.4)
EARLY_SWITCH_TOL = 0.02


class Context:
    """Resolved command-line options shared by all commands."""

    def __init__(self, args):
        self.args = args
        self.cfg: RunConfig | None = load_config(args.config) if getattr(args, "config", None) else None
        out = os.environ.get(OUT_ENV) or args.out
        if out is None and self.cfg is not None:
            out = self.cfg.outputs.get("directory")
        self.out = Path(out or "out")
        self.fmt = args.format
        self.frame_name = args.frame

    def require_config(self) -> RunConfig:
        if self.cfg is None:
            raise ConfigError(f"'{self.args.command}' needs --config")
        return self.cfg

    def step(self, sys) -> float:
        if self.args.step is not None:
            if self.args.step <= 0:
                raise ConfigError("--step must be positive")
            return self.args.step
        if self.cfg is not None and self.cfg.numerics.h is not None:
            return self.cfg.numerics.h
        return default_step(sys)

    def table(self, name: str, columns: dict) -> str:
        self.out.mkdir(parents=True, exist_ok=True)
        return str(write_table(self.out / name, columns, self.fmt))

    def report(self, name: str, payload: dict) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        text = dump_json(payload)
        (self.out / f"{name}.json").write_text(text + "\n")
        print(text)


def _frame(ctx: Context, cfg: RunConfig, n: int) -> np.ndarray:
    if ctx.frame_name == "primed":
        return cfg.primed_frame()
    return np.eye(n, dtype=complex)


def _times(cfg: RunConfig):
    if cfg.schedule is None:
        return 0.0, 0.0
    return cfg.schedule.t1, cfg.schedule.t2


def _signal(cfg: RunConfig, write_sys, t1: float, required: bool = True):
    """Input composed on the writing family, in the basis named by ``input.frame``."""
    coeffs = cfg.input.coefficients
    if coeffs is None:
        if required:
            raise ConfigError("input.coefficients: required for this command")
        return None
    if len(coeffs) != write_sys.n:
        raise ConfigError(f"input.coefficients: expected {write_sys.n} entries, got {len(coeffs)}")
    sys = write_sys.transformed(cfg.primed_frame()) if cfg.input.frame == "primed" else write_sys
    return compose_input(writing_pulse(sys, t1), coeffs, cfg.input.kind)


def _window(cfg: RunConfig, signal) -> tuple[float, float]:
    lo, hi = signal.family.support_window(cfg.numerics.truncation_tol)
    if cfg.numerics.t_start is not None:
        lo = cfg.numerics.t_start
    return lo, hi


def cmd_analyze(ctx: Context) -> int:
    cfg = ctx.require_config()
    if cfg.system.preset == "active-opo":
        p = active_params(cfg.system)
        check = active_transfer_ode(p)
        n1, n2 = active_pulse_norms(p)
        ctx.report("analyze", {
            "preset": "active-opo",
            "transfer_amplitude": active_transfer_amplitude(p),
            "ode_amplitude": check.amplitude,
            "xi1_norm2": n1,
            "xi2_norm2": n2,
        })
        return EXIT_OK
    sys = cfg.system.build()
    report = {
        "n": sys.n,
        "hurwitz": is_hurwitz(sys),
        "spectral_abscissa": sys.spectral_abscissa(),
        "eigenvalues": sorted(sys.eigenvalues(), key=lambda z: (z.real, z.imag)),
        "zeros": transmission_zeros(sys),
    }
    try:
        dec = df_decompose(sys)
        report.update(memory_dim=dec.memory_dim, buffer_dim=dec.buffer_dim, block_residual=dec.block_residual)
    except BlockStructureViolation as exc:
        report.update(memory_dim=None, buffer_dim=None, block_residual=exc.residual)
    ctx.report("analyze", report)
    return EXIT_OK


def _pulse_columns(times, values) -> dict:
    cols = {"t": times}
    for k in range(values.shape[1]):
        cols[f"abs{k + 1}"] = np.abs(values[:, k])
    cols.update(complex_columns("nu", values))
    return cols


def cmd_synthesize(ctx: Context) -> int:
    cfg = ctx.require_config()
    write_sys = cfg.system.build()
    frame = _frame(ctx, cfg, write_sys.n)
    sys = write_sys.transformed(frame)
    t1, t2 = _times(cfg)
    h = ctx.step(write_sys)
    tol = cfg.numerics.truncation_tol
    files = {}
    residuals = {}
    for name, fam in (("writing", writing_pulse(sys, t1)), ("reading", reading_pulse(sys, t2))):
        lo, hi = fam.support_window(tol)
        times, _ = uniform_grid(lo, hi, h)
        files[name] = ctx.table(f"{name}_pulses", _pulse_columns(times, fam.sample(times)))
        g = gramian(fam, QuadratureSpec(lo, hi, h, tail_tol=tol**2 * 10))
        residuals[name] = float(np.max(np.abs(g - np.eye(sys.n))))
    signal = _signal(cfg, write_sys, t1, required=False)
    if signal is not None:
        lo, hi = signal.family.support_window(tol)
        times, _ = uniform_grid(lo, hi, h)
        cols = {"t": times}
        cols.update(complex_columns("xi", signal.sample(times)))
        files["input"] = ctx.table("input_pulse", cols)
        coeffs = signal.coefficients
        node_coeffs = cfg.primed_frame() @ coeffs if cfg.input.frame == "primed" else coeffs
        target = reading_pulse(write_sys, t2)
        rlo, rhi = target.support_window(tol)
        rtimes, _ = uniform_grid(rlo, rhi, h)
        cols = {"t": rtimes}
        cols.update(complex_columns("f", target.sample(rtimes) @ node_coeffs))
        files["target"] = ctx.table("target_pulse", cols)
    ctx.report("synthesize", {"frame": ctx.frame_name, "gramian_residual": residuals, "files": files})
    return EXIT_OK


def cmd_simulate(ctx: Context) -> int:
    cfg = ctx.require_config()
    write_sys = cfg.system.build()
    t1, _ = _times(cfg)
    signal = _signal(cfg, write_sys, t1)
    frame = _frame(ctx, cfg, write_sys.n)
    window = _window(cfg, signal)
    h = ctx.step(write_sys)
    traj = simulate_io(write_sys, signal, window, h)
    zero = zero_output_check(traj, t1)
    files = {}
    io_cols = {"t": traj.times}
    io_cols.update(complex_columns("in", traj.input))
    io_cols.update(complex_columns("out", traj.output))
    files["io"] = ctx.table("io_trajectory", io_cols)
    summary = {
        "kind": signal.kind,
        "frame": ctx.frame_name,
        "window": list(window),
        "step": traj.h,
        "zero_output_max": zero.max_abs,
        "energy_relative_error": traj.relative_energy_error(),
    }
    if signal.kind == COHERENT:
        cs = evolve_coherent_stats(write_sys, signal, window, h)
        mean = cs.mean_in_frame(frame)
        cols = {"t": cs.times}
        cols.update(complex_columns("m", mean))
        files["coherent"] = ctx.table("coherent_mean", cols)
        summary["mean_final"] = mean[-1]
        summary["covariance_max"] = float(np.max(np.abs(cs.cov)))
    else:
        st = evolve_photon_stats(write_sys, signal, window, h)
        nums = st.mean_photon_numbers(frame)
        a10 = st.a10 @ frame if frame is not None else st.a10
        cols = {"t": st.times}
        for k in range(nums.shape[1]):
            cols[f"n{k + 1}"] = nums[:, k]
        cols["trace"] = nums.sum(axis=1)
        cols.update(complex_columns("a10_", a10))
        files["photon_numbers"] = ctx.table("photon_numbers", cols)
        summary["photon_numbers_final"] = nums[-1]
        summary["trace_final"] = float(nums[-1].sum())
        summary["hermitian_drift"] = st.hermitian_drift
    summary["files"] = files
    ctx.report("simulate", summary)
    return EXIT_OK


def _schedule(cfg: RunConfig) -> StageSchedule:
    if cfg.schedule is None:
        raise ConfigError("schedule: section required for this command")
    write_sys = cfg.system.build()
    return StageSchedule(
        write_sys, cfg.store_system(), write_sys, cfg.schedule.t1, cfg.schedule.t2, frame=cfg.primed_frame()
    )


def cmd_protocol(ctx: Context) -> int:
    cfg = ctx.require_config()
    sched = _schedule(cfg)
    signal = _signal(cfg, sched.write_sys, sched.t1)
    h = ctx.step(sched.write_sys)
    t_switch = cfg.schedule.t_switch
    report = run_protocol(sched, signal, h, cfg.numerics.t_start, t_switch)
    threshold = ctx.args.threshold if ctx.args.threshold is not None else cfg.numerics.fidelity_threshold
    summary = report.summary()
    summary["threshold"] = threshold
    summary["passed"] = report.retrieval_fidelity >= threshold
    if t_switch is not None and signal.kind != COHERENT:
        es = early_switch_experiment(sched, signal, t_switch, h, cfg.numerics.t_start)
        summary["early_switch"] = {
            "t_switch": es.t_switch,
            "amplitudes": es.amplitudes,
            "populations": es.populations,
            "vacuum_weight": es.vacuum_weight,
        }
    cols = {"t": report.retrieved_times}
    cols.update(complex_columns("out", report.retrieved_pulse))
    cols.update(complex_columns("target", report.target_pulse))
    files = {"retrieved": ctx.table("retrieved_pulse", cols)}
    if report.write_times is not None:
        frame = _frame(ctx, cfg, sched.n)
        wcols = {"t": report.write_times}
        wcols.update(complex_columns("amp", report.write_amplitudes @ frame.conj()))
        files["write"] = ctx.table("write_stage", wcols)
    summary["files"] = files
    ctx.report("protocol", summary)
    return EXIT_OK if summary["passed"] else EXIT_THRESHOLD


def _fig5_setup(h_override=None):
    p = AtomicNetworkParams(kappa=2.0, g=1.0, delta=1.0)
    sys = build_atomic_network(p)
    frame = reference_frame()
    fam = writing_pulse(sys.transformed(frame), 0.0)
    signal = compose_input(fam, [0, 0, 1 / np.sqrt(2), 1 / np.sqrt(2)])
    return sys, frame, fam, signal


def reproduce_fig5(ctx: Context) -> int:
    sys, frame, fam, signal = _fig5_setup()
    h = ctx.step(sys)
    window = (FIG5_T0, 0.0)
    times, _ = uniform_grid(*window, h)
    nu = fam.sample(times)
    cols = {"t": times}
    for k in range(nu.shape[1]):
        cols[f"abs_nu{k + 1}"] = np.abs(nu[:, k])
    files = {"fig5a": ctx.table("fig5a_pulses", cols)}
    st = evolve_photon_stats(sys, signal, window, h)
    nums = st.mean_photon_numbers(frame if ctx.frame_name == "primed" else None)
    cols = {"t": st.times}
    for k in range(nums.shape[1]):
        cols[f"n{k + 1}"] = nums[:, k]
    cols["trace"] = nums.sum(axis=1)
    files["fig5b"] = ctx.table("fig5b_photon_numbers", cols)
    final = st.mean_photon_numbers(frame)[-1]
    passed = bool(abs(final[2] - 0.5) <= 1e-3 and abs(final[3] - 0.5) <= 1e-3 and max(final[:2]) <= 1e-3)
    ctx.report("fig5", {"photon_numbers_primed_t1": final, "passed": passed, "files": files})
    return EXIT_OK if passed else EXIT_THRESHOLD


def reproduce_single_mode(ctx: Context) -> int:
    kappa = 2.0
    sys = build_single_mode(kappa)
    h = ctx.step(sys)
    out = {}
    files = {}
    for label, gamma in (("matched", 2.0), ("mismatched", 1.0)):
        lo = -40.0 / gamma

        def pulse(t, g=gamma):
            return np.where(t <= 0, np.sqrt(g) * np.exp(g * np.minimum(t, 0) / 2), 0.0)

        traj = simulate_io(sys, pulse, (lo, 20.0), h, breaks=[0.0])
        exact = single_mode_closed_form(kappa, gamma, traj.times).xi_tilde
        cols = {"t": traj.times}
        cols.update(complex_columns("in", traj.input))
        cols.update(complex_columns("out", traj.output))
        cols["out_exact"] = exact
        files[label] = ctx.table(f"single_mode_{label}", cols)
        z = zero_output_check(traj, 0.0)
        out[label] = {
            "gamma": gamma,
            "max_output_before_switch": z.max_abs,
            "relative_to_input": z.max_abs / float(np.max(np.abs(traj.input))),
            "reflection_fit": reflection_coefficient(traj, gamma, kappa=kappa).real,
            "reflection_fit_raw": reflection_coefficient(traj, gamma).real,
            "expected_reflection": (kappa - gamma) / (kappa + gamma),
        }
    passed = bool(out["matched"]["relative_to_input"] <= 1e-6 and abs(out["mismatched"]["reflection_fit"] - 1 / 3) <= 1e-3)
    ctx.report("single_mode", {"kappa": kappa, "runs": out, "passed": passed, "files": files})
    return EXIT_OK if passed else EXIT_THRESHOLD


def reproduce_early_switch(ctx: Context) -> int:
    sys, frame, fam, signal = _fig5_setup()
    store = build_atomic_network(AtomicNetworkParams(delta=0.0))
    sched = StageSchedule(sys, store, sys, 0.0, 0.0, frame=frame)
    h = ctx.step(sys)
    res = early_switch_experiment(sched, signal, EARLY_SWITCH_TIME, h)
    amps = np.abs(res.amplitudes)
    dev = float(np.max(np.abs(amps - np.array(EARLY_SWITCH_REFERENCE))))
    passed = dev <= EARLY_SWITCH_TOL
    ctx.report("early_switch", {
        "t_switch": EARLY_SWITCH_TIME,
        "amplitudes": res.amplitudes,
        "abs_amplitudes": amps,
        "populations": res.populations,
        "memory_density_matrix": res.memory_density_matrix(),
        "reference": EARLY_SWITCH_REFERENCE,
        "max_deviation": dev,
        "passed": passed,
    })
    return EXIT_OK if passed else EXIT_THRESHOLD


def reproduce_darkstate(ctx: Context) -> int:
    kappa = 2.0
    h = ctx.args.step or 1e-3
    runs = {
        "coherent": dark_state_coherent(kappa, 1.0, h=h),
        "single_photon": dark_state_single_photon(kappa, 1.0, h=h),
        "coherent_constant": dark_state_coherent(kappa, 1.0, h=h, pulse=lambda t: np.ones_like(t)),
        "single_photon_constant": dark_state_single_photon(kappa, 1.0, h=h, pulse=lambda t: np.ones_like(t)),
    }
    files = {}
    ratios = {}
    for name, run in runs.items():
        cols = {"t": run.grid, "intensity": run.intensity}
        if run.input_kind == COHERENT:
            cols.update(complex_columns("beta", run.state))
        else:
            cols["x"] = run.state[:, 0].real
            cols.update(complex_columns("z", run.state[:, 1]))
        files[name] = ctx.table(f"darkstate_{name}", cols)
        ratios[name] = run.max_intensity() / run.peak_drive
    passed = bool(
        ratios["coherent"] <= 1e-8
        and ratios["single_photon"] <= 1e-8
        and ratios["coherent_constant"] >= 1e-5
        and ratios["single_photon_constant"] >= 1e-5
    )
    ctx.report("darkstate", {"kappa": kappa, "intensity_over_peak": ratios, "passed": passed, "files": files})
    return EXIT_OK if passed else EXIT_THRESHOLD


REPRODUCE = {
    "fig5": reproduce_fig5,
    "single-mode": reproduce_single_mode,
    "early-switch": reproduce_early_switch,
    "darkstate": reproduce_darkstate,
}


def cmd_reproduce(ctx: Context) -> int:
    return REPRODUCE[ctx.args.target](ctx)


COMMANDS = {
    "analyze": cmd_analyze,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "protocol": cmd_protocol,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", help=f"output directory (env {OUT_ENV} takes precedence)")
    common.add_argument("--step", type=float, help="integration step (default 0.01 / spectral radius)")
    common.add_argument("--frame", choices=("node", "primed"), default="primed",
                        help="mode basis for reported amplitudes and photon numbers")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")

    parser = argparse.ArgumentParser(prog="qmemnet", description="Quantum memory networks: pulses, simulation, protocol runs")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="stability, zeros and memory subspace")
    sub.add_parser("synthesize", parents=[common], help="writing/reading pulse tables")
    sub.add_parser("simulate", parents=[common], help="writing-stage trajectories")
    p = sub.add_parser("protocol", parents=[common], help="full write/store/read run")
    p.add_argument("--threshold", type=float, help="fidelity threshold (default 0.999)")
    r = sub.add_parser("reproduce", parents=[common], help="regenerate reference data sets")
    r.add_argument("target", choices=sorted(REPRODUCE))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = Context(args)
        return COMMANDS[args.command](ctx)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
