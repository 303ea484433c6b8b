"""Command-line front end.

Subcommands bind the experiment operations to config files and CSV/JSON
outputs; every run writes a manifest next to its outputs. CSV content
is byte-reproducible for identical inputs, so floats are written with
shortest round-trip formatting and timing information stays out of the
CSVs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (AnalysisError, ChirpSpec, chirp_response,
                       chirp_signal, dominant_frequency, static_power,
                       stepped_sine_sweep, strouhal)
from .config import ConfigError, SimConfig, config_to_dict, load_config, \
    save_config, table1_config
from .coupled import (A_MAX, A_MIN, ControlSequence, discrete_platform,
                      set_bottom_fixed, spin_up)
from .empc import EmpcConfig, receding_horizon
from .objective import (ObjectiveWeights, finite_difference_gradient,
                        gradient)
from .wake import glauert_transition


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_manifest(out_dir: Path, subcommand: str, config_path,
                   cfg: SimConfig, flags: dict, started: str):
    digest = ""
    if config_path is not None:
        digest = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    write_json(out_dir / "manifest.json", {
        "subcommand": subcommand,
        "config_path": str(config_path) if config_path else None,
        "config_sha256": digest,
        "config": config_to_dict(cfg),
        "flags": flags,
        "started_utc": started,
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
    })


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _load(args) -> SimConfig:
    if args.config is None:
        return table1_config()
    return load_config(args.config)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# control signal parsing for `simulate`
# ---------------------------------------------------------------------------

def parse_control_spec(spec: str, dt: float, steps: int) -> np.ndarray:
    kind, _, rest = spec.partition(":")
    try:
        params = [float(p) for p in rest.split(",")] if rest else []
    except ValueError:
        raise ValueError(f"malformed control spec {spec!r}")
    t = np.arange(steps) * dt
    if kind == "const" and len(params) == 1:
        return np.full(steps, params[0])
    if kind == "sine" and len(params) == 3:
        mean, amp, freq = params
        return mean + amp * np.sin(2.0 * math.pi * freq * t)
    if kind == "chirp" and len(params) == 5:
        mean, amp, f0, f1, duration = params
        chirp = ChirpSpec(f_start=f0, f_end=f1, duration=duration,
                          mean=mean, amplitude=amp)
        return chirp_signal(chirp, dt, steps)
    raise ValueError(f"malformed control spec {spec!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .analysis import run_control_signal
    started = _utcnow()
    cfg = _load(args)
    if args.mode == "fixed":
        cfg = set_bottom_fixed(cfg)
    dt = cfg.numerics.dt_wake
    controls = parse_control_spec(args.control, dt, args.steps)
    if np.any(controls < A_MIN) or np.any(controls > A_MAX):
        raise ValueError("control signal leaves the admissible range")
    out = _outdir(args)
    rows, final_state = run_control_signal(
        cfg, controls, spinup_steps=args.spinup)

    ks = np.arange(len(controls))
    write_csv(out / "timeseries.csv",
              ["k", "t_s", "a0", "thrust_N", "power_t0_W", "power_t1_W",
               "nacelle_x_m", "phi_rad", "x_m"],
              zip(ks, ks * dt, rows["a0"], rows["thrust"], rows["power_t0"],
                  rows["power_t1"], rows["nacelle_x"], rows["phi"], rows["x"]))
    write_csv(out / "platform_trajectory.csv",
              ["t_s", "phi_rad", "phi_dot_rad_s", "x_m", "x_dot_m_s",
               "nacelle_x_m"],
              zip(ks * dt, rows["phi"], rows["phi_dot"], rows["x"],
                  rows["x_dot"], rows["nacelle_x"]))
    if args.export_flowfield:
        wake = final_state.wake
        frows = []
        for i in range(wake.num_points):
            frows.append((i // 2, i % 2, wake.positions[i, 0],
                          wake.positions[i, 1], wake.strengths[i]))
        write_csv(out / "flowfield.csv",
                  ["generation_index", "point_index", "x_m", "y_m",
                   "gamma_m2s"], frows)
    write_manifest(out, "simulate", args.config, cfg, {
        "control": args.control, "steps": args.steps, "mode": args.mode,
        "spinup": args.spinup, "export_flowfield": args.export_flowfield,
    }, started)
    return 0


def cmd_freqresp(args) -> int:
    started = _utcnow()
    cfg = _load(args)
    spec = ChirpSpec(f_start=args.fmin, f_end=args.fmax,
                     duration=args.duration, mean=args.mean,
                     amplitude=args.amp)
    out = _outdir(args)
    rows = []
    for dofs in args.dofs.split(","):
        frf_nac, frf_thrust, _ = chirp_response(cfg.with_dofs(dofs), spec)
        for frf, channel in ((frf_nac, f"induction_to_nacelle_x[{dofs}]"),
                             (frf_thrust, f"induction_to_thrust[{dofs}]")):
            mags, phases = frf.magnitude(), frf.phase()
            for f, mag, ph in zip(frf.frequencies, mags, phases):
                rows.append((f, mag, ph, channel))
    write_csv(out / "frf.csv", ["f_hz", "mag", "phase_rad", "channel"], rows)
    write_manifest(out, "freqresp", args.config, cfg, {
        "fmin": args.fmin, "fmax": args.fmax, "duration": args.duration,
        "mean": args.mean, "amp": args.amp, "dofs": args.dofs,
    }, started)
    return 0


def cmd_sweep(args) -> int:
    started = _utcnow()
    cfg = _load(args)
    freqs = np.linspace(args.fmin, args.fmax, args.points)
    result = stepped_sine_sweep(freqs, args.mean, args.amp, cfg,
                                mode=args.mode, workers=args.threads)
    static_cfg = set_bottom_fixed(cfg) if args.mode == "fixed" else cfg
    static_w = static_power(static_cfg, args.mean)
    out = _outdir(args)
    write_csv(out / "sweep.csv",
              ["f_hz", "st", "mean_power_w", "converged_flag"],
              zip(result.frequencies, result.strouhal, result.mean_power,
                  result.converged))
    peak = int(np.argmax(result.mean_power))
    write_json(out / "sweep_summary.json", {
        "mode": args.mode,
        "mean_induction": args.mean,
        "amplitude": args.amp,
        "static_power_w": static_w,
        "peak_f_hz": float(result.frequencies[peak]),
        "peak_strouhal": float(result.strouhal[peak]),
        "peak_power_w": float(result.mean_power[peak]),
        "gain_over_static_pct":
            100.0 * (float(result.mean_power[peak]) / static_w - 1.0),
    })
    write_manifest(out, "sweep", args.config, cfg, {
        "fmin": args.fmin, "fmax": args.fmax, "points": args.points,
        "mean": args.mean, "amp": args.amp, "mode": args.mode,
        "threads": args.threads,
    }, started)
    return 0


def cmd_empc(args) -> int:
    started = _utcnow()
    cfg = _load(args)
    disc = discrete_platform(cfg)
    weights = ObjectiveWeights.from_megawatt_scale([args.q, args.q], args.r)
    empc_cfg = EmpcConfig(horizon=args.horizon,
                          iters_per_step=args.iters,
                          total_steps=args.steps, weights=weights)
    state = spin_up(cfg, disc, args.spinup_control)
    trace = receding_horizon(state, empc_cfg, cfg, disc)

    dt = cfg.numerics.dt_wake
    out = _outdir(args)
    ks = np.arange(len(trace))
    write_csv(out / "empc_trace.csv",
              ["k", "t_s", "a0_implemented", "power_t0_W", "power_t1_W",
               "cost_before", "cost_after", "nacelle_x_m", "phi_rad", "x_m"],
              [(k, k * dt, trace.implemented[k], o.power_t0, o.power_t1,
                trace.cost_before[k], trace.cost_after[k], o.nacelle_x,
                p.phi, p.x)
               for k, o, p in zip(ks, trace.outputs, trace.platform_states)])

    tail = min(args.tail, len(trace))
    controls = trace.controls()
    tail_power = trace.total_power()[-tail:]
    try:
        f0, harmonics = dominant_frequency(controls[-tail:], dt)
    except AnalysisError:
        f0, harmonics = None, []
    static_w = static_power(cfg, 1.0 / 3.0)
    u_mag = float(np.linalg.norm(cfg.numerics.inflow_vector))
    bounds_ok = bool(np.all((controls > A_MIN) & (controls < A_MAX)))
    write_json(out / "empc_summary.json", {
        "steps": len(trace),
        "horizon": args.horizon,
        "iters_per_step": args.iters,
        "tail_steps": tail,
        "tail_mean_total_power_w": float(tail_power.mean()),
        "static_power_w": static_w,
        "gain_over_static_pct":
            100.0 * (float(tail_power.mean()) / static_w - 1.0),
        "dominant_frequency_hz": None if f0 is None else float(f0),
        "dominant_strouhal": None if f0 is None else strouhal(
            float(f0), cfg.turbine.rotor_diameter, u_mag),
        "harmonics_hz": [float(h) for h in harmonics],
        "controls_strictly_inside_bounds": bounds_ok,
        "mean_step_wall_ms": float(np.mean(trace.wall_ms)),
    })
    write_manifest(out, "empc", args.config, cfg, {
        "steps": args.steps, "horizon": args.horizon, "iters": args.iters,
        "q": args.q, "r": args.r, "tail": args.tail,
        "spinup_control": args.spinup_control,
    }, started)
    return 0


def _perturbed_instance(cfg: SimConfig, disc, horizon: int, rng):
    """Quasi-steady state with randomised wake, platform and controls."""
    from dataclasses import replace as dc_replace
    a_t = glauert_transition(cfg.turbine.ct1)
    state = spin_up(cfg, disc, 0.28, steps=cfg.numerics.num_rings + 10)
    wake = state.wake
    wake = dc_replace(
        wake,
        positions=wake.positions + rng.normal(0.0, 2.0, wake.positions.shape),
        strengths=wake.strengths + rng.normal(0.0, 3.0, wake.strengths.shape))
    platform = dc_replace(
        state.platform,
        phi=state.platform.phi + rng.normal(0.0, 0.01),
        phi_dot=state.platform.phi_dot + rng.normal(0.0, 0.002),
        x=state.platform.x + rng.normal(0.0, 3.0),
        x_dot=state.platform.x_dot + rng.normal(0.0, 0.2))
    state = dc_replace(state, wake=wake, platform=platform)
    controls = rng.uniform(0.08, 0.42, horizon)
    # keep samples away from the coefficient-law kink
    near = np.abs(controls - a_t) < 0.02
    controls[near] = a_t - 0.03
    return state, controls


def cmd_gradcheck(args) -> int:
    started = _utcnow()
    cfg = _load(args)
    disc = discrete_platform(cfg)
    weights = ObjectiveWeights.from_megawatt_scale([-1.0, -1.0], 4.7e-2)
    rng = np.random.default_rng(args.seed)
    trials = []
    worst = 0.0
    for trial in range(args.trials):
        state, controls = _perturbed_instance(cfg, disc, args.horizon, rng)
        seq = ControlSequence(controls, float(state.prev_control))
        record = gradient(state, seq, weights, cfg, disc)
        fd = finite_difference_gradient(state, seq, weights, cfg, disc,
                                        step=args.step)
        rel = np.abs(record.gradient - fd) / (np.abs(fd) + 1.0e-12)
        worst = max(worst, float(rel.max()))
        trials.append({
            "trial": trial,
            "cost": record.cost,
            "exact": [float(g) for g in record.gradient],
            "finite_difference": [float(g) for g in fd],
            "relative_error": [float(e) for e in rel],
            "max_relative_error": float(rel.max()),
        })
    out = _outdir(args)
    write_json(out / "gradcheck.json", {
        "horizon": args.horizon,
        "trials": trials,
        "fd_step": args.step,
        "tolerance": args.tol,
        "max_relative_error": worst,
        "passed": worst <= args.tol,
    })
    write_manifest(out, "gradcheck", args.config, cfg, {
        "horizon": args.horizon, "trials": args.trials, "step": args.step,
        "tol": args.tol, "seed": args.seed,
    }, started)
    print(f"gradcheck max relative error {worst:.3e} "
          f"({'PASS' if worst <= args.tol else 'FAIL'})")
    return 0 if worst <= args.tol else 1


def cmd_export_config_template(args) -> int:
    cfg = table1_config()
    out = Path(args.out)
    if out.suffix:
        out.parent.mkdir(parents=True, exist_ok=True)
        save_config(cfg, out)
    else:
        out.mkdir(parents=True, exist_ok=True)
        save_config(cfg, out / "config.yaml")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floatwake",
        description="Free-vortex wake and floating platform experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="config file (defaults to the reference turbine)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=12345,
                       help="seed for randomised checks; the simulation "
                            "pipeline itself is deterministic")

    p = sub.add_parser("simulate", help="run a scripted control signal")
    common(p)
    p.add_argument("--control", required=True,
                   help="const:A | sine:MEAN,AMP,FREQ | "
                        "chirp:MEAN,AMP,F0,F1,DURATION")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--mode", choices=["fixed", "floating"], default="floating")
    p.add_argument("--spinup", type=int, default=None)
    p.add_argument("--export-flowfield", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("freqresp", help="chirp the induction, estimate FRFs")
    common(p)
    p.add_argument("--fmin", type=float, default=0.0025)
    p.add_argument("--fmax", type=float, default=0.1)
    p.add_argument("--duration", type=float, default=30000.0)
    p.add_argument("--mean", type=float, default=0.28)
    p.add_argument("--amp", type=float, default=0.05)
    p.add_argument("--dofs", default="both,pitch,surge,none",
                   help="comma list of platform DOF configurations")
    p.set_defaults(func=cmd_freqresp)

    p = sub.add_parser("sweep", help="stepped-sine power sweep")
    common(p)
    p.add_argument("--fmin", type=float, default=0.005)
    p.add_argument("--fmax", type=float, default=0.05)
    p.add_argument("--points", type=int, default=19)
    p.add_argument("--mean", type=float, default=0.28)
    p.add_argument("--amp", type=float, default=0.05)
    p.add_argument("--mode", choices=["fixed", "floating"],
                   default="floating")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("empc", help="receding-horizon optimisation")
    common(p)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--q", type=float, default=-1.0,
                   help="output weight per turbine [1/MW]")
    p.add_argument("--r", type=float, default=4.7e-2)
    p.add_argument("--tail", type=int, default=100,
                   help="steps in the summary averaging window")
    p.add_argument("--spinup-control", type=float, default=1.0 / 3.0)
    p.set_defaults(func=cmd_empc)

    p = sub.add_parser("gradcheck",
                       help="exact gradients against finite differences")
    common(p)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--step", type=float, default=1.0e-6)
    p.add_argument("--tol", type=float, default=1.0e-5)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("export-config-template",
                       help="write the reference config file")
    p.add_argument("--out", default="config.yaml")
    p.set_defaults(func=cmd_export_config_template)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, AnalysisError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
