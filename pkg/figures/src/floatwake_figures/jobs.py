"""Figure jobs: validate simulation outputs and render plots.

Every job consumes only the documented CSV/JSON files written by the
simulation CLI; rendering is read-only over its inputs and re-rendering
produces the same image. Expected input file names per figure:

    fig1  flowfield.csv, manifest.json
    fig3  frf.csv
    fig4  frf.csv
    fig5  sweep_fixed.csv, sweep_floating.csv, sweep_summary.json
    fig6  empc_trace.csv
    fig7  empc_trace.csv
    fig8  empc_trace.csv, empc_summary.json
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class FigureInputError(ValueError):
    pass


INPUT_FILES = {
    "fig1": ("flowfield.csv", "manifest.json"),
    "fig3": ("frf.csv",),
    "fig4": ("frf.csv",),
    "fig5": ("sweep_fixed.csv", "sweep_floating.csv", "sweep_summary.json"),
    "fig6": ("empc_trace.csv",),
    "fig7": ("empc_trace.csv",),
    "fig8": ("empc_trace.csv", "empc_summary.json"),
}

FIGURE_IDS = tuple(INPUT_FILES)


@dataclass(frozen=True)
class FigureJob:
    figure_id: str
    inputs: dict
    output: Path


def default_job(figure_id: str, in_dir, out_dir) -> FigureJob:
    """Job with the documented file names resolved inside in_dir."""
    if figure_id not in INPUT_FILES:
        raise FigureInputError(f"unknown figure id {figure_id!r}")
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    inputs = {name: in_dir / name for name in INPUT_FILES[figure_id]}
    return FigureJob(figure_id=figure_id, inputs=inputs,
                     output=out_dir / f"{figure_id}.png")


def read_csv(path: Path) -> dict:
    """Load a headered CSV into named columns (floats where possible)."""
    path = Path(path)
    if not path.exists():
        raise FigureInputError(f"input file missing: {path}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if len(lines) < 2:
        raise FigureInputError(f"{path.name} has no data rows")
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    cols = {}
    for i, name in enumerate(header):
        values = [row[i] for row in rows]
        try:
            cols[name] = np.array([float(v) for v in values])
        except ValueError:
            cols[name] = np.array(values)
    return cols


def require_columns(cols: dict, needed, source: str):
    for name in needed:
        if name not in cols:
            raise FigureInputError(f"{source} is missing column {name!r}")


def read_json(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FigureInputError(f"input file missing: {path}")
    return json.loads(path.read_text())


# ---------------------------------------------------------------------------
# builders, one per figure
# ---------------------------------------------------------------------------

def build_fig1(job: FigureJob):
    cols = read_csv(job.inputs["flowfield.csv"])
    require_columns(cols, ("x_m", "y_m", "gamma_m2s"), "flowfield.csv")
    manifest = read_json(job.inputs["manifest.json"])
    config = manifest.get("config", {})
    diameter = float(config.get("rotor_diameter_m", 1.0))
    spacing = float(config.get("downstream_spacing_m", 5.0 * diameter))

    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.scatter(cols["x_m"] / diameter, cols["y_m"] / diameter, s=6, c="k")
    for x_turbine, label in ((0.0, "turbine 0"), (spacing / diameter,
                                                  "turbine 1")):
        ax.plot([x_turbine, x_turbine], [-0.5, 0.5], lw=3, label=label)
    ax.set_xlabel("x / D")
    ax.set_ylabel("y / D")
    ax.set_title("Shed vortex points at hub height")
    ax.legend(loc="upper right", fontsize=8)
    return fig


def _frf_channels(cols, output: str, dofs_list):
    channels = {}
    for dofs in dofs_list:
        name = f"induction_to_{output}[{dofs}]"
        mask = cols["channel"] == name
        if not np.any(mask):
            raise FigureInputError(f"frf.csv is missing channel {name!r}")
        channels[dofs] = (cols["f_hz"][mask], cols["mag"][mask])
    return channels


def build_fig3(job: FigureJob):
    cols = read_csv(job.inputs["frf.csv"])
    require_columns(cols, ("f_hz", "mag", "phase_rad", "channel"), "frf.csv")
    channels = _frf_channels(cols, "nacelle_x", ("both", "pitch", "surge"))
    fig, ax = plt.subplots(figsize=(6, 4))
    for dofs, (f, mag) in channels.items():
        ax.loglog(f, mag, label=f"platform: {dofs}")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("|nacelle response| [m]")
    ax.set_title("Induction to nacelle displacement")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    return fig


def build_fig4(job: FigureJob):
    cols = read_csv(job.inputs["frf.csv"])
    require_columns(cols, ("f_hz", "mag", "phase_rad", "channel"), "frf.csv")
    channels = _frf_channels(cols, "thrust", ("both", "none"))
    labels = {"both": "floating", "none": "bottom-fixed"}
    fig, ax = plt.subplots(figsize=(6, 4))
    for dofs, (f, mag) in channels.items():
        ax.loglog(f, mag, label=labels[dofs])
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("|thrust response| [N]")
    ax.set_title("Induction to thrust")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    return fig


def build_fig5(job: FigureJob):
    fixed = read_csv(job.inputs["sweep_fixed.csv"])
    floating = read_csv(job.inputs["sweep_floating.csv"])
    for cols, name in ((fixed, "sweep_fixed.csv"),
                       (floating, "sweep_floating.csv")):
        require_columns(cols, ("f_hz", "st", "mean_power_w",
                               "converged_flag"), name)
    summary = read_json(job.inputs["sweep_summary.json"])
    static_w = float(summary["static_power_w"])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(fixed["f_hz"], fixed["mean_power_w"] / 1e6, "o-",
            label="bottom-fixed")
    ax.plot(floating["f_hz"], floating["mean_power_w"] / 1e6, "s-",
            label="floating")
    ax.axhline(static_w / 1e6, color="k", ls="--", label="static optimum")
    ax.set_xlabel("excitation frequency [Hz]")
    ax.set_ylabel("mean total power [MW]")
    ax.set_title("Quasi-steady power under sinusoidal induction")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return fig


_TRACE_COLUMNS = ("k", "t_s", "a0_implemented", "power_t0_W", "power_t1_W",
                  "cost_before", "cost_after", "nacelle_x_m", "phi_rad",
                  "x_m")


def build_fig6(job: FigureJob):
    cols = read_csv(job.inputs["empc_trace.csv"])
    require_columns(cols, _TRACE_COLUMNS, "empc_trace.csv")
    t = cols["t_s"]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(t, cols["a0_implemented"], "k")
    ax1.set_ylabel("induction a0")
    ax1.grid(True, alpha=0.3)
    total = (cols["power_t0_W"] + cols["power_t1_W"]) / 1e6
    ax2.plot(t, cols["power_t0_W"] / 1e6, label="turbine 0")
    ax2.plot(t, cols["power_t1_W"] / 1e6, label="turbine 1")
    ax2.plot(t, total, "k", label="total")
    ax2.set_xlabel("time [s]")
    ax2.set_ylabel("power [MW]")
    ax2.legend(fontsize=8)
    ax2.grid(True, alpha=0.3)
    fig.suptitle("Receding-horizon induction control")
    return fig


def build_fig7(job: FigureJob):
    cols = read_csv(job.inputs["empc_trace.csv"])
    require_columns(cols, _TRACE_COLUMNS, "empc_trace.csv")
    t = cols["t_s"]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(t, cols["phi_rad"] * 1e3, "k")
    ax1.set_ylabel("pitch [mrad]")
    ax1.grid(True, alpha=0.3)
    ax2.plot(t, cols["x_m"], label="surge")
    ax2.plot(t, cols["nacelle_x_m"], label="nacelle")
    ax2.set_xlabel("time [s]")
    ax2.set_ylabel("displacement [m]")
    ax2.legend(fontsize=8)
    ax2.grid(True, alpha=0.3)
    fig.suptitle("Platform response under optimised induction")
    return fig


def build_fig8(job: FigureJob):
    cols = read_csv(job.inputs["empc_trace.csv"])
    require_columns(cols, _TRACE_COLUMNS, "empc_trace.csv")
    summary = read_json(job.inputs["empc_summary.json"])
    a = cols["a0_implemented"]
    t = cols["t_s"]
    if len(a) < 2:
        raise FigureInputError("empc_trace.csv is too short for a spectrum")
    dt = float(t[1] - t[0])
    spec = np.abs(np.fft.rfft(a - a.mean()))
    freqs = np.fft.rfftfreq(len(a), dt)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(freqs[1:], np.maximum(spec[1:], 1e-12), "k")
    f0 = summary.get("dominant_frequency_hz")
    if f0 is not None:
        ax.axvline(float(f0), color="r", ls="--",
                   label=f"dominant {float(f0):.4f} Hz")
        ax.legend(fontsize=8)
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("|a0 spectrum|")
    ax.set_title("Frequency content of the implemented induction")
    ax.grid(True, alpha=0.3)
    return fig


_BUILDERS = {
    "fig1": build_fig1,
    "fig3": build_fig3,
    "fig4": build_fig4,
    "fig5": build_fig5,
    "fig6": build_fig6,
    "fig7": build_fig7,
    "fig8": build_fig8,
}


def render(job: FigureJob) -> Path:
    """Validate inputs, build the figure and write the image file."""
    builder = _BUILDERS.get(job.figure_id)
    if builder is None:
        raise FigureInputError(f"unknown figure id {job.figure_id!r}")
    fig = builder(job)
    try:
        job.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(job.output, dpi=150,
                    metadata={"Software": "floatwake-figures"})
    finally:
        plt.close(fig)
    return job.output
