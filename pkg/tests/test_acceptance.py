"""Acceptance suite.

Every test prints one `[ACCEPTANCE] <criterion>: PASS|FAIL` line; run
with `pytest tests/test_acceptance.py -v -s` to see them live. The
sweep and the receding-horizon campaign are expensive and shared
between criteria through session fixtures.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

import floatwake as fw
from floatwake.analysis import (ChirpSpec, chirp_response,
                                dominant_frequency, static_power,
                                stepped_sine_sweep)
from floatwake.cli import main as cli_main
from floatwake.coupled import (A_MAX, A_MIN, ControlSequence,
                               discrete_platform, set_bottom_fixed, spin_up,
                               step_coupled)
from floatwake.empc import EmpcConfig, receding_horizon
from floatwake.objective import (ObjectiveWeights, finite_difference_gradient,
                                 gradient)
from floatwake.wake import glauert_transition, thrust_coefficient

CFG = fw.table1_config()
DISC = discrete_platform(CFG)
WEIGHTS = ObjectiveWeights.from_megawatt_scale([-1.0, -1.0], 4.7e-2)


def report(name: str, ok: bool, detail: str):
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# shared expensive campaigns
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def static_optimum():
    return static_power(CFG, 1.0 / 3.0)


@pytest.fixture(scope="session")
def sweep_results():
    freqs = np.linspace(0.005, 0.05, 19)
    return {mode: stepped_sine_sweep(freqs, 0.28, 0.05, CFG, mode=mode,
                                     workers=2)
            for mode in ("fixed", "floating")}


@pytest.fixture(scope="session")
def empc_trace():
    state = spin_up(CFG, DISC, 1.0 / 3.0)
    cfg = EmpcConfig(horizon=100, iters_per_step=50, total_steps=300,
                     weights=WEIGHTS)
    return receding_horizon(state, cfg, CFG, DISC)


def perturbed_instance(rng, horizon):
    state = spin_up(CFG, DISC, 0.28, steps=CFG.numerics.num_rings + 10)
    wake = replace(state.wake,
                   positions=state.wake.positions
                   + rng.normal(0, 2.0, state.wake.positions.shape),
                   strengths=state.wake.strengths
                   + rng.normal(0, 3.0, state.wake.strengths.shape))
    platform = replace(state.platform,
                       phi=state.platform.phi + rng.normal(0, 0.01),
                       phi_dot=state.platform.phi_dot + rng.normal(0, 0.002),
                       x=state.platform.x + rng.normal(0, 3.0),
                       x_dot=state.platform.x_dot + rng.normal(0, 0.2))
    state = replace(state, wake=wake, platform=platform)
    controls = rng.uniform(0.08, 0.42, horizon)
    a_t = glauert_transition(CFG.turbine.ct1)
    controls[np.abs(controls - a_t) < 0.02] = a_t - 0.03
    return state, controls


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_gradient_oracle():
    rng = np.random.default_rng(42)
    started = time.perf_counter()
    worst = 0.0
    for horizon in (3, 10):
        for _ in range(10):
            state, controls = perturbed_instance(rng, horizon)
            seq = ControlSequence(controls, float(state.prev_control))
            exact = gradient(state, seq, WEIGHTS, CFG, DISC).gradient
            fd = finite_difference_gradient(state, seq, WEIGHTS, CFG, DISC,
                                            step=1e-6)
            rel = np.abs(exact - fd) / (np.abs(fd) + 1e-12)
            worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - started
    report("gradient oracle",
           worst <= 1e-5 and elapsed < 60.0,
           f"20 instances, max rel err {worst:.2e}, {elapsed:.1f} s")


def test_platform_analytics():
    pitch_err = abs(DISC.f_pitch - 0.056) / 0.056
    surge_err = abs(DISC.f_surge - 0.0085) / 0.0085

    # exact discretisation against the closed-form damped oscillator
    par = CFG.platform
    worst = 0.0
    for m, c, k, y0, v0 in (
            (par.total_inertia, par.pitch_damping, par.pitch_stiffness,
             0.02, -0.001),
            (par.total_mass, par.surge_damping, par.surge_stiffness,
             5.0, 0.3)):
        from floatwake.platform import discretize_zoh
        a = np.array([[0.0, 1.0], [-k / m, -c / m]])
        ad, _ = discretize_zoh(a, np.array([0.0, 1.0 / m]),
                               CFG.numerics.dt_floater)
        wn = math.sqrt(k / m)
        zeta = c / (2.0 * math.sqrt(k * m))
        wd = wn * math.sqrt(1 - zeta * zeta)
        s = zeta * wn
        state = np.array([y0, v0])
        traj = np.empty(1000)
        for i in range(1000):
            state = ad @ state
            traj[i] = state[0]
        t = CFG.numerics.dt_floater * np.arange(1, 1001)
        ref = np.exp(-s * t) * (y0 * np.cos(wd * t)
                                + (v0 + s * y0) / wd * np.sin(wd * t))
        worst = max(worst, float(np.max(np.abs(traj - ref))
                                 / np.max(np.abs(ref))))
    report("platform analytics",
           pitch_err < 0.02 and surge_err < 0.02 and worst <= 1e-9,
           f"f_pitch {DISC.f_pitch:.4f} Hz ({100 * pitch_err:.2f}%), "
           f"f_surge {DISC.f_surge:.5f} Hz ({100 * surge_err:.2f}%), "
           f"ZOH err {worst:.2e}")


def test_frf_structure():
    spec = ChirpSpec(f_start=0.0025, f_end=0.1, duration=30000.0,
                     mean=0.28, amplitude=0.05)
    frf_nac, frf_thr_float, _ = chirp_response(CFG, spec)
    _, frf_thr_fixed, _ = chirp_response(set_bottom_fixed(CFG), spec)

    f, mag = frf_nac.frequencies, frf_nac.magnitude()
    peaks_ok, peak_detail = True, []
    for fm in (DISC.f_surge, DISC.f_pitch):
        band = (f >= 0.5 * fm) & (f <= 1.6 * fm)
        f_peak = f[band][np.argmax(mag[band])]
        peaks_ok &= abs(f_peak - fm) <= 0.2 * fm
        peak_detail.append(f"{f_peak:.4f}/{fm:.4f} Hz")

    dip_band = (f >= 0.015) & (f <= 0.03)
    dip = mag[dip_band].min()
    pitch_band = (f >= 0.8 * DISC.f_pitch) & (f <= 1.2 * DISC.f_pitch)
    depth_db = 20 * math.log10(mag[pitch_band].max() / dip)

    thrust_ok = True
    for fm in (DISC.f_surge, DISC.f_pitch):
        bf = (frf_thr_float.frequencies >= 0.9 * fm) \
            & (frf_thr_float.frequencies <= 1.1 * fm)
        bx = (frf_thr_fixed.frequencies >= 0.9 * fm) \
            & (frf_thr_fixed.frequencies <= 1.1 * fm)
        thrust_ok &= frf_thr_float.magnitude()[bf].mean() \
            < frf_thr_fixed.magnitude()[bx].mean()

    report("FRF structure",
           peaks_ok and depth_db >= 10.0 and thrust_ok,
           f"peaks {', '.join(peak_detail)}; dip depth {depth_db:.1f} dB; "
           f"floating thrust below fixed: {thrust_ok}")


def test_static_baseline(static_optimum):
    rel = static_optimum / 10.44e6 - 1.0
    report("static baseline",
           abs(rel) <= 0.07,
           f"{static_optimum / 1e6:.3f} MW vs 10.44 MW ({100 * rel:+.1f}%)")


def test_sinusoidal_sweep(sweep_results, static_optimum):
    fixed = sweep_results["fixed"]
    floating = sweep_results["floating"]
    i_fixed = int(np.argmax(fixed.mean_power))
    i_float = int(np.argmax(floating.mean_power))
    f_fixed = float(fixed.frequencies[i_fixed])
    f_float = float(floating.frequencies[i_float])
    p_fixed = float(fixed.mean_power[i_fixed])
    p_float = float(floating.mean_power[i_float])
    gain = p_fixed / static_optimum - 1.0
    ok = (0.010 <= f_fixed <= 0.018 and gain >= 0.03
          and 0.012 <= f_float <= 0.020 and p_float <= p_fixed)
    report("sinusoidal sweep", ok,
           f"fixed peak {p_fixed / 1e6:.2f} MW at {f_fixed:.3f} Hz "
           f"({100 * gain:+.1f}% vs static), floating peak "
           f"{p_float / 1e6:.2f} MW at {f_float:.3f} Hz")


def test_empc_campaign(empc_trace, sweep_results, static_optimum):
    power = empc_trace.total_power()
    controls = empc_trace.controls()
    tail = power[-100:].mean()

    gain_static = tail / static_optimum - 1.0
    sweep_max = max(float(sweep_results["fixed"].mean_power.max()),
                    float(sweep_results["floating"].mean_power.max()))
    vs_sweep = tail / sweep_max - 1.0
    # dominant frequency judged after the start-up transients
    f0, _ = dominant_frequency(controls[-200:], CFG.numerics.dt_wake)
    inside = bool(np.all((controls > A_MIN) & (controls < A_MAX)))

    ok = (gain_static >= 0.04 and vs_sweep >= -0.01
          and 0.013 <= f0 <= 0.021 and inside)
    report("EMPC campaign", ok,
           f"tail mean {tail / 1e6:.2f} MW "
           f"({100 * gain_static:+.1f}% vs static, "
           f"{100 * vs_sweep:+.1f}% vs sweep max), f0 {f0:.4f} Hz, "
           f"controls inside bounds: {inside}")


def test_wake_model_properties():
    # pair neutrality along a long coupled run
    state = spin_up(CFG, DISC, 1.0 / 3.0, steps=0)
    neutral = True
    for _ in range(300):
        state, _ = step_coupled(state, 1.0 / 3.0, CFG, DISC)
        total = abs(float(np.sum(state.wake.strengths)))
        scale = float(np.abs(state.wake.strengths).max()) or 1.0
        neutral &= total <= 1e-10 * scale

    # mirror symmetry of that same run (rotor on the x-axis)
    top, bottom = state.wake.positions[0::2], state.wake.positions[1::2]
    scale = np.abs(state.wake.positions).max()
    symmetric = (np.max(np.abs(top[:, 0] - bottom[:, 0])) <= 1e-9 * scale
                 and np.max(np.abs(top[:, 1] + bottom[:, 1])) <= 1e-9 * scale)

    # far-field decay against the unregularised law
    sigma = CFG.numerics.core_size
    r = 100.0 * sigma
    u = fw.induced_velocity(np.array([r, 0.0]),
                            fw.VortexPoint(np.zeros(2), 57.0), sigma)
    far_rel = abs(np.linalg.norm(u) - 57.0 / (2 * math.pi * r)) \
        / (57.0 / (2 * math.pi * r))

    a_t = glauert_transition(CFG.turbine.ct1)
    low = 4 * a_t / (1 - a_t)
    high = (CFG.turbine.ct1 - 4 * (math.sqrt(CFG.turbine.ct1) - 1)
            * (1 - a_t)) / (1 - a_t) ** 2
    continuity = abs(low - high)
    assert thrust_coefficient(a_t) == pytest.approx(low, rel=1e-12)

    report("wake-model properties",
           neutral and symmetric and far_rel <= 1e-6
           and continuity <= 1e-10,
           f"neutrality {neutral}, symmetry {symmetric}, far-field "
           f"{far_rel:.1e}, branch gap {continuity:.1e}")


def test_determinism(tmp_path):
    pairs = []
    for run in ("a", "b"):
        sim = tmp_path / f"sim_{run}"
        assert cli_main(["simulate", "--control", "sine:0.28,0.05,0.014",
                         "--steps", "40", "--spinup", "20",
                         "--export-flowfield", "--out", str(sim)]) == 0
        swp = tmp_path / f"sweep_{run}"
        assert cli_main(["sweep", "--fmin", "0.02", "--fmax", "0.04",
                         "--points", "2", "--mode", "fixed",
                         "--out", str(swp)]) == 0
        frf = tmp_path / f"frf_{run}"
        assert cli_main(["freqresp", "--duration", "720", "--fmin", "0.01",
                         "--fmax", "0.08", "--dofs", "both",
                         "--out", str(frf)]) == 0
        pairs.append([sim / "timeseries.csv", sim / "platform_trajectory.csv",
                      sim / "flowfield.csv", swp / "sweep.csv",
                      frf / "frf.csv"])
    identical = all(f1.read_bytes() == f2.read_bytes()
                    for f1, f2 in zip(*pairs))
    report("determinism", identical,
           f"{len(pairs[0])} CSV files byte-identical across reruns")
