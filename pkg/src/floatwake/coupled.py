"""Two-way, two-rate coupling of the wake and platform models.

One coupled step advances the wake by dt_wake while the platform takes
several smaller substeps under a thrust held constant. Rotor motion
feeds back into the flow twice: the relative velocity sets thrust and
shed-vortex strength, and the post-substep nacelle position sets where
the new vortex pair is released.

Every step can record a cache of its intermediate quantities; the
matching vjp function maps adjoints of the next state and of the two
power outputs back onto the previous state and the applied control.
That pair is the building block for exact rollout gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import SimConfig
from .platform import (DiscretePlatform, PlatformState, build_discrete,
                       equilibrium_state, nacelle_kinematics, pin_state,
                       step_platform)
from .wake import (WakeState, empty_wake, induced_velocity_block,
                   induced_velocity_block_vjp, power_coefficient,
                   power_coefficient_deriv, rotor_line_points,
                   thrust_coefficient, thrust_coefficient_deriv)

# Control bounds. The optimisation problem itself is unconstrained but
# ct' has a pole at a = 1, so optimiser updates are clamped well below it.
A_MIN = 0.0
A_MAX = 0.45

ROTOR_NORMAL = np.array([1.0, 0.0])


@dataclass(frozen=True)
class CoupledState:
    wake: WakeState
    platform: PlatformState
    prev_control: float
    step_index: int = 0


@dataclass(frozen=True)
class StepOutput:
    power_t0: float      # [W]
    power_t1: float      # [W]
    thrust_t0: float     # [N]
    nacelle_x: float     # [m], after the platform substeps
    u_rotor_t1: np.ndarray  # (2,) [m/s]

    @property
    def total_power(self) -> float:
        return self.power_t0 + self.power_t1


@dataclass(frozen=True)
class ControlSequence:
    """Induction trajectory for turbine 0 over a horizon.

    anchor is the control implemented just before the first sample; it
    only matters for the first control-move penalty.
    """

    values: np.ndarray
    anchor: float | None = None

    def __len__(self) -> int:
        return len(self.values)


def discrete_platform(config: SimConfig) -> DiscretePlatform:
    """Discrete platform blocks with the configured DOF pinning applied."""
    disc = build_discrete(config.platform, config.turbine.hub_height,
                          config.numerics.dt_floater)
    return disc.with_dofs(config.platform_dofs)


def initial_state(config: SimConfig, prev_control: float = 0.0) -> CoupledState:
    return CoupledState(
        wake=empty_wake(config.numerics.num_rings,
                        release_origin=(0.0, 0.0), rotor_normal=ROTOR_NORMAL),
        platform=PlatformState(),
        prev_control=prev_control,
        step_index=0)


def set_bottom_fixed(config: SimConfig) -> SimConfig:
    """Configuration with the platform pinned at zero (motionless nacelle)."""
    return config.with_dofs("none")


def _check_control(a0: float):
    if not (A_MIN <= a0 <= A_MAX):
        raise ValueError(f"control {a0} outside [{A_MIN}, {A_MAX}]")


def step_coupled_cached(state: CoupledState, a0: float, config: SimConfig,
                        disc: DiscretePlatform, want_cache: bool = False):
    """Advance one wake step, optionally keeping a reverse-pass cache.

    Order of operations inside the step: sample the rotor-plane mean
    velocity at the current nacelle position, form thrust from the
    relative velocity, substep the platform under that thrust, release a
    vortex pair at the updated nacelle position, convect all markers,
    then evaluate the downstream virtual turbine on the new wake.
    """
    _check_control(a0)
    tur, num, lay = config.turbine, config.numerics, config.layout
    h = tur.hub_height
    sigma = num.core_size
    dtw = num.dt_wake
    u_inf = num.inflow_vector
    half_rho_a = 0.5 * tur.air_density * tur.rotor_area
    n_s = lay.rotor_samples
    wake0, plat0 = state.wake, state.platform

    # (1) mean flow over the rotor line at the current nacelle position.
    # The newest vortex pair always sits on this line (released there at
    # the end of the previous step), so the sampled velocity carries the
    # shed vorticity's feedback without a one-step lag.
    nac0, vnac0 = nacelle_kinematics(plat0, h)
    e0 = rotor_line_points((nac0, 0.0), ROTOR_NORMAL, tur.rotor_diameter, n_s)
    u0, cache_rotor0 = induced_velocity_block(
        e0, wake0.positions, wake0.strengths, sigma)
    ur0 = (u0 + u_inf[None, :]).mean(axis=0)

    # (2)-(3) thrust follows the rotor-relative velocity; power follows
    # the flow velocity at the rotor plane. Crediting rotor motion in
    # the cubic power law would let platform oscillation masquerade as
    # extracted wind power. The momentum laws are only meaningful for
    # inflow through the rotor, so both speeds are clamped at zero.
    ud_raw = ur0[0] - vnac0
    ud = ud_raw if ud_raw > 0.0 else 0.0
    uq_raw = ur0[0]
    uq = uq_raw if uq_raw > 0.0 else 0.0
    ct = thrust_coefficient(a0, tur.ct1)
    cp = power_coefficient(a0)
    thrust_t0 = ct * half_rho_a * ud * ud
    power_t0 = cp * half_rho_a * uq ** 3

    # (4) platform substeps under constant thrust
    plat = plat0
    for _ in range(num.substeps_per_wake_step):
        plat = step_platform(plat, thrust_t0, disc)

    # (5) convect the existing markers, then shed a fresh pair at the
    # updated nacelle position; the pair stays on the rotor line until
    # the next step's propagation
    u_conv, cache_propagate = induced_velocity_block(
        wake0.positions, wake0.positions, wake0.strengths, sigma)
    moved = wake0.positions + dtw * (u_conv + u_inf[None, :])

    nac1, _ = nacelle_kinematics(plat, h)
    dgamma = dtw * 0.5 * ct * ud * ud
    half_span = 0.5 * tur.rotor_diameter
    new_pos = np.array([[nac1, half_span], [nac1, -half_span]])
    keep = min(wake0.num_points, 2 * wake0.capacity - 2)
    pos2 = np.concatenate([new_pos, moved[:keep]], axis=0)
    gam1 = np.concatenate([[dgamma, -dgamma], wake0.strengths[:keep]])
    wake2 = replace(wake0, positions=pos2, strengths=gam1,
                    release_origin=np.array([nac1, 0.0]),
                    rotor_normal=ROTOR_NORMAL)

    # (6) downstream virtual turbine on the updated wake
    a1 = lay.virtual_turbine_induction
    e1 = rotor_line_points((lay.downstream_spacing, 0.0), ROTOR_NORMAL,
                           tur.rotor_diameter, n_s)
    u1, cache_rotor1 = induced_velocity_block(e1, pos2, gam1, sigma)
    ur1 = (u1 + u_inf[None, :]).mean(axis=0)
    cp1 = power_coefficient(a1)
    ur1x = ur1[0] if ur1[0] > 0.0 else 0.0
    power_t1 = cp1 * half_rho_a * ((1.0 - a1) * ur1x) ** 3

    new_state = CoupledState(wake=wake2, platform=plat, prev_control=a0,
                             step_index=state.step_index + 1)
    output = StepOutput(power_t0=power_t0, power_t1=power_t1,
                        thrust_t0=thrust_t0, nacelle_x=nac1, u_rotor_t1=ur1)
    cache = None
    if want_cache:
        cache = {
            "a0": a0, "ud": ud, "ud_active": ud_raw > 0.0,
            "uq": uq, "uq_active": uq_raw > 0.0,
            "ct": ct, "cp": cp,
            "dct": thrust_coefficient_deriv(a0, tur.ct1),
            "dcp": power_coefficient_deriv(a0),
            "half_rho_a": half_rho_a, "h": h, "dtw": dtw, "n_s": n_s,
            "substeps": num.substeps_per_wake_step,
            "phi0": plat0.phi, "phi_dot0": plat0.phi_dot, "phi4": plat.phi,
            "a1": a1, "cp1": cp1, "ur1x": ur1x,
            "ur1x_active": ur1[0] > 0.0,
            "num_points0": wake0.num_points, "kept": keep,
            "cache_rotor0": cache_rotor0,
            "cache_propagate": cache_propagate,
            "cache_rotor1": cache_rotor1,
            "disc": disc,
        }
    return new_state, output, cache


def step_coupled(state: CoupledState, a0: float, config: SimConfig,
                 disc: DiscretePlatform):
    """Advance one coupled wake step; returns (state, output)."""
    new_state, output, _ = step_coupled_cached(state, a0, config, disc)
    return new_state, output


def step_coupled_vjp(cache, wake_pos_bar, wake_gam_bar, platform_bar,
                     power_t0_bar: float, power_t1_bar: float):
    """Reverse-mode rule of one coupled step.

    Takes adjoints of the next wake positions/strengths, of the next
    platform state (length-4 vector phi, phi_dot, x, x_dot) and of the
    two power outputs; returns the matching adjoints of the previous
    step's wake, platform and applied control.
    """
    h, dtw = cache["h"], cache["dtw"]
    n_s = cache["n_s"]
    half_rho_a = cache["half_rho_a"]
    ud, uq, ct, cp, dct, dcp = (cache["ud"], cache["uq"], cache["ct"],
                                cache["cp"], cache["dct"], cache["dcp"])

    # (6) downstream virtual turbine
    a1, cp1, ur1x = cache["a1"], cache["cp1"], cache["ur1x"]
    dp1_dur1x = cp1 * half_rho_a * 3.0 * ((1.0 - a1) * ur1x) ** 2 * (1.0 - a1)
    if not cache["ur1x_active"]:
        dp1_dur1x = 0.0
    ur1_bar = np.array([power_t1_bar * dp1_dur1x, 0.0])
    u1_bar = np.tile(ur1_bar / n_s, (n_s, 1))
    _, pos_b, gam_b = induced_velocity_block_vjp(cache["cache_rotor1"], u1_bar)
    pos2_bar = wake_pos_bar + pos_b
    gam1_bar = wake_gam_bar + gam_b

    # (5b) release: rows 0 and 1 are the new pair at (nac1, +/- D/2)
    nac1_bar = pos2_bar[0, 0] + pos2_bar[1, 0]
    dgamma_bar = gam1_bar[0] - gam1_bar[1]
    kept = cache["kept"]
    moved_bar = np.zeros((cache["num_points0"], 2))
    gam0_bar = np.zeros(cache["num_points0"])
    moved_bar[:kept] = pos2_bar[2:]
    gam0_bar[:kept] = gam1_bar[2:]

    # (5a) convection of the pre-step markers
    ev_b, pos_b, gam_b = induced_velocity_block_vjp(
        cache["cache_propagate"], dtw * moved_bar)
    pos0_bar = moved_bar + ev_b + pos_b
    gam0_bar += gam_b

    a_bar = dgamma_bar * dtw * 0.5 * dct * ud * ud
    ud_bar = dgamma_bar * dtw * ct * ud

    # nacelle release position reads the post-substep platform state
    plat_bar = np.asarray(platform_bar, dtype=float).copy()
    plat_bar[0] += nac1_bar * (-h * math.cos(cache["phi4"]))
    plat_bar[2] += nac1_bar

    # (4) substeps in reverse
    disc = cache["disc"]
    thrust_bar = 0.0
    for _ in range(cache["substeps"]):
        thrust_bar += disc.bd_pitch @ plat_bar[:2] + disc.bd_surge @ plat_bar[2:]
        plat_bar = np.concatenate([disc.ad_pitch.T @ plat_bar[:2],
                                   disc.ad_surge.T @ plat_bar[2:]])

    # (3) thrust and upstream power
    a_bar += thrust_bar * dct * half_rho_a * ud * ud \
        + power_t0_bar * dcp * half_rho_a * uq ** 3
    ud_bar += thrust_bar * ct * half_rho_a * 2.0 * ud
    uq_bar = power_t0_bar * cp * half_rho_a * 3.0 * uq * uq

    # (2) ud = max(ur0_x - vnac0, 0), uq = max(ur0_x, 0)
    if not cache["ud_active"]:
        ud_bar = 0.0
    if not cache["uq_active"]:
        uq_bar = 0.0
    ur0_bar = np.array([ud_bar + uq_bar, 0.0])
    vnac0_bar = -ud_bar

    # (1) rotor-line sampling at the pre-step nacelle position
    u0_bar = np.tile(ur0_bar / n_s, (n_s, 1))
    ev_b, pos_b, gam_b = induced_velocity_block_vjp(cache["cache_rotor0"],
                                                    u0_bar)
    pos0_bar += pos_b
    gam0_bar += gam_b
    nac0_bar = ev_b[:, 0].sum()

    phi0, phi_dot0 = cache["phi0"], cache["phi_dot0"]
    plat_bar[0] += nac0_bar * (-h * math.cos(phi0)) \
        + vnac0_bar * (h * phi_dot0 * math.sin(phi0))
    plat_bar[1] += vnac0_bar * (-h * math.cos(phi0))
    plat_bar[2] += nac0_bar
    plat_bar[3] += vnac0_bar

    return pos0_bar, gam0_bar, plat_bar, a_bar


def rollout(initial: CoupledState, controls, config: SimConfig,
            disc: DiscretePlatform):
    """Apply a control sequence step by step.

    Returns the final state and one StepOutput per control sample.
    """
    values = controls.values if isinstance(controls, ControlSequence) else controls
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) < 1:
        raise ValueError("controls must be a non-empty 1D sequence")
    state = initial
    outputs = []
    for a0 in values:
        state, out = step_coupled(state, float(a0), config, disc)
        outputs.append(out)
    return state, outputs


def spin_up(config: SimConfig, disc: DiscretePlatform, a: float,
            steps: int | None = None) -> CoupledState:
    """Documented cold-start procedure before any measurement.

    The wake is filled from empty under a bottom-fixed platform, the
    platform is then placed at the static balance for the settled
    thrust (pinned DOFs stay zero) and the coupled model runs the
    remaining steps. Defaults to two buffer lengths in total.
    """
    n_r = config.numerics.num_rings
    if steps is None:
        steps = 2 * n_r
    wake_steps = min(steps, n_r)
    state = initial_state(config, prev_control=a)
    out = None
    fixed = disc.with_dofs("none")
    for _ in range(wake_steps):
        state, out = step_coupled(state, a, config, fixed)
    if steps > wake_steps and out is not None:
        eq = equilibrium_state(config.platform, config.turbine.hub_height,
                               out.thrust_t0)
        state = replace(state, platform=pin_state(eq, config.platform_dofs))
        for _ in range(steps - wake_steps):
            state, out = step_coupled(state, a, config, disc)
    return state
