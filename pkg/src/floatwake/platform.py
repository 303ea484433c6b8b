"""Linear pitch/surge dynamics of the floating base.

Pitch and surge are two decoupled mass-spring-damper systems driven by
the same scalar rotor thrust. Both are discretised exactly under a
zero-order hold on the thrust, so stepping is two small matrix
multiplies per substep.

Sign conventions follow the moment balance I_yy phidd = -T h - k phi
- c phid: positive thrust produces a negative pitch angle, and the
nacelle sits at x - h sin(phi), which moves downwind under load through
both degrees of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .config import PlatformParams


@dataclass(frozen=True)
class PlatformState:
    phi: float = 0.0       # pitch angle [rad]
    phi_dot: float = 0.0   # pitch rate [rad/s]
    x: float = 0.0         # surge displacement [m]
    x_dot: float = 0.0     # surge rate [m/s]

    def pitch_vector(self) -> np.ndarray:
        return np.array([self.phi, self.phi_dot])

    def surge_vector(self) -> np.ndarray:
        return np.array([self.x, self.x_dot])

    def as_vector(self) -> np.ndarray:
        return np.array([self.phi, self.phi_dot, self.x, self.x_dot])


def state_from_vector(v) -> PlatformState:
    v = np.asarray(v, dtype=float)
    return PlatformState(phi=float(v[0]), phi_dot=float(v[1]),
                         x=float(v[2]), x_dot=float(v[3]))


def assemble_continuous(params: PlatformParams, h: float):
    """Continuous state-space blocks (A_pitch, B_pitch, A_surge, B_surge).

    Effective totals (mass plus added mass, inertia plus added inertia)
    enter everywhere; the thrust moment arm is the nacelle height h.
    """
    iyy = params.total_inertia
    m = params.total_mass
    a_pitch = np.array([[0.0, 1.0],
                        [-params.pitch_stiffness / iyy,
                         -params.pitch_damping / iyy]])
    b_pitch = np.array([0.0, -h / iyy])
    a_surge = np.array([[0.0, 1.0],
                        [-params.surge_stiffness / m,
                         -params.surge_damping / m]])
    b_surge = np.array([0.0, 1.0 / m])
    return a_pitch, b_pitch, a_surge, b_surge


def discretize_zoh(a: np.ndarray, b: np.ndarray, dt: float):
    """Exact zero-order-hold discretisation via the augmented exponential.

    exp([[A, B], [0, 0]] dt) carries A_d in its top-left block and B_d in
    its top-right column; no inversion of A is required, so zero
    stiffness entries are handled uniformly.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    n, m = a.shape[0], b.shape[1]
    block = np.zeros((n + m, n + m))
    block[:n, :n] = a
    block[:n, n:] = b
    phi = expm(block * dt)
    ad = phi[:n, :n]
    bd = phi[:n, n:]
    return ad, bd[:, 0] if m == 1 else bd


@dataclass(frozen=True)
class DiscretePlatform:
    """Constant discrete-time pitch/surge blocks at the floater step."""

    ad_pitch: np.ndarray
    bd_pitch: np.ndarray
    ad_surge: np.ndarray
    bd_surge: np.ndarray
    dt_floater: float
    f_pitch: float   # undamped natural frequency [Hz]
    f_surge: float   # undamped natural frequency [Hz]

    def with_dofs(self, dofs: str) -> "DiscretePlatform":
        """Zero the input column of pinned degrees of freedom.

        A pinned substate that starts at zero then stays at zero for any
        thrust history, which is how bottom-fixed and single-DOF
        configurations are realised without branching in the step."""
        bd_pitch = self.bd_pitch if dofs in ("both", "pitch") else np.zeros(2)
        bd_surge = self.bd_surge if dofs in ("both", "surge") else np.zeros(2)
        return DiscretePlatform(
            ad_pitch=self.ad_pitch, bd_pitch=bd_pitch,
            ad_surge=self.ad_surge, bd_surge=bd_surge,
            dt_floater=self.dt_floater,
            f_pitch=self.f_pitch, f_surge=self.f_surge)


def build_discrete(params: PlatformParams, h: float, dt_floater: float) -> DiscretePlatform:
    a_p, b_p, a_s, b_s = assemble_continuous(params, h)
    ad_p, bd_p = discretize_zoh(a_p, b_p, dt_floater)
    ad_s, bd_s = discretize_zoh(a_s, b_s, dt_floater)
    for name, ad in (("pitch", ad_p), ("surge", ad_s)):
        rho = max(abs(np.linalg.eigvals(ad)))
        if rho >= 1.0:
            raise ValueError(f"{name} block is not damped: spectral radius {rho}")
    return DiscretePlatform(
        ad_pitch=ad_p, bd_pitch=bd_p, ad_surge=ad_s, bd_surge=bd_s,
        dt_floater=dt_floater,
        f_pitch=math.sqrt(params.pitch_stiffness / params.total_inertia) / (2 * math.pi),
        f_surge=math.sqrt(params.surge_stiffness / params.total_mass) / (2 * math.pi),
    )


def step_platform(state: PlatformState, thrust: float,
                  disc: DiscretePlatform) -> PlatformState:
    """Advance one floater substep under constant thrust."""
    p = disc.ad_pitch @ state.pitch_vector() + disc.bd_pitch * thrust
    s = disc.ad_surge @ state.surge_vector() + disc.bd_surge * thrust
    return PlatformState(phi=float(p[0]), phi_dot=float(p[1]),
                         x=float(s[0]), x_dot=float(s[1]))


def nacelle_kinematics(state: PlatformState, h: float):
    """Horizontal nacelle position [m] and velocity [m/s].

    Exact kinematics are kept (sin/cos rather than the small-angle
    line); with the negative-moment pitch convention the nacelle offset
    due to pitch is -h sin(phi).
    """
    position = state.x - h * math.sin(state.phi)
    velocity = state.x_dot - h * state.phi_dot * math.cos(state.phi)
    return position, velocity


def equilibrium_state(params: PlatformParams, h: float, thrust: float) -> PlatformState:
    """Static balance under a constant thrust."""
    return PlatformState(
        phi=-thrust * h / params.pitch_stiffness, phi_dot=0.0,
        x=thrust / params.surge_stiffness, x_dot=0.0)


def pin_state(state: PlatformState, dofs: str) -> PlatformState:
    """Zero the substates that a configuration pins."""
    phi, phi_dot = (state.phi, state.phi_dot) if dofs in ("both", "pitch") else (0.0, 0.0)
    x, x_dot = (state.x, state.x_dot) if dofs in ("both", "surge") else (0.0, 0.0)
    return PlatformState(phi=phi, phi_dot=phi_dot, x=x, x_dot=x_dot)
