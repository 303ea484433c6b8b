"""2D free-vortex actuator-disc wake.

A wind turbine rotor is represented as a line of length D normal to the
flow. Each time step it sheds a pair of point vortices of opposite
strength from its edges; the collection of shed pairs is convected as
Lagrangian markers by the free stream plus the velocity they induce on
each other. Induced velocities use a Gaussian-regularised point-vortex
kernel, so every operation here is a smooth total function and carries a
hand-derived reverse-mode rule for gradient-based control optimisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import TurbineParams

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Induction factor outside the domain of the coefficient laws."""


# ---------------------------------------------------------------------------
# induction-factor coefficient laws
# ---------------------------------------------------------------------------

def glauert_transition(ct1: float) -> float:
    """Induction value where the momentum branch hands over to the
    empirical high-induction branch; the unique point where the two
    expressions are continuous."""
    return 1.0 - math.sqrt(ct1) / 2.0


def _check_induction(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if np.any(a < 0.0) or np.any(a >= 1.0):
        raise DomainError(f"induction factor must be in [0, 1), got {a}")
    return a


def thrust_coefficient(a, ct1: float = 2.3):
    """Local thrust coefficient ct'(a).

    Momentum theory 4a/(1-a) below the transition induction, blended
    into a linear-in-(1-a) empirical correction above it.
    """
    a = _check_induction(a)
    a_t = glauert_transition(ct1)
    one_minus = 1.0 - a
    low = 4.0 * a / one_minus
    high = (ct1 - 4.0 * (math.sqrt(ct1) - 1.0) * one_minus) / one_minus**2
    out = np.where(a <= a_t, low, high)
    return float(out) if out.ndim == 0 else out


def thrust_coefficient_deriv(a, ct1: float = 2.3):
    """d ct'/da, branch-wise (sub-derivative at the transition point)."""
    a = _check_induction(a)
    a_t = glauert_transition(ct1)
    one_minus = 1.0 - a
    low = 4.0 / one_minus**2
    high = (2.0 * ct1 - 4.0 * (math.sqrt(ct1) - 1.0) * one_minus) / one_minus**3
    out = np.where(a <= a_t, low, high)
    return float(out) if out.ndim == 0 else out


def power_coefficient(a):
    """Local power coefficient cp'(a) = 4a/(1-a)."""
    a = _check_induction(a)
    out = 4.0 * a / (1.0 - a)
    return float(out) if out.ndim == 0 else out


def power_coefficient_deriv(a):
    a = _check_induction(a)
    out = 4.0 / (1.0 - a) ** 2
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# thrust and power of a rotor line
# ---------------------------------------------------------------------------

def thrust(a, u_rel, n, params: TurbineParams) -> float:
    """Thrust ct'(a) * 1/2 rho A (n . u_rel)^2, positive downwind [N]."""
    un = float(np.dot(n, u_rel))
    return thrust_coefficient(a, params.ct1) * 0.5 * params.air_density \
        * params.rotor_area * un**2


def power(a, u_rel, n, params: TurbineParams) -> float:
    """Power cp'(a) * 1/2 rho A (n . u_rel)^3 [W]."""
    un = float(np.dot(n, u_rel))
    return power_coefficient(a) * 0.5 * params.air_density \
        * params.rotor_area * un**3


def virtual_rotor_power(a, u_r, n, params: TurbineParams) -> float:
    """Power of a turbine that does not shed vorticity itself.

    The ambient rotor-plane velocity is reduced by the turbine's own
    induction before the cubic power law is applied.
    """
    un = float(np.dot(n, u_r)) * (1.0 - a)
    return power_coefficient(a) * 0.5 * params.air_density \
        * params.rotor_area * un**3


# ---------------------------------------------------------------------------
# regularised Biot-Savart kernel (vectorised, with reverse-mode rule)
# ---------------------------------------------------------------------------

def _kernel_factors(rho2: np.ndarray, sigma: float):
    """k = (1 - exp(-rho2/sigma^2)) / rho2 and its derivative wrt rho2.

    Both are continued with their finite limits at rho2 = 0, which makes
    the induced velocity an exact zero at a vortex centre (the
    perpendicular lever vanishes there).
    """
    sig2 = sigma * sigma
    nonzero = rho2 > 0.0
    safe = np.where(nonzero, rho2, 1.0)
    z = safe / sig2
    ez = np.exp(-z)
    k = np.where(nonzero, -np.expm1(-z) / safe, 1.0 / sig2)
    kprime = np.where(nonzero, (z * ez + np.expm1(-z)) / safe**2,
                      -0.5 / sig2**2)
    return k, kprime, nonzero


def induced_velocity_block(eval_points: np.ndarray, positions: np.ndarray,
                           strengths: np.ndarray, sigma: float):
    """Summed induced velocity of all vortices at each evaluation point.

    Returns the (K, 2) velocity array and a cache for the reverse pass.
    Summation runs in storage order, so results are deterministic.
    """
    ev = np.atleast_2d(np.asarray(eval_points, dtype=float))
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    gam = np.asarray(strengths, dtype=float)
    if pos.shape[0] == 0:
        u = np.zeros_like(ev)
        return u, (ev, pos, gam, None)

    rx = pos[:, 0][None, :] - ev[:, 0][:, None]   # (K, M)
    ry = pos[:, 1][None, :] - ev[:, 1][:, None]
    rho2 = rx * rx + ry * ry
    k, kprime, nonzero = _kernel_factors(rho2, sigma)
    coef = k * (gam / TWO_PI)[None, :]
    u = np.stack([-_pair_first_sum(coef * ry), _pair_first_sum(coef * rx)],
                 axis=1)
    cache = (ev, pos, gam, (rx, ry, k, kprime, nonzero))
    return u, cache


def _pair_first_sum(terms: np.ndarray) -> np.ndarray:
    """Row sums that combine each adjacent source pair before reducing.

    Vortices are stored pair-wise; summing the two members of a shed
    pair first makes the reduction exactly equivariant under a mirror
    flip of the wake (float addition is commutative), so symmetric
    states stay symmetric to the bit over long runs.
    """
    n_rows, n_src = terms.shape
    if n_src % 2 == 0:
        terms = terms.reshape(n_rows, n_src // 2, 2).sum(axis=2)
    return terms.sum(axis=1)


def induced_velocity_block_vjp(cache, u_bar: np.ndarray):
    """Reverse rule of induced_velocity_block.

    Maps the adjoint of the (K, 2) output onto adjoints of the
    evaluation points, the vortex positions and the vortex strengths.
    Exactly coincident point pairs (the regularised self term) propagate
    no sensitivity, matching the zero forward contribution.
    """
    ev, pos, gam, factors = cache
    if factors is None:
        return np.zeros_like(ev), np.zeros_like(pos), np.zeros_like(gam)
    rx, ry, k, kprime, nonzero = factors
    ubx = u_bar[:, 0][:, None]
    uby = u_bar[:, 1][:, None]
    # adjoint of the perpendicular projection (-ry, rx) . u_bar
    pr = rx * uby - ry * ubx
    gam_bar = (k * pr).sum(axis=0) / TWO_PI
    c = (gam / TWO_PI)[None, :]
    two_kp_pr = 2.0 * kprime * pr
    rbar_x = np.where(nonzero, c * (two_kp_pr * rx + k * uby), 0.0)
    rbar_y = np.where(nonzero, c * (two_kp_pr * ry - k * ubx), 0.0)
    pos_bar = np.stack([rbar_x.sum(axis=0), rbar_y.sum(axis=0)], axis=1)
    eval_bar = -np.stack([rbar_x.sum(axis=1), rbar_y.sum(axis=1)], axis=1)
    return eval_bar, pos_bar, gam_bar


# ---------------------------------------------------------------------------
# wake state and its operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VortexPoint:
    position: np.ndarray   # (2,) [m]
    strength: float        # circulation [m^2/s]


@dataclass(frozen=True)
class WakeState:
    """Ring buffer of shed vortex pairs, newest generation first.

    positions has shape (2*generations, 2); rows 2g and 2g+1 are the
    two points of generation g and carry strengths of equal magnitude
    and opposite sign. capacity bounds the number of generations kept.
    """

    positions: np.ndarray
    strengths: np.ndarray
    release_origin: np.ndarray
    rotor_normal: np.ndarray
    capacity: int

    @property
    def num_points(self) -> int:
        return self.positions.shape[0]

    @property
    def num_generations(self) -> int:
        return self.num_points // 2

    def points(self):
        return [VortexPoint(self.positions[i].copy(), float(self.strengths[i]))
                for i in range(self.num_points)]


def empty_wake(capacity: int, release_origin=(0.0, 0.0),
               rotor_normal=(1.0, 0.0)) -> WakeState:
    return WakeState(
        positions=np.zeros((0, 2)),
        strengths=np.zeros(0),
        release_origin=np.asarray(release_origin, dtype=float),
        rotor_normal=np.asarray(rotor_normal, dtype=float),
        capacity=int(capacity),
    )


def perpendicular(n) -> np.ndarray:
    """Rotate a 2-vector by +90 degrees."""
    n = np.asarray(n, dtype=float)
    return np.array([-n[1], n[0]])


def induced_velocity(eval_point, vortex: VortexPoint, core_size: float) -> np.ndarray:
    """Velocity induced at one point by one regularised vortex [m/s]."""
    u, _ = induced_velocity_block(
        np.asarray(eval_point, dtype=float)[None, :],
        np.asarray(vortex.position, dtype=float)[None, :],
        np.array([vortex.strength]), core_size)
    return u[0]


def total_velocity(eval_points, state: WakeState, u_inf, sigma: float) -> np.ndarray:
    """Free stream plus the summed induction of every wake vortex."""
    ev = np.atleast_2d(np.asarray(eval_points, dtype=float))
    u, _ = induced_velocity_block(ev, state.positions, state.strengths, sigma)
    return u + np.asarray(u_inf, dtype=float)[None, :]


def release_strength(a, u_rel, n, dt_wake: float, ct1: float = 2.3) -> float:
    """Circulation added to each edge vortex during one wake step.

    The shed vorticity rate follows from the actuator-disc pressure jump,
    dGamma/dt = ct'(a) (n.u_rel)^2 / 2.
    """
    un = float(np.dot(n, u_rel))
    return dt_wake * 0.5 * thrust_coefficient(a, ct1) * un**2


def release_vortex_pair(state: WakeState, rotor_center, n, a, u_rel,
                        dt_wake: float, params: TurbineParams) -> WakeState:
    """Shed a new vortex pair from the rotor edges.

    The point on the +perpendicular side carries +dGamma so the pair
    induces an upstream-pointing velocity between its members (a wake
    deficit). The oldest generation is evicted once capacity is full.
    """
    center = np.asarray(rotor_center, dtype=float)
    n = np.asarray(n, dtype=float)
    tangent = perpendicular(n)
    half_span = 0.5 * params.rotor_diameter
    dgamma = release_strength(a, u_rel, n, dt_wake, params.ct1)

    new_pos = np.stack([center + half_span * tangent,
                        center - half_span * tangent])
    new_gam = np.array([dgamma, -dgamma])
    keep = 2 * state.capacity - 2
    positions = np.concatenate([new_pos, state.positions[:keep]], axis=0)
    strengths = np.concatenate([new_gam, state.strengths[:keep]])
    return replace(state, positions=positions, strengths=strengths,
                   release_origin=center, rotor_normal=n)


def propagate(state: WakeState, u_inf, sigma: float, dt_wake: float) -> WakeState:
    """Convect every marker one explicit-Euler step with the local
    total velocity; strengths are untouched."""
    if state.num_points == 0:
        return state
    u = total_velocity(state.positions, state, u_inf, sigma)
    return replace(state, positions=state.positions + dt_wake * u)


def rotor_line_points(rotor_center, n, diameter: float, rotor_samples: int) -> np.ndarray:
    """Uniform sample points along the rotor line.

    Endpoints are inset by half a spacing so no sample falls exactly on
    a release point, where the regularised kernel is steepest.
    """
    center = np.asarray(rotor_center, dtype=float)
    tangent = perpendicular(n)
    spacing = diameter / rotor_samples
    offsets = (np.arange(rotor_samples) - (rotor_samples - 1) / 2.0) * spacing
    return center[None, :] + offsets[:, None] * tangent[None, :]


def rotor_average_velocity(state: WakeState, rotor_center, n, u_inf,
                           sigma: float, rotor_samples: int,
                           diameter: float) -> np.ndarray:
    """Arithmetic mean flow velocity over the rotor line [m/s]."""
    pts = rotor_line_points(rotor_center, n, diameter, rotor_samples)
    return total_velocity(pts, state, u_inf, sigma).mean(axis=0)
