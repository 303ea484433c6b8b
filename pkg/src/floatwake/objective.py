"""Economic objective and exact rollout gradients.

The stage cost combines the two turbine powers through a negative
output weight with a quadratic penalty on control moves; minimising it
maximises mean power while keeping actuation smooth. Gradients of the
horizon cost are computed discrete-then-differentiate: the rollout is
recorded step by step and the hand-derived reverse rules of the coupled
step are replayed backwards. A central finite-difference oracle guards
the exact gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .coupled import (ControlSequence, CoupledState, StepOutput,
                      step_coupled_cached, step_coupled_vjp)
from .platform import DiscretePlatform

WATTS_PER_MEGAWATT = 1.0e6


class GradientError(RuntimeError):
    def __init__(self, step_index: int, message: str):
        self.step_index = step_index
        super().__init__(f"step {step_index}: {message}")


@dataclass(frozen=True)
class ObjectiveWeights:
    """Output weight Q (per watt, both entries negative for power
    maximisation) and scalar control-move weight R (positive)."""

    q: np.ndarray   # (2,) [1/W]
    r: float

    @staticmethod
    def from_megawatt_scale(q_per_mw, r: float) -> "ObjectiveWeights":
        """Build from the per-megawatt weights used in experiment configs."""
        q = np.asarray(q_per_mw, dtype=float) / WATTS_PER_MEGAWATT
        return ObjectiveWeights(q=q, r=float(r))


@dataclass(frozen=True)
class GradientRecord:
    cost: float
    gradient: np.ndarray   # dcost/da_k, one entry per control sample


def stage_cost(output: StepOutput, a_k: float, a_prev: float,
               weights: ObjectiveWeights) -> float:
    move = a_k - a_prev
    powers = np.array([output.power_t0, output.power_t1])
    return float(weights.q @ powers + move * weights.r * move)


def _resolve_anchor(initial: CoupledState, controls: ControlSequence) -> float:
    if isinstance(controls, ControlSequence) and controls.anchor is not None:
        return float(controls.anchor)
    return float(initial.prev_control)


def _control_values(controls) -> np.ndarray:
    values = controls.values if isinstance(controls, ControlSequence) else controls
    return np.asarray(values, dtype=float)


def horizon_cost(initial: CoupledState, controls, weights: ObjectiveWeights,
                 config: SimConfig, disc: DiscretePlatform) -> float:
    """Sum of stage costs along the rollout; no terminal cost."""
    values = _control_values(controls)
    anchor = _resolve_anchor(initial, controls)
    state = initial
    total = 0.0
    prev = anchor
    for a_k in values:
        state, out, _ = step_coupled_cached(state, float(a_k), config, disc)
        total += stage_cost(out, float(a_k), prev, weights)
        prev = float(a_k)
    return total


def gradient(initial: CoupledState, controls, weights: ObjectiveWeights,
             config: SimConfig, disc: DiscretePlatform) -> GradientRecord:
    """Exact derivative of horizon_cost with respect to every control.

    Forward pass records one cache per step; the reverse pass seeds the
    power adjoints with Q and walks the step vjp backwards, adding the
    control-move terms directly.
    """
    values = _control_values(controls)
    anchor = _resolve_anchor(initial, controls)
    n = len(values)

    state = initial
    caches = []
    cost = 0.0
    prev = anchor
    for a_k in values:
        state, out, cache = step_coupled_cached(
            state, float(a_k), config, disc, want_cache=True)
        cost += stage_cost(out, float(a_k), prev, weights)
        prev = float(a_k)
        caches.append(cache)

    grad = np.zeros(n)
    pos_bar = np.zeros_like(state.wake.positions)
    gam_bar = np.zeros_like(state.wake.strengths)
    plat_bar = np.zeros(4)
    q0, q1 = float(weights.q[0]), float(weights.q[1])
    for k in range(n - 1, -1, -1):
        pos_bar, gam_bar, plat_bar, a_bar = step_coupled_vjp_checked(
            caches[k], pos_bar, gam_bar, plat_bar, q0, q1, k)
        a_prev_k = values[k - 1] if k > 0 else anchor
        grad[k] = a_bar + 2.0 * weights.r * (values[k] - a_prev_k)
        if k + 1 < n:
            grad[k] -= 2.0 * weights.r * (values[k + 1] - values[k])
    return GradientRecord(cost=cost, gradient=grad)


def step_coupled_vjp_checked(cache, pos_bar, gam_bar, plat_bar, q0, q1,
                             step_index: int):
    out = step_coupled_vjp(cache, pos_bar, gam_bar, plat_bar, q0, q1)
    if not all(np.all(np.isfinite(part)) for part in out):
        raise GradientError(step_index, "non-finite adjoint")
    return out


def finite_difference_gradient(initial: CoupledState, controls,
                               weights: ObjectiveWeights, config: SimConfig,
                               disc: DiscretePlatform,
                               step: float = 1.0e-6) -> np.ndarray:
    """Central differences of horizon_cost per control sample.

    Costs 2 N rollouts; this is the independent oracle for `gradient`
    and is kept free of any shared adjoint code.
    """
    if step <= 0.0:
        raise ValueError("finite-difference step must be > 0")
    values = _control_values(controls)
    anchor = _resolve_anchor(initial, controls)
    grad = np.zeros(len(values))
    for k in range(len(values)):
        bumped = values.copy()
        bumped[k] = values[k] + step
        up = horizon_cost(initial, ControlSequence(bumped, anchor),
                          weights, config, disc)
        bumped[k] = values[k] - step
        down = horizon_cost(initial, ControlSequence(bumped, anchor),
                            weights, config, disc)
        grad[k] = (up - down) / (2.0 * step)
    return grad
