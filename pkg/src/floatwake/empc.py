"""Receding-horizon economic MPC with Adam.

Each simulation step solves the horizon problem by a fixed number of
Adam iterations on the whole control vector, implements the first
sample, shifts the solution one step and repeats. Moment estimates are
reset at every receding-horizon step because the shift changes what
each parameter means.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .coupled import (A_MAX, A_MIN, ControlSequence, CoupledState,
                      step_coupled)
from .objective import (GradientRecord, ObjectiveWeights, gradient,
                        horizon_cost)
from .platform import DiscretePlatform


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    t: int = 0
    alpha: float = 1.0e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1.0e-8


def adam_init(n_params: int, alpha: float = 1.0e-3, beta1: float = 0.9,
              beta2: float = 0.999, epsilon: float = 1.0e-8) -> AdamState:
    return AdamState(first_moment=np.zeros(n_params),
                     second_moment=np.zeros(n_params),
                     t=0, alpha=alpha, beta1=beta1, beta2=beta2,
                     epsilon=epsilon)


def adam_update(params: np.ndarray, grads: np.ndarray, state: AdamState):
    """One bias-corrected Adam step followed by a clamp to the control
    bounds. Returns the new parameters and optimiser state."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape:
        raise ValueError("parameter and gradient shapes differ")
    if not np.all(np.isfinite(grads)):
        raise FloatingPointError(
            f"non-finite gradient at Adam iteration {state.t + 1}")
    t = state.t + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads ** 2
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - state.alpha * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_params = np.clip(new_params, A_MIN, A_MAX)
    new_state = AdamState(first_moment=m, second_moment=v, t=t,
                          alpha=state.alpha, beta1=state.beta1,
                          beta2=state.beta2, epsilon=state.epsilon)
    return new_params, new_state


@dataclass(frozen=True)
class EmpcConfig:
    horizon: int
    iters_per_step: int
    total_steps: int
    weights: ObjectiveWeights
    warm_start_fill: str = "repeat_last"
    adam_alpha: float = 1.0e-3

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.iters_per_step < 0:
            raise ValueError("iters_per_step must be >= 0")
        if self.warm_start_fill != "repeat_last":
            raise ValueError("unknown warm_start_fill policy")
        if np.any(np.asarray(self.weights.q) > 0.0):
            raise ValueError("output weights must not be positive")
        if self.weights.r <= 0.0:
            raise ValueError("control-move weight must be positive")


@dataclass
class EmpcTrace:
    """Per-step record of a receding-horizon run."""

    implemented: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    platform_states: list = field(default_factory=list)
    solutions: list = field(default_factory=list)
    cost_before: list = field(default_factory=list)
    cost_after: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.implemented)

    def total_power(self) -> np.ndarray:
        return np.array([o.total_power for o in self.outputs])

    def controls(self) -> np.ndarray:
        return np.array(self.implemented)


def optimize_horizon(initial: CoupledState, warm: ControlSequence,
                     cfg: EmpcConfig, config: SimConfig,
                     disc: DiscretePlatform):
    """Run the per-step Adam iterations on the full control vector.

    Returns the final iterate (not the best seen; Adam is non-monotone)
    together with the cost before and after.
    """
    values = np.asarray(warm.values, dtype=float)
    if len(values) != cfg.horizon:
        raise ValueError("warm start length must equal the horizon")
    anchor = warm.anchor if warm.anchor is not None else initial.prev_control
    if cfg.iters_per_step == 0:
        cost = horizon_cost(initial, ControlSequence(values, anchor),
                            cfg.weights, config, disc)
        return ControlSequence(values, anchor), cost, cost
    adam = adam_init(cfg.horizon, alpha=cfg.adam_alpha)
    cost_before = None
    for _ in range(cfg.iters_per_step):
        record: GradientRecord = gradient(
            initial, ControlSequence(values, anchor), cfg.weights, config, disc)
        if cost_before is None:
            cost_before = record.cost
        values, adam = adam_update(values, record.gradient, adam)
    cost_after = horizon_cost(initial, ControlSequence(values, anchor),
                              cfg.weights, config, disc)
    return ControlSequence(values, anchor), cost_before, cost_after


def receding_horizon(initial: CoupledState, cfg: EmpcConfig,
                     config: SimConfig, disc: DiscretePlatform,
                     warm_init=None) -> EmpcTrace:
    """Optimise, implement the first sample, shift, repeat."""
    if warm_init is None:
        warm_values = np.full(cfg.horizon, initial.prev_control)
    else:
        warm_values = np.asarray(warm_init, dtype=float).copy()
        if len(warm_values) != cfg.horizon:
            raise ValueError("warm_init length must equal the horizon")

    trace = EmpcTrace()
    state = initial
    for _ in range(cfg.total_steps):
        started = time.perf_counter()
        warm = ControlSequence(warm_values, state.prev_control)
        solution, cost_before, cost_after = optimize_horizon(
            state, warm, cfg, config, disc)
        a0 = float(solution.values[0])
        state, output = step_coupled(state, a0, config, disc)
        warm_values = np.concatenate([solution.values[1:],
                                      solution.values[-1:]])
        trace.implemented.append(a0)
        trace.outputs.append(output)
        trace.platform_states.append(state.platform)
        trace.solutions.append(solution.values.copy())
        trace.cost_before.append(cost_before)
        trace.cost_after.append(cost_after)
        trace.iterations.append(cfg.iters_per_step)
        trace.wall_ms.append(1000.0 * (time.perf_counter() - started))
    return trace
