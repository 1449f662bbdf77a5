"""Parameter optimizers: Adam on parameter-shift gradients, plus a
derivative-free simplex fallback for non-gradient objectives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass
class AdamState:
    """First/second moment accumulators with bias correction."""

    param_count: int
    alpha: float = 0.2
    beta1: float = 0.8
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None)  # type: ignore[assignment]
    v: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.m is None:
            self.m = np.zeros(self.param_count)
        if self.v is None:
            self.v = np.zeros(self.param_count)
        if self.m.shape != (self.param_count,) or self.v.shape != (self.param_count,):
            raise ValueError("moment vectors must match param_count")


@dataclass(frozen=True)
class Objective:
    """Scalar objective over a parameter vector.

    evaluate maps a length-m vector to a float; evaluate_batch (optional fast
    path) maps a (B, m) matrix to a length-B vector and must agree with
    evaluate row-wise. shift_ok flags which parameters admit the exact
    two-term shift rule (single rotation gate, +-1/2 generator spectrum).
    """

    evaluate: Callable[[np.ndarray], float]
    param_count: int
    shift_ok: tuple[bool, ...]
    evaluate_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if len(self.shift_ok) != self.param_count:
            raise ValueError("one shift flag per parameter")


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> tuple[AdamState, np.ndarray]:
    """One descent update; returns the advanced state and new parameters."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != (state.param_count,) or grad.shape != (state.param_count,):
        raise ValueError("params/grad shape mismatch")
    k = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** k)
    v_hat = v / (1.0 - state.beta2 ** k)
    new = params - state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)
    out = AdamState(state.param_count, state.alpha, state.beta1, state.beta2,
                    state.eps, k, m, v)
    return out, new


def parameter_shift_grad(objective: Objective, params: np.ndarray) -> np.ndarray:
    """Exact gradient via +-pi/2 parameter shifts."""
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (objective.param_count,):
        raise ValueError("parameter vector shape mismatch")
    if not all(objective.shift_ok):
        raise ValueError("objective has parameters outside shift-rule scope")
    m = objective.param_count
    if m == 0:
        return np.zeros(0)
    shifted = np.repeat(params[None, :], 2 * m, axis=0)
    rows = np.arange(m)
    shifted[2 * rows, rows] += np.pi / 2.0
    shifted[2 * rows + 1, rows] -= np.pi / 2.0
    if objective.evaluate_batch is not None:
        vals = np.asarray(objective.evaluate_batch(shifted), dtype=np.float64)
    else:
        vals = np.array([objective.evaluate(row) for row in shifted])
    return (vals[0::2] - vals[1::2]) / 2.0


def vqa_optimize(objective: Objective, init: np.ndarray, n_iter: int,
                 threshold: float | None = None,
                 rng: np.random.Generator | None = None) -> tuple[np.ndarray, list[float]]:
    """Adam descent for n_iter steps with optional early stop at threshold.

    Returns the best parameters seen and the objective trace (initial value
    first, then one entry per completed step)."""
    del rng  # descent is deterministic; kept for interface symmetry
    params = np.asarray(init, dtype=np.float64).copy()
    if params.shape != (objective.param_count,):
        raise ValueError("initial parameter vector shape mismatch")
    value = float(objective.evaluate(params))
    trace = [value]
    best_params, best_value = params.copy(), value
    if objective.param_count == 0 or (threshold is not None and value <= threshold):
        return best_params, trace
    state = AdamState(objective.param_count)
    for _ in range(n_iter):
        grad = parameter_shift_grad(objective, params)
        state, params = adam_step(state, params, grad)
        value = float(objective.evaluate(params))
        trace.append(value)
        if value < best_value:
            best_params, best_value = params.copy(), value
        if threshold is not None and value <= threshold:
            break
    return best_params, trace


def nelder_mead(fn: Callable[[np.ndarray], float], init: Sequence[float],
                max_evals: int = 400, tol: float = 1e-9,
                reflection: float = 1.0, expansion: float = 2.0,
                contraction: float = 0.5, shrink: float = 0.5,
                initial_step: float = 0.25) -> tuple[np.ndarray, float]:
    """Simplex minimization; returns (best point, best value)."""
    x0 = np.asarray(init, dtype=np.float64)
    n = x0.size
    if n == 0:
        return x0, float(fn(x0))
    evals = 0

    def call(x):
        nonlocal evals
        evals += 1
        return float(fn(x))

    simplex = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        v[i] += initial_step
        simplex.append(v)
    values = [call(v) for v in simplex]

    while evals < max_evals:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        if abs(values[-1] - values[0]) <= tol and np.max(np.abs(np.asarray(simplex[1:]) - simplex[0])) <= tol:
            break
        centroid = np.mean(simplex[:-1], axis=0)
        xr = centroid + reflection * (centroid - simplex[-1])
        fr = call(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            xe = centroid + expansion * (xr - centroid)
            fe = call(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        xc = centroid + contraction * (simplex[-1] - centroid)
        fc = call(xc)
        if fc < values[-1]:
            simplex[-1], values[-1] = xc, fc
            continue
        for i in range(1, n + 1):  # shrink toward the best vertex
            simplex[i] = simplex[0] + shrink * (simplex[i] - simplex[0])
            values[i] = call(simplex[i])

    best = int(np.argmin(values))
    return simplex[best], values[best]
