"""Objectives and evaluation metrics for multi-target circuit compilation.

One circuit structure serves every target in a set; each target keeps its own
parameter vector. The single-target kernel is the squared overlap read off a
compile-then-invert echo with a fixed reference state, and the training loss
is one minus the mean kernel over the train split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import genome as genome_mod
from . import sim

Target = sim.DenseOperator | sim.Statevector

DEFAULT_WEIGHTS = (2.2, 1.6, 0.9)
DEFAULT_EDGES = (0.0, 4.0, 7.0, 10.0)


@dataclass(frozen=True)
class TargetSet:
    """Compilation workload: targets plus a train/test index split."""

    num_qubits: int
    targets: tuple[Target, ...]
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.targets:
            raise ValueError("target set is empty")
        dim = 1 << self.num_qubits
        for t in self.targets:
            if isinstance(t, sim.DenseOperator):
                if t.kind != "unitary" or t.dim != dim:
                    raise ValueError("unitary target with mismatched dimension or kind")
            elif isinstance(t, sim.Statevector):
                if t.dim != dim:
                    raise ValueError("state target with mismatched dimension")
            else:
                raise TypeError(f"unsupported target type {type(t).__name__}")
        seen = set()
        for idx in self.train_indices + self.test_indices:
            if idx < 0 or idx >= len(self.targets) or idx in seen:
                raise ValueError("train/test indices must be valid and disjoint")
            seen.add(idx)
        if not self.train_indices:
            raise ValueError("train split is empty")
        object.__setattr__(self, "train_indices", tuple(int(i) for i in self.train_indices))
        object.__setattr__(self, "test_indices", tuple(int(i) for i in self.test_indices))


@dataclass(frozen=True)
class ParameterTable:
    """Per-target parameter vectors, one row per target."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("parameter table must be 2-D (targets x parameters)")
        object.__setattr__(self, "values", v)

    @property
    def num_targets(self) -> int:
        return self.values.shape[0]

    @property
    def param_count(self) -> int:
        return self.values.shape[1]


def _reference(ref: sim.Statevector | None, num_qubits: int) -> sim.Statevector:
    if ref is None:
        return sim.Statevector.zero(num_qubits)
    if ref.num_qubits != num_qubits:
        raise ValueError("reference state register size mismatch")
    return ref


def target_echo_state(target: Target, reference: sim.Statevector) -> tuple[np.ndarray, bool]:
    """State the trainable circuit must reach, and whether it runs as adjoint.

    For a unitary target U the echo compares U^dagger|ref> against the adjoint
    circuit run; for a state target it compares the target against the forward
    run. In both cases kernel = |<echo_state | circuit_run>|^2.
    """
    if isinstance(target, sim.DenseOperator):
        return target.entries.conj().T @ reference.amplitudes, True
    return target.amplitudes, False


def kernel(target: Target, circuit: genome_mod.CircuitGenome, theta: np.ndarray,
           reference: sim.Statevector | None = None) -> float:
    """Squared overlap between the target's action and the circuit's."""
    ref = _reference(reference, circuit.num_qubits)
    if isinstance(target, sim.DenseOperator):
        if target.dim != ref.dim:
            raise ValueError("target dimension mismatch")
        run = genome_mod.bind_and_run(circuit, theta, ref, adjoint=True)
        echoed = target.entries @ run.amplitudes
        return float(np.abs(np.vdot(ref.amplitudes, echoed)) ** 2)
    if target.dim != ref.dim:
        raise ValueError("target dimension mismatch")
    run = genome_mod.bind_and_run(circuit, theta, ref, adjoint=False)
    return float(np.abs(sim.inner_product(target, run)) ** 2)


def multi_target_loss(targets: TargetSet, circuit: genome_mod.CircuitGenome,
                      table: ParameterTable, reference: sim.Statevector | None = None) -> float:
    """One minus the mean kernel over the train split."""
    if table.num_targets != len(targets.targets):
        raise ValueError("parameter table rows must match target count")
    ks = [kernel(targets.targets[i], circuit, table.values[i], reference)
          for i in targets.train_indices]
    return 1.0 - float(np.mean(ks))


def expected_risk(targets: TargetSet, circuit: genome_mod.CircuitGenome,
                  table: ParameterTable, reference: sim.Statevector | None = None,
                  indices: tuple[int, ...] | None = None) -> float:
    """Mean quarter-squared trace distance between target and compiled
    pure states over the test split (train-free generalization measure)."""
    idx = targets.test_indices if indices is None else tuple(indices)
    if not idx:
        raise ValueError("no test targets to evaluate")
    ref = _reference(reference, circuit.num_qubits)
    total = 0.0
    for i in idx:
        echo, adjoint = target_echo_state(targets.targets[i], ref)
        run = genome_mod.bind_and_run(circuit, table.values[i], ref, adjoint=adjoint)
        diff = np.outer(echo, echo.conj()) - np.outer(run.amplitudes, run.amplitudes.conj())
        total += 0.25 * sim.trace_norm(diff) ** 2
    return total / len(idx)


# ---------------------------------------------------------------------------
# mixed-state metrics

def _psd_root(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def uhlmann_fidelity(rho: sim.DenseOperator, sigma: sim.DenseOperator) -> float:
    """F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clamped to [0, 1].

    Evaluated as the squared nuclear norm of sqrt(rho) sqrt(sigma): summing
    singular values of the product keeps near-pure inputs accurate, where
    square-rooting the tiny eigenvalues of the sandwiched product would
    amplify rounding noise to ~1e-8."""
    for m in (rho, sigma):
        if m.kind != "density":
            raise ValueError("fidelity expects density operators")
    if rho.dim != sigma.dim:
        raise ValueError("dimension mismatch")
    f = sim.trace_norm(_psd_root(rho.entries) @ _psd_root(sigma.entries)) ** 2
    return min(max(f, 0.0), 1.0)


def purity(rho: sim.DenseOperator) -> float:
    """Tr[rho^2]; 2**-n for the maximally mixed state, 1 for pure states."""
    if rho.kind != "density":
        raise ValueError("purity expects a density operator")
    return float(np.real(np.trace(rho.entries @ rho.entries)))


def weighted_sum_fidelity(fidelities, betas, weights=DEFAULT_WEIGHTS,
                          edges=DEFAULT_EDGES) -> float:
    """Weighted mean of per-interval average fidelities over an inverse-
    temperature grid; intervals without samples drop out of both sums."""
    fid = np.asarray(fidelities, dtype=np.float64)
    bet = np.asarray(betas, dtype=np.float64)
    if fid.shape != bet.shape or fid.ndim != 1 or fid.size == 0:
        raise ValueError("fidelities and betas must be matching non-empty vectors")
    if len(weights) != len(edges) - 1:
        raise ValueError("need one weight per interval")
    if np.any(bet < edges[0]) or np.any(bet > edges[-1]):
        raise ValueError("beta outside the weighted-interval range")
    num = den = 0.0
    for k, w in enumerate(weights):
        lo, hi = edges[k], edges[k + 1]
        last = k == len(weights) - 1
        mask = (bet >= lo) & ((bet <= hi) if last else (bet < hi))
        if not np.any(mask):
            continue
        num += w * float(np.mean(fid[mask]))
        den += w
    if den == 0.0:
        raise ValueError("all intervals empty")
    return num / den


def vqe_energy(circuit: genome_mod.CircuitGenome, theta: np.ndarray,
               hamiltonian: sim.PauliSum) -> float:
    """Energy expectation of the circuit state on |0...0>."""
    state = genome_mod.bind_and_run(circuit, theta)
    return sim.pauli_expectation(state, hamiltonian)


def magnetization(state: sim.Statevector, qubit: int) -> float:
    """<Z_qubit> = p(0) - p(1) read from computational-basis probabilities."""
    p0, p1 = sim.qubit_probabilities(state, qubit)
    return p0 - p1
