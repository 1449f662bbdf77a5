"""Target constructors for the three application pipelines.

Covers Haar-random benchmark sets, transverse-field Ising thermal states
(Gibbs ensembles, their purifications and dephasings), the time-dependent
XX/YY/ZZ/X chain with its discretized exact propagator and first/second
order product-formula circuits, and Pauli-sum Hamiltonian files for the
eigensolver mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cost, genome as genome_mod, sim


@dataclass(frozen=True)
class ThermalSpec:
    """Inverse-temperature grid for thermal-state preparation.

    method "dense" prepares an N-qubit purification whose eigenbasis
    dephasing is the Gibbs state; "conventional" prepares the two-copy
    thermofield double on 2N qubits and traces out the ancilla half.
    """

    num_qubits: int
    betas: tuple[float, ...]
    method: str = "dense"

    def __post_init__(self) -> None:
        if self.num_qubits < 2:
            raise ValueError("thermal model needs at least two qubits")
        if self.method not in ("dense", "conventional"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.betas:
            raise ValueError("empty beta grid")
        if any(b < 0 for b in self.betas):
            raise ValueError("inverse temperatures must be non-negative")
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))


@dataclass(frozen=True)
class DynamicsSpec:
    """Open-chain model H(t) = -J/2 sum_j [(1-t/T) XX + (1+t/T) YY]
    + u sum_j ZZ + h sum_j X, integrated on a fixed-step grid."""

    num_qubits: int
    coupling: float = 1.0    # J
    zz: float = 0.0          # u
    field: float = 0.0       # h
    total_time: float = 10.0
    dt: float = 0.1
    substeps: int = 5
    trotter_r: int = 100

    def __post_init__(self) -> None:
        if self.num_qubits < 2:
            raise ValueError("chain needs at least two qubits")
        if self.dt <= 0 or self.total_time <= 0 or self.substeps < 1 or self.trotter_r < 1:
            raise ValueError("grid parameters must be positive")


def haar_target_set(num_qubits: int, n_train: int, n_test: int,
                    rng: np.random.Generator) -> cost.TargetSet:
    """Independent Haar-random unitaries split into train and test groups."""
    if n_train < 1 or n_test < 0:
        raise ValueError("need at least one training target")
    dim = 1 << num_qubits
    targets = tuple(sim.haar_random_unitary(dim, rng) for _ in range(n_train + n_test))
    return cost.TargetSet(num_qubits, targets,
                          tuple(range(n_train)),
                          tuple(range(n_train, n_train + n_test)))


# ---------------------------------------------------------------------------
# transverse-field Ising thermal states

def tfim_hamiltonian(num_qubits: int) -> sim.PauliSum:
    """Ring ZZ couplings plus uniform X field; the two-site ring merges its
    doubled bond into a single coefficient-2 term."""
    if num_qubits < 2:
        raise ValueError("ring needs at least two qubits")
    terms = []
    for j in range(num_qubits):
        k = (j + 1) % num_qubits
        word = "".join("Z" if q in (j, k) else "I" for q in range(num_qubits))
        terms.append((word, 1.0))
    for j in range(num_qubits):
        word = "".join("X" if q == j else "I" for q in range(num_qubits))
        terms.append((word, 1.0))
    return sim.PauliSum(num_qubits, tuple(terms))


def gibbs_state(hamiltonian: sim.PauliSum, beta: float
                ) -> tuple[sim.DenseOperator, np.ndarray, sim.DenseOperator, float]:
    """Thermal density operator exp(-beta H)/Z with its eigendecomposition.

    Returns (rho, energies ascending, eigenbasis columns, partition function).
    Weights are computed relative to the ground energy so rho stays finite at
    large beta."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    energies, basis = sim.eigh(sim.pauli_sum_to_dense(hamiltonian))
    shifted = np.exp(-beta * (energies - energies[0]))
    probs = shifted / np.sum(shifted)
    v = basis.entries
    rho = (v * probs) @ v.conj().T
    z = float(np.sum(np.exp(-beta * energies)))
    return sim.DenseOperator(rho, "density"), energies, basis, z


def thermal_probabilities(hamiltonian: sim.PauliSum, beta: float) -> np.ndarray:
    energies, _ = sim.eigh(sim.pauli_sum_to_dense(hamiltonian))
    shifted = np.exp(-beta * (energies - energies[0]))
    return shifted / np.sum(shifted)


def dense_purified_state(hamiltonian: sim.PauliSum, beta: float) -> sim.Statevector:
    """Equal-register purification: sum_j sqrt(p_j) |E_j> on N qubits. Its
    dephasing in the energy eigenbasis reproduces the Gibbs state exactly."""
    _, energies_basis = sim.eigh(sim.pauli_sum_to_dense(hamiltonian))
    probs = thermal_probabilities(hamiltonian, beta)
    amps = energies_basis.entries @ np.sqrt(probs)
    return sim.Statevector(amps, hamiltonian.num_qubits)


def tfd_state(hamiltonian: sim.PauliSum, beta: float) -> sim.Statevector:
    """Thermofield double sum_j sqrt(p_j) |E_j>_A |E_j>_B on 2N qubits, with
    the A copy on the low-order half of the register."""
    _, basis = sim.eigh(sim.pauli_sum_to_dense(hamiltonian))
    probs = thermal_probabilities(hamiltonian, beta)
    v = basis.entries
    mat = (v * np.sqrt(probs)) @ v.T  # mat[a, b] = sum_j sqrt(p_j) v[a,j] v[b,j]
    return sim.Statevector(mat.T.ravel(), 2 * hamiltonian.num_qubits)


def eigenbasis_dephase(state: sim.Statevector, basis: sim.DenseOperator) -> sim.DenseOperator:
    """Drop coherences between the basis columns: sum_j |<j|psi>|^2 |j><j|."""
    if basis.dim != state.dim:
        raise ValueError("basis dimension mismatch")
    overlaps = basis.entries.conj().T @ state.amplitudes
    probs = np.abs(overlaps) ** 2
    probs = probs / np.sum(probs)
    rho = (basis.entries * probs) @ basis.entries.conj().T
    return sim.DenseOperator(rho, "density")


# ---------------------------------------------------------------------------
# time-dependent chain dynamics

def td_hamiltonian(spec: DynamicsSpec, t: float) -> sim.PauliSum:
    """Instantaneous Hamiltonian at time t; zero-coefficient terms drop out."""
    if t < 0 or t > spec.total_time + 1e-12:
        raise ValueError("time outside [0, total_time]")
    n = spec.num_qubits
    ramp = t / spec.total_time
    terms = []

    def bond(p: str, j: int) -> str:
        return "".join(p if q in (j, j + 1) else "I" for q in range(n))

    for j in range(n - 1):
        terms.append((bond("X", j), -0.5 * spec.coupling * (1.0 - ramp)))
    for j in range(n - 1):
        terms.append((bond("Y", j), -0.5 * spec.coupling * (1.0 + ramp)))
    for j in range(n - 1):
        terms.append((bond("Z", j), spec.zz))
    for j in range(n):
        terms.append(("".join("X" if q == j else "I" for q in range(n)), spec.field))
    return sim.PauliSum(n, tuple(terms))


def _step_count(spec: DynamicsSpec, t: float, substeps: int) -> int:
    tau = spec.dt / substeps
    steps = round(t / tau)
    if abs(steps * tau - t) > 1e-9:
        raise ValueError(f"time {t} is not aligned with the dt/substeps grid")
    return steps


def exact_propagator(spec: DynamicsSpec, t: float,
                     substeps: int | None = None) -> sim.DenseOperator:
    """Left-endpoint product of sub-interval exponentials from 0 to t.

    The time-ordered integral is discretized as an ordered product of
    exp(-i tau H(s_k)) over sub-intervals of width tau = dt/substeps;
    raising substeps refines the discretization."""
    k = substeps if substeps is not None else spec.substeps
    steps = _step_count(spec, t, k)
    tau = spec.dt / k
    dim = 1 << spec.num_qubits
    u = np.eye(dim, dtype=np.complex128)
    for s in range(steps):
        h = sim.pauli_sum_to_dense(td_hamiltonian(spec, s * tau))
        u = sim.expm_hermitian(h, -1j * tau).entries @ u
    return sim.DenseOperator(u, "unitary")


_WORD_TO_KIND = {"XX": "RXX", "YY": "RYY", "ZZ": "RZZ", "X": "RX", "Y": "RY", "Z": "RZ"}


def _term_gate(word: str) -> genome_mod.Gene:
    ops = tuple(q for q, ch in enumerate(word) if ch != "I")
    letters = "".join(word[q] for q in ops)
    kind = _WORD_TO_KIND.get(letters)
    if kind is None or len(ops) > 2:
        raise ValueError(f"no native rotation for Pauli word {word!r}")
    return genome_mod.Gene(kind, ops, None)


def _trotter_step_gates(spec: DynamicsSpec, s: float, tau: float, order: int,
                        r: int) -> list[tuple[genome_mod.Gene, float]]:
    """Product-formula gates for exp(-i tau H(s)); rotation angles follow
    R_P(theta) = exp(-i theta/2 P), so theta = 2 * coeff * tau / r."""
    terms = td_hamiltonian(spec, s).terms
    gates = []
    if order == 1:
        rep = [(_term_gate(w), 2.0 * c * tau / r) for w, c in terms]
        for _ in range(r):
            gates.extend(rep)
        return gates
    if order == 2:
        half = [(_term_gate(w), c * tau / r) for w, c in terms]
        rep = half + half[::-1]
        for _ in range(r):
            gates.extend(rep)
        return gates
    raise ValueError("order must be 1 or 2")


def trotter_circuit(spec: DynamicsSpec, t: float, order: int,
                    r: int | None = None,
                    substeps: int | None = None) -> list[tuple[genome_mod.Gene, float]]:
    """Fixed-angle gate sequence approximating the propagator from 0 to t."""
    reps = r if r is not None else spec.trotter_r
    k = substeps if substeps is not None else spec.substeps
    steps = _step_count(spec, t, k)
    tau = spec.dt / k
    gates: list[tuple[genome_mod.Gene, float]] = []
    for s in range(steps):
        gates.extend(_trotter_step_gates(spec, s * tau, tau, order, reps))
    return gates


def apply_gate_sequence(state: sim.Statevector,
                        gates: list[tuple[genome_mod.Gene, float]]) -> sim.Statevector:
    buf = state.amplitudes.copy().reshape(1, -1)
    for gene, theta in gates:
        th = theta if sim.is_parametric(gene.kind) else None
        sim.apply_kind_batch(buf, gene.kind, gene.operands, th)
    return sim.Statevector(buf[0], state.num_qubits)


def exact_states(spec: DynamicsSpec, times, initial: sim.Statevector,
                 substeps: int | None = None) -> list[sim.Statevector]:
    """Discretized-propagator trajectory sampled at the requested grid times."""
    k = substeps if substeps is not None else spec.substeps
    tau = spec.dt / k
    marks = [_step_count(spec, t, k) for t in times]
    if sorted(marks) != marks:
        raise ValueError("times must be ascending")
    psi = initial.amplitudes.copy().reshape(1, -1)
    out = []
    done = 0
    for mark in marks:
        for s in range(done, mark):
            h = td_hamiltonian(spec, s * tau)
            step = sim.expm_hermitian(sim.pauli_sum_to_dense(h), -1j * tau)
            psi[0] = step.entries @ psi[0]
        done = mark
        out.append(sim.Statevector(psi[0].copy(), spec.num_qubits))
    return out


def trotter_states(spec: DynamicsSpec, times, initial: sim.Statevector, order: int,
                   r: int | None = None,
                   substeps: int | None = None) -> list[sim.Statevector]:
    """Product-formula trajectory sampled at the requested grid times."""
    reps = r if r is not None else spec.trotter_r
    k = substeps if substeps is not None else spec.substeps
    tau = spec.dt / k
    marks = [_step_count(spec, t, k) for t in times]
    if sorted(marks) != marks:
        raise ValueError("times must be ascending")
    buf = initial.amplitudes.copy().reshape(1, -1)
    out = []
    done = 0
    for mark in marks:
        for s in range(done, mark):
            for gene, theta in _trotter_step_gates(spec, s * tau, tau, order, reps):
                sim.apply_kind_batch(buf, gene.kind, gene.operands, theta)
        done = mark
        out.append(sim.Statevector(buf[0].copy(), spec.num_qubits))
    return out


def domain_wall_state(num_qubits: int) -> sim.Statevector:
    """|1...10...0> with the low half of the register flipped."""
    if num_qubits < 2 or num_qubits % 2:
        raise ValueError("domain wall needs an even register")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[(1 << (num_qubits // 2)) - 1] = 1.0
    return sim.Statevector(amps, num_qubits)


# ---------------------------------------------------------------------------
# Hamiltonian files for the eigensolver mode

def load_pauli_hamiltonians(path: str) -> tuple[sim.PauliSum, ...]:
    """Parse blocks of "WORD coefficient" lines separated by --- lines.

    Blank lines and #-comments are ignored; duplicate words within a block
    merge; all blocks must share one register size; an empty file or empty
    block is an error."""
    blocks: list[list[tuple[str, float]]] = []
    current: list[tuple[str, float]] = []

    def close_block() -> None:
        nonlocal current
        if not current:
            raise ValueError("empty Hamiltonian block")
        blocks.append(current)
        current = []

    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if set(line) == {"-"} and len(line) >= 3:
                close_block()
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{ln}: expected 'WORD coefficient', got {raw!r}")
            word, coeff_text = parts
            try:
                coeff = float(coeff_text)
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: bad coefficient {coeff_text!r}") from exc
            current.append((word, coeff))
    if current:
        close_block()
    if not blocks:
        raise ValueError(f"{path}: no Hamiltonians found")
    sums = tuple(sim.PauliSum(len(block[0][0]), tuple(block)) for block in blocks)
    if any(h.num_qubits != sums[0].num_qubits for h in sums):
        raise ValueError(f"{path}: blocks declare inconsistent qubit counts")
    return sums
