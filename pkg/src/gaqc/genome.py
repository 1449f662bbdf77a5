"""Circuit genomes: flat gate sequences with trainable rotation angles.

A genome is an ordered tuple of genes. Parametric genes carry a parameter
slot; slots are always the canonical sequence 0..m-1 in gene order, so a
parameter vector of length m binds positionally. Structure (kinds, operands)
is evolved by the genetic outer loop; angles are tuned by the inner optimizer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import sim

# gate pool for random structure search; two-qubit gates are dropped
# automatically on a single qubit. The parametric couplers are what let a
# shallow structure trade entangling power against angle count.
POOL = ("H", "S", "CX", "RX", "RY", "RZ", "RXX", "RYY", "RZZ")


@dataclass(frozen=True)
class Gene:
    kind: str
    operands: tuple[int, ...]
    param_slot: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "operands", tuple(int(q) for q in self.operands))
        arity = sim.gate_arity(self.kind)
        if len(self.operands) != arity:
            raise ValueError(f"{self.kind} takes {arity} operands, got {self.operands}")
        if arity == 2 and self.operands[0] == self.operands[1]:
            raise ValueError(f"{self.kind} operands must be distinct")
        if any(q < 0 for q in self.operands):
            raise ValueError("operands must be non-negative qubit indices")
        if self.param_slot is not None and not sim.is_parametric(self.kind):
            raise ValueError(f"{self.kind} carries no parameter")


class GenomeMetrics(NamedTuple):
    depth: int
    one_qubit_gates: int
    two_qubit_gates: int
    param_count: int


@dataclass(frozen=True)
class CircuitGenome:
    num_qubits: int
    genes: tuple[Gene, ...]
    param_count: int

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        slot = 0
        for g in self.genes:
            if any(q >= self.num_qubits for q in g.operands):
                raise ValueError(f"gene {g} out of range for {self.num_qubits} qubits")
            if sim.is_parametric(g.kind):
                if g.param_slot != slot:
                    raise ValueError(f"param slots must run 0..m-1 in gene order, got {g.param_slot} at position {slot}")
                slot += 1
            elif g.param_slot is not None:
                raise ValueError(f"{g.kind} gene must not carry a slot")
        if slot != self.param_count:
            raise ValueError(f"param_count={self.param_count} but genes define {slot} slots")

    @classmethod
    def from_genes(cls, num_qubits: int, genes: Iterable[Gene]) -> "CircuitGenome":
        """Build a genome, renumbering parameter slots canonically."""
        out = []
        slot = 0
        for g in genes:
            if sim.is_parametric(g.kind):
                out.append(Gene(g.kind, g.operands, slot))
                slot += 1
            else:
                out.append(Gene(g.kind, g.operands, None))
        return cls(num_qubits, tuple(out), slot)

    def __len__(self) -> int:
        return len(self.genes)


def scheduled_depth(genome: CircuitGenome) -> int:
    """Circuit depth under greedy as-soon-as-possible layering."""
    wire = [0] * genome.num_qubits
    for g in genome.genes:
        layer = 1 + max(wire[q] for q in g.operands)
        for q in g.operands:
            wire[q] = layer
    return max(wire) if wire else 0


def metrics(genome: CircuitGenome) -> GenomeMetrics:
    one = sum(1 for g in genome.genes if len(g.operands) == 1)
    two = len(genome.genes) - one
    return GenomeMetrics(scheduled_depth(genome), one, two, genome.param_count)


def random_genome(num_qubits: int, target_depth: int, rng: np.random.Generator,
                  pool: tuple[str, ...] = POOL) -> CircuitGenome:
    """Draw gates uniformly (kind, then operands) until every wire is filled
    to exactly target_depth.

    Candidates that would overshoot the depth, or that would strand an empty
    slot on one of their wires (a two-qubit gate bridging wires of unequal
    height), are rejected and redrawn, so the result packs the full
    num_qubits x target_depth slot grid with no gaps."""
    if num_qubits < 1:
        raise ValueError("need at least one qubit")
    if target_depth < 0:
        raise ValueError("target depth must be non-negative")
    if num_qubits == 1:
        pool = tuple(k for k in pool if sim.gate_arity(k) == 1)
    if not pool:
        raise ValueError("empty gate pool")

    wire = [0] * num_qubits
    genes: list[Gene] = []
    stall = 0
    while any(d < target_depth for d in wire):
        kind = pool[int(rng.integers(len(pool)))]
        if sim.gate_arity(kind) == 1:
            ops = (int(rng.integers(num_qubits)),)
        else:
            a = int(rng.integers(num_qubits))
            b = int(rng.integers(num_qubits - 1))
            ops = (a, b + 1 if b >= a else b)
        heights = [wire[q] for q in ops]
        layer = 1 + max(heights)
        if layer > target_depth or min(heights) != max(heights):
            stall += 1
            if stall > 100_000:
                raise RuntimeError("gate rejection stalled; pool cannot fill the target depth")
            continue
        stall = 0
        for q in ops:
            wire[q] = layer
        genes.append(Gene(kind, ops, None))
    return CircuitGenome.from_genes(num_qubits, genes)


def bind_and_run(genome: CircuitGenome, theta: np.ndarray,
                 input_state: sim.Statevector | None = None,
                 adjoint: bool = False) -> sim.Statevector:
    """Run the circuit (or its adjoint) on input_state (default |0...0>)."""
    base = input_state.amplitudes if input_state is not None else sim.Statevector.zero(genome.num_qubits).amplitudes
    if input_state is not None and input_state.num_qubits != genome.num_qubits:
        raise ValueError("input state register size mismatch")
    out = run_batch(genome, np.asarray(theta, dtype=np.float64).reshape(1, -1), base, adjoint)
    return sim.Statevector(out[0], genome.num_qubits)


def run_batch(genome: CircuitGenome, thetas: np.ndarray, base: np.ndarray,
              adjoint: bool = False) -> np.ndarray:
    """Run the circuit for a batch of parameter vectors.

    thetas has shape (batch, param_count); base is a single (2**n,) amplitude
    vector shared by all rows. Returns a fresh (batch, 2**n) array. Adjoint
    mode applies the inverted gates in reverse order.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    if thetas.ndim != 2 or thetas.shape[1] != genome.param_count:
        raise ValueError(f"theta batch must have shape (B, {genome.param_count})")
    buf = np.broadcast_to(base, (thetas.shape[0], base.size)).copy()
    order = reversed(genome.genes) if adjoint else genome.genes
    for g in order:
        th = thetas[:, g.param_slot] if g.param_slot is not None else None
        sim.apply_kind_batch(buf, g.kind, g.operands, th, dagger=adjoint)
    return buf


# ---------------------------------------------------------------------------
# text serialization (checkpoints, exported circuits)

_HEADER_RE = re.compile(r"^qubits=(\d+) params=(\d+)$")
_GENE_RE = re.compile(r"^([A-Z]+)((?: q\d+)+)( slot\d+)?$")


def to_text(genome: CircuitGenome) -> str:
    lines = [f"qubits={genome.num_qubits} params={genome.param_count}"]
    for g in genome.genes:
        parts = [g.kind] + [f"q{q}" for q in g.operands]
        if g.param_slot is not None:
            parts.append(f"slot{g.param_slot}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> CircuitGenome:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty genome text")
    header = _HEADER_RE.match(lines[0])
    if header is None:
        raise ValueError(f"bad genome header: {lines[0]!r}")
    num_qubits, declared_params = int(header.group(1)), int(header.group(2))
    genes = []
    for ln in lines[1:]:
        m = _GENE_RE.match(ln)
        if m is None:
            raise ValueError(f"bad gene line: {ln!r}")
        kind = m.group(1)
        if kind not in sim.GATE_KINDS:
            raise ValueError(f"unknown gate kind in line: {ln!r}")
        ops = tuple(int(tok[1:]) for tok in m.group(2).split())
        slot = int(m.group(3).strip()[4:]) if m.group(3) else None
        if (slot is None) == sim.is_parametric(kind):
            raise ValueError(f"slot token must be present iff parametric: {ln!r}")
        genes.append(Gene(kind, ops, slot))
    genome = CircuitGenome(num_qubits, tuple(genes), declared_params)
    return genome
