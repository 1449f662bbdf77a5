"""Shared fixtures and independent dense-matrix oracles.

The oracles here rebuild every gate as an explicit matrix (closed-form
cos/sin entries, kron embedding, basis-index loops) so the batched in-place
kernels in gaqc.sim are checked against a second implementation that shares
no code with them. Qubit k is bit k of the basis index (little-endian), so a
single-qubit matrix on qubit q embeds as kron(I_high, U, I_low) with 2**q
low-order dimensions.
"""

import numpy as np
import pytest

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULI = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


def pauli_word_dense(word: str) -> np.ndarray:
    """Dense matrix for a Pauli word, char k acting on qubit k."""
    out = np.array([[1.0 + 0j]])
    for ch in word:  # low-order qubit ends up innermost in the kron chain
        out = np.kron(PAULI[ch], out)
    return out


def embed_1q(mat: np.ndarray, qubit: int, num_qubits: int) -> np.ndarray:
    low = np.eye(1 << qubit, dtype=np.complex128)
    high = np.eye(1 << (num_qubits - qubit - 1), dtype=np.complex128)
    return np.kron(high, np.kron(mat, low))


def _word_for(kind_letter: str, operands, num_qubits: int) -> str:
    return "".join(kind_letter if q in operands else "I" for q in range(num_qubits))


def gate_dense(kind: str, operands, theta, num_qubits: int) -> np.ndarray:
    """Reference matrix for one gate.

    Rotations use exp(-i theta/2 P) = cos(theta/2) I - i sin(theta/2) P,
    exact because every generator squares to the identity. CX is built by an
    explicit basis-index loop."""
    dim = 1 << num_qubits
    if kind == "H":
        return embed_1q(np.array([[1, 1], [1, -1]]) / np.sqrt(2.0), operands[0], num_qubits)
    if kind == "S":
        return embed_1q(np.diag([1.0, 1j]).astype(np.complex128), operands[0], num_qubits)
    if kind == "CX":
        control, target = operands
        mat = np.zeros((dim, dim), dtype=np.complex128)
        for b in range(dim):
            flipped = b ^ (1 << target) if (b >> control) & 1 else b
            mat[flipped, b] = 1.0
        return mat
    if kind in ("RX", "RY", "RZ"):
        word = _word_for(kind[1], operands, num_qubits)
    elif kind in ("RXX", "RYY", "RZZ"):
        word = _word_for(kind[1], operands, num_qubits)
    else:
        raise ValueError(f"oracle has no gate {kind!r}")
    pauli = pauli_word_dense(word)
    return np.cos(theta / 2.0) * np.eye(dim) - 1j * np.sin(theta / 2.0) * pauli


def genome_dense(genome, theta) -> np.ndarray:
    """Full circuit matrix as an ordered product of reference gate matrices."""
    dim = 1 << genome.num_qubits
    mat = np.eye(dim, dtype=np.complex128)
    for gene in genome.genes:
        angle = theta[gene.param_slot] if gene.param_slot is not None else None
        mat = gate_dense(gene.kind, gene.operands, angle, genome.num_qubits) @ mat
    return mat


def random_state(num_qubits: int, rng: np.random.Generator) -> np.ndarray:
    amps = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return amps / np.linalg.norm(amps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)


# Acceptance tests register one line each here; echoing them in the terminal
# summary keeps the pass/fail ledger visible even when every test passes.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
