"""Statevector simulation primitives.

Conventions used throughout the package:

* Little-endian qubit ordering: qubit ``k`` is bit ``k`` of the basis-state
  index, so ``|q_{n-1} ... q_1 q_0>`` maps to the integer ``sum(q_k << k)``.
* States are dense complex128 vectors of length ``2**num_qubits``.
* Rotation gates follow ``R_P(theta) = exp(-i * theta/2 * P)`` for a Pauli
  generator ``P`` (including the two-qubit ``XX``/``YY``/``ZZ`` variants).
* Gates are applied with bit-masked index arithmetic; full ``2^N x 2^N``
  matrices are only ever built for targets and test oracles.
* Pauli words are strings over ``IXYZ`` where character ``k`` acts on
  qubit ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SQRT_HALF = 1.0 / np.sqrt(2.0)

ONE_QUBIT_KINDS = ("H", "S", "RX", "RY", "RZ")
TWO_QUBIT_KINDS = ("CX", "RXX", "RYY", "RZZ")
PARAMETRIC_KINDS = ("RX", "RY", "RZ", "RXX", "RYY", "RZZ")
GATE_KINDS = ONE_QUBIT_KINDS + TWO_QUBIT_KINDS


def gate_arity(kind: str) -> int:
    if kind in TWO_QUBIT_KINDS:
        return 2
    if kind in ONE_QUBIT_KINDS:
        return 1
    raise ValueError(f"unknown gate kind {kind!r}")


def is_parametric(kind: str) -> bool:
    if kind not in GATE_KINDS:
        raise ValueError(f"unknown gate kind {kind!r}")
    return kind in PARAMETRIC_KINDS


@dataclass(frozen=True)
class Statevector:
    """Normalized pure state on ``num_qubits`` qubits."""

    amplitudes: np.ndarray
    num_qubits: int = field(default=-1)

    def __post_init__(self) -> None:
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        n = int(amps.size).bit_length() - 1
        if amps.ndim != 1 or amps.size != 1 << n or amps.size < 2:
            raise ValueError(f"amplitude vector length {amps.size} is not a power of two >= 2")
        if self.num_qubits == -1:
            object.__setattr__(self, "num_qubits", n)
        elif self.num_qubits != n:
            raise ValueError(f"num_qubits={self.num_qubits} does not match vector length {amps.size}")
        norm = float(np.real(np.vdot(amps, amps)))
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state norm^2 = {norm} deviates from 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        if num_qubits < 1:
            raise ValueError("need at least one qubit")
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, num_qubits)

    @property
    def dim(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True)
class DenseOperator:
    """Square matrix tagged with the invariant class it is expected to satisfy.

    kind is one of "unitary" (U+U ~ I), "hermitian" (M+ ~ M) or "density"
    (hermitian, trace one, positive semidefinite).
    """

    entries: np.ndarray
    kind: str

    _TOL = 1e-10

    def __post_init__(self) -> None:
        m = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator must be a square matrix")
        if self.kind == "unitary":
            err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
            if err > self._TOL:
                raise ValueError(f"unitarity violated by {err:.3e}")
        elif self.kind == "hermitian":
            err = np.max(np.abs(m - m.conj().T))
            if err > self._TOL:
                raise ValueError(f"hermiticity violated by {err:.3e}")
        elif self.kind == "density":
            err = np.max(np.abs(m - m.conj().T))
            tr = complex(np.trace(m))
            lo = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2.0)))
            if err > self._TOL or abs(tr - 1.0) > self._TOL or lo < -self._TOL:
                raise ValueError("density matrix must be hermitian, unit trace, PSD")
        else:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def num_qubits(self) -> int:
        return int(self.dim.bit_length() - 1)


@dataclass(frozen=True)
class PauliSum:
    """Real linear combination of Pauli words on a fixed register.

    Duplicate words are merged and exact-zero coefficients dropped at
    construction, preserving first-appearance order.
    """

    num_qubits: int
    terms: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        merged: dict[str, float] = {}
        for word, coeff in self.terms:
            if len(word) != self.num_qubits or any(c not in "IXYZ" for c in word):
                raise ValueError(f"bad Pauli word {word!r} for {self.num_qubits} qubits")
            if isinstance(coeff, complex):
                if abs(coeff.imag) > 0.0:
                    raise ValueError(f"coefficient of {word} must be real, got {coeff}")
                coeff = coeff.real
            merged[word] = merged.get(word, 0.0) + float(coeff)
        object.__setattr__(
            self,
            "terms",
            tuple((w, c) for w, c in merged.items() if c != 0.0),
        )


# ---------------------------------------------------------------------------
# index tables for bit-masked gate application

@lru_cache(maxsize=None)
def _indices_1q(num_qubits: int, qubit: int) -> tuple[np.ndarray, np.ndarray]:
    """Basis indices with the given qubit clear / set, paired positionally."""
    base = np.arange(1 << (num_qubits - 1))
    low = base & ((1 << qubit) - 1)
    idx0 = ((base >> qubit) << (qubit + 1)) | low
    idx1 = idx0 | (1 << qubit)
    idx0.flags.writeable = False
    idx1.flags.writeable = False
    return idx0, idx1


@lru_cache(maxsize=None)
def _indices_2q(num_qubits: int, qa: int, qb: int) -> tuple[np.ndarray, ...]:
    """Index quadruple (i00, i01, i10, i11); the pattern is (bit qa, bit qb)."""
    lo, hi = (qa, qb) if qa < qb else (qb, qa)
    base = np.arange(1 << (num_qubits - 2))
    t = ((base >> lo) << (lo + 1)) | (base & ((1 << lo) - 1))
    t = ((t >> hi) << (hi + 1)) | (t & ((1 << hi) - 1))
    quads = []
    for bit_a, bit_b in ((0, 0), (0, 1), (1, 0), (1, 1)):
        idx = t | (bit_a << qa) | (bit_b << qb)
        idx.flags.writeable = False
        quads.append(idx)
    return tuple(quads)


def _theta_cs(theta, dagger: bool):
    """cos/sin of theta/2 shaped for broadcasting over a (batch, dim) array."""
    th = np.asarray(theta, dtype=np.float64)
    if dagger:
        th = -th
    half = th / 2.0
    c, s = np.cos(half), np.sin(half)
    if th.ndim == 1:
        c, s = c[:, None], s[:, None]
    return c, s


def apply_kind_batch(arr: np.ndarray, kind: str, operands: tuple[int, ...],
                     theta=None, dagger: bool = False) -> None:
    """Apply one gate in place to a (batch, 2**n) array of amplitudes.

    theta may be a scalar or a length-batch vector (per-row angles); it must
    be present exactly for parametric kinds.
    """
    n = int(arr.shape[1]).bit_length() - 1
    if any(q < 0 or q >= n for q in operands):
        raise ValueError(f"operands {operands} out of range for {n} qubits")
    if len(operands) != gate_arity(kind):
        raise ValueError(f"{kind} expects {gate_arity(kind)} operands, got {len(operands)}")
    if len(operands) == 2 and operands[0] == operands[1]:
        raise ValueError(f"{kind} operands must be distinct")
    if (theta is None) == is_parametric(kind):
        raise ValueError(f"theta must be supplied iff the gate is parametric ({kind})")

    if kind in ONE_QUBIT_KINDS:
        idx0, idx1 = _indices_1q(n, operands[0])
        if kind == "H":
            v0 = arr[:, idx0].copy()
            arr[:, idx0] = (v0 + arr[:, idx1]) * SQRT_HALF
            arr[:, idx1] = (v0 - arr[:, idx1]) * SQRT_HALF
            return
        if kind == "S":
            arr[:, idx1] *= -1j if dagger else 1j
            return
        c, s = _theta_cs(theta, dagger)
        if kind == "RX":
            v0 = arr[:, idx0].copy()
            arr[:, idx0] = c * v0 - 1j * s * arr[:, idx1]
            arr[:, idx1] = c * arr[:, idx1] - 1j * s * v0
            return
        if kind == "RY":
            v0 = arr[:, idx0].copy()
            arr[:, idx0] = c * v0 - s * arr[:, idx1]
            arr[:, idx1] = c * arr[:, idx1] + s * v0
            return
        # RZ
        arr[:, idx0] *= c - 1j * s
        arr[:, idx1] *= c + 1j * s
        return

    i00, i01, i10, i11 = _indices_2q(n, operands[0], operands[1])
    if kind == "CX":
        v10 = arr[:, i10].copy()
        arr[:, i10] = arr[:, i11]
        arr[:, i11] = v10
        return
    c, s = _theta_cs(theta, dagger)
    if kind == "RZZ":
        even, odd = c - 1j * s, c + 1j * s
        arr[:, i00] *= even
        arr[:, i11] *= even
        arr[:, i01] *= odd
        arr[:, i10] *= odd
        return
    sign = 1j if kind == "RYY" else -1j  # sign of the (00,11) coupling
    v00 = arr[:, i00].copy()
    arr[:, i00] = c * v00 + sign * s * arr[:, i11]
    arr[:, i11] = c * arr[:, i11] + sign * s * v00
    v01 = arr[:, i01].copy()
    arr[:, i01] = c * v01 - 1j * s * arr[:, i10]
    arr[:, i10] = c * arr[:, i10] - 1j * s * v01
    return


def apply_gate(state: Statevector, gate, theta: float | None = None,
               *, dagger: bool = False) -> Statevector:
    """Apply a single gate (anything exposing .kind and .operands) to a state."""
    buf = state.amplitudes.copy().reshape(1, -1)
    apply_kind_batch(buf, gate.kind, tuple(gate.operands), theta, dagger)
    return Statevector(buf[0], state.num_qubits)


def inner_product(a: Statevector, b: Statevector) -> complex:
    if a.num_qubits != b.num_qubits:
        raise ValueError("states live on different registers")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def qubit_probabilities(state: Statevector, qubit: int) -> tuple[float, float]:
    """Marginal probabilities (p0, p1) of one qubit in the computational basis."""
    if qubit < 0 or qubit >= state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    idx0, idx1 = _indices_1q(state.num_qubits, qubit)
    p0 = float(np.sum(np.abs(state.amplitudes[idx0]) ** 2))
    p1 = float(np.sum(np.abs(state.amplitudes[idx1]) ** 2))
    return p0, p1


# ---------------------------------------------------------------------------
# Pauli-sum evaluation

def _word_masks(word: str) -> tuple[int, int, int]:
    mx = my = mz = 0
    for k, ch in enumerate(word):
        if ch == "X":
            mx |= 1 << k
        elif ch == "Y":
            my |= 1 << k
        elif ch == "Z":
            mz |= 1 << k
    return mx, my, mz


def _word_action(word: str, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """P |b> = phase[b] |b ^ flip>; returns (targets b^flip, phase) over all b."""
    mx, my, mz = _word_masks(word)
    flip = mx | my
    b = np.arange(dim)
    parity = np.bitwise_count(b & (my | mz)) & 1
    phase = (1j ** bin(my).count("1")) * np.where(parity, -1.0, 1.0)
    return b ^ flip, phase


def pauli_expectation(state: Statevector, hamiltonian: PauliSum) -> float:
    if hamiltonian.num_qubits != state.num_qubits:
        raise ValueError("operator and state qubit counts differ")
    psi = state.amplitudes
    total = 0.0 + 0.0j
    for word, coeff in hamiltonian.terms:
        tgt, phase = _word_action(word, psi.size)
        # (P psi)[tgt[b]] = phase[b] * psi[b]; contract against conj(psi)
        total += coeff * np.sum(np.conj(psi[tgt]) * phase * psi)
    assert abs(total.imag) < 1e-9, "hermitian expectation drifted complex"
    return float(total.real)


def pauli_sum_to_dense(hamiltonian: PauliSum) -> DenseOperator:
    dim = 1 << hamiltonian.num_qubits
    m = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim)
    for word, coeff in hamiltonian.terms:
        tgt, phase = _word_action(word, dim)
        m[tgt, cols] += coeff * phase
    return DenseOperator(m, "hermitian")


# ---------------------------------------------------------------------------
# dense linear algebra (targets and oracles only)

def eigh(op: DenseOperator) -> tuple[np.ndarray, DenseOperator]:
    """Ascending eigenvalues and the orthonormal eigenvector matrix (columns)."""
    if op.kind not in ("hermitian", "density"):
        raise ValueError("eigh expects a hermitian or density operator")
    vals, vecs = np.linalg.eigh(op.entries)
    return vals, DenseOperator(vecs, "unitary")


def expm_hermitian(op: DenseOperator, scale: complex) -> DenseOperator:
    """exp(scale * H) for hermitian H; scale must be purely real or imaginary."""
    if op.kind not in ("hermitian", "density"):
        raise ValueError("expm_hermitian expects a hermitian operator")
    scale = complex(scale)
    vals, vecs = np.linalg.eigh(op.entries)
    v = vecs * np.exp(scale * vals)
    m = v @ vecs.conj().T
    if scale.real == 0.0:
        return DenseOperator(m, "unitary")
    if scale.imag == 0.0:
        return DenseOperator(m, "hermitian")
    raise ValueError("scale must be purely real or purely imaginary")


def haar_random_unitary(dim: int, rng: np.random.Generator) -> DenseOperator:
    """Haar-distributed unitary via the QR of a Ginibre matrix."""
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))  # fix the phase ambiguity of QR
    return DenseOperator(q, "unitary")


def partial_trace_B(rho: DenseOperator, num_qubits_a: int) -> DenseOperator:
    """Trace out the high-order half of a 2*num_qubits_a register."""
    if rho.kind != "density":
        raise ValueError("partial trace expects a density operator")
    if rho.dim != 1 << (2 * num_qubits_a):
        raise ValueError("operator must act on exactly 2 * num_qubits_a qubits")
    da = 1 << num_qubits_a
    db = rho.dim // da
    r = rho.entries.reshape(db, da, db, da)
    return DenseOperator(np.einsum("iaib->ab", r), "density")


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("trace norm is defined here for square matrices")
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))
