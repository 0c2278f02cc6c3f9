"""Gate-level circuit representation for up to 3 qubits.

Conventions shared by the whole package:

* qubit 0 is the leftmost tensor factor; basis index b = b0 b1 ... (b0 most
  significant), so for two qubits index = 2*b0 + b1;
* |0> = |up> = (1, 0)^T;
* Rz(t) = exp(-i t Z / 2) and likewise Rx, Ry, Rxx, Ryy, Rzz.

Circuits are immutable values: operations that "modify" return new objects.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
H_GATE = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_GATE = np.array([[1, 0], [0, 1j]], dtype=complex)

UNITARY_1Q = "unitary1"
UNITARY_2Q = "unitary2"
CONTROLLED_PAULI = "controlled_pauli"
DEPOLARIZE = "depolarize"
MEASURE = "measure"

_KINDS = (UNITARY_1Q, UNITARY_2Q, CONTROLLED_PAULI, DEPOLARIZE, MEASURE)


@dataclass(frozen=True)
class GateOp:
    """One circuit element: unitary gate, noise channel, or projective measurement.

    ``matrix`` holds the local unitary (2x2 or 4x4) for unitary kinds and the
    Hermitian involution G for ``measure``; ``param`` holds the rotation angle
    or depolarizing probability where applicable. ``weight`` is the
    CNOT-equivalent cost used for entangling-gate accounting (1 for plain
    two-qubit gates; fused interaction blocks carry their compilation cost).
    """

    kind: str
    targets: tuple
    matrix: np.ndarray | None = None
    label: str = ""
    param: float | None = None
    weight: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=complex)
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
            if self.kind in (UNITARY_1Q, UNITARY_2Q, CONTROLLED_PAULI):
                dim = m.shape[0]
                if not np.allclose(m.conj().T @ m, np.eye(dim), atol=1e-12):
                    raise ValueError(f"gate {self.label!r} is not unitary within 1e-12")
            if self.kind == MEASURE:
                dim = m.shape[0]
                if not np.allclose(m @ m, np.eye(dim), atol=1e-10):
                    raise ValueError("projective-measure operator must satisfy G^2 = I")

    @property
    def is_entangling(self) -> bool:
        """True for two-qubit unitary gates (the noise-relevant count)."""
        return self.kind in (UNITARY_2Q, CONTROLLED_PAULI)

    def dagger(self) -> "GateOp":
        if self.kind in (DEPOLARIZE, MEASURE):
            raise ValueError(f"cannot invert non-unitary op {self.kind}")
        return replace(self, matrix=self.matrix.conj().T)

    def shifted(self, offset: int) -> "GateOp":
        return replace(self, targets=tuple(q + offset for q in self.targets))


@dataclass(frozen=True)
class Circuit:
    """Ordered gate/channel/measurement sequence on ``n_qubits`` qubits."""

    n_qubits: int
    ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            if any(q < 0 or q >= self.n_qubits for q in op.targets):
                raise ValueError(f"gate target {op.targets} out of range for {self.n_qubits} qubits")

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different widths")
        return Circuit(self.n_qubits, self.ops + other.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def repeated(self, n: int) -> "Circuit":
        return Circuit(self.n_qubits, self.ops * int(n))

    def dagger(self) -> "Circuit":
        return Circuit(self.n_qubits, tuple(op.dagger() for op in reversed(self.ops)))

    def embedded(self, n_qubits: int, offset: int = 0) -> "Circuit":
        """Same gates acting on qubits shifted by ``offset`` in a wider register."""
        return Circuit(n_qubits, tuple(op.shifted(offset) for op in self.ops))

    def two_qubit_gate_count(self) -> int:
        """CNOT-equivalent entangling-gate count (sums op weights)."""
        return sum(op.weight for op in self.ops if op.is_entangling)

    def unitary(self) -> np.ndarray:
        """Dense unitary of the circuit. Noise/measure ops are rejected."""
        u = np.eye(2 ** self.n_qubits, dtype=complex)
        for op in self.ops:
            if op.kind in (DEPOLARIZE, MEASURE):
                raise ValueError("circuit with channels/measurements has no unitary")
            u = embed(op.matrix, op.targets, self.n_qubits) @ u
        return u


def embed(matrix: np.ndarray, targets: tuple, n_qubits: int) -> np.ndarray:
    """Embed a local operator on ``targets`` into the full 2^n space.

    Works for any target ordering; for two-qubit gates the matrix is given in
    the (targets[0], targets[1]) tensor order.
    """
    k = len(targets)
    if len(set(targets)) != k:
        raise ValueError("duplicate gate targets")
    rest = [q for q in range(n_qubits) if q not in targets]
    perm = list(targets) + rest
    op = np.kron(np.asarray(matrix, dtype=complex), np.eye(2 ** (n_qubits - k)))
    t = op.reshape([2] * (2 * n_qubits))
    # move row and column axes back to the natural qubit order
    inv = np.argsort(perm)
    t = np.transpose(t, list(inv) + [n_qubits + p for p in inv])
    return t.reshape(2 ** n_qubits, 2 ** n_qubits)


# -- single-qubit gates -------------------------------------------------------

def _rot(axis: np.ndarray, t: float) -> np.ndarray:
    return np.cos(t / 2) * I2 - 1j * np.sin(t / 2) * axis


def rx(q: int, t: float) -> GateOp:
    return GateOp(UNITARY_1Q, (q,), _rot(PAULI["X"], t), "rx", t)


def ry(q: int, t: float) -> GateOp:
    return GateOp(UNITARY_1Q, (q,), _rot(PAULI["Y"], t), "ry", t)


def rz(q: int, t: float) -> GateOp:
    return GateOp(UNITARY_1Q, (q,), _rot(PAULI["Z"], t), "rz", t)


def pauli_gate(q: int, label: str) -> GateOp:
    return GateOp(UNITARY_1Q, (q,), PAULI[label], label.lower())


def h(q: int) -> GateOp:
    return GateOp(UNITARY_1Q, (q,), H_GATE, "h")


def s(q: int) -> GateOp:
    return GateOp(UNITARY_1Q, (q,), S_GATE, "s")


def sdg(q: int) -> GateOp:
    return GateOp(UNITARY_1Q, (q,), S_GATE.conj().T, "sdg")


def u1q(q: int, matrix: np.ndarray, label: str = "u") -> GateOp:
    return GateOp(UNITARY_1Q, (q,), matrix, label)


def euler_zyz(q: int, a: float, b: float, c: float, label: str = "u3") -> GateOp:
    return u1q(q, _rot(PAULI["Z"], a) @ _rot(PAULI["Y"], b) @ _rot(PAULI["Z"], c), label)


def pauli_rotation_gate(q: int, axis: str, t: float) -> GateOp:
    return GateOp(UNITARY_1Q, (q,), _rot(PAULI[axis.upper()], t), f"r{axis.lower()}", t)


# -- two-qubit gates ----------------------------------------------------------

def cx(control: int, target: int) -> GateOp:
    return controlled_pauli(control, target, "X")


def cz(control: int, target: int) -> GateOp:
    return controlled_pauli(control, target, "Z")


def controlled_pauli(control: int, target: int, label: str) -> GateOp:
    p = PAULI[label.upper()]
    m = np.zeros((4, 4), dtype=complex)
    m[:2, :2] = I2
    m[2:, 2:] = p
    return GateOp(CONTROLLED_PAULI, (control, target), m, f"c{label.lower()}")


def _rot2(axis: str, t: float) -> np.ndarray:
    p = np.kron(PAULI[axis[0]], PAULI[axis[1]])
    return np.cos(t / 2) * np.eye(4) - 1j * np.sin(t / 2) * p


def rxx(q0: int, q1: int, t: float) -> GateOp:
    return GateOp(UNITARY_2Q, (q0, q1), _rot2("XX", t), "rxx", t)


def ryy(q0: int, q1: int, t: float) -> GateOp:
    return GateOp(UNITARY_2Q, (q0, q1), _rot2("YY", t), "ryy", t)


def rzz(q0: int, q1: int, t: float) -> GateOp:
    return GateOp(UNITARY_2Q, (q0, q1), _rot2("ZZ", t), "rzz", t)


def u2q(q0: int, q1: int, matrix: np.ndarray, label: str = "u4", weight: int = 1) -> GateOp:
    return GateOp(UNITARY_2Q, (q0, q1), matrix, label, weight=weight)


def pauli_interaction(q0: int, q1: int, ax: float, ay: float, az: float) -> GateOp:
    """Fused exp(-i (ax XX + ay YY + az ZZ)) as one native two-qubit gate.

    The three generators commute, so this equals the ordered product of the
    individual term exponentials exactly. Its entangling weight is the
    CNOT-equivalent compilation cost: 3 when more than one term is present,
    2 for a single sigma-sigma rotation.
    """
    gen = (ax * np.kron(PAULI["X"], PAULI["X"])
           + ay * np.kron(PAULI["Y"], PAULI["Y"])
           + az * np.kron(PAULI["Z"], PAULI["Z"]))
    vals, vecs = np.linalg.eigh(gen)
    mat = (vecs * np.exp(-1j * vals)) @ vecs.conj().T
    n_terms = sum(1 for a in (ax, ay, az) if a != 0.0)
    return GateOp(UNITARY_2Q, (q0, q1), mat, "xyz", weight=3 if n_terms >= 2 else 2)


# -- non-unitary ops ----------------------------------------------------------

def depolarize(targets: tuple, p: float) -> GateOp:
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing probability must lie in [0, 1]")
    return GateOp(DEPOLARIZE, tuple(targets), None, "depol", p)


def measure_involution(targets: tuple, g: np.ndarray, label: str = "Mg") -> GateOp:
    return GateOp(MEASURE, tuple(targets), g, label)
