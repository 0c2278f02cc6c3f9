"""Dense few-qubit simulation backend.

Pure states are complex vectors of length 2^n, mixed states 2^n x 2^n density
matrices. Noisy circuits are simulated in the density-matrix representation
(trivial at n <= 3), so deterministic expectation values need no Monte-Carlo
averaging; finite-shot noise is layered on top only in :func:`sample_counts`.

Depolarizing noise decorates every unitary gate it applies to: probability
``p1`` after each single-qubit gate, and a joint two-qubit channel with
probability ``p2`` after each entangling gate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import circuits
from .circuits import Circuit, GateOp, PAULI, embed

ATOL = 1e-10


class SimulationError(ValueError):
    """Raised on malformed states, gates, or measurement preconditions."""


@dataclass(frozen=True)
class QuantumState:
    """Pure state vector or density matrix over ``n_qubits`` (1-3) qubits."""

    n_qubits: int
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        dim = 2 ** self.n_qubits
        if arr.shape not in ((dim,), (dim, dim)):
            raise SimulationError(f"state shape {arr.shape} does not match {self.n_qubits} qubits")

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @classmethod
    def pure(cls, vec, normalize: bool = False) -> "QuantumState":
        vec = np.asarray(vec, dtype=complex)
        n = int(round(np.log2(vec.size)))
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(n, vec)

    @classmethod
    def mixed(cls, rho) -> "QuantumState":
        rho = np.asarray(rho, dtype=complex)
        n = int(round(np.log2(rho.shape[0])))
        return cls(n, rho)

    @classmethod
    def zero(cls, n_qubits: int) -> "QuantumState":
        vec = np.zeros(2 ** n_qubits, dtype=complex)
        vec[0] = 1.0
        return cls(n_qubits, vec)

    def to_density(self) -> "QuantumState":
        if not self.is_pure:
            return self
        return QuantumState(self.n_qubits, np.outer(self.data, self.data.conj()))

    def density(self) -> np.ndarray:
        return self.to_density().data

    def validate(self) -> "QuantumState":
        """Check the representation invariants; raise SimulationError if violated."""
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1.0) > 1e-12:
                raise SimulationError(f"pure state norm {norm} != 1")
        else:
            rho = self.data
            if not np.allclose(rho, rho.conj().T, atol=1e-12):
                raise SimulationError("density matrix is not Hermitian")
            tr = np.trace(rho).real
            if abs(tr - 1.0) > 1e-12:
                raise SimulationError(f"density matrix trace {tr} != 1")
            if np.linalg.eigvalsh(rho).min() < -1e-10:
                raise SimulationError("density matrix has a negative eigenvalue")
        return self

    def probabilities(self) -> np.ndarray:
        if self.is_pure:
            p = np.abs(self.data) ** 2
        else:
            p = np.diag(self.data).real.copy()
        p[p < 0] = 0.0
        return p / p.sum()


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate noise plus per-qubit readout confusion.

    ``readout`` maps qubit index -> 2x2 column-stochastic confusion matrix
    M[observed, prepared]. Qubits without an entry read out perfectly.
    """

    p1: float = 0.0
    p2: float = 0.0
    readout: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0):
            raise SimulationError("depolarizing probabilities must lie in [0, 1]")
        for q, m in self.readout.items():
            m = np.asarray(m, dtype=float)
            if m.shape != (2, 2) or not np.allclose(m.sum(axis=0), 1.0, atol=1e-12):
                raise SimulationError(f"readout confusion for qubit {q} is not column-stochastic")

    @classmethod
    def uniform(cls, p1: float, p2: float, flip: float, n_qubits: int) -> "NoiseModel":
        """Symmetric per-qubit bit-flip readout with probability ``flip``."""
        conf = np.array([[1 - flip, flip], [flip, 1 - flip]])
        return cls(p1, p2, {q: conf for q in range(n_qubits)})

    def confusion(self, qubit: int) -> np.ndarray:
        return np.asarray(self.readout.get(qubit, np.eye(2)), dtype=float)

    @property
    def has_gate_noise(self) -> bool:
        return self.p1 > 0 or self.p2 > 0


def _partial_trace(rho: np.ndarray, traced: tuple, n: int) -> np.ndarray:
    t = rho.reshape([2] * (2 * n))
    for q in sorted(traced, reverse=True):
        t = np.trace(t, axis1=q, axis2=q + (t.ndim // 2))
    k = n - len(traced)
    return t.reshape(2 ** k, 2 ** k)


def _depolarize(rho: np.ndarray, targets: tuple, p: float, n: int) -> np.ndarray:
    """(1-p) rho + p * (maximally mixed on targets) (x) tr_targets(rho)."""
    if p == 0.0:
        return rho
    keep = tuple(q for q in range(n) if q not in targets)
    reduced = _partial_trace(rho, targets, n)
    k = len(targets)
    mixed = np.kron(np.eye(2 ** k) / 2 ** k, reduced)
    # mixed is ordered (targets..., keep...); permute back
    perm = list(targets) + list(keep)
    inv = np.argsort(perm)
    t = mixed.reshape([2] * (2 * n))
    t = np.transpose(t, list(inv) + [n + i for i in inv])
    return (1 - p) * rho + p * t.reshape(rho.shape)


def _apply_unitary(state: QuantumState, op: GateOp) -> QuantumState:
    full = embed(op.matrix, op.targets, state.n_qubits)
    if state.is_pure:
        return QuantumState(state.n_qubits, full @ state.data)
    return QuantumState(state.n_qubits, full @ state.data @ full.conj().T)


def apply_circuit(state: QuantumState, circuit: Circuit,
                  noise: NoiseModel | None = None,
                  rng: np.random.Generator | None = None) -> QuantumState:
    """Run ``circuit`` on ``state``; returns a new state.

    With gate noise present the state is promoted to a density matrix.
    Projective-measurement ops sample a branch and require ``rng``.
    """
    if circuit.n_qubits != state.n_qubits:
        raise SimulationError("circuit width does not match state")
    if noise is not None and noise.has_gate_noise and state.is_pure:
        state = state.to_density()
    for op in circuit.ops:
        if op.kind == circuits.DEPOLARIZE:
            state = QuantumState(state.n_qubits,
                                 _depolarize(state.density(), op.targets, op.param, state.n_qubits))
        elif op.kind == circuits.MEASURE:
            if rng is None:
                raise SimulationError("projective-measure gate encountered without rng")
            g = embed(op.matrix, op.targets, state.n_qubits)
            _, state, _ = project_measure(state, g, rng)
        else:
            state = _apply_unitary(state, op)
            if noise is not None:
                p = noise.p1 if op.kind == circuits.UNITARY_1Q else noise.p2
                if p > 0:
                    state = QuantumState(state.n_qubits,
                                         _depolarize(state.density(), op.targets, p, state.n_qubits))
    return state


def pauli_matrix(pauli: str) -> np.ndarray:
    """Dense matrix of a Pauli string like ``"XZ"`` or ``"IZY"``."""
    pauli = pauli.upper()
    if any(c not in PAULI for c in pauli):
        raise SimulationError(f"malformed Pauli label {pauli!r}")
    m = PAULI[pauli[0]]
    for c in pauli[1:]:
        m = np.kron(m, PAULI[c])
    return m


def expectation(state: QuantumState, operator: np.ndarray) -> float:
    """Real expectation value of a Hermitian operator."""
    if state.is_pure:
        return float(np.real(np.vdot(state.data, operator @ state.data)))
    return float(np.real(np.trace(operator @ state.data)))


def expectation_pauli(state: QuantumState, pauli: str) -> float:
    """<P> for a Pauli string over all qubits (site order = string order)."""
    if len(pauli) != state.n_qubits:
        raise SimulationError(f"Pauli string {pauli!r} does not cover {state.n_qubits} qubits")
    return expectation(state, pauli_matrix(pauli))


def project_measure(state: QuantumState, g: np.ndarray,
                    rng: np.random.Generator) -> tuple:
    """Projective measurement of a Hermitian involution G.

    Returns (outcome in {+1, -1}, post-measurement state, branch probability).
    A sampled branch with probability below 1e-14 signals degeneracy; the
    other branch is taken instead.
    """
    g = np.asarray(g, dtype=complex)
    dim = 2 ** state.n_qubits
    if g.shape != (dim, dim):
        raise SimulationError("measurement operator has wrong dimension")
    if not np.allclose(g @ g, np.eye(dim), atol=1e-10):
        raise SimulationError("measurement operator must satisfy G^2 = I")
    proj = {+1: (np.eye(dim) + g) / 2, -1: (np.eye(dim) - g) / 2}
    p_plus = expectation(state, proj[+1])
    p_plus = min(max(p_plus, 0.0), 1.0)
    outcome = +1 if rng.random() < p_plus else -1
    prob = p_plus if outcome == +1 else 1.0 - p_plus
    if prob < 1e-14:
        outcome = -outcome
        prob = 1.0 - prob
    p = proj[outcome]
    if state.is_pure:
        post = QuantumState(state.n_qubits, (p @ state.data) / np.sqrt(prob))
    else:
        post = QuantumState(state.n_qubits, (p @ state.data @ p) / prob)
    return outcome, post, prob


def branch_states(state: QuantumState, g: np.ndarray) -> dict:
    """Both measurement branches of G deterministically: {+1/-1: (prob, state|None)}."""
    dim = 2 ** state.n_qubits
    out = {}
    for sign in (+1, -1):
        p = (np.eye(dim) + sign * g) / 2
        prob = min(max(expectation(state, p), 0.0), 1.0)
        if prob < 1e-12:
            out[sign] = (prob, None)
        elif state.is_pure:
            out[sign] = (prob, QuantumState(state.n_qubits, (p @ state.data) / np.sqrt(prob)))
        else:
            out[sign] = (prob, QuantumState(state.n_qubits, (p @ state.data @ p) / prob))
    return out


def apply_readout_confusion(probs: np.ndarray, confusions: list) -> np.ndarray:
    """Map Born probabilities through per-qubit confusion matrices."""
    m = confusions[0]
    for c in confusions[1:]:
        m = np.kron(m, c)
    return m @ probs


def sample_counts(state: QuantumState, shots: int,
                  readout: NoiseModel | list | None = None,
                  rng: np.random.Generator | None = None) -> dict:
    """Computational-basis histogram with optional readout confusion.

    ``readout`` may be a NoiseModel (its per-qubit confusions are used) or an
    explicit list of per-qubit 2x2 matrices. Keys are bitstrings with qubit 0
    leftmost; total counts equal ``shots``.
    """
    if shots < 1:
        raise SimulationError("shots must be >= 1")
    if rng is None:
        raise SimulationError("sample_counts requires rng")
    probs = state.probabilities()
    n = state.n_qubits
    if readout is not None:
        if isinstance(readout, NoiseModel):
            confusions = [readout.confusion(q) for q in range(n)]
        else:
            confusions = [np.asarray(c, dtype=float) for c in readout]
        probs = apply_readout_confusion(probs, confusions)
    draws = rng.multinomial(shots, probs)
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(draws) if c > 0}
