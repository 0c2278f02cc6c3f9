"""Indirect (Hadamard-test) and direct (mid-circuit) correlator estimation.

Both schemes estimate C^{alpha beta}_{i,j}(t) = <0| U(-t) sigma^alpha_i U(t)
sigma^beta_j |0> for an evolution circuit U:

* indirect: one ancilla (qubit 0) prepared in |+>, controlled-sigma^beta_j,
  the (uncontrolled) evolution, controlled-sigma^alpha_i, an S^dagger
  correction when b = 1, then Hadamard and ancilla-Z readout. b = 0 reads the
  real part, b = 1 the imaginary part.
* direct: no ancilla. The real part is p(+) <U>_{+} - p(-) <U>_{-} over the
  branches of a mid-circuit projective measurement of G = sigma^beta_j before
  the evolution; the imaginary part is -(<U>_+ - <U>_-)/2 with exp(+-i pi G/4)
  pre-rotations instead of the measurement. <U> denotes the final
  sigma^alpha_i expectation.

Every estimator runs in exact-expectation mode (shots=None, the infinite-shot
surrogate) or with finite shots; gate noise uses the density-matrix backend
and readout confusion applies to terminal measurements, optionally undone by
calibration-matrix mitigation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import circuits
from .circuits import Circuit, PAULI, S_GATE, H_GATE
from .model import pauli_site
from .seeding import as_rng
from .statevector import (NoiseModel, QuantumState, apply_circuit, branch_states,
                          expectation)

logger = logging.getLogger(__name__)

_BASIS_CHANGE = {
    "z": None,
    "x": H_GATE,
    "y": H_GATE @ S_GATE.conj().T,  # maps the Y eigenbasis onto Z
}


@dataclass(frozen=True)
class EstimatorConfig:
    """How a correlator is measured: scheme, evolution source, budget, noise."""

    scheme: str = "direct"
    evolution: str = "exact"
    shots: int | None = None
    mitigation: bool = False
    noise: NoiseModel | None = None
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("indirect", "direct"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.evolution not in ("exact", "trotter", "reff"):
            raise ValueError(f"unknown evolution method {self.evolution!r}")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")


@dataclass(frozen=True)
class CalibrationMatrix:
    """Column-stochastic map from ideal to observed bitstring probabilities."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if not np.allclose(m.sum(axis=0), 1.0, atol=1e-9):
            raise ValueError("calibration matrix columns must sum to 1 within 1e-9")
        if self.condition_number > 1e6:
            raise ValueError(f"calibration matrix is near singular "
                             f"(condition number {self.condition_number:.3g})")

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


# -- circuit builders ---------------------------------------------------------

def hadamard_test_circuit(evolution_circuit: Circuit, alpha: str, i: int,
                          beta: str, j: int, b: int) -> Circuit:
    """Three-qubit Hadamard-test circuit; ancilla is qubit 0, sites shift +1.

    With the system prepared in an input state |psi>, the noiseless ancilla
    <Z> equals Re (b=0) or Im (b=1) of <psi| U^dagger sigma^alpha_i U
    sigma^beta_j |psi>.
    """
    if evolution_circuit.n_qubits != 2:
        raise ValueError("evolution circuit must act on the 2 system qubits")
    if b not in (0, 1):
        raise ValueError("b must be 0 or 1")
    n = 3  # one ancilla + two system qubits
    ops = [circuits.h(0), circuits.controlled_pauli(0, j, beta.upper())]
    ops.extend(evolution_circuit.embedded(n, offset=1).ops)
    ops.append(circuits.controlled_pauli(0, i, alpha.upper()))
    if b == 1:
        ops.append(circuits.sdg(0))
    ops.append(circuits.h(0))
    return Circuit(n, tuple(ops))


def direct_scheme_circuits(evolution_circuit: Circuit, alpha: str, i: int,
                           beta: str, j: int) -> dict:
    """The ancilla-free circuit variants of the direct scheme.

    Returns {"real": ..., "imag+": ..., "imag-": ...}; "real" contains the
    mid-circuit projective measurement of G = sigma^beta_j, the imag variants
    the exp(+-i pi G / 4) pre-rotations. All end with the sigma^alpha_i basis
    change on site i.
    """
    if evolution_circuit.n_qubits != 2:
        raise ValueError("evolution circuit must act on the 2 system qubits")
    tail = list(evolution_circuit.ops)
    bc = _BASIS_CHANGE[alpha.lower()]
    if bc is not None:
        tail.append(circuits.u1q(i - 1, bc, f"{alpha.lower()}->z"))
    out = {}
    m_g = circuits.measure_involution((j - 1,), PAULI[beta.upper()], f"M_{beta.lower()}{j}")
    out["real"] = Circuit(2, tuple([m_g] + tail))
    for sign, name in ((+1, "imag+"), (-1, "imag-")):
        # exp(+i pi G/4) = R_G(-pi/2) in the exp(-i t G / 2) convention
        pre = circuits.pauli_rotation_gate(j - 1, beta, -sign * np.pi / 2)
        out[name] = Circuit(2, tuple([pre] + tail))
    return out


# -- single-observable estimation under readout noise -------------------------

def _measured_z(state: QuantumState, qubit: int, shots, noise, mitigation, rng):
    """<Z> of one qubit from its marginal, with confusion / shots / mitigation."""
    probs = state.probabilities()
    marg = probs.reshape([2] * state.n_qubits)
    axes = tuple(q for q in range(state.n_qubits) if q != qubit)
    p = marg.sum(axis=axes) if axes else marg
    p = np.asarray(p, dtype=float).reshape(2)
    confusion = noise.confusion(qubit) if noise is not None else np.eye(2)
    p_noisy = confusion @ p
    if shots is not None:
        draws = rng.multinomial(int(shots), p_noisy / p_noisy.sum())
        p_hat = draws / draws.sum()
    else:
        p_hat = p_noisy
    if mitigation:
        p_hat = mitigate(p_hat, CalibrationMatrix(confusion))
    return float(p_hat[0] - p_hat[1])


# -- estimators ---------------------------------------------------------------

def _initial_indirect_state(state0: QuantumState) -> QuantumState:
    anc = np.array([1, 0], dtype=complex)
    if state0.is_pure:
        return QuantumState(3, np.kron(anc, state0.data))
    return QuantumState(3, np.kron(np.outer(anc, anc), state0.data))


def indirect_estimate(evolution_circuit: Circuit, alpha: str, i: int, beta: str,
                      j: int, state0: QuantumState, shots: int | None = None,
                      noise: NoiseModel | None = None, rng=None,
                      mitigation: bool = False) -> complex:
    """Hadamard-test estimate of the correlator; uses exactly one ancilla."""
    rng = as_rng(rng if rng is not None else 0)
    parts = []
    for b in (0, 1):
        circ = hadamard_test_circuit(evolution_circuit, alpha, i, beta, j, b)
        state = apply_circuit(_initial_indirect_state(state0), circ, noise=noise, rng=rng)
        n_b = None if shots is None else max(shots // 2, 1)
        parts.append(_measured_z(state, 0, n_b, noise, mitigation, rng))
    return complex(parts[0], parts[1])


def direct_estimate(evolution_circuit: Circuit, alpha: str, i: int, beta: str,
                    j: int, state0: QuantumState, shots: int | None = None,
                    noise: NoiseModel | None = None, rng=None,
                    mitigation: bool = False) -> complex:
    """Ancilla-free estimate via mid-circuit measurement and phase kicks.

    Shot budget: the real-part circuit receives shots/2 (its two measurement
    branches split those binomially, shots/4 each in expectation) and each
    phase-kick variant shots/4.
    """
    rng = as_rng(rng if rng is not None else 0)
    variants = direct_scheme_circuits(evolution_circuit, alpha, i, beta, j)
    g_full = pauli_site(beta, j)
    a_qubit = i - 1

    work0 = state0.to_density() if (noise is not None and noise.has_gate_noise) else state0

    # real part: branch deterministically, then evolve each branch
    branches = branch_states(work0, g_full)
    tail_real = Circuit(2, variants["real"].ops[1:])  # measurement handled here
    means, probs = {}, {}
    for sign in (+1, -1):
        prob, branch = branches[sign]
        probs[sign] = prob
        if branch is None:
            logger.warning("direct scheme: branch %+d has probability %.3g < 1e-12; "
                           "it contributes 0", sign, prob)
            means[sign] = 0.0
            continue
        evolved = apply_circuit(branch, tail_real, noise=noise, rng=rng)
        means[sign] = None  # filled below (shots handling differs per mode)
        branches[sign] = (prob, evolved)

    if shots is None:
        for sign in (+1, -1):
            prob, evolved = branches[sign]
            if evolved is not None:
                means[sign] = _measured_z(evolved, a_qubit, None, noise, mitigation, rng)
        real = probs[+1] * means[+1] - probs[-1] * means[-1]
    else:
        n_real = max(shots // 2, 1)
        k_plus = int(rng.binomial(n_real, min(max(probs[+1], 0.0), 1.0)))
        counts = {+1: k_plus, -1: n_real - k_plus}
        real = 0.0
        for sign in (+1, -1):
            prob, evolved = branches[sign]
            if evolved is None or counts[sign] == 0:
                continue
            m_hat = _measured_z(evolved, a_qubit, counts[sign], noise, mitigation, rng)
            real += sign * (counts[sign] / n_real) * m_hat

    # imaginary part: phase-kick pre-rotations
    kicks = {}
    for sign, name in ((+1, "imag+"), (-1, "imag-")):
        state = apply_circuit(work0, variants[name], noise=noise, rng=rng)
        n_k = None if shots is None else max(shots // 4, 1)
        kicks[sign] = _measured_z(state, a_qubit, n_k, noise, mitigation, rng)
    imag = -0.5 * (kicks[+1] - kicks[-1])
    return complex(real, imag)


def estimate_correlator(config: EstimatorConfig, evolution_circuit: Circuit,
                        alpha: str, i: int, beta: str, j: int,
                        state0: QuantumState, rng) -> complex:
    fn = direct_estimate if config.scheme == "direct" else indirect_estimate
    return fn(evolution_circuit, alpha, i, beta, j, state0,
              shots=config.shots, noise=config.noise, rng=rng,
              mitigation=config.mitigation)


# -- readout calibration and mitigation ---------------------------------------

def build_calibration_matrix(n_measured: int, readout, shots: int | None = None,
                             rng=None) -> CalibrationMatrix:
    """Measurement spectroscopy: M[i, j] = P(observe i | prepared basis j).

    ``readout`` is a NoiseModel or list of per-qubit 2x2 confusions. With
    shots=None the exact tensor-product matrix is returned; otherwise each
    column is estimated from ``shots`` samples of the prepared basis state.
    """
    if isinstance(readout, NoiseModel):
        confusions = [readout.confusion(q) for q in range(n_measured)]
    else:
        confusions = [np.asarray(c, dtype=float) for c in readout]
    exact = confusions[0]
    for c in confusions[1:]:
        exact = np.kron(exact, c)
    if shots is None:
        return CalibrationMatrix(exact)
    if shots < 1:
        raise ValueError("calibration needs shots >= 1 per basis state")
    rng = as_rng(rng if rng is not None else 0)
    dim = 2 ** n_measured
    m = np.zeros((dim, dim))
    for col in range(dim):
        draws = rng.multinomial(shots, exact[:, col])
        m[:, col] = draws / shots
    return CalibrationMatrix(m)


def mitigate(counts, calibration: CalibrationMatrix) -> np.ndarray:
    """Readout-error mitigation constrained to the probability simplex.

    Solves min ||M p - p_noisy||_2 subject to p >= 0, sum(p) = 1 (the raw
    inverse M^{-1} p_noisy can leave the simplex on finite counts). Input is
    a histogram dict or a vector; output is a valid probability vector.
    """
    m = calibration.matrix
    if isinstance(counts, dict):
        n_bits = int(round(np.log2(calibration.dim)))
        if any(len(key) != n_bits for key in counts):
            raise ValueError("histogram keys do not match calibration dimension")
        vec = np.zeros(calibration.dim)
        for key, c in counts.items():
            vec[int(key, 2)] = c
    else:
        vec = np.asarray(counts, dtype=float)
        if vec.shape != (calibration.dim,):
            raise ValueError(f"counts dimension {vec.shape} does not match "
                             f"calibration dimension {calibration.dim}")
    total = vec.sum()
    if total <= 0:
        raise ValueError("empty histogram")
    p_noisy = vec / total

    raw = np.linalg.solve(m, p_noisy)
    if raw.min() >= -1e-12 and abs(raw.sum() - 1.0) < 1e-9:
        raw = np.clip(raw, 0.0, None)
        return raw / raw.sum()

    # constrained least squares on the simplex
    x0 = np.clip(raw, 0.0, None)
    x0 = x0 / x0.sum() if x0.sum() > 0 else np.full(calibration.dim, 1.0 / calibration.dim)
    res = minimize(
        lambda p: float(np.sum((m @ p - p_noisy) ** 2)),
        x0, jac=lambda p: 2.0 * m.T @ (m @ p - p_noisy),
        method="SLSQP",
        bounds=[(0.0, 1.0)] * calibration.dim,
        constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1.0}],
        options={"ftol": 1e-14, "maxiter": 500},
    )
    p = np.clip(res.x, 0.0, None)
    return p / p.sum()
