"""Variational fast-forwarding of the dimer time step.

The ansatz is V(theta, gamma) = W(theta) D(gamma) W(theta)^dagger with D
diagonal in the computational basis, so N repeated steps cost one circuit:
D(gamma)^N = D(N gamma) exactly (diagonal phases add).

Templates for the dimer (entangling count 6 = 2 + 2 + 2):

* D(gamma) = Rz(g1) on qubit 0, Rz(g2) on qubit 1, then a ZZ phase rotation
  compiled as CX . Rz(g3) . CX;
* W(theta) = fixed single-qubit frame + CX . (Ry(theta + 7pi/4) (x) G) . CX +
  fixed frame, with all fixed Euler angles multiples of pi/8. At theta = 0
  the columns of W are exactly {|00>, singlet, |11>, triplet0}, i.e. the
  shared eigenbasis of every Jxx = Jyy dimer step, so the 4-parameter default
  (theta1, gamma1, gamma2, gamma3) can diagonalize the target exactly.

The lone theta sits in a single Ry, and each gamma in a single Pauli-generator
rotation, which makes the +-pi/2 parameter-shift gradient rules exact.

Training is classical-side: plain gradient descent with a backtracking line
search (halve the step on cost increase), cost and gradients evaluated by
exact state arithmetic on Haar-random product training states.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import circuits
from .circuits import Circuit
from .model import SpinModel
from .seeding import as_rng

PI = np.pi

# Fixed W frame (Euler zyz angles, units of pi). Derived once by constrained
# numerical solve against the {|00>, s, |11>, t0} column target and snapped to
# the pi/8 grid; exact to machine precision.
_C0 = (0.25 * PI, 1.0 * PI, 0.0)
_C1 = (-0.75 * PI, 2.0 * PI, 1.0 * PI)
_G_MID = (-0.875 * PI, -0.5 * PI, -1.0 * PI)
_D0 = (2.0 * PI, -0.75 * PI, 0.625 * PI)
_D1 = (-1.0 * PI, -0.5 * PI, 0.125 * PI)
_THETA_OFFSET = 1.75 * PI


class AnsatzError(ValueError):
    pass


class InfeasibleThresholdError(ValueError):
    """The (epsilon, n_targ) pair yields a non-positive cost threshold."""


def w_circuit(theta: np.ndarray) -> Circuit:
    """Eigenbasis-rotation circuit W(theta); 2 entangling gates, 1 parameter."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (1,):
        raise AnsatzError(f"W template takes 1 parameter, got {theta.shape}")
    ops = (
        circuits.euler_zyz(0, *_D0),
        circuits.euler_zyz(1, *_D1),
        circuits.cx(0, 1),
        circuits.ry(0, theta[0] + _THETA_OFFSET),
        circuits.euler_zyz(1, *_G_MID),
        circuits.cx(0, 1),
        circuits.euler_zyz(0, *_C0),
        circuits.euler_zyz(1, *_C1),
    )
    return Circuit(2, ops)


def d_circuit(gamma: np.ndarray) -> Circuit:
    """Diagonal phase circuit D(gamma); 2 entangling gates, 3 parameters."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (3,):
        raise AnsatzError(f"D template takes 3 parameters, got {gamma.shape}")
    ops = (
        circuits.rz(0, gamma[0]),
        circuits.rz(1, gamma[1]),
        circuits.cx(0, 1),
        circuits.rz(1, gamma[2]),
        circuits.cx(0, 1),
    )
    return Circuit(2, ops)


@dataclass(frozen=True)
class ReffAnsatz:
    """Parameter vectors plus the fixed W/D circuit skeletons."""

    theta: np.ndarray
    gamma: np.ndarray
    model: SpinModel | None = None
    dt: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        if self.theta.shape != (1,) or self.gamma.shape != (3,):
            raise AnsatzError("dimer ansatz uses 1 theta and 3 gamma parameters")

    def w_matrix(self) -> np.ndarray:
        return w_circuit(self.theta).unitary()

    def d_matrix(self, scale: int = 1) -> np.ndarray:
        return d_circuit(scale * self.gamma).unitary()

    def circuit(self, scale: int = 1) -> Circuit:
        """Compiled fast-forwarding circuit W . D(scale*gamma) . W^dagger."""
        w = w_circuit(self.theta)
        return w.dagger() + d_circuit(scale * self.gamma) + w


def build_ansatz_unitary(theta, gamma, scale: int = 1) -> np.ndarray:
    """Dense W(theta) D(scale * gamma) W(theta)^dagger."""
    if scale < 0:
        raise AnsatzError("scale must be non-negative")
    w = w_circuit(np.asarray(theta, dtype=float)).unitary()
    d = d_circuit(scale * np.asarray(gamma, dtype=float)).unitary()
    return w @ d @ w.conj().T


@dataclass(frozen=True)
class TrainingSet:
    """Haar-random product states used as the learning distribution."""

    states: tuple

    @property
    def count(self) -> int:
        return len(self.states)


def haar_product_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    psi = np.ones(1, dtype=complex)
    for _ in range(n_qubits):
        q = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi = np.kron(psi, q / np.linalg.norm(q))
    return psi


def make_training_set(n_states: int, rng, n_qubits: int = 2) -> TrainingSet:
    rng = as_rng(rng)
    if n_states < 1:
        raise AnsatzError("training set must contain at least one state")
    return TrainingSet(tuple(haar_product_state(n_qubits, rng) for _ in range(n_states)))


def _cost_of_unitary(v: np.ndarray, u_target: np.ndarray, training: TrainingSet) -> float:
    total = 0.0
    for psi in training.states:
        amp = np.vdot(v @ psi, u_target @ psi)
        total += abs(amp) ** 2
    return 1.0 - total / training.count


def cost(u_target: np.ndarray, theta, gamma, training: TrainingSet) -> float:
    """1 - mean_j |<psi_j| V^dagger U |psi_j>|^2, in [0, 1]."""
    if training.count == 0:
        raise AnsatzError("empty training set")
    return _cost_of_unitary(build_ansatz_unitary(theta, gamma), u_target, training)


def grad(u_target: np.ndarray, theta, gamma, training: TrainingSet) -> tuple:
    """Parameter-shift gradients (dC/dtheta, dC/dgamma).

    theta components use the four-term rule (W and W^dagger shifted
    separately); gamma components the two-term rule. Shifts are +-pi/2.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    gamma = np.asarray(gamma, dtype=float)
    w = w_circuit(theta).unitary()
    d = d_circuit(gamma).unitary()

    def c_of(v):
        return _cost_of_unitary(v, u_target, training)

    g_theta = np.zeros_like(theta)
    for l in range(theta.size):
        tp = theta.copy(); tp[l] += PI / 2
        tm = theta.copy(); tm[l] -= PI / 2
        wp = w_circuit(tp).unitary()
        wm = w_circuit(tm).unitary()
        g_theta[l] = 0.5 * (c_of(wp @ d @ w.conj().T) - c_of(wm @ d @ w.conj().T)
                            + c_of(w @ d @ wp.conj().T) - c_of(w @ d @ wm.conj().T))

    g_gamma = np.zeros_like(gamma)
    for l in range(gamma.size):
        gp = gamma.copy(); gp[l] += PI / 2
        gm = gamma.copy(); gm[l] -= PI / 2
        g_gamma[l] = 0.5 * (c_of(w @ d_circuit(gp).unitary() @ w.conj().T)
                            - c_of(w @ d_circuit(gm).unitary() @ w.conj().T))
    return g_theta, g_gamma


def threshold(epsilon: float, n_targ: int, n_qubits: int = 2) -> float:
    """Training termination threshold eps/(16 n^2) - eps^2/(4 (2^nq + 1)).

    ``1 - epsilon`` is the target simulation fidelity after ``n_targ``
    fast-forwarding steps. Raises InfeasibleThresholdError when the formula
    is non-positive (the caller must relax the targets).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if n_targ < 1:
        raise ValueError("n_targ must be >= 1")
    value = epsilon / (16.0 * n_targ ** 2) - epsilon ** 2 / (4.0 * (2 ** n_qubits + 1))
    if value <= 0.0:
        raise InfeasibleThresholdError(
            f"infeasible (epsilon, n_targ) pair ({epsilon}, {n_targ}): "
            f"threshold {value:.3e} <= 0")
    return value


@dataclass(frozen=True)
class OptimizerConfig:
    """Gradient-descent settings; threshold resolves from (epsilon, n_targ)
    unless given explicitly."""

    training_size: int = 6
    max_iterations: int = 5000
    initial_step: float = 0.1
    threshold: float | None = None
    epsilon: float | None = None
    n_targ: int | None = None
    init_scale: float = 0.1

    def resolve_threshold(self, n_qubits: int = 2) -> float:
        if self.threshold is not None:
            return self.threshold
        if self.epsilon is not None and self.n_targ is not None:
            return threshold(self.epsilon, self.n_targ, n_qubits)
        return threshold(0.1, 3, n_qubits)


@dataclass(frozen=True)
class TrainResult:
    theta_opt: np.ndarray
    gamma_opt: np.ndarray
    final_cost: float
    iterations: int
    cost_history: np.ndarray
    converged: bool
    threshold: float
    training: TrainingSet = field(repr=False, default=None)

    def ansatz(self, model: SpinModel | None = None, dt: float | None = None) -> ReffAnsatz:
        return ReffAnsatz(self.theta_opt, self.gamma_opt, model, dt)


def train(u_target: np.ndarray, config: OptimizerConfig, rng) -> TrainResult:
    """Minimize the fidelity cost by gradient descent to the threshold.

    Deterministic given the rng seed: the training set, the uniform(-s, s)
    initialization, and the line-search trajectory are all seeded. Returns
    best-so-far with converged=False if the iteration budget runs out.
    """
    rng = as_rng(rng)
    thresh = config.resolve_threshold()
    training = make_training_set(config.training_size, rng)
    theta = rng.uniform(-config.init_scale, config.init_scale, 1)
    gamma = rng.uniform(-config.init_scale, config.init_scale, 3)
    c = cost(u_target, theta, gamma, training)
    history = [c]
    step = config.initial_step
    iterations = 0
    for it in range(config.max_iterations):
        if c <= thresh:
            break
        g_theta, g_gamma = grad(u_target, theta, gamma, training)
        gnorm = np.sqrt(np.sum(g_theta ** 2) + np.sum(g_gamma ** 2))
        if gnorm < 1e-14:
            break
        accepted = False
        while step >= 1e-18:
            t_new = theta - step * g_theta
            g_new = gamma - step * g_gamma
            c_new = cost(u_target, t_new, g_new, training)
            if c_new < c:
                theta, gamma, c = t_new, g_new, c_new
                step = min(step * 1.5, 1.0)
                accepted = True
                break
            step *= 0.5
        iterations = it + 1
        if not accepted:
            break
        history.append(c)
    return TrainResult(theta, gamma, c, iterations, np.asarray(history),
                       converged=bool(c <= thresh), threshold=thresh,
                       training=training)


# -- parameter files ----------------------------------------------------------

def save_parameters(path, result: TrainResult, model: SpinModel, dt: float) -> None:
    """Human-readable parameter file reused by the measurement/spectra layers."""
    payload = {
        "model": {"jxx": model.jxx, "jyy": model.jyy, "jzz": model.jzz, "h": model.h},
        "dt": dt,
        "theta": [float(x) for x in result.theta_opt],
        "gamma": [float(x) for x in result.gamma_opt],
        "final_cost": float(result.final_cost),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "threshold": float(result.threshold),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_parameters(path) -> ReffAnsatz:
    payload = json.loads(Path(path).read_text())
    m = payload["model"]
    model = SpinModel(m["jxx"], m["jyy"], m["jzz"], m["h"])
    return ReffAnsatz(np.asarray(payload["theta"]), np.asarray(payload["gamma"]),
                      model, float(payload["dt"]))
