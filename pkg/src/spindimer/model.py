"""Spin-dimer Hamiltonians, exact spectra, and closed-form correlation oracles.

The model is H = Jxx X1 X2 + Jyy Y1 Y2 + Jzz Z1 Z2 + h (Z1 + Z2) in Pauli
(sigma) operators with hbar/2 = 1, taken literally; its 4x4 matrix is

    [[ 2h+Jzz, 0,        0,        Jxx-Jyy ],
     [ 0,      -Jzz,     Jxx+Jyy,  0       ],
     [ 0,      Jxx+Jyy,  -Jzz,     0       ],
     [ Jxx-Jyy, 0,       0,        -2h+Jzz ]]

Sites are 1-based (site 1 = qubit 0). Spectra are reported both as raw
eigenvalues and as excitation energies E_p - E_0 >= 0.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .circuits import PAULI
from .statevector import QuantumState

AXES = ("x", "y", "z")


class DegenerateGroundStateError(ValueError):
    """Ground-state degeneracy makes the Lehmann correlator ill-defined."""


@dataclass(frozen=True)
class SpinModel:
    """Couplings and transverse field of the two-site dimer (energy units)."""

    jxx: float
    jyy: float
    jzz: float
    h: float = 0.0
    n_sites: int = 2

    def __post_init__(self):
        if self.n_sites != 2:
            raise ValueError("only the 2-site dimer is supported")
        for v in (self.jxx, self.jyy, self.jzz, self.h):
            if not np.isfinite(v):
                raise ValueError("couplings must be finite")

    @classmethod
    def heisenberg(cls, j: float = 1.0, h: float = 1.0) -> "SpinModel":
        return cls(j, j, j, h)

    @classmethod
    def xy_zz(cls) -> "SpinModel":
        """XY exchange with a ZZ perturbation: 11.4 (X1X2 + Y1Y2) + 0.16 Z1Z2."""
        return cls(11.4, 11.4, 0.16, 0.0)

    def terms(self) -> list:
        """Nonzero Hamiltonian terms in the fixed order XX, YY, ZZ, Z fields."""
        out = []
        for label, coeff in (("XX", self.jxx), ("YY", self.jyy), ("ZZ", self.jzz)):
            if coeff != 0.0:
                out.append((label, coeff))
        if self.h != 0.0:
            out.append(("ZI", self.h))
            out.append(("IZ", self.h))
        return out


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with orthonormal eigenvectors (columns)."""

    energies: np.ndarray
    states: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.states[:, 0]

    def excitation_energies(self) -> np.ndarray:
        return self.energies - self.energies[0]


def pauli_site(axis: str, site: int, n_sites: int = 2) -> np.ndarray:
    """Full-space matrix of sigma^axis on a 1-based site index."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} out of range")
    ops = [PAULI["I"]] * n_sites
    ops[site - 1] = PAULI[axis.upper()]
    m = ops[0]
    for o in ops[1:]:
        m = np.kron(m, o)
    return m


def build_hamiltonian(model: SpinModel) -> np.ndarray:
    h = (model.jxx * np.kron(PAULI["X"], PAULI["X"])
         + model.jyy * np.kron(PAULI["Y"], PAULI["Y"])
         + model.jzz * np.kron(PAULI["Z"], PAULI["Z"])
         + model.h * (np.kron(PAULI["Z"], PAULI["I"]) + np.kron(PAULI["I"], PAULI["Z"])))
    return h


def _gram_schmidt_tiebreak(energies: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Deterministic basis inside degenerate subspaces.

    Projects computational basis vectors onto each degenerate eigenspace in
    lexicographic order and orthonormalizes, so degenerate output does not
    depend on LAPACK's arbitrary choice.
    """
    out = states.copy()
    dim = states.shape[0]
    i = 0
    while i < len(energies):
        j = i
        while j + 1 < len(energies) and abs(energies[j + 1] - energies[i]) < 1e-9:
            j += 1
        if j > i:
            block = states[:, i:j + 1]
            proj = block @ block.conj().T
            basis = []
            for k in range(dim):
                v = proj @ np.eye(dim)[:, k]
                for b in basis:
                    v = v - b * np.vdot(b, v)
                norm = np.linalg.norm(v)
                if norm > 1e-8:
                    basis.append(v / norm)
                if len(basis) == j - i + 1:
                    break
            out[:, i:j + 1] = np.column_stack(basis)
        i = j + 1
    return out


def eigensystem(model: SpinModel) -> EigenSystem:
    energies, states = np.linalg.eigh(build_hamiltonian(model))
    states = _gram_schmidt_tiebreak(energies, states)
    return EigenSystem(energies, states)


_STATE_VECTORS = {
    "triplet+": np.array([1, 0, 0, 0], dtype=complex),
    "triplet0": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "triplet-": np.array([0, 0, 0, 1], dtype=complex),
    "singlet": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


def prepare_state(label: str) -> QuantumState:
    """Singlet or triplet basis vector of the dimer."""
    try:
        return QuantumState(2, _STATE_VECTORS[label])
    except KeyError:
        raise ValueError(f"unknown state label {label!r}; "
                         f"choose from {sorted(_STATE_VECTORS)}") from None


def exact_evolution(model: SpinModel, t: float) -> np.ndarray:
    """U(t) = sum_k exp(-i E_k t) |v_k><v_k| from the exact eigensystem."""
    es = eigensystem(model)
    phases = np.exp(-1j * es.energies * t)
    return (es.states * phases) @ es.states.conj().T


def ground_state(model: SpinModel, check_gap: bool = True) -> np.ndarray:
    es = eigensystem(model)
    gap = es.energies[1] - es.energies[0]
    if check_gap and gap < 1e-9:
        raise DegenerateGroundStateError(
            f"ground state degenerate: E0 = E1 = {es.energies[0]:.6g} "
            f"(gap {gap:.3g}); correlators against |0> are ill-defined")
    return es.ground_state


def lehmann_correlation(model: SpinModel, alpha: str, beta: str,
                        i: int, j: int, t: float) -> complex:
    """Spectral-sum correlator C^{alpha beta}_{i,j}(t).

    C = sum_p exp(i (E0 - Ep) t) <0|sigma^alpha_i|p><p|sigma^beta_j|0>, built
    from the exact eigensystem. Requires a non-degenerate ground state; for
    the Heisenberg model that means |h| < 2J.
    """
    es = eigensystem(model)
    if es.energies[1] - es.energies[0] < 1e-9:
        raise DegenerateGroundStateError(
            "Lehmann correlator undefined: degenerate ground state "
            f"(E0 = E1 = {es.energies[0]:.6g})")
    if abs(model.h) > 0 and abs(abs(model.h) - 2 * max(abs(model.jxx), 1e-300)) < 1e-9:
        warnings.warn("field at the critical value |h| = 2J; spectrum closes")
    g = es.states[:, 0]
    a_i = pauli_site(alpha, i) @ g  # row vector pieces <0|sigma^a_i|p> via conj
    b_j = pauli_site(beta, j) @ g
    amps = (es.states.conj().T @ a_i).conj() * (es.states.conj().T @ b_j)
    return complex(np.sum(np.exp(1j * (es.energies[0] - es.energies) * t) * amps))


def heisenberg_correlation_xx(j: float, h: float, t) -> np.ndarray:
    """Closed form C^{xx}_{ii}(t) = (exp(-i(4J+2h)t) + exp(-i(4J-2h)t)) / 2."""
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.exp(-1j * (4 * j + 2 * h) * t) + np.exp(-1j * (4 * j - 2 * h) * t))


def heisenberg_correlation_zz(j: float, t) -> np.ndarray:
    """Closed form C^{zz}_{ii}(t) = exp(-i 4J t)."""
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * 4 * j * t)
