"""Spin-dimer dynamics toolkit.

Computes dynamical spin-spin correlation functions and the inelastic-
neutron-scattering structure factor of a two-spin dimer, comparing exact
evolution, first-order Trotterization, and a variationally fast-forwarded
fixed-depth circuit, with direct/indirect measurement emulation under
configurable noise and readout-error mitigation.
"""

__version__ = "0.1.0"

from .circuits import Circuit, GateOp
from .measure import (CalibrationMatrix, EstimatorConfig, build_calibration_matrix,
                      direct_estimate, hadamard_test_circuit, indirect_estimate,
                      mitigate)
from .model import (EigenSystem, SpinModel, build_hamiltonian, eigensystem,
                    exact_evolution, lehmann_correlation, prepare_state)
from .reff import (OptimizerConfig, ReffAnsatz, TrainResult, TrainingSet,
                   build_ansatz_unitary, cost, grad, threshold, train)
from .spectra import (CorrelationSeries, DSFResult, PowerSpectrum,
                      dynamical_structure_factor, intensity, power_spectrum,
                      rms_report, sweep)
from .statevector import (NoiseModel, QuantumState, apply_circuit,
                          expectation_pauli, project_measure, sample_counts)
from .trotter import (TrotterPlan, trotter_error, trotter_evolution,
                      trotter_step_circuit)

__all__ = [
    "Circuit", "GateOp", "QuantumState", "NoiseModel",
    "apply_circuit", "expectation_pauli", "project_measure", "sample_counts",
    "SpinModel", "EigenSystem", "build_hamiltonian", "eigensystem",
    "prepare_state", "exact_evolution", "lehmann_correlation",
    "TrotterPlan", "trotter_step_circuit", "trotter_evolution", "trotter_error",
    "ReffAnsatz", "TrainingSet", "TrainResult", "OptimizerConfig",
    "build_ansatz_unitary", "cost", "grad", "threshold", "train",
    "EstimatorConfig", "CalibrationMatrix", "hadamard_test_circuit",
    "direct_estimate", "indirect_estimate", "build_calibration_matrix", "mitigate",
    "CorrelationSeries", "PowerSpectrum", "DSFResult", "sweep",
    "power_spectrum", "dynamical_structure_factor", "intensity", "rms_report",
]
