"""Correlation-series sweeps, power spectra, and the dynamical structure factor.

Fourier sign convention: a correlator C(t) = exp(-i Omega t) produces a peak
at positive frequency omega = Omega (the excitation energy E_p - E_0). The
discrete transform is DFT[C](omega_m) = (dt / 2pi) * sum_k C_k exp(+i omega_m
t_k) on the one-sided grid t_k = k dt, omega_m = 2 pi m / (N dt); no window
and no zero padding by default (both available as flags). The integral's
t < 0 half is not synthesized. The paper-style 1/(2 pi hbar) prefactor is
absorbed into this dt-sum normalization (hbar = 1); vertical scales are
arbitrary units.

The structure factor sums the series it is given: S^{ab}(Q, omega) =
sum_{(i,j) in set} exp(-i Q . R_ij) DFT[C^{ab}_{ij}](omega) with no unit-cell
division (one dimer = one cell). At Q = 0 summing over all site pairs makes
every channel vanish identically (total-spin selection rule), so Q = 0
reproduction runs use the same-site subset, as in the source figures.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, u2q
from .measure import EstimatorConfig, estimate_correlator
from .model import SpinModel, eigensystem, exact_evolution, ground_state, pauli_site
from .reff import ReffAnsatz
from .seeding import child_rng
from .statevector import QuantumState
from .trotter import trotter_evolution

AXES = ("x", "y", "z")
DEFAULT_N_STEPS = 100
DEFAULT_DT = 0.3


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Provenance:
    evolution: str = "exact"
    scheme: str = "exact"
    variant: str = "raw"  # raw | mitigated

    def __str__(self):
        return f"{self.evolution}/{self.scheme}/{self.variant}"


@dataclass(frozen=True)
class CorrelationSeries:
    """One C^{alpha beta}_{i,j}(t_k) series on a uniform grid."""

    alpha: str
    beta: str
    i: int
    j: int
    times: np.ndarray
    values: np.ndarray
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.shape != values.shape:
            raise GridError("times and values must have equal length")
        _grid_step(times)  # validates uniformity

    @property
    def dt(self) -> float:
        return _grid_step(self.times)

    @property
    def key(self) -> tuple:
        return (self.alpha, self.beta, self.i, self.j)


@dataclass(frozen=True)
class PowerSpectrum:
    omegas: np.ndarray
    power: np.ndarray


@dataclass(frozen=True)
class DSFResult:
    """Per-channel complex spectra S^{alpha beta}(Q, omega)."""

    q: np.ndarray
    omegas: np.ndarray
    spectra: dict  # (alpha, beta) -> complex ndarray

    @property
    def channels(self) -> list:
        return sorted(self.spectra)


def _grid_step(times: np.ndarray) -> float:
    if len(times) < 2:
        raise GridError("grid needs at least two samples")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12) or steps[0] <= 0:
        raise GridError("time grid must be uniform and increasing")
    return float(steps[0])


# -- sweep --------------------------------------------------------------------

def _evolution_circuit(model: SpinModel, method: str, dt: float, k: int,
                       reff_ansatz: ReffAnsatz | None) -> Circuit:
    if method == "exact":
        return Circuit(2, (u2q(0, 1, exact_evolution(model, k * dt), "U(t)"),))
    if method == "trotter":
        return trotter_evolution(model, dt, k)
    if method == "reff":
        if reff_ansatz is None:
            raise ValueError("REFF evolution requested without trained parameters")
        return reff_ansatz.circuit(scale=k)
    raise ValueError(f"unknown evolution method {method!r}")


def _series_exact_mode(model: SpinModel, method: str, dt: float, n_steps: int,
                       channels, pairs, reff_ansatz) -> dict:
    """Noiseless, shot-free sweep via dense matrix arithmetic."""
    g = ground_state(model)
    paulis = {("x", 1): pauli_site("x", 1), ("x", 2): pauli_site("x", 2),
              ("y", 1): pauli_site("y", 1), ("y", 2): pauli_site("y", 2),
              ("z", 1): pauli_site("z", 1), ("z", 2): pauli_site("z", 2)}
    times = np.arange(n_steps) * dt
    out = {}
    unitaries = [_evolution_circuit(model, method, dt, k, reff_ansatz).unitary()
                 for k in range(n_steps)]
    for alpha, beta in channels:
        for i, j in pairs:
            a, b = paulis[(alpha, i)], paulis[(beta, j)]
            vals = np.empty(n_steps, dtype=complex)
            for k, u in enumerate(unitaries):
                vals[k] = np.vdot(g, u.conj().T @ a @ u @ (b @ g))
            out[(alpha, beta, i, j)] = CorrelationSeries(
                alpha, beta, i, j, times, vals,
                Provenance(method, "exact", "raw"))
    return out


def sweep(model: SpinModel, evolution: str = "exact", dt: float = DEFAULT_DT,
          n_steps: int = DEFAULT_N_STEPS, estimator: EstimatorConfig | None = None,
          channels=None, pairs=None, reff_ansatz: ReffAnsatz | None = None,
          seed: int = 0, threads: int = 1) -> dict:
    """Measure a set of correlation series over the time grid.

    ``channels`` defaults to the diagonal (alpha = beta) set used at Q = 0 and
    ``pairs`` to the same-site pairs {(1,1), (2,2)}; pass explicit lists for
    any of the 36 (alpha, beta, i, j) combinations. With ``estimator=None``
    the series are computed by exact expectation arithmetic on the chosen
    evolution; otherwise each grid point is estimated by the configured
    measurement scheme, with per-point RNG streams derived from ``seed``.
    """
    channels = [("x", "x"), ("y", "y"), ("z", "z")] if channels is None else list(channels)
    pairs = [(1, 1), (2, 2)] if pairs is None else [tuple(p) for p in pairs]
    for a, b in channels:
        if a not in AXES or b not in AXES:
            raise ValueError(f"bad channel ({a},{b})")
    if estimator is None:
        return _series_exact_mode(model, evolution, dt, n_steps, channels, pairs,
                                  reff_ansatz)

    g = QuantumState(2, ground_state(model))
    times = np.arange(n_steps) * dt
    circuits_by_k = [_evolution_circuit(model, evolution, dt, k, reff_ansatz)
                     for k in range(n_steps)]
    variant = "mitigated" if estimator.mitigation else "raw"

    def one_point(args):
        alpha, beta, i, j, k = args
        rng = child_rng(seed, "series", alpha, beta, i, j, k)
        return estimate_correlator(estimator, circuits_by_k[k], alpha, i, beta, j, g, rng)

    out = {}
    for alpha, beta in channels:
        for i, j in pairs:
            tasks = [(alpha, beta, i, j, k) for k in range(n_steps)]
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    vals = list(pool.map(one_point, tasks))
            else:
                vals = [one_point(t) for t in tasks]
            out[(alpha, beta, i, j)] = CorrelationSeries(
                alpha, beta, i, j, times, np.asarray(vals, dtype=complex),
                Provenance(evolution, estimator.scheme, variant))
    return out


# -- transforms ---------------------------------------------------------------

def dft_amplitude(values: np.ndarray, dt: float, window: str | None = None,
                  zero_pad: int = 1) -> tuple:
    """Complex spectrum (dt/2pi) sum_k C_k exp(+i omega_m t_k) and its grid."""
    vals = np.asarray(values, dtype=complex)
    if window == "hann":
        vals = vals * np.hanning(len(vals))
    elif window is not None:
        raise ValueError(f"unknown window {window!r}")
    n = len(vals) * int(zero_pad)
    padded = np.zeros(n, dtype=complex)
    padded[:len(vals)] = vals
    amps = n * np.fft.ifft(padded) * dt / (2 * np.pi)
    omegas = 2 * np.pi * np.arange(n) / (n * dt)
    return omegas, amps


def power_spectrum(series: CorrelationSeries, window: str | None = None,
                   zero_pad: int = 1) -> PowerSpectrum:
    """Magnitude-squared spectrum, normalized so that Parseval holds:
    sum |C|^2 dt = sum power domega."""
    dt = series.dt
    omegas, amps = dft_amplitude(series.values, dt, window, zero_pad)
    # amps = (dt/2pi) X_m; |X_m|^2 summed over m equals N sum|C|^2
    power = np.abs(amps * (2 * np.pi / dt)) ** 2 * dt ** 2 / (2 * np.pi)
    return PowerSpectrum(omegas, power)


def dynamical_structure_factor(series_map: dict, q=0.0,
                               positions=None) -> DSFResult:
    """Assemble S^{alpha beta}(Q, omega) from the provided series.

    ``series_map`` maps (alpha, beta, i, j) -> CorrelationSeries; every series
    present contributes with phase exp(-i Q . R_ij). Site positions default to
    R1 = 0, R2 = x_hat.
    """
    if not series_map:
        raise ValueError("empty series set")
    positions = {1: np.zeros(3), 2: np.array([1.0, 0.0, 0.0])} if positions is None \
        else {k: np.asarray(v, dtype=float) for k, v in positions.items()}
    if np.isscalar(q):
        if q != 0:
            raise ValueError("scalar q must be 0; pass a 3-vector otherwise")
        q_vec = np.zeros(3)
    else:
        q_vec = np.asarray(q, dtype=float)
        if q_vec.shape != (3,):
            raise ValueError("q must be a 3-vector")

    some = next(iter(series_map.values()))
    dt, n = some.dt, len(some.times)
    spectra = {}
    omegas = None
    for key, series in series_map.items():
        alpha, beta, i, j = key
        if len(series.times) != n or abs(series.dt - dt) > 1e-12:
            raise GridError("all series must share one grid")
        if i not in positions or j not in positions:
            raise ValueError(f"missing position for sites in pair ({i},{j})")
        r_ij = positions[i] - positions[j]
        phase = np.exp(-1j * float(q_vec @ r_ij))
        om, amp = dft_amplitude(series.values, dt)
        omegas = om
        spectra.setdefault((alpha, beta), np.zeros(n, dtype=complex))
        spectra[(alpha, beta)] += phase * amp
    return DSFResult(q_vec, omegas, spectra)


def intensity(dsf: DSFResult, q_hat=None, isotropic: bool = False) -> np.ndarray:
    """Polarization-weighted intensity sum over the channels present.

    Each channel enters through its magnitude-squared spectrum |S^{ab}|^2
    (the source figures plot and sum power spectra; the one-sided complex
    amplitude carries a spurious fractional-bin phase that would distort
    peaks if its real part were summed directly). Either ``isotropic=True``
    (every alpha = beta channel enters with weight 1) or a unit vector
    ``q_hat`` applying the (delta_ab - qhat_a qhat_b) selection rule.
    Prefactors r0, g, F(Q), kf/ki are fixed to 1. Output is real and, for
    non-negative weights, non-negative.
    """
    if isotropic == (q_hat is not None):
        raise ValueError("choose exactly one of isotropic or q_hat")
    axis_index = {"x": 0, "y": 1, "z": 2}
    total = np.zeros(len(dsf.omegas))
    if isotropic:
        for (a, b), spec in dsf.spectra.items():
            if a == b:
                total = total + np.abs(spec) ** 2
        return total
    q_hat = np.asarray(q_hat, dtype=float)
    if abs(np.linalg.norm(q_hat) - 1.0) > 1e-9:
        raise ValueError("q_hat must have unit norm")
    for (a, b), spec in dsf.spectra.items():
        ia, ib = axis_index[a], axis_index[b]
        weight = (1.0 if a == b else 0.0) - q_hat[ia] * q_hat[ib]
        total = total + weight * np.abs(spec) ** 2
    return total


# -- error reporting ----------------------------------------------------------

def rms_report(series: CorrelationSeries, oracle: CorrelationSeries) -> dict:
    """Pointwise RMS distance in the time and frequency domains."""
    if len(series.times) != len(oracle.times) or abs(series.dt - oracle.dt) > 1e-12:
        raise GridError("series grids do not match")
    diff_t = series.values - oracle.values
    ps_a = power_spectrum(series)
    ps_b = power_spectrum(oracle)
    return {
        "rms_time": float(np.sqrt(np.mean(np.abs(diff_t) ** 2))),
        "rms_freq": float(np.sqrt(np.mean((ps_a.power - ps_b.power) ** 2))),
    }


def windowed_rms(series: CorrelationSeries, oracle: CorrelationSeries,
                 n_windows: int = 3, component=np.real) -> np.ndarray:
    """Per-window RMS of component(series - oracle), for error-growth checks."""
    if len(series.times) != len(oracle.times):
        raise GridError("series grids do not match")
    diff = component(series.values) - component(oracle.values)
    chunks = np.array_split(diff, n_windows)
    return np.array([float(np.sqrt(np.mean(c ** 2))) for c in chunks])


# -- CSV emission -------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.11e}"


def write_series_csv(path, series: CorrelationSeries) -> None:
    lines = ["t,re,im"]
    for t, v in zip(series.times, series.values):
        lines.append(f"{_fmt(t)},{_fmt(v.real)},{_fmt(v.imag)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_spectrum_csv(path, spectrum: PowerSpectrum) -> None:
    lines = ["omega,power"]
    for w, p in zip(spectrum.omegas, spectrum.power):
        lines.append(f"{_fmt(w)},{_fmt(p)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_dsf_csv(path, omegas: np.ndarray, values: np.ndarray) -> None:
    lines = ["omega,intensity"]
    for w, v in zip(omegas, values):
        lines.append(f"{_fmt(w)},{_fmt(float(v))}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
