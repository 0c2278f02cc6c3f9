"""Batch front-end: config-driven runs, figure recipes, experiment overlays.

Exit codes: 0 success, 2 config error, 3 numerical failure. Errors print one
machine-parsable line ``error: <kind>: <message>`` on stderr. Reruns with the
same config and seed produce byte-identical artifacts; every artifact is
traceable through the manifest (config hash, seed, package versions).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, reff, spectra
from .measure import EstimatorConfig
from .model import (DegenerateGroundStateError, SpinModel, eigensystem)
from .reff import InfeasibleThresholdError, OptimizerConfig, load_parameters, save_parameters
from .seeding import child_rng
from .statevector import NoiseModel
from .trotter import trotter_error

CONFIG_ERROR, NUMERICAL_ERROR = 2, 3


class ConfigError(ValueError):
    pass


# -- run configuration ---------------------------------------------------------

_MODEL_KEYS = {"preset", "jxx", "jyy", "jzz", "j", "h"}
_EVOLUTION_KEYS = {"method", "dt", "n_steps"}
_ESTIMATOR_KEYS = {"scheme", "shots", "mitigation", "p1", "p2", "readout_flip", "seed"}
_REFF_KEYS = {"training_size", "max_iterations", "epsilon", "n_targ", "threshold",
              "parameters_path"}
_OUTPUT_KEYS = {"directory", "formats"}
_EXPERIMENT_KEYS = {"data_path", "energy_scale"}
_TOP_KEYS = {"model", "evolution", "estimator", "reff", "output", "experiment", "seed"}


@dataclass(frozen=True)
class ExperimentTable:
    """Rows of (energy, intensity, optional error), energies strictly increasing."""

    energies: np.ndarray
    intensities: np.ndarray
    errors: np.ndarray | None = None


@dataclass(frozen=True)
class RunConfig:
    model: SpinModel
    method: str = "exact"
    dt: float = spectra.DEFAULT_DT
    n_steps: int = spectra.DEFAULT_N_STEPS
    scheme: str = "direct"
    shots: int | None = 8000
    mitigation: bool = False
    p1: float = 0.0
    p2: float = 0.0
    readout_flip: float = 0.0
    seed: int = 0
    training_size: int = 6
    max_iterations: int = 5000
    epsilon: float | None = None
    n_targ: int | None = None
    # deep default: fast-forwarding amplifies residual eigenphase error by the
    # step count, so spectra-quality parameters need cost well below 1e-6
    threshold: float | None = 1e-12
    parameters_path: str | None = None
    out_dir: str = "out"
    formats: tuple = ("csv",)
    experiment_path: str | None = None
    energy_scale: float = 1.0
    raw: dict = field(default_factory=dict)

    def noise_model(self) -> NoiseModel | None:
        if self.p1 == 0 and self.p2 == 0 and self.readout_flip == 0:
            return None
        return NoiseModel.uniform(self.p1, self.p2, self.readout_flip, n_qubits=3)

    def estimator(self) -> EstimatorConfig:
        return EstimatorConfig(self.scheme, self.method, self.shots,
                               self.mitigation, self.noise_model(), self.seed)

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(training_size=self.training_size,
                               max_iterations=self.max_iterations,
                               threshold=self.threshold,
                               epsilon=self.epsilon, n_targ=self.n_targ)


def _reject_unknown(block: dict, allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where} block")


def _check_range(name, value, lo, hi):
    if not (lo <= value <= hi):
        raise ConfigError(f"{name}={value} outside documented range [{lo}, {hi}]")


def parse_config(data: dict) -> RunConfig:
    """Validate the key-value tree; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown(data, _TOP_KEYS, "top-level")

    mblock = data.get("model", {})
    _reject_unknown(mblock, _MODEL_KEYS, "model")
    preset = mblock.get("preset")
    if preset == "xy_zz":
        model = SpinModel.xy_zz()
    elif preset in (None, "heisenberg"):
        if "j" in mblock:
            model = SpinModel.heisenberg(float(mblock["j"]), float(mblock.get("h", 1.0)))
        elif {"jxx", "jyy", "jzz"} <= set(mblock):
            model = SpinModel(float(mblock["jxx"]), float(mblock["jyy"]),
                              float(mblock["jzz"]), float(mblock.get("h", 0.0)))
        else:
            model = SpinModel.heisenberg(1.0, 1.0)
    else:
        raise ConfigError(f"unknown model preset {preset!r}")

    eblock = data.get("evolution", {})
    _reject_unknown(eblock, _EVOLUTION_KEYS, "evolution")
    method = eblock.get("method", "exact")
    if method not in ("exact", "trotter", "reff"):
        raise ConfigError(f"evolution.method must be exact|trotter|reff, got {method!r}")
    dt = float(eblock.get("dt", spectra.DEFAULT_DT))
    n_steps = int(eblock.get("n_steps", spectra.DEFAULT_N_STEPS))
    _check_range("evolution.dt", dt, 1e-6, 10.0)
    _check_range("evolution.n_steps", n_steps, 1, 100000)

    sblock = data.get("estimator", {})
    _reject_unknown(sblock, _ESTIMATOR_KEYS, "estimator")
    scheme = sblock.get("scheme", "direct")
    if scheme not in ("direct", "indirect"):
        raise ConfigError(f"estimator.scheme must be direct|indirect, got {scheme!r}")
    shots = sblock.get("shots", 8000)
    if shots is not None:
        shots = int(shots)
        _check_range("estimator.shots", shots, 1, 10 ** 9)
    p1 = float(sblock.get("p1", 0.0))
    p2 = float(sblock.get("p2", 0.0))
    flip = float(sblock.get("readout_flip", 0.0))
    for name, v in (("p1", p1), ("p2", p2), ("readout_flip", flip)):
        _check_range(f"estimator.{name}", v, 0.0, 1.0)

    rblock = data.get("reff", {})
    _reject_unknown(rblock, _REFF_KEYS, "reff")
    pp = rblock.get("parameters_path")
    if pp is not None and not Path(pp).exists():
        raise ConfigError(f"reff.parameters_path {pp!r} does not exist")

    oblock = data.get("output", {})
    _reject_unknown(oblock, _OUTPUT_KEYS, "output")
    formats = tuple(oblock.get("formats", ["csv"]))
    if not set(formats) <= {"csv", "json"}:
        raise ConfigError(f"output.formats must be drawn from csv,json; got {formats}")

    xblock = data.get("experiment", {})
    _reject_unknown(xblock, _EXPERIMENT_KEYS, "experiment")
    xpath = xblock.get("data_path")
    if xpath is not None and not Path(xpath).exists():
        raise ConfigError(f"experiment.data_path {xpath!r} does not exist")

    seed = int(data.get("seed", sblock.get("seed", 0)))
    return RunConfig(
        model=model, method=method, dt=dt, n_steps=n_steps, scheme=scheme,
        shots=shots, mitigation=bool(sblock.get("mitigation", False)),
        p1=p1, p2=p2, readout_flip=flip, seed=seed,
        training_size=int(rblock.get("training_size", 6)),
        max_iterations=int(rblock.get("max_iterations", 5000)),
        epsilon=rblock.get("epsilon"), n_targ=rblock.get("n_targ"),
        threshold=rblock.get("threshold",
                             None if rblock.get("epsilon") is not None else 1e-12),
        parameters_path=pp,
        out_dir=str(oblock.get("directory", "out")), formats=formats,
        experiment_path=xpath, energy_scale=float(xblock.get("energy_scale", 1.0)),
        raw=data)


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return parse_config({})
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path!r} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data)


# -- experiment ingestion ------------------------------------------------------

def ingest_experiment(path, scale: float = 1.0) -> ExperimentTable:
    """Read an energy,intensity[,error] CSV; energies must strictly increase.

    ``scale`` multiplies the energy column to convert to simulation frequency
    units; a missing error column is treated as absent, not zero.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["energy", "intensity"]:
            raise ConfigError(f"experiment CSV must start with header energy,intensity; "
                              f"got {header}")
        has_err = len(header) >= 3 and header[2].strip().lower() == "error"
        for ln, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row[:3 if has_err else 2]]
            except ValueError as exc:
                col = next(k for k, c in enumerate(row) if not _is_float(c))
                raise ConfigError(f"non-numeric cell at row {ln}, column {col + 1}: "
                                  f"{row[col]!r}") from exc
            rows.append(vals)
    if not rows:
        raise ConfigError("experiment CSV has no data rows")
    energies = np.array([r[0] for r in rows]) * scale
    if np.any(np.diff(energies) <= 0):
        bad = int(np.argmax(np.diff(energies) <= 0)) + 2
        raise ConfigError(f"energies not strictly increasing at row {bad}")
    intens = np.array([r[1] for r in rows])
    if not np.all(np.isfinite(intens)):
        raise ConfigError("intensities must be finite")
    errors = np.array([r[2] for r in rows]) if rows[0][2:] else None
    return ExperimentTable(energies, intens, errors)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# -- artifacts -----------------------------------------------------------------

def _config_hash(cfg: RunConfig) -> str:
    canon = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


class ArtifactWriter:
    def __init__(self, cfg: RunConfig, subcommand: str, out_dir: str | None = None):
        self.cfg = cfg
        self.dir = Path(out_dir or cfg.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.names: list = []
        self.extra: dict = {}
        self.subcommand = subcommand

    def path(self, name: str) -> Path:
        self.names.append(name)
        return self.dir / name

    def write_json(self, name: str, payload: dict) -> None:
        (self.dir / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.names.append(name)

    def finish(self) -> None:
        manifest = {
            "subcommand": self.subcommand,
            "config_hash": _config_hash(self.cfg),
            "seed": self.cfg.seed,
            "versions": {"spindimer": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__},
            "artifacts": sorted(self.names),
        }
        manifest.update(self.extra)
        (self.dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit_series(w: ArtifactWriter, name: str, series) -> None:
    if "csv" in w.cfg.formats:
        spectra.write_series_csv(w.path(f"{name}.csv"), series)
    if "json" in w.cfg.formats:
        w.write_json(f"{name}.json", {
            "t": list(map(float, series.times)),
            "re": list(map(float, series.values.real)),
            "im": list(map(float, series.values.imag)),
            "provenance": str(series.provenance)})


def _emit_spectrum(w: ArtifactWriter, name: str, ps) -> None:
    if "csv" in w.cfg.formats:
        spectra.write_spectrum_csv(w.path(f"{name}.csv"), ps)
    if "json" in w.cfg.formats:
        w.write_json(f"{name}.json", {"omega": list(map(float, ps.omegas)),
                                      "power": list(map(float, ps.power))})


def _emit_dsf(w: ArtifactWriter, name: str, omegas, values) -> None:
    if "csv" in w.cfg.formats:
        spectra.write_dsf_csv(w.path(f"{name}.csv"), omegas, values)
    if "json" in w.cfg.formats:
        w.write_json(f"{name}.json", {"omega": list(map(float, omegas)),
                                      "intensity": list(map(float, values))})


# -- reusable pipeline pieces --------------------------------------------------

def _trained_ansatz(cfg: RunConfig, model: SpinModel, dt: float):
    """Load trained parameters if configured, else train now (seeded)."""
    if cfg.parameters_path:
        return load_parameters(cfg.parameters_path)
    u_target = _step_target(model, dt)
    result = reff.train(u_target, cfg.optimizer(), child_rng(cfg.seed, "reff-train"))
    if not result.converged:
        raise InfeasibleThresholdError(
            f"REFF training did not reach threshold {result.threshold:.3e} "
            f"within {cfg.max_iterations} iterations (cost {result.final_cost:.3e})")
    return result.ansatz(model, dt)


def _step_target(model: SpinModel, dt: float) -> np.ndarray:
    from .trotter import trotter_step_circuit
    return trotter_step_circuit(model, dt).unitary()


def _isotropic_channel_set() -> list:
    # transverse channel counted once (yy duplicates xx for these models)
    return [("x", "x"), ("z", "z")]


def _dsf_pipeline(cfg: RunConfig, w: ArtifactWriter, tag: str, method: str,
                  estimator: EstimatorConfig | None, ansatz=None) -> dict:
    series = spectra.sweep(cfg.model, evolution=method, dt=cfg.dt, n_steps=cfg.n_steps,
                           estimator=estimator, channels=_isotropic_channel_set(),
                           pairs=[(1, 1), (2, 2)], reff_ansatz=ansatz, seed=cfg.seed)
    dsf = spectra.dynamical_structure_factor(series, q=0.0)
    inten = spectra.intensity(dsf, isotropic=True)
    _emit_dsf(w, f"dsf_{tag}", dsf.omegas, inten)
    return {"series": series, "dsf": dsf, "intensity": inten}


# -- subcommands ---------------------------------------------------------------

def cmd_exact_spectrum(cfg: RunConfig, out_dir: str | None) -> int:
    w = ArtifactWriter(cfg, "exact-spectrum", out_dir)
    es = eigensystem(cfg.model)
    w.write_json("eigensystem.json", {
        "energies": [float(e) for e in es.energies],
        "excitations": [float(e) for e in es.excitation_energies()],
    })
    res = _dsf_pipeline(cfg, w, "exact", "exact", None)
    for key, series in res["series"].items():
        name = f"corr_{key[0]}{key[1]}_{key[2]}{key[3]}_exact"
        _emit_series(w, name, series)
        _emit_spectrum(w, f"spec_{key[0]}{key[1]}_{key[2]}{key[3]}_exact",
                       spectra.power_spectrum(series))
    w.finish()
    return 0


def cmd_trotter_sim(cfg: RunConfig, out_dir: str | None) -> int:
    w = ArtifactWriter(cfg, "trotter-sim", out_dir)
    est = cfg.estimator() if (cfg.shots is not None or cfg.noise_model()) else None
    series = spectra.sweep(cfg.model, evolution="trotter", dt=cfg.dt, n_steps=cfg.n_steps,
                           estimator=est, channels=[("x", "x"), ("z", "z")],
                           pairs=[(1, 1)], seed=cfg.seed)
    oracle = spectra.sweep(cfg.model, evolution="exact", dt=cfg.dt, n_steps=cfg.n_steps,
                           channels=[("x", "x"), ("z", "z")], pairs=[(1, 1)])
    rms = {}
    for key, s in series.items():
        name = f"corr_{key[0]}{key[1]}_{key[2]}{key[3]}_trotter"
        _emit_series(w, name, s)
        _emit_spectrum(w, f"spec_{key[0]}{key[1]}_{key[2]}{key[3]}_trotter",
                       spectra.power_spectrum(s))
        rms[f"{key[0]}{key[1]}_{key[2]}{key[3]}"] = spectra.rms_report(s, oracle[key])
    w.extra["rms"] = rms
    w.extra["trotter_error_final"] = trotter_error(cfg.model, cfg.dt, cfg.n_steps - 1)
    w.finish()
    return 0


def cmd_reff_train(cfg: RunConfig, out_dir: str | None) -> int:
    w = ArtifactWriter(cfg, "reff-train", out_dir)
    u_target = _step_target(cfg.model, cfg.dt)
    result = reff.train(u_target, cfg.optimizer(), child_rng(cfg.seed, "reff-train"))
    save_parameters(w.path("reff_parameters.json"), result, cfg.model, cfg.dt)
    w.extra["training"] = {
        "final_cost": float(result.final_cost),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "threshold": float(result.threshold),
    }
    w.finish()
    if not result.converged:
        print(f"error: numerical: training stopped above threshold "
              f"({result.final_cost:.3e} > {result.threshold:.3e})", file=sys.stderr)
        return NUMERICAL_ERROR
    return 0


def cmd_correlate(cfg: RunConfig, out_dir: str | None) -> int:
    w = ArtifactWriter(cfg, "correlate", out_dir)
    ansatz = _trained_ansatz(cfg, cfg.model, cfg.dt) if cfg.method == "reff" else None
    est = cfg.estimator() if (cfg.shots is not None or cfg.noise_model()) else None
    series = spectra.sweep(cfg.model, evolution=cfg.method, dt=cfg.dt,
                           n_steps=cfg.n_steps, estimator=est,
                           channels=[("x", "x"), ("y", "y"), ("z", "z")],
                           pairs=[(1, 1), (2, 2)], reff_ansatz=ansatz, seed=cfg.seed)
    for key, s in series.items():
        _emit_series(w, f"corr_{key[0]}{key[1]}_{key[2]}{key[3]}_{cfg.method}", s)
    w.finish()
    return 0


def cmd_dsf(cfg: RunConfig, out_dir: str | None) -> int:
    w = ArtifactWriter(cfg, "dsf", out_dir)
    ansatz = _trained_ansatz(cfg, cfg.model, cfg.dt) if cfg.method == "reff" else None
    est = cfg.estimator() if (cfg.shots is not None or cfg.noise_model()) else None
    _dsf_pipeline(cfg, w, cfg.method, cfg.method, est, ansatz)
    w.finish()
    return 0


def cmd_compare_experiment(cfg: RunConfig, out_dir: str | None) -> int:
    if cfg.experiment_path is None:
        raise ConfigError("compare-experiment requires an experiment block with data_path")
    w = ArtifactWriter(cfg, "compare-experiment", out_dir)
    table = ingest_experiment(cfg.experiment_path, cfg.energy_scale)
    ansatz = _trained_ansatz(cfg, cfg.model, cfg.dt) if cfg.method == "reff" else None
    est = cfg.estimator() if (cfg.shots is not None or cfg.noise_model()) else None
    series = spectra.sweep(cfg.model, evolution=cfg.method, dt=cfg.dt,
                           n_steps=cfg.n_steps, estimator=est,
                           channels=[("x", "x")], pairs=[(1, 1)],
                           reff_ansatz=ansatz, seed=cfg.seed)
    s_xx = series[("x", "x", 1, 1)]
    ps = spectra.power_spectrum(s_xx)
    _emit_spectrum(w, "sim_spectrum_xx", ps)
    # alignment: simulated sigma-x peak bin vs the experiment's middle peak
    half = len(ps.omegas) // 2
    sim_peak = float(ps.omegas[int(np.argmax(ps.power[:half]))])
    exp_peak = float(table.energies[int(np.argmax(table.intensities))])
    gap = float(eigensystem(cfg.model).excitation_energies()[-1])
    w.write_json("overlay_report.json", {
        "sim_peak_omega": sim_peak,
        "experiment_peak_energy": exp_peak,
        "energy_scale": cfg.energy_scale,
        "eigensystem_gap": gap,
        "bin_width": float(ps.omegas[1] - ps.omegas[0]),
        "peak_offset": sim_peak - exp_peak,
    })
    w.finish()
    return 0


# -- figure recipes (caption parameters frozen) --------------------------------

def _recipe_config(cfg: RunConfig, **overrides) -> RunConfig:
    merged = dict(cfg.raw)
    for block, vals in overrides.items():
        merged.setdefault(block, {})
        merged[block] = {**vals, **merged.get(block, {})}
    return parse_config(merged)


def cmd_reproduce(cfg: RunConfig, figure: str, out_dir: str | None) -> int:
    w = ArtifactWriter(cfg, f"reproduce-{figure}", out_dir)
    if figure in ("fig2", "fig5"):
        # Re C^xx_11 (fig2) / xx and zz with mitigation contrast (fig5),
        # Heisenberg J=h=1, N=100, dt=0.3, 8000 shots
        noise = cfg.noise_model() or NoiseModel.uniform(0.001, 0.007, 0.01, 3)
        ansatz = _trained_ansatz(cfg, cfg.model, cfg.dt)
        channels = [("x", "x")] if figure == "fig2" else [("x", "x"), ("z", "z")]
        oracle = spectra.sweep(cfg.model, evolution="exact", dt=cfg.dt,
                               n_steps=cfg.n_steps, channels=channels, pairs=[(1, 1)])
        rms = {}
        variants = [("trotter", None), ("reff", ansatz)]
        for method, anz in variants:
            for mitig in ([False] if figure == "fig2" else [False, True]):
                est = EstimatorConfig("direct", method, cfg.shots or 8000, mitig,
                                      noise, cfg.seed)
                series = spectra.sweep(cfg.model, evolution=method, dt=cfg.dt,
                                       n_steps=cfg.n_steps, estimator=est,
                                       channels=channels, pairs=[(1, 1)],
                                       reff_ansatz=anz, seed=cfg.seed)
                suffix = f"{method}{'_mitigated' if mitig else ''}"
                for key, s in series.items():
                    name = f"corr_{key[0]}{key[1]}_11_{suffix}"
                    _emit_series(w, name, s)
                    _emit_spectrum(w, f"spec_{key[0]}{key[1]}_11_{suffix}",
                                   spectra.power_spectrum(s))
                    rms[f"{key[0]}{key[1]}_{suffix}"] = spectra.rms_report(s, oracle[key])
        for key, s in oracle.items():
            _emit_series(w, f"corr_{key[0]}{key[1]}_11_exact", s)
            _emit_spectrum(w, f"spec_{key[0]}{key[1]}_11_exact", spectra.power_spectrum(s))
        w.extra["rms"] = rms
    elif figure == "fig4":
        # triplet-splitting DSF, exact vs direct REFF
        ansatz = _trained_ansatz(cfg, cfg.model, cfg.dt)
        _dsf_pipeline(cfg, w, "exact", "exact", None)
        noise = cfg.noise_model() or NoiseModel.uniform(0.001, 0.007, 0.01, 3)
        est = EstimatorConfig("direct", "reff", cfg.shots or 8000, cfg.mitigation,
                              noise, cfg.seed)
        _dsf_pipeline(cfg, w, "reff_direct", "reff", est, ansatz)
    elif figure == "fig8":
        # XY + ZZ perturbation model vs (optional) experiment energy axis
        base = _recipe_config(cfg, model={"preset": "xy_zz"},
                              evolution={"dt": 0.1, "n_steps": 100})
        ansatz = _trained_ansatz(base, base.model, base.dt)
        exact = spectra.sweep(base.model, evolution="exact", dt=base.dt,
                              n_steps=base.n_steps, channels=[("x", "x")], pairs=[(1, 1)])
        _emit_spectrum(w, "spec_xx_11_exact",
                       spectra.power_spectrum(exact[("x", "x", 1, 1)]))
        noise = base.noise_model() or NoiseModel.uniform(0.001, 0.007, 0.01, 3)
        est = EstimatorConfig("direct", "reff", base.shots or 8000, True, noise, base.seed)
        series = spectra.sweep(base.model, evolution="reff", dt=base.dt,
                               n_steps=base.n_steps, estimator=est,
                               channels=[("x", "x")], pairs=[(1, 1)],
                               reff_ansatz=ansatz, seed=base.seed)
        ps = spectra.power_spectrum(series[("x", "x", 1, 1)])
        _emit_spectrum(w, "spec_xx_11_reff_direct_mitigated", ps)
        gap = float(eigensystem(base.model).excitation_energies()[-1])
        half = len(ps.omegas) // 2
        peak = float(ps.omegas[int(np.argmax(ps.power[:half]))])
        w.extra["peak_check"] = {"sim_peak_omega": peak, "eigensystem_gap": gap,
                                 "bin_width": float(ps.omegas[1] - ps.omegas[0])}
        if cfg.experiment_path:
            table = ingest_experiment(cfg.experiment_path, cfg.energy_scale)
            w.extra["experiment_peak_energy"] = float(
                table.energies[int(np.argmax(table.intensities))])
    else:
        raise ConfigError(f"unknown figure {figure!r}; choose fig2|fig4|fig5|fig8")
    w.finish()
    return 0


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spindimer",
                                description="Spin-dimer dynamics and INS spectra toolkit")
    p.add_argument("--config", default=None, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out-dir", default=None, help="override output directory")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="override output format")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in ("exact-spectrum", "trotter-sim", "reff-train", "correlate", "dsf",
                 "compare-experiment"):
        sub.add_parser(name)
    rp = sub.add_parser("reproduce")
    rp.add_argument("figure", choices=["fig2", "fig4", "fig5", "fig8"])
    return p


_COMMANDS = {
    "exact-spectrum": cmd_exact_spectrum,
    "trotter-sim": cmd_trotter_sim,
    "reff-train": cmd_reff_train,
    "correlate": cmd_correlate,
    "dsf": cmd_dsf,
    "compare-experiment": cmd_compare_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None or args.format is not None:
            raw = dict(cfg.raw)
            if args.seed is not None:
                raw["seed"] = args.seed
            if args.format is not None:
                raw.setdefault("output", {})
                raw["output"] = {**raw["output"], "formats": [args.format]}
            cfg = parse_config(raw)
        if args.subcommand == "reproduce":
            return cmd_reproduce(cfg, args.figure, args.out_dir)
        return _COMMANDS[args.subcommand](cfg, args.out_dir)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (InfeasibleThresholdError, DegenerateGroundStateError,
            np.linalg.LinAlgError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
