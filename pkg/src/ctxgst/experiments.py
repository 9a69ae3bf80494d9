"""Seeded Monte Carlo experiments and pure-model curves, emitted as CSV.

Every command takes an :class:`ExperimentConfig` and returns a list of row
dicts; :func:`write_csv` prefixes them with the schema version, the command
and a hash of the config so that each file can be regenerated exactly.
Repetition ``r`` at depth ``p`` draws its data from the seed derived from
``(config.seed, p, r)``, so results do not depend on scheduling or on the
order in which depths are run.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .circuits import (Design, design_last_depth, design_log_spaced, design_ls_fiducials, design_ramsey_fi)
from .datagen import Dataset, sample
from .estimator import FitConfig, fit
from .fisher import RankWarning, crb_bounds, fisher_design, spectrum_bound
from .gateset import GateSet, ThetaLayout, ThetaVector, build_gateset, nominal_theta
from .lsgate import LsParams, Mode, amplification_factor, closure_depths, trajectory_endpoints
from .metrics import avg_gate_distance, diamond_distance
from .nonmarkov import WithinGate, nonmarkov_rows
from .spectra import TWO_PI, PhysicalConfig

SCHEMA_VERSION = 1
SCHEMES = ("last-depth", "log-spaced", "ls-fiducials", "ramsey-fi")
MAX_FAILURE_RATE = 0.05


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class NumericalFailure(RuntimeError):
    """A result that acceptance depends on could not be computed reliably."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Physical point, design and Monte Carlo settings; SI units, angular frequencies in rad/s."""

    omega_z: float = TWO_PI * 1e6
    gate_time: float = 97e-6
    phase_residue: float | None = None
    stark_shift: float = TWO_PI * 50e3
    calibrate: bool = True
    eta_com: float = 0.1
    nbar_b: float = 5.0
    nbar_com: float = 5.0
    c: float = 2e9
    tau_c: float = 5e-4
    scheme: str = "last-depth"
    depths: tuple[int, ...] = (1, 2, 4, 8, 16, 32)
    n_samples: int = 10_000
    repetitions: int = 100
    seed: int = 0
    mode: str = Mode.CONTEXT_DEPENDENT.value
    cost: str = "ML"
    cp_constraint: bool = False
    threads: int = 1
    out_dir: str = "results"
    gate_times: tuple[float, ...] = (95e-6, 97e-6)
    nm_steps_per_gate: int = 4000

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(int(p) for p in self.depths))
        object.__setattr__(self, "gate_times", tuple(float(t) for t in self.gate_times))
        if self.repetitions < 1 or self.n_samples < 1 or self.threads < 1:
            raise ConfigError("repetitions, n_samples and threads must be positive")
        if not self.depths or min(self.depths) < 1:
            raise ConfigError("depths must be a nonempty list of positive integers")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.scheme == "log-spaced" and any(p & (p - 1) for p in self.depths):
            raise ConfigError("log-spaced designs need power-of-two depths")
        if self.nm_steps_per_gate < 200:
            raise ConfigError("nm_steps_per_gate must be at least 200")
        try:
            Mode.parse(self.mode)
            self.physical()
            FitConfig(cost=self.cost, cp_constraint=self.cp_constraint)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def physical(self, gate_time: float | None = None) -> PhysicalConfig:
        return PhysicalConfig(omega_z=self.omega_z, gate_time=self.gate_time if gate_time is None else gate_time,
                              eta_com=self.eta_com, nbar_b=self.nbar_b, nbar_com=self.nbar_com, c=self.c,
                              tau_c=self.tau_c, stark_shift=self.stark_shift, calibrate=self.calibrate,
                              phase_residue=self.phase_residue)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_json(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


# Named parameter points.  "thermal" moves the gate near 95 us, where the
# breathing mode is left with a sizeable displacement after each gate, so
# that context dependence is resolvable with 10^4 shots per circuit.
PRESETS: dict[str, dict] = {
    "depth-scan": {},
    "thermal": {"c": 2e7, "gate_time": 95e-6, "phase_residue": 1 / 40.5, "scheme": "ls-fiducials",
                "depths": (1, 2, 4, 8, 16, 24, 32, 40)},
    "context": {"c": 2e7, "gate_time": 95e-6, "phase_residue": 1 / 40.5, "scheme": "last-depth",
                "depths": (1, 2, 4, 8, 12, 16, 20, 24, 32)},
    "nonmarkov": {"c": 2e7, "phase_residue": 1 / 40.5, "depths": (40,)},
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return ExperimentConfig(**{**PRESETS[name], **overrides})


# ------------------------------------------------------------------ helpers


def rep_seed(seed: int, *keys: int) -> int:
    """Independent 63-bit seed for one task, derived from the master seed."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)[0] >> 1)


def make_design(config: ExperimentConfig, p: int) -> Design:
    n = config.n_samples
    if config.scheme == "last-depth":
        return design_last_depth(p, n)
    if config.scheme == "log-spaced":
        return design_log_spaced(p, n)
    if config.scheme == "ls-fiducials":
        return design_ls_fiducials(p, n)
    return design_ramsey_fi(p, n)


@dataclass(frozen=True)
class Truth:
    base: LsParams
    theta: ThetaVector
    gateset: GateSet


@lru_cache(maxsize=8)
def _truth(config_json: str) -> Truth:
    config = ExperimentConfig.from_json(config_json)
    physical = config.physical()
    base = LsParams.from_physical(physical)
    theta = nominal_theta(ThetaLayout(), physical)
    return Truth(base, theta, build_gateset(theta, base=base))


def truth(config: ExperimentConfig) -> Truth:
    return _truth(config.to_json())


def _fit_config(config: ExperimentConfig, mode: str | None = None) -> FitConfig:
    return FitConfig(cost=config.cost, cp_constraint=config.cp_constraint, mode=mode or config.mode, stderr=False)


def _run(fn: Callable, tasks: Sequence, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


def _ci(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return float("nan"), float("nan")
    lo, hi = np.percentile(values, [2.5, 97.5])
    return float(lo), float(hi)


def _check_failures(n_failed: int, n_total: int, what: str) -> None:
    if n_total and n_failed / n_total >= MAX_FAILURE_RATE:
        raise NumericalFailure(f"{n_failed}/{n_total} fits failed in {what}")


def _rep_data(config: ExperimentConfig, p: int, rep: int) -> Dataset:
    t = truth(config)
    return sample(make_design(config, p), t.gateset, Mode.CONTEXT_DEPENDENT, rep_seed(config.seed, p, rep))


# ----------------------------------------------------------- scan-depth


def _scan_task(args) -> dict:
    config_json, p, rep = args
    config = ExperimentConfig.from_json(config_json)
    t = truth(config)
    try:
        res = fit(_rep_data(config, p, rep), config=_fit_config(config), base=t.base)
        if not res.success:
            return {"ok": False, "error": res.status}
        return {"ok": True, "distance": avg_gate_distance(res.gateset(), t.gateset)}
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        return {"ok": False, "error": repr(exc)}


def cmd_scan_depth(config: ExperimentConfig) -> list[dict]:
    """Mean and 95% percentile interval of the gate-averaged diamond distance per depth."""
    cj = config.to_json()
    tasks = [(cj, p, r) for p in config.depths for r in range(config.repetitions)]
    results = _run(_scan_task, tasks, config.threads)
    rows = []
    for p in config.depths:
        res = [r for (_, q, _), r in zip(tasks, results) if q == p]
        d = np.array([r["distance"] for r in res if r["ok"]])
        failed = len(res) - d.size
        _check_failures(failed, len(res), f"scan-depth p={p}")
        lo, hi = _ci(d)
        rows.append({"depth": p, "scheme": config.scheme, "mean_distance": float(d.mean()), "ci_low": lo,
                     "ci_high": hi, "n_ok": int(d.size), "n_failed": failed,
                     "n_circuits": len(make_design(config, p))})
    return rows


# --------------------------------------------------------- param-scaling


def _param_task(args) -> dict:
    config_json, p, rep = args
    config = ExperimentConfig.from_json(config_json)
    t = truth(config)
    try:
        res = fit(_rep_data(config, p, rep), config=_fit_config(config, Mode.CONTEXT_DEPENDENT.value), base=t.base)
        if not res.success:
            return {"ok": False, "error": res.status}
        return {"ok": True, "gamma_th": res.theta_hat["gamma_th"] - t.theta["gamma_th"],
                "gamma_d": res.theta_hat["gamma_d"] - t.theta["gamma_d"]}
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        return {"ok": False, "error": repr(exc)}


def _rms(errors: np.ndarray) -> tuple[float, float]:
    """Root-mean-square error and its delta-method standard error."""
    sq = errors ** 2
    rms = float(np.sqrt(sq.mean()))
    se = float(sq.std(ddof=1) / (2 * rms * np.sqrt(sq.size))) if sq.size > 1 and rms > 0 else float("nan")
    return rms, se


def fisher_bounds(config: ExperimentConfig, p: int) -> dict:
    t = truth(config)
    fm = fisher_design(make_design(config, p), t.theta, base=t.base)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankWarning)
        b = crb_bounds(fm)
    return {"fi_gamma_th": b["gamma_th"], "fi_gamma_d": b["gamma_d"],
            "fi_spectrum_gamma_th": spectrum_bound(fm, "gamma_th"),
            "fi_spectrum_gamma_d": spectrum_bound(fm, "gamma_d"), "fi_rank": b.rank}


def cmd_param_scaling(config: ExperimentConfig) -> list[dict]:
    """Monte Carlo RMS errors of the thermal and dephasing parameters against depth, with FI bounds."""
    cj = config.to_json()
    t = truth(config)
    tasks = [(cj, p, r) for p in config.depths for r in range(config.repetitions)]
    results = _run(_param_task, tasks, config.threads)
    closing = set(closure_depths(t.base.x, config.depths))
    rows = []
    for p in config.depths:
        res = [r for (_, q, _), r in zip(tasks, results) if q == p and r["ok"]]
        failed = config.repetitions - len(res)
        _check_failures(failed, config.repetitions, f"param-scaling p={p}")
        eth, se_th = _rms(np.array([r["gamma_th"] for r in res]))
        ed, se_d = _rms(np.array([r["gamma_d"] for r in res]))
        rows.append({"p": p, "amplification": float(amplification_factor(p, t.base.x)), "closure": p in closing,
                     "err_gamma_th": eth, "se_gamma_th": se_th, "err_gamma_d": ed, "se_gamma_d": se_d,
                     **fisher_bounds(config, p), "n_ok": len(res), "n_failed": failed})
    return rows


# ------------------------------------------------------- context-compare


def _context_task(args) -> dict:
    config_json, p, rep = args
    config = ExperimentConfig.from_json(config_json)
    t = truth(config)
    data = _rep_data(config, p, rep)
    true_ls = t.gateset.superop("LS")
    out = {"ok": True}
    for key, mode in (("dep", Mode.CONTEXT_DEPENDENT), ("indep", Mode.CONTEXT_INDEPENDENT)):
        try:
            res = fit(data, config=_fit_config(config, mode.value), base=t.base)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            return {"ok": False, "error": repr(exc)}
        if not res.success:
            return {"ok": False, "error": res.status}
        # the first LS gate of the sequence as each model sees it
        est = res.recover_gate_at(1) if mode is Mode.CONTEXT_DEPENDENT else res.gateset().superop("LS")
        out[f"d_{key}"] = diamond_distance(est, true_ls)
        out[f"gth_{key}"] = res.theta_hat["gamma_th"] - t.theta["gamma_th"]
        out[f"gd_{key}"] = res.theta_hat["gamma_d"] - t.theta["gamma_d"]
    return out


def cmd_context_compare(config: ExperimentConfig) -> list[dict]:
    """LS diamond distance of context-dependent and context-independent fits to the same data."""
    cj = config.to_json()
    t = truth(config)
    tasks = [(cj, p, r) for p in config.depths for r in range(config.repetitions)]
    results = _run(_context_task, tasks, config.threads)
    rows = []
    for p in config.depths:
        res = [r for (_, q, _), r in zip(tasks, results) if q == p and r["ok"]]
        failed = config.repetitions - len(res)
        _check_failures(failed, config.repetitions, f"context-compare p={p}")
        row = {"p": p, "amplification": float(amplification_factor(p, t.base.x))}
        for key in ("dep", "indep"):
            d = np.array([r[f"d_{key}"] for r in res])
            lo, hi = _ci(d)
            row |= {f"distance_{key}": float(d.mean()), f"ci_low_{key}": lo, f"ci_high_{key}": hi,
                    f"err_gamma_th_{key}": _rms(np.array([r[f"gth_{key}"] for r in res]))[0],
                    f"err_gamma_d_{key}": _rms(np.array([r[f"gd_{key}"] for r in res]))[0]}
        row |= {"n_ok": len(res), "n_failed": failed}
        rows.append(row)
    return rows


# ----------------------------------------------------------- pure curves


def _depth_range(config: ExperimentConfig) -> range:
    return range(1, max(config.depths) + 1)


def cmd_amplification(config: ExperimentConfig) -> list[dict]:
    rows = []
    for tg in config.gate_times:
        d = config.physical(tg).derived()
        for p in _depth_range(config):
            rows.append({"gate_time": d["gate_time"], "p": p, "amplification": float(amplification_factor(p, d["x"])),
                         "gamma_th_p": float(d["gamma_th"] * amplification_factor(p, d["x"]))})
    return rows


def cmd_trajectory(config: ExperimentConfig) -> list[dict]:
    rows = []
    for tg in config.gate_times:
        d = config.physical(tg).derived()
        pts = trajectory_endpoints(max(config.depths), d["x"], d["phi_gate"])
        for p, z in enumerate(pts, start=1):
            rows.append({"gate_time": d["gate_time"], "p": p, "re": float(z.real), "im": float(z.imag),
                         "abs": float(abs(z))})
    return rows


def cmd_nonmarkov(config: ExperimentConfig) -> list[dict]:
    setup = WithinGate.from_physical(config.physical())
    return nonmarkov_rows(max(config.depths), setup, setup.gate_time / config.nm_steps_per_gate)


def cmd_fisher(config: ExperimentConfig) -> list[dict]:
    t = truth(config)
    return [{"p": p, "amplification": float(amplification_factor(p, t.base.x)), **fisher_bounds(config, p)}
            for p in config.depths]


def cmd_sample(config: ExperimentConfig) -> Dataset:
    """One dataset at the deepest configured depth."""
    t = truth(config)
    p = max(config.depths)
    return sample(make_design(config, p), t.gateset, Mode.CONTEXT_DEPENDENT, rep_seed(config.seed, p, 0))


def cmd_fit(config: ExperimentConfig, data: Dataset):
    return fit(data, config=replace(_fit_config(config), stderr=True), base=truth(config).base)


# ------------------------------------------------------------------ output


def write_csv(rows: Sequence[dict], config: ExperimentConfig, command: str, path=None) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n# command: {command}\n# config_hash: {config.digest()}\n")
    buf.write(f"# seed: {config.seed}\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def read_csv(path) -> tuple[dict, list[dict]]:
    """Header metadata and rows of a CSV written by :func:`write_csv`."""
    meta, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


COMMANDS: dict[str, Callable] = {
    "scan-depth": cmd_scan_depth,
    "param-scaling": cmd_param_scaling,
    "context-compare": cmd_context_compare,
    "amplification": cmd_amplification,
    "trajectory": cmd_trajectory,
    "nonmarkov": cmd_nonmarkov,
    "fisher": cmd_fisher,
}
