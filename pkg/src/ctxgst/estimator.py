"""Maximum-likelihood and weighted least-squares fits of the parameter vector.

Both costs are minimised as sums of squared residuals with
``scipy.optimize.least_squares``.  For the likelihood the residual of each
outcome is the signed deviance ``sign(f - p) sqrt(2 N (f log(f/p) - f + p))``;
summed over a circuit the ``- f + p`` terms cancel, so the squared norm is
``2 N`` times the negative log-likelihood up to a data-only constant.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import xlogy

from .circuits import CircuitModel
from .datagen import Dataset
from .fisher import _per_circuit, crb_bounds
from .gateset import GateSet, ThetaLayout, ThetaVector, build_gateset, ideal_theta, ls_params_of
from .lsgate import LsParams, Mode, amplification_factor, intermediate_superop

PROB_FLOOR = 1e-12
JAC_STEP = 1e-6  # central differences
FWD_STEP = 1e-7


class SensitivityLossError(ArithmeticError):
    """The amplification factor vanishes, so the thermal parameter is not observable."""


@dataclass(frozen=True)
class FitConfig:
    cost: str = "ML"
    cp_constraint: bool = False
    multistart: int = 1
    gtol: float = 1e-10
    xtol: float = 1e-12
    ftol: float = 1e-14
    max_iter: int = 200
    mode: str = Mode.CONTEXT_DEPENDENT.value
    init_offset: float = 1e-4
    start_spread: float = 2e-3
    seed: int = 0
    stderr: bool = True
    jac: str = "forward"

    def __post_init__(self):
        if self.cost not in ("ML", "LS"):
            raise ValueError("cost must be 'ML' or 'LS'")
        if self.jac not in ("forward", "central"):
            raise ValueError("jac must be 'forward' or 'central'")
        if min(self.gtol, self.xtol, self.ftol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.multistart < 1 or self.max_iter < 1:
            raise ValueError("multistart and max_iter must be positive")
        object.__setattr__(self, "mode", Mode.parse(self.mode).value)


def cost_ml(probs: np.ndarray, freqs: np.ndarray) -> float:
    """``-sum f log p`` with probabilities floored at 1e-12."""
    return float(-xlogy(freqs, np.maximum(probs, PROB_FLOOR)).sum())


def cost_ls(probs: np.ndarray, freqs: np.ndarray) -> float:
    p = np.maximum(probs, PROB_FLOOR)
    return float(((freqs - p) ** 2 / p).sum())


def deviance(f: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``f log(f/p) - f + p`` without cancellation when ``f`` is close to ``p``."""
    d = (f - p) / p
    series = d * d * (0.5 + d * (-1 / 6 + d * (1 / 12 - d / 20)))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = xlogy(1 + d, 1 + d) - d
    return np.maximum(p * np.where(np.abs(d) < 1e-3, series, direct), 0.0)


class Objective:
    """Residual vector and Jacobian of a dataset under a circuit model."""

    def __init__(self, model: CircuitModel, dataset: Dataset, cost: str = "ML", jac: str = "central"):
        if tuple(model.circuits) != tuple(dataset.circuits):
            raise ValueError("model and dataset circuits differ")
        self.model = model
        self.freqs = dataset.frequencies
        self.weights = np.sqrt(dataset.totals.astype(float))[:, None]
        self.cost = cost
        self.jac_scheme = jac
        self.trace: list[tuple[int, float]] = []
        self.nfev = 0
        self._last = None

    def probs(self, x: np.ndarray) -> np.ndarray:
        self.nfev += 1
        return np.maximum(self.model.probabilities(x), PROB_FLOOR)

    def _residuals_from(self, p: np.ndarray) -> np.ndarray:
        f = self.freqs
        if self.cost == "LS":
            return (self.weights * (f - p) / np.sqrt(p)).ravel()
        return (self.weights * np.sign(f - p) * np.sqrt(2 * deviance(f, p))).ravel()

    def _dr_dp(self, p: np.ndarray) -> np.ndarray:
        f = self.freqs
        if self.cost == "LS":
            return -self.weights * (p + f) / (2 * p ** 1.5)
        root = np.sqrt(2 * deviance(f, p))
        safe = root > 0
        d = np.where(safe, -np.abs(f - p) / (p * np.where(safe, root, 1.0)), -1.0 / np.sqrt(p))
        return self.weights * d

    def residuals(self, x: np.ndarray) -> np.ndarray:
        p = self.probs(x)
        self._last = (x.copy(), p)
        return self._residuals_from(p)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        if self._last is not None and np.array_equal(self._last[0], x):
            p0 = self._last[1]
        else:
            p0 = self.probs(x)
        r = self._residuals_from(p0)
        self.trace.append((self.nfev, 0.5 * float(r @ r)))
        cols = []
        for i in range(x.size):
            e = np.zeros_like(x)
            if self.jac_scheme == "forward":
                e[i] = FWD_STEP
                cols.append(((self.model.probabilities(x + e) - p0) / FWD_STEP).ravel())
                self.nfev += 1
            else:
                e[i] = JAC_STEP
                cols.append(((self.model.probabilities(x + e) - self.model.probabilities(x - e)) / (2 * JAC_STEP)).ravel())
                self.nfev += 2
        dp = np.stack(cols, axis=1)
        return self._dr_dp(p0).ravel()[:, None] * dp

    def value(self, x: np.ndarray) -> float:
        p = self.probs(x)
        return cost_ml(p, self.freqs) if self.cost == "ML" else cost_ls(p, self.freqs)


@dataclass(frozen=True)
class FitResult:
    theta_hat: ThetaVector
    cost: float
    initial_cost: float
    success: bool
    status: str
    nfev: int
    base: LsParams
    mode: str
    stderr: dict | None = None
    cost_trace: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    starts: int = 1

    def gateset(self) -> GateSet:
        return build_gateset(self.theta_hat, base=self.base)

    def recover_gate_at(self, r: int) -> np.ndarray:
        return recover_gate_at(r, self.theta_hat, self.base)

    def to_json(self) -> str:
        trace = self.cost_trace
        return json.dumps({
            "schema_version": 1,
            "theta_hat": self.theta_hat.as_dict(),
            "layout": self.theta_hat.layout.to_dict(),
            "cost": self.cost,
            "initial_cost": self.initial_cost,
            "success": self.success,
            "status": self.status,
            "nfev": self.nfev,
            "mode": self.mode,
            "stderr": self.stderr,
            "cost_trace": {"steps": int(len(trace)), "first": float(trace[0, 1]) if len(trace) else None,
                           "last": float(trace[-1, 1]) if len(trace) else None},
        }, indent=2)


def initial_theta(layout: ThetaLayout, offset: float = 1e-4) -> ThetaVector:
    """Ideal gate set with every noise component nudged by ``offset``."""
    ideal = ideal_theta(layout)
    v = ideal.values.copy()
    for i, name in enumerate(layout.names):
        if name not in ("theta_ls", "omega0_t"):
            v[i] += offset
    return ThetaVector(layout, v)


def _starts(x0: np.ndarray, lower: np.ndarray, config: FitConfig) -> list[np.ndarray]:
    rng = np.random.default_rng(config.seed)
    out = [x0]
    for _ in range(config.multistart - 1):
        x = x0 + rng.normal(scale=config.start_spread, size=x0.size)
        out.append(np.where(np.isfinite(lower), np.maximum(x, lower + config.init_offset), x))
    return out


def fit(dataset: Dataset, layout: ThetaLayout | None = None, config: FitConfig | None = None,
        theta0: ThetaVector | None = None, base: LsParams | None = None, physical=None) -> FitResult:
    """Fit ``theta`` to ``dataset``; returns the best of ``config.multistart`` local fits."""
    config = config or FitConfig()
    layout = layout or (theta0.layout if theta0 is not None else ThetaLayout())
    if base is None:
        base = LsParams.from_physical(physical) if physical is not None else LsParams()
    model = CircuitModel(dataset.circuits, layout, base=base, mode=config.mode)
    obj = Objective(model, dataset, config.cost, config.jac)
    x0 = (theta0 or initial_theta(layout, config.init_offset)).values.copy()
    lower = layout.lower_bounds(config.cp_constraint)
    x0 = np.where(x0 <= lower, lower + config.init_offset, x0)
    initial_cost = obj.value(x0)

    best = None
    for start in _starts(x0, lower, config):
        obj.trace = []
        bounded = bool(np.isfinite(lower).any())
        # Levenberg-Marquardt when unconstrained, trust-region reflective under bounds
        res = optimize.least_squares(
            obj.residuals, start, jac=obj.jacobian, method="trf" if bounded else "lm",
            bounds=(lower, np.full_like(lower, np.inf)) if bounded else (-np.inf, np.inf),
            gtol=config.gtol, xtol=config.xtol, ftol=config.ftol, max_nfev=config.max_iter * (len(start) + 1),
        )
        trace = np.array(obj.trace + [(obj.nfev, float(res.cost))])
        if best is None or res.cost < best[0].cost:
            best = (res, trace)
    res, trace = best
    theta_hat = ThetaVector(layout, res.x)
    final = obj.value(res.x)
    if final > initial_cost + 1e-12 * max(1.0, abs(initial_cost)):
        # never report something worse than where we started
        theta_hat, final = ThetaVector(layout, x0), initial_cost
    stderr = None
    if config.stderr:
        stderr = standard_errors(model, theta_hat, dataset.totals)
    status = {-1: "improper input", 0: "max iterations", 1: "gtol", 2: "ftol", 3: "xtol", 4: "ftol+xtol"}.get(res.status, str(res.status))
    return FitResult(theta_hat, final, initial_cost, bool(res.status > 0), status, obj.nfev, base, config.mode,
                     stderr, trace, config.multistart)


def standard_errors(model: CircuitModel, theta: ThetaVector, totals) -> dict:
    fi, names = _per_circuit(model, theta, totals)
    from .fisher import FisherMatrix

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = crb_bounds(FisherMatrix(fi.sum(axis=0), names))
    return dict(zip(names, map(float, b.diag)))


def recover_gate_at(r: int, theta_hat: ThetaVector, base: LsParams) -> np.ndarray:
    """The ``r``-th LS gate of a fitted sequence."""
    return intermediate_superop(r, ls_params_of(theta_hat, base=base))


def invert_amplification(gamma_th_p: float, p: int, x: float, eps_f: float = 0.0, tol: float = 1e-12):
    """Single-gate thermal parameter and its propagated error from an amplified estimate.

    The error follows from ``f(G) = exp(G A(p, x))``: ``eps_G = eps_f / |f'(G)|``.
    """
    a = float(amplification_factor(p, x))
    if a < tol:
        raise SensitivityLossError(f"A({p}, x) = {a:.3g}: the breathing-mode trajectory closes")
    gamma = gamma_th_p / a
    deriv = a * np.exp(gamma * a)
    return gamma, eps_f / abs(deriv)
