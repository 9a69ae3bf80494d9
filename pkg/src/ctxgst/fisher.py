"""Fisher information of circuit designs and the bounds derived from it."""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import Circuit, CircuitModel, Design
from .gateset import ThetaVector
from .lsgate import LsParams, Mode, amplification_factor

PROB_FLOOR = 1e-12
GRAD_STEP = 1e-6
HESS_STEP = 1e-3


class RankWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FisherMatrix:
    matrix: np.ndarray
    names: tuple[str, ...]
    provenance: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))

    def __add__(self, other: "FisherMatrix") -> "FisherMatrix":
        if self.names != other.names:
            raise ValueError("Fisher matrices are over different parameters")
        return FisherMatrix(self.matrix + other.matrix, self.names, self.provenance + other.provenance)

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


class _Restricted:
    """Probability table as a function of a subset of theta components."""

    def __init__(self, model: CircuitModel, theta: ThetaVector, free: Sequence[str] | None):
        self.model = model
        self.full = theta.values.copy()
        names = theta.layout.names if free is None else tuple(free)
        self.idx = np.array([theta.layout.index[n] for n in names])
        self.names = tuple(names)

    def __call__(self, sub: np.ndarray) -> np.ndarray:
        v = self.full.copy()
        v[self.idx] = sub
        return self.model.probabilities(v)

    @property
    def x0(self) -> np.ndarray:
        return self.full[self.idx]


def probability_gradients(f, x0: np.ndarray, step: float = GRAD_STEP, richardson: bool = True) -> np.ndarray:
    """Central-difference Jacobian of ``f`` with one Richardson step; shape ``f(x0).shape + (K,)``."""
    cols = []
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = step
        d1 = (f(x0 + e) - f(x0 - e)) / (2 * step)
        if richardson:
            d2 = (f(x0 + e / 2) - f(x0 - e / 2)) / step
            d1 = (4 * d2 - d1) / 3
        cols.append(d1)
    out = np.stack(cols, axis=-1)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite probability derivative")
    return out


def _second_differences(f, x0: np.ndarray, f0: np.ndarray, step: float) -> np.ndarray:
    k = x0.size
    out = np.zeros(f0.shape + (k, k))
    eye = np.eye(k) * step
    for i in range(k):
        for j in range(i, k):
            if i == j:
                h = (f(x0 + eye[i]) - 2 * f0 + f(x0 - eye[i])) / step ** 2
            else:
                h = (f(x0 + eye[i] + eye[j]) - f(x0 + eye[i] - eye[j]) - f(x0 - eye[i] + eye[j])
                     + f(x0 - eye[i] - eye[j])) / (4 * step ** 2)
            out[..., i, j] = out[..., j, i] = h
    return out


def probability_hessians(f, x0: np.ndarray, step: float = HESS_STEP, richardson: bool = True) -> np.ndarray:
    """Second derivatives by central differences; the step is large enough that rounding stays near 1e-10."""
    f0 = f(x0)
    h = _second_differences(f, x0, f0, step)
    if richardson:
        h = (4 * _second_differences(f, x0, f0, step / 2) - h) / 3
    return h


def _per_circuit(model: CircuitModel, theta: ThetaVector, n_samples, free=None, with_hessian=False,
                 step: float = GRAD_STEP) -> tuple[np.ndarray, tuple[str, ...]]:
    f = _Restricted(model, theta, free)
    x0 = f.x0
    prob = f(x0)
    grad = probability_gradients(f, x0, step)  # (C, M, K)
    keep = prob >= PROB_FLOOR
    if not keep.all():
        warnings.warn(f"{(~keep).sum()} outcomes below {PROB_FLOOR:g} dropped from the Fisher information")
    w = np.where(keep, 1.0 / np.where(keep, prob, 1.0), 0.0)
    fi = np.einsum("cm,cmk,cml->ckl", w, grad, grad)
    if with_hessian:
        fi = fi - probability_hessians(f, x0).sum(axis=1)
    n = np.broadcast_to(np.asarray(n_samples, dtype=float), (len(model.circuits),))
    return n[:, None, None] * fi, f.names


def fisher_per_circuit(c: Circuit, theta: ThetaVector, n_samples: int, base: LsParams | None = None,
                       mode=Mode.CONTEXT_DEPENDENT, free=None, with_hessian: bool = False) -> FisherMatrix:
    model = CircuitModel([c], theta.layout, base=base, mode=mode)
    fi, names = _per_circuit(model, theta, n_samples, free, with_hessian)
    return FisherMatrix(fi[0], names, (str(c),))


def fisher_design(design: Design, theta: ThetaVector, base: LsParams | None = None, mode=Mode.CONTEXT_DEPENDENT,
                  free=None, n_samples=None, with_hessian: bool = False) -> FisherMatrix:
    """Additive Fisher information of all circuits in ``design``."""
    model = CircuitModel(design.circuits, theta.layout, base=base, mode=mode)
    n = design.n_samples if n_samples is None else n_samples
    fi, names = _per_circuit(model, theta, n, free, with_hessian)
    return FisherMatrix(fi.sum(axis=0), names, tuple(str(c) for c in design.circuits))


def hessian_normalization_residual(c: Circuit, theta: ThetaVector, base: LsParams | None = None,
                                   mode=Mode.CONTEXT_DEPENDENT, free=None) -> float:
    """``max |sum_mu H_mu|``; zero because outcome probabilities sum to one."""
    model = CircuitModel([c], theta.layout, base=base, mode=mode)
    f = _Restricted(model, theta, free)
    return float(np.abs(probability_hessians(f, f.x0).sum(axis=1)).max())


@dataclass(frozen=True)
class CrbBounds:
    names: tuple[str, ...]
    diag: np.ndarray  # sqrt(diag(F^-1)), per parameter
    spectrum: np.ndarray  # sqrt(eig(F^-1)), ascending
    directions: tuple[str, ...]  # dominant parameter of each eigenvector
    rank: int

    def __getitem__(self, name: str) -> float:
        return float(self.diag[self.names.index(name)])


def crb_bounds(fm: FisherMatrix, rcond: float = 1e-12) -> CrbBounds:
    evals, evecs = np.linalg.eigh(fm.matrix)
    top = max(evals.max(), 0.0)
    ok = evals > rcond * top
    rank = int(ok.sum())
    if rank < len(evals):
        warnings.warn(f"Fisher matrix has rank {rank} < {len(evals)}; using the pseudo-inverse", RankWarning)
    inv_evals = np.where(ok, 1.0 / np.where(ok, evals, 1.0), np.inf)
    cov = (evecs[:, ok] / evals[ok]) @ evecs[:, ok].T
    diag = np.sqrt(np.maximum(np.diag(cov), 0.0))
    order = np.argsort(np.sqrt(inv_evals))
    spectrum = np.sqrt(inv_evals)[order]
    directions = tuple(fm.names[int(np.argmax(np.abs(evecs[:, i])))] for i in order)
    return CrbBounds(fm.names, diag, spectrum, directions, rank)


def spectrum_bound(fm: FisherMatrix, name: str) -> float:
    """Square-root eigenvalue of ``F^-1`` whose eigenvector is dominated by ``name``."""
    evals, evecs = np.linalg.eigh(fm.matrix)
    i = fm.names.index(name)
    k = int(np.argmax(np.abs(evecs[i])))
    return float(1 / np.sqrt(evals[k])) if evals[k] > 0 else float("inf")


def amplification_bound(p, x: float, gamma_th: float, n_samples: float, linear: bool = False):
    """Error propagated through ``f(G) = exp(G A(p, x))`` with shot-noise ``eps_f = 1/(2 sqrt(N))``.

    ``linear=True`` uses ``f = p G`` instead, the linear amplification of an
    ordinary repeated germ.
    """
    eps_f = 0.5 / np.sqrt(n_samples)
    p = np.asarray(p, dtype=float)
    if linear:
        return eps_f / p
    a = amplification_factor(p, x)
    with np.errstate(divide="ignore"):
        return eps_f / (a * np.exp(gamma_th * a))


def bound_curves_csv(rows: Sequence[dict], header_lines: Sequence[str] = ()) -> str:
    """CSV text of per-depth bound curves; ``header_lines`` become ``#`` comments."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def ramsey_bound_curve(depths, theta: ThetaVector, base: LsParams, n_samples: int = 10_000,
                       free=("gamma_th", "gamma_d")) -> list[dict]:
    """FI-spectrum and amplification bounds for the LS Ramsey design at each depth."""
    from .circuits import design_ramsey_fi

    rows = []
    for p in depths:
        fm = fisher_design(design_ramsey_fi(p, n_samples), theta, base=base, free=free)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankWarning)
            b = crb_bounds(fm)
        row = {"p": int(p), "amplification": float(amplification_factor(p, base.x))}
        for name in fm.names:
            row[f"bound_{name}"] = b[name]
        for name in fm.names:
            row[f"spectrum_{name}"] = spectrum_bound(fm, name)
        for name in ("gamma_th", "gamma_d"):
            row[f"amp_bound_{name}"] = float(amplification_bound(p, base.x, getattr(base, name), n_samples,
                                                                 linear=name == "gamma_d"))
        rows.append(row)
    return rows
