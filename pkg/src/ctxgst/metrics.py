"""Trace norm, diamond distance and gate-set averaged distances.

Distances carry no factor 1/2: two orthogonal pure states are at trace
distance 2 and two unitaries whose eigenphases differ by ``delta`` are at
diamond distance ``2 |sin(delta / 2)|``.
"""
from __future__ import annotations

import warnings
from functools import lru_cache
from typing import Iterable

import cvxpy as cp
import numpy as np
from scipy import optimize

from .channels import _superop_dim, apply, choi
from .gateset import GATE_LABELS, LS_LABEL, GateSet

SDP_TOL = 1e-9


class DiamondSolverError(RuntimeError):
    """The SDP did not converge; ``bracket`` holds certified lower and upper bounds."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(f"{message}; diamond norm lies in [{bracket[0]:.6g}, {bracket[1]:.6g}]")
        self.bracket = bracket


def trace_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    if np.allclose(m, m.conj().T, atol=1e-14):
        return float(np.abs(np.linalg.eigvalsh(m)).sum())
    return float(np.linalg.svd(m, compute_uv=False).sum())


def _embed(re, im):
    # Hermitian H = re + i im  <->  real symmetric [[re, -im], [im, re]], same spectrum (doubled)
    return cp.bmat([[re, -im], [im, re]])


@lru_cache(maxsize=None)
def _diamond_problem(dim: int):
    # dual of the Watrous SDP for Hermiticity-preserving, trace-annihilating maps:
    #   ||Phi||_diamond = 2 min ||tr_out Z||_inf  s.t.  Z >= 0, Z >= J(Phi)
    # written over real matrices so that cvxpy caches the compiled problem
    n = dim * dim
    jr, ji = cp.Parameter((n, n), symmetric=True), cp.Parameter((n, n))
    zr, zi = cp.Variable((n, n), symmetric=True), cp.Variable((n, n))
    t = cp.Variable()
    rr = cp.partial_trace(zr, dims=[dim, dim], axis=0)
    ri = cp.partial_trace(zi, dims=[dim, dim], axis=0)
    cons = [zi + zi.T == 0, _embed(zr, zi) >> 0, _embed(zr - jr, zi - ji) >> 0,
            t * np.eye(2 * dim) - _embed(rr, ri) >> 0]
    return _warmed(cp.Problem(cp.Minimize(t), cons), jr, ji)


@lru_cache(maxsize=None)
def _schur_problem(dim: int):
    # a map rho -> N o rho (entrywise) commutes with diagonal-unitary twirls,
    # so the optimal Z above lives on span{|ii>} and the SDP shrinks to dim x dim
    nr, ni = cp.Parameter((dim, dim), symmetric=True), cp.Parameter((dim, dim))
    zr, zi = cp.Variable((dim, dim), symmetric=True), cp.Variable((dim, dim))
    t = cp.Variable()
    cons = [zi + zi.T == 0, _embed(zr, zi) >> 0, _embed(zr - nr, zi - ni) >> 0, cp.diag(zr) <= t]
    return _warmed(cp.Problem(cp.Minimize(t), cons), nr, ni)


def _warmed(prob, pr, pi):
    # cvxpy's first solve takes a different canonicalization path than cached
    # re-solves; one throwaway solve makes every real solve bitwise reproducible
    pr.value = np.eye(pr.shape[0])
    pi.value = np.zeros(pi.shape)
    _run_solver(prob)
    return prob, pr, pi


def _run_solver(prob) -> None:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=SDP_TOL, tol_gap_rel=SDP_TOL, tol_feas=SDP_TOL)


def _is_diagonal(s: np.ndarray, tol: float = 1e-14) -> bool:
    return float(np.abs(s[~np.eye(s.shape[0], dtype=bool)]).max(initial=0.0)) <= tol


def _solve_sdp(delta: np.ndarray) -> float:
    dim = _superop_dim(delta)
    if _is_diagonal(delta):
        jm = np.diag(delta).reshape(dim, dim, order="F")
        prob, pr, pi = _schur_problem(dim)
    else:
        jm = choi(delta) * dim
        prob, pr, pi = _diamond_problem(dim)
    jm = 0.5 * (jm + jm.conj().T)
    pr.value = 0.5 * (jm.real + jm.real.T)
    pi.value = 0.5 * (jm.imag - jm.imag.T)
    _run_solver(prob)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or prob.value is None:
        raise RuntimeError(prob.status)
    return 2.0 * float(prob.value)


def _output_trace_norm(delta: np.ndarray, psi: np.ndarray) -> float:
    """``|| (Delta x 1)(|psi><psi|) ||_1`` for ``psi`` on system (x) reference."""
    dim = _superop_dim(delta)
    m = psi.reshape(dim, dim)  # psi = sum m[a, b] |a>|b>
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[a, b] = 1.0
            img = apply(delta, e)
            # reference block: sum_{c,d} m[a,c] conj(m[b,d]) |c><d|
            ref = np.outer(m[a], m[b].conj())
            out += np.kron(img, ref)
    return trace_norm(out)


def diamond_lower_bound(delta: np.ndarray, restarts: int = 64, seed: int = 0) -> float:
    """Best value of a pure-state maximization from ``restarts`` random starts; a certified lower bound."""
    dim = _superop_dim(delta)
    n = dim * dim
    rng = np.random.default_rng(seed)

    def neg(x):
        psi = x[:n] + 1j * x[n:]
        psi = psi / np.linalg.norm(psi)
        return -_output_trace_norm(delta, psi)

    best = 0.0
    for _ in range(restarts):
        x0 = rng.normal(size=2 * n)
        res = optimize.minimize(neg, x0, method="Nelder-Mead" if n <= 4 else "BFGS",
                                options={"maxiter": 4000, "xatol": 1e-12, "fatol": 1e-14} if n <= 4 else {"gtol": 1e-10})
        best = max(best, -float(res.fun))
    return best


def diamond_norm(delta: np.ndarray) -> float:
    try:
        return max(_solve_sdp(delta), 0.0)
    except Exception as exc:  # solver failure: report a bracket instead of a guess
        dim = _superop_dim(delta)
        lower = diamond_lower_bound(delta, restarts=64)
        upper = dim * trace_norm(choi(delta))
        raise DiamondSolverError(f"SDP failed ({exc})", (lower, upper)) from exc


def diamond_distance(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("channels act on different dimensions")
    if np.allclose(a, b, atol=1e-15):
        return 0.0
    return diamond_norm(a - b)


def gate_distance(est: GateSet, true: GateSet, label: str) -> float:
    """Diamond distance of one gate; single-qubit gates are compared on their own qubit."""
    from .channels import ptm_to_superop

    if label == LS_LABEL:
        return diamond_distance(est.superop(label), true.superop(label))
    return diamond_distance(ptm_to_superop(est.single_qubit_ptm(label)), ptm_to_superop(true.single_qubit_ptm(label)))


def avg_gate_distance(est: GateSet, true: GateSet, include: Iterable[str] | None = None) -> float:
    """Mean diamond distance over gate labels; state preparation and measurement are never included."""
    labels = tuple(GATE_LABELS if include is None else include)
    missing = [l for l in labels if l not in est.ptms or l not in true.ptms]
    if missing:
        raise KeyError(f"labels missing from a gate set: {missing}")
    return float(np.mean([gate_distance(est, true, l) for l in labels]))
