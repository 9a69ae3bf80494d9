"""Discrete and continuous CP-divisibility measures of LS-gate sequences.

All maps involved are diagonal in the computational basis (Schur multipliers
``rho -> N o rho``), so the Choi image of the maximally entangled state is
``N / d`` on the span of ``|ii>`` and its trace norm reduces to the
eigenvalues of a 4x4 Hermitian matrix.

Inside a gate the thermal parameter follows the squared breathing-mode
displacement

    xi(t) = |S_p + r(tau) e^{i p x}|^2,   t = p t_g + tau,

with ``S_p = sum_{l<p} e^{i l x}`` and ``r(tau) = phi(tau) / phi(t_g)`` the
partial-gate displacement relative to a full gate.  ``Gamma_th(t)`` is
``Gamma_th`` times ``xi(t)``, which equals ``Gamma_th A(p, x)`` at gate
boundaries.  Dephasing grows as ``p Gamma_d + Gamma_d(tau)`` and the ZZ and
local phases are interpolated linearly within a gate.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .channels import _superop_dim, choi
from .lsgate import (_D_EXP, _TH_EXP, LsParams, amplification_factor, intermediate_diagonal, unitary_diagonal,
                     zeta_phase)
from .metrics import trace_norm
from .spectra import OuProcess, PhysicalConfig, gamma_d_closed

DEFAULT_STEPS_PER_GATE = 4000
NEG_EIG_TOL = 1e-13


class NonInvertibleMapError(ArithmeticError):
    """The accumulated map has a vanishing diagonal entry, so no instantaneous map exists."""


@dataclass(frozen=True)
class NmCurve:
    """Accumulated measure ``values[i]`` after ``index[i]`` gates."""

    index: np.ndarray
    values: np.ndarray
    step: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != np.shape(self.index):
            raise ValueError("index and values differ in length")
        if np.any(v < 0) or np.any(np.diff(v) < 0):
            raise ValueError("a non-Markovianity curve must be nonnegative and nondecreasing")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "index", np.asarray(self.index))


def _schur_excess(diags: np.ndarray) -> np.ndarray:
    """``||(E x 1)(|Phi><Phi|)||_1 - 1`` for a batch of diagonal two-qubit maps, shape (..., 16)."""
    n = diags.reshape(diags.shape[:-1] + (4, 4)).swapaxes(-1, -2)  # n[i, j] = diag[i + 4 j]
    n = 0.5 * (n + n.conj().swapaxes(-1, -2))
    ev = np.linalg.eigvalsh(n)
    trace = np.trace(n, axis1=-2, axis2=-1).real
    # ||N||_1 = tr N + 2 sum of negative eigenvalues; eigenvalues at rounding level count as zero
    neg = np.where(ev < -NEG_EIG_TOL, -ev, 0.0).sum(axis=-1)
    return np.maximum((trace + 2 * neg) / 4 - 1, 0.0)


def choi_excess(superop: np.ndarray) -> float:
    """Trace norm of the normalized Choi matrix minus one; zero exactly for CP maps."""
    s = np.asarray(superop)
    if np.count_nonzero(s - np.diag(np.diag(s))) == 0 and s.shape == (16, 16):
        return float(_schur_excess(np.diag(s))[()])
    dim = _superop_dim(s)
    return max(trace_norm(choi(s)) - 1.0, 0.0) if dim else 0.0


def g_discrete(k: int, base: LsParams) -> float:
    if k < 1:
        raise ValueError("k must be at least 1")
    return float(_schur_excess(intermediate_diagonal(k, base)))


def n_cp_discrete(p_max: int, base: LsParams) -> NmCurve:
    """``N^d_CP(p) = sum_{k<=p} g^d(k)`` for ``p = 0..p_max``."""
    g = np.array([g_discrete(k, base) for k in range(1, p_max + 1)])
    return NmCurve(np.arange(p_max + 1), np.concatenate([[0.0], np.cumsum(g)]), meta={"measure": "discrete"})


@dataclass(frozen=True)
class WithinGate:
    """Everything the continuous measure needs about one gate."""

    base: LsParams
    gate_time: float
    delta_b: float
    ou: OuProcess | None = None

    @classmethod
    def from_physical(cls, physical: PhysicalConfig, **overrides) -> "WithinGate":
        d = physical.derived()
        return cls(LsParams.from_physical(physical, **overrides), d["gate_time"], d["delta_b"], physical.ou)

    def ratio(self, tau):
        """``phi(tau) / phi(t_g)`` for the breathing mode."""
        tau = np.asarray(tau, dtype=float)
        return (1 - np.exp(1j * self.delta_b * tau)) / (1 - np.exp(1j * self.delta_b * self.gate_time))

    def split(self, t):
        t = np.asarray(t, dtype=float)
        p = np.floor(t / self.gate_time + 1e-12).astype(int)
        return p, np.clip(t - p * self.gate_time, 0.0, None)

    def xi(self, t):
        p, tau = self.split(t)
        x = self.base.x
        s = np.sin(x / 2)
        # S_p = e^{i (p-1) x / 2} sin(p x / 2) / sin(x / 2)
        partial = np.exp(0.5j * (p - 1) * x) * (np.sin(p * x / 2) / s if abs(s) > 1e-12 else p)
        return np.abs(partial + self.ratio(tau) * np.exp(1j * p * x)) ** 2

    def gamma_d(self, t):
        p, tau = self.split(t)
        if self.ou is None:
            return self.base.gamma_d * (p + tau / self.gate_time)
        per_gate = self.base.gamma_d
        within = np.vectorize(lambda s: gamma_d_closed(self.ou, s) if s > 0 else 0.0)(tau)
        return p * per_gate + within

    def phases(self, t):
        p, tau = self.split(t)
        b = self.base
        frac = tau / self.gate_time
        z0 = zeta_phase(p, b.x, b.zeta_prefactor)
        z1 = zeta_phase(p + 1, b.x, b.zeta_prefactor)
        angle = (p + frac) * b.theta_ls + 0.5 * (z0 + frac * (z1 - z0))
        return angle, (p + frac) * b.omega0_t

    def diagonal(self, t) -> np.ndarray:
        """Accumulated channel diagonal at each time in ``t``, shape (T, 16)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        gth = self.base.gamma_th * self.xi(t)
        gd = self.gamma_d(t)
        angle, w = self.phases(t)
        noise = np.exp(-np.outer(gd, _D_EXP) - np.outer(gth, _TH_EXP))
        phase = np.stack([unitary_diagonal(a, b) for a, b in zip(angle, w)])
        return noise * phase


def within_gate_rate(t, dt: float, setup: WithinGate):
    """``Gamma_th`` of the instantaneous map on ``[t, t + dt]``; negative values break CP-divisibility."""
    t = np.asarray(t, dtype=float)
    return setup.base.gamma_th * (setup.xi(t + dt) - setup.xi(t))


def n_cp_continuous(p: int, setup: WithinGate, dt: float | None = None) -> NmCurve:
    """Time-discretised ``N_CP`` accumulated over ``p`` gates, sampled at gate boundaries."""
    if dt is None:
        dt = setup.gate_time / DEFAULT_STEPS_PER_GATE
    if dt > setup.gate_time / 200:
        raise ValueError("dt must not exceed t_g / 200")
    steps = int(round(setup.gate_time / dt))
    dt = setup.gate_time / steps
    grid = np.arange(p * steps + 1) * dt
    diag = setup.diagonal(grid)
    if np.abs(diag).min() < 1e-300:
        raise NonInvertibleMapError("accumulated map is singular")
    inst = diag[1:] / diag[:-1]
    excess = _schur_excess(inst)
    total = np.concatenate([[0.0], np.cumsum(excess)])
    return NmCurve(np.arange(p + 1), total[::steps], step=dt, meta={"measure": "continuous", "steps_per_gate": steps})


def nonmarkov_rows(p_max: int, setup: WithinGate, dt: float | None = None) -> list[dict]:
    disc = n_cp_discrete(p_max, setup.base)
    cont = n_cp_continuous(p_max, setup, dt)
    amp = amplification_factor(np.arange(p_max + 1), setup.base.x)
    return [{"p": int(p), "amplified_gamma_th": float(a * setup.base.gamma_th),
             "n_cp_discrete": float(d), "n_cp": float(c)}
            for p, a, d, c in zip(disc.index, amp, disc.values, cont.values)]


def nonmarkov_csv(rows: list[dict], header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.DictWriter(buf, fieldnames=["p", "amplified_gamma_th", "n_cp_discrete", "n_cp"])
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
