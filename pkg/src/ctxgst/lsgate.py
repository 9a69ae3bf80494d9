"""Noisy light-shift gate channels, single and in context-dependent sequences.

Every LS channel here is diagonal in the computational basis, so the
constructors build the 16-entry diagonal first and wrap it at the end.  Vec
index ``k = i + 4 j`` addresses ``rho[i, j]`` with basis order
``|00>, |01>, |10>, |11>``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .channels import I2, Z

TWO_PI = 2 * np.pi
SERIES_WINDOW = 1e-6

# Z eigenvalues of qubits 0 and 1 for each computational basis state
_S1 = np.array([1, 1, -1, -1])
_S2 = np.array([1, -1, 1, -1])
_I_IDX = np.tile(np.arange(4), 4)  # row index of each vec entry
_J_IDX = np.repeat(np.arange(4), 4)  # column index


def _pair_exponent(values: np.ndarray) -> np.ndarray:
    d = values[_I_IDX] - values[_J_IDX]
    return d * d / 4.0


_TH_EXP = _pair_exponent(_S1 - _S2)  # entries 0, 1 or 4
_D_EXP = _pair_exponent(_S1 + _S2)
_ZZ_DIFF = (_S1 * _S2)[_I_IDX] - (_S1 * _S2)[_J_IDX]
_LOCAL_DIFF = (_S1 + _S2)[_I_IDX] - (_S1 + _S2)[_J_IDX]


class Mode(str, Enum):
    CONTEXT_DEPENDENT = "context-dependent"
    CONTEXT_INDEPENDENT = "context-independent"

    @classmethod
    def parse(cls, value) -> "Mode":
        return value if isinstance(value, cls) else cls(str(value))


@dataclass(frozen=True)
class LsParams:
    """Parameters of one LS gate.

    ``zeta_prefactor`` is ``(|Omega_L| eta_b / delta_b)**2``; it only enters
    through the accumulated ZZ phase of a sequence.
    """

    gamma_d: float = 0.0
    gamma_th: float = 0.0
    theta_ls: float = np.pi / 4
    omega0_t: float = 0.0
    x: float = 0.0
    zeta_prefactor: float = 0.0

    @classmethod
    def from_physical(cls, physical, **overrides) -> "LsParams":
        d = physical.derived()
        base = cls(gamma_d=d["gamma_d"], gamma_th=d["gamma_th"], x=d["x"], zeta_prefactor=d["zeta_prefactor"])
        return replace(base, **overrides)


@dataclass(frozen=True)
class SequenceParams:
    base: LsParams
    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"repetition count must be a positive integer, got {self.p}")


def noise_diagonal(gamma_d: float, gamma_th: float) -> np.ndarray:
    return np.exp(-gamma_th * _TH_EXP - gamma_d * _D_EXP)


def unitary_diagonal(theta_zz: float, omega0_t: float = 0.0) -> np.ndarray:
    """Diagonal of ``kron(U*, U)`` for ``U = exp(-i w0t/2 (Z1+Z2)) exp(-i theta Z1 Z2)``."""
    return np.exp(-1j * (theta_zz * _ZZ_DIFF + 0.5 * omega0_t * _LOCAL_DIFF))


def noise_superop(gamma_d: float, gamma_th: float) -> np.ndarray:
    return np.diag(noise_diagonal(gamma_d, gamma_th)).astype(complex)


def ls_unitary(theta_zz: float, omega0_t: float = 0.0) -> np.ndarray:
    zz = np.kron(Z, Z)
    local = np.kron(Z, I2) + np.kron(I2, Z)
    return np.diag(np.exp(-0.5j * omega0_t * np.diag(local) - 1j * theta_zz * np.diag(zz)))


def kraus_set(gamma_d: float, gamma_th: float) -> list[np.ndarray]:
    """Seven diagonal Kraus operators of the collective noise channel.

    The coefficients are written with ``chi = exp(-2 Gamma)`` so that the
    Kraus sum reproduces ``noise_superop`` entry by entry.
    """
    if gamma_d < 0 or gamma_th < 0:
        raise ValueError("Kraus form needs a CP channel: noise parameters must be non-negative")
    cd, ct = np.exp(-2 * gamma_d), np.exp(-2 * gamma_th)
    one = np.eye(4, dtype=complex)
    z1, z2 = np.kron(Z, I2), np.kron(I2, Z)
    zz = z1 @ z2
    return [
        0.5 * (np.sqrt(cd) + np.sqrt(ct)) * one + 0.5 * (np.sqrt(cd) - np.sqrt(ct)) * zz,
        0.5 * np.sqrt(ct * (1 - ct)) * (z1 - z2),
        0.5 * np.sqrt(cd * (1 - cd)) * (z1 + z2),
        0.25 * (1 - ct) * (one + z1) @ (one - z2),
        0.25 * (1 - ct) * (one - z1) @ (one + z2),
        0.25 * (1 - cd) * (one + z1) @ (one + z2),
        0.25 * (1 - cd) * (one - z1) @ (one - z2),
    ]


def _reduced(x: float) -> float:
    """Distance of ``x`` from the nearest multiple of 2 pi."""
    return x - TWO_PI * np.round(x / TWO_PI)


def amplification_factor(p, x: float):
    """``A(p, x) = sin^2(p x / 2) / sin^2(x / 2)``, the growth of the thermal parameter."""
    p = np.asarray(p, dtype=float)
    y = _reduced(x)
    if abs(np.sin(x / 2)) < SERIES_WINDOW:
        return p ** 2 * (1 - (p ** 2 - 1) * y ** 2 / 12)
    return np.sin(p * y / 2) ** 2 / np.sin(y / 2) ** 2


def _sine_defect(p, y):
    """``p sin y - sin(p y)``, by its Taylor series where the two terms nearly cancel."""
    py = p * y
    direct = p * np.sin(y) - np.sin(py)
    series = np.zeros_like(direct)
    fact, sign = 1.0, 1.0
    for k in range(1, 8):
        fact *= (2 * k) * (2 * k + 1)
        series = series + sign * (p ** (2 * k + 1) - p) * y ** (2 * k + 1) / fact
        sign = -sign
    return np.where(np.abs(py) < 0.1, series, direct)


def zeta_phase(p, x: float, prefactor: float):
    """Extra ZZ phase accumulated after ``p`` gates by the unclosed breathing mode."""
    p = np.asarray(p, dtype=float)
    y = _reduced(x)
    if abs(np.sin(x / 2)) < SERIES_WINDOW:
        return prefactor * (p ** 3 - p) * y / 6
    # written in the reduced angle: p x is large and sin(p x) would lose the cancellation
    return 0.5 * prefactor * _sine_defect(p, y) / (2 * np.sin(y / 2) ** 2)


def sequence_diagonal(params: LsParams, p: int, mode=Mode.CONTEXT_DEPENDENT) -> np.ndarray:
    if p == 0:
        return np.ones(16, dtype=complex)
    mode = Mode.parse(mode)
    if mode is Mode.CONTEXT_DEPENDENT:
        gth = params.gamma_th * float(amplification_factor(p, params.x))
        angle = p * params.theta_ls + 0.5 * float(zeta_phase(p, params.x, params.zeta_prefactor))
    else:
        gth = p * params.gamma_th
        angle = p * params.theta_ls
    return noise_diagonal(p * params.gamma_d, gth) * unitary_diagonal(angle, p * params.omega0_t)


def ls_gate_superop(params: LsParams) -> np.ndarray:
    return np.diag(sequence_diagonal(params, 1))


def sequence_superop(seq: SequenceParams, mode=Mode.CONTEXT_DEPENDENT) -> np.ndarray:
    return np.diag(sequence_diagonal(seq.base, seq.p, mode))


def intermediate_diagonal(r: int, base: LsParams) -> np.ndarray:
    if r < 1:
        raise ValueError("intermediate maps are indexed from r = 1")
    a = amplification_factor(np.array([r - 1, r]), base.x)
    z = zeta_phase(np.array([r - 1, r]), base.x, base.zeta_prefactor)
    gth = base.gamma_th * float(a[1] - a[0])
    angle = base.theta_ls + 0.5 * float(z[1] - z[0])
    return noise_diagonal(base.gamma_d, gth) * unitary_diagonal(angle, base.omega0_t)


def intermediate_superop(r: int, base: LsParams) -> np.ndarray:
    """The ``r``-th gate of a sequence; may fail to be CP when the thermal step is negative."""
    return np.diag(intermediate_diagonal(r, base))


def thermal_increment(r, base: LsParams):
    r = np.asarray(r)
    return base.gamma_th * (amplification_factor(r, base.x) - amplification_factor(r - 1, base.x))


def p_max(x: float, p_range) -> int:
    """Depth in ``p_range`` where the breathing trajectory lies farthest from the origin."""
    ps = np.asarray(list(p_range), dtype=int)
    if ps.size == 0:
        raise ValueError("p_range is empty")
    g = (ps * x / np.pi - 1) / 2
    dist = np.abs(g - np.round(g))
    best = np.flatnonzero(dist <= dist.min() + 1e-12)
    return int(ps[best].min())


def trajectory_endpoints(p: int, x: float, phi: complex) -> np.ndarray:
    """Cumulative breathing-mode displacement after gates ``1..p``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    return phi * np.cumsum(np.exp(1j * x * np.arange(p)))


def closure_depths(x: float, p_range, tol: float = 0.05) -> list[int]:
    """Depths in ``p_range`` where ``A(p, x)`` has fallen below ``tol`` times its running maximum.

    The running maximum is taken over every depth ``1..p``, so short circuits
    whose amplification has simply not grown yet are never flagged.
    """
    ps = [int(p) for p in p_range]
    if not ps:
        return []
    full = np.arange(1, max(ps) + 1)
    peak = np.maximum.accumulate(amplification_factor(full, x))
    a = amplification_factor(full, x)
    return [p for p in ps if p >= 1 and a[p - 1] < tol * peak[p - 1]]
