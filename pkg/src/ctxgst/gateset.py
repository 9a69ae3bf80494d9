"""The noisy two-qubit gate set and its parameter vector.

Gates are stored as real 16x16 Pauli transfer matrices because every channel
in the model preserves Hermiticity; superoperators are produced on demand.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from . import channels as ch
from .lsgate import LsParams, intermediate_diagonal, sequence_diagonal

SCHEMA_VERSION = 1

# (theta, phi) of the five single-qubit pulses
GATE_ANGLES = {
    "XPI": (np.pi, 0.0),
    "XP2": (np.pi / 2, 0.0),
    "YP2": (np.pi / 2, 3 * np.pi / 2),
    "YM2": (np.pi / 2, np.pi / 2),
    "XM2": (np.pi / 2, np.pi),
}
PULSE_CLASS = {"XPI": "pi", "XP2": "pi2", "YP2": "pi2", "YM2": "pi2", "XM2": "pi2"}
SINGLE_LABELS = tuple(f"{g}:{q}" for q in (0, 1) for g in GATE_ANGLES)
LS_LABEL = "LS"
GATE_LABELS = SINGLE_LABELS + (LS_LABEL,)


@dataclass(frozen=True)
class SingleQubitGateSpec:
    theta: float
    phi: float
    qubit: int = 0

    def __post_init__(self):
        if self.qubit not in (0, 1):
            raise ValueError("qubit must be 0 or 1")

    @classmethod
    def from_label(cls, label: str) -> "SingleQubitGateSpec":
        name, _, q = label.partition(":")
        theta, phi = GATE_ANGLES[name]
        return cls(theta, phi, int(q))

    @property
    def axis(self) -> np.ndarray:
        return np.array([np.cos(self.phi), -np.sin(self.phi), 0.0])


@dataclass(frozen=True)
class SingleQubitNoise:
    gamma1: float = 0.0
    delta1: float = 0.0
    dgamma: float = 0.0
    gamma2: float = 0.0
    delta2: float = 0.0


@dataclass(frozen=True)
class SpamModel:
    eps_rho: float = 0.0
    eps_m0: float = 0.0
    eps_m1: float = 0.0

    def __post_init__(self):
        if not 0 <= self.eps_rho <= 1:
            raise ValueError("eps_rho must lie in [0, 1]")
        for e in (self.eps_m0, self.eps_m1):
            if not 0 <= e <= 0.5:
                raise ValueError("readout flip probabilities must lie in [0, 1/2]")

    def rho0(self) -> np.ndarray:
        return (1 - self.eps_rho) * ch.projector(ch.ket("00")) + self.eps_rho * np.eye(4) / 4

    def povm(self) -> ch.Povm:
        return ch.Povm(tuple(_readout_effects(self.eps_m0, self.eps_m1)), ("00", "01", "10", "11"))


def _readout_effects(e0: float, e1: float) -> list[np.ndarray]:
    def single(e):
        return [np.diag([1 - e, e]), np.diag([e, 1 - e])]

    return [np.kron(a, b) for a in single(e0) for b in single(e1)]


def ideal_single_qubit(spec: SingleQubitGateSpec, embed: bool = True) -> np.ndarray:
    n = spec.axis
    u = np.cos(spec.theta / 2) * ch.I2 - 1j * np.sin(spec.theta / 2) * (n[0] * ch.X + n[1] * ch.Y)
    if not embed:
        return u
    return np.kron(u, ch.I2) if spec.qubit == 0 else np.kron(ch.I2, u)


_EYE3 = np.eye(3)


def _bloch_rotation(n: np.ndarray, angle: float) -> np.ndarray:
    k = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return _EYE3 + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


_ZAXIS = np.array([0.0, 0.0, 1.0])


def single_qubit_ptm(spec: SingleQubitGateSpec, noise: SingleQubitNoise) -> np.ndarray:
    """4x4 PTM of the noisy pulse.

    The ideal rotation is followed by dephasing along the rotation axis
    (``gamma1`` damps the perpendicular Bloch components), dephasing in the
    dressed basis (``dgamma`` damps the axis component fully and the
    perpendicular ones by half) and a residual Z rotation by ``delta1``.
    """
    if noise.gamma2 or noise.delta2:
        raise NotImplementedError("second-order single-qubit terms are not modelled")
    n = spec.axis
    nn = np.outer(n, n)
    par = np.exp(-noise.dgamma)
    perp = np.exp(-noise.gamma1 - noise.dgamma / 2)
    damp = par * nn + perp * (_EYE3 - nn)
    bloch = _bloch_rotation(_ZAXIS, noise.delta1) @ damp @ _bloch_rotation(n, spec.theta)
    r = np.eye(4)
    r[1:, 1:] = bloch
    return r


def noisy_single_qubit(spec: SingleQubitGateSpec, noise: SingleQubitNoise) -> np.ndarray:
    """Two-qubit superoperator of the noisy pulse on ``spec.qubit``."""
    return ch.ptm_to_superop(ch.embed_ptm(single_qubit_ptm(spec, noise), spec.qubit))


# ---------------------------------------------------------------- parameters

_SINGLE_FIELDS = ("gamma1", "delta1", "dgamma")
_NONNEG_PREFIXES = ("gamma_th", "gamma_d", "gamma1", "dgamma", "eps_")


@dataclass(frozen=True)
class ThetaLayout:
    """Ordering of the estimation vector.

    ``grouping="class"`` shares one noise triple among all pi/2 pulses of a
    qubit and another for the pi pulse; ``grouping="gate"`` gives every pulse
    its own triple.
    """

    grouping: str = "class"
    fit_theta_ls: bool = False
    fit_omega0: bool = False

    def __post_init__(self):
        if self.grouping not in ("class", "gate"):
            raise ValueError("grouping must be 'class' or 'gate'")

    @property
    def groups(self) -> tuple[str, ...]:
        return ("pi2", "pi") if self.grouping == "class" else tuple(GATE_ANGLES)

    def group_of(self, gate: str) -> str:
        return PULSE_CLASS[gate] if self.grouping == "class" else gate

    @cached_property
    def names(self) -> tuple[str, ...]:
        out = ["gamma_th", "gamma_d"]
        for q in (0, 1):
            for g in self.groups:
                out += [f"{f}_{g}_q{q}" for f in _SINGLE_FIELDS]
        out += ["eps_rho", "eps_m0", "eps_m1"]
        if self.fit_theta_ls:
            out.append("theta_ls")
        if self.fit_omega0:
            out.append("omega0_t")
        return tuple(out)

    @cached_property
    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def __len__(self) -> int:
        return len(self.names)

    @cached_property
    def nonnegative(self) -> np.ndarray:
        return np.array([n.startswith(_NONNEG_PREFIXES) for n in self.names])

    def lower_bounds(self, cp: bool) -> np.ndarray:
        lo = np.full(len(self), -np.inf)
        if cp:
            lo[self.nonnegative] = 0.0
        return lo

    def to_dict(self) -> dict:
        return {"grouping": self.grouping, "fit_theta_ls": self.fit_theta_ls, "fit_omega0": self.fit_omega0}


@dataclass(frozen=True)
class ThetaVector:
    layout: ThetaLayout
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != len(self.layout):
            raise ValueError(f"expected {len(self.layout)} values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.layout.index[name]])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.layout.names, map(float, self.values)))

    def replace(self, **updates: float) -> "ThetaVector":
        v = self.values.copy()
        for k, val in updates.items():
            v[self.layout.index[k]] = val
        return ThetaVector(self.layout, v)

    @classmethod
    def from_mapping(cls, layout: ThetaLayout, values: Mapping[str, float], default: float = 0.0) -> "ThetaVector":
        unknown = set(values) - set(layout.names)
        if unknown:
            raise KeyError(f"unknown parameters: {sorted(unknown)}")
        return cls(layout, [values.get(n, default) for n in layout.names])

    def to_json(self) -> str:
        return json.dumps({"schema_version": SCHEMA_VERSION, "layout": self.layout.to_dict(), "theta": self.as_dict()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ThetaVector":
        obj = json.loads(text)
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported theta schema version {obj.get('schema_version')!r}")
        layout = ThetaLayout(**obj["layout"])
        if list(obj["theta"]) != list(layout.names):
            raise ValueError("theta names do not follow the layout ordering")
        return cls(layout, list(obj["theta"].values()))


NOMINAL_SINGLE = {
    ("pi2", 0): SingleQubitNoise(1.0e-3, 2.0e-3, 5.0e-4),
    ("pi", 0): SingleQubitNoise(2.0e-3, 1.0e-3, 1.0e-3),
    ("pi2", 1): SingleQubitNoise(1.2e-3, 1.5e-3, 6.0e-4),
    ("pi", 1): SingleQubitNoise(1.8e-3, 1.2e-3, 8.0e-4),
}
NOMINAL_SPAM = SpamModel(0.01, 0.01, 0.015)


def nominal_theta(layout: ThetaLayout, physical=None, gamma_d: float | None = None, gamma_th: float | None = None) -> ThetaVector:
    """Representative truth: physical LS noise, per-mille single-qubit errors, percent-level SPAM."""
    vals: dict[str, float] = {}
    if physical is not None:
        d = physical.derived()
        vals["gamma_d"], vals["gamma_th"] = d["gamma_d"], d["gamma_th"]
    if gamma_d is not None:
        vals["gamma_d"] = gamma_d
    if gamma_th is not None:
        vals["gamma_th"] = gamma_th
    for q in (0, 1):
        for g in layout.groups:
            noise = NOMINAL_SINGLE[(PULSE_CLASS.get(g, g), q)]
            for f in _SINGLE_FIELDS:
                vals[f"{f}_{g}_q{q}"] = getattr(noise, f)
    vals.update(eps_rho=NOMINAL_SPAM.eps_rho, eps_m0=NOMINAL_SPAM.eps_m0, eps_m1=NOMINAL_SPAM.eps_m1)
    if layout.fit_theta_ls:
        vals["theta_ls"] = np.pi / 4
    if layout.fit_omega0:
        vals["omega0_t"] = 0.0
    return ThetaVector.from_mapping(layout, vals)


def ideal_theta(layout: ThetaLayout) -> ThetaVector:
    vals = {"theta_ls": np.pi / 4} if layout.fit_theta_ls else {}
    return ThetaVector.from_mapping(layout, vals)


# ----------------------------------------------------------------- gate set


def _ls_ptm(diag: np.ndarray) -> np.ndarray:
    b = ch._pauli_change(4)
    return (b.conj().T @ (diag[:, None] * b)).real


@dataclass(frozen=True)
class GateSet:
    """Noisy gate set in Pauli-transfer form.

    ``ls`` carries the LS parameters needed to build context-dependent
    sequences; ``ptms`` maps every gate label to its 16x16 PTM.
    """

    theta: ThetaVector
    ls: LsParams
    ptms: Mapping[str, np.ndarray]
    rho0_pauli: np.ndarray
    povm_rows: np.ndarray
    spam: SpamModel = field(default_factory=SpamModel)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.ptms)

    @property
    def rho0(self) -> np.ndarray:
        return self.spam.rho0()

    @property
    def povm(self) -> ch.Povm:
        return self.spam.povm()

    @cached_property
    def gates(self) -> dict[str, np.ndarray]:
        return {k: ch.ptm_to_superop(v) for k, v in self.ptms.items()}

    def superop(self, label: str) -> np.ndarray:
        return self.gates[label]

    def single_qubit_ptm(self, label: str) -> np.ndarray:
        """4x4 PTM of a single-qubit gate on its own qubit."""
        return self._single[label]

    @cached_property
    def _single(self) -> dict[str, np.ndarray]:
        return _single_ptms(self.theta)

    def sequence_ptm(self, p: int, mode) -> np.ndarray:
        return _ls_ptm(sequence_diagonal(self.ls, p, mode))

    def intermediate_ptm(self, r: int) -> np.ndarray:
        return _ls_ptm(intermediate_diagonal(r, self.ls))


def theta_of(gs: GateSet) -> ThetaVector:
    return gs.theta


def _single_ptms(theta: ThetaVector) -> dict[str, np.ndarray]:
    layout = theta.layout
    vals = theta.values
    idx = layout.index
    out = {}
    for label in SINGLE_LABELS:
        name, q = label.split(":")
        g = layout.group_of(name)
        noise = SingleQubitNoise(*(vals[idx[f"{f}_{g}_q{q}"]] for f in _SINGLE_FIELDS))
        out[label] = single_qubit_ptm(SingleQubitGateSpec.from_label(label), noise)
    return out


def ls_params_of(theta: ThetaVector, physical=None, base: LsParams | None = None) -> LsParams:
    """LS parameters from the theta vector, with the fixed physics taken from ``physical`` or ``base``."""
    if base is None:
        base = LsParams.from_physical(physical) if physical is not None else LsParams()
    kw = {"gamma_d": theta["gamma_d"], "gamma_th": theta["gamma_th"]}
    if theta.layout.fit_theta_ls:
        kw["theta_ls"] = theta["theta_ls"]
    if theta.layout.fit_omega0:
        kw["omega0_t"] = theta["omega0_t"]
    return LsParams(**{**base.__dict__, **kw})


def spam_of(theta: ThetaVector, strict: bool = False) -> SpamModel:
    vals = (theta["eps_rho"], theta["eps_m0"], theta["eps_m1"])
    if strict:
        return SpamModel(*vals)
    # unconstrained fits may step slightly outside the physical box
    obj = object.__new__(SpamModel)
    for k, v in zip(("eps_rho", "eps_m0", "eps_m1"), vals):
        object.__setattr__(obj, k, v)
    return obj


def spam_vectors(spam: SpamModel) -> tuple[np.ndarray, np.ndarray]:
    """Pauli coordinates of the initial state and of the four POVM effects."""
    # |00><00| has weight 1/2 on II, IZ, ZI, ZZ in the normalized basis
    rho = np.zeros(16)
    rho[[0, 3, 12, 15]] = 0.5
    rho[[3, 12, 15]] *= 1 - spam.eps_rho
    c0, c1 = 1 - 2 * spam.eps_m0, 1 - 2 * spam.eps_m1
    rows = np.zeros((4, 16))
    for k, (m0, m1) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        z0, z1 = (-1) ** m0 * c0, (-1) ** m1 * c1
        rows[k, [0, 3, 12, 15]] = 0.5 * np.array([1, z1, z0, z0 * z1])
    return rho, rows


def build_gateset(theta: ThetaVector, physical=None, base: LsParams | None = None, strict: bool = False) -> GateSet:
    """Assemble SPAM, ten single-qubit pulses and the LS gate from ``theta``."""
    singles = _single_ptms(theta)
    ptms = {label: ch.embed_ptm(r, int(label[-1])) for label, r in singles.items()}
    ls = ls_params_of(theta, physical, base)
    ptms[LS_LABEL] = _ls_ptm(sequence_diagonal(ls, 1))
    spam = spam_of(theta, strict)
    rho, rows = spam_vectors(spam)
    return GateSet(theta, ls, ptms, rho, rows, spam)
