"""Circuit model, text grammar, experimental designs and exact probabilities.

Grammar (whitespace-insensitive)::

    circuit  := fiducial "|" germ "^" INT "|" fiducial
    fiducial := "I" | gate+
    germ     := "I" | gate+ | "(" gate+ ")"
    gate     := ("XPI" | "XP2" | "XM2" | "YP2" | "YM2") ":" ("0" | "1")  |  "LS"

Gates are applied left to right: first the preparation fiducial, then the germ
repeated ``power`` times, then the measurement fiducial.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channels import PhysicalityError
from .gateset import GATE_LABELS, LS_LABEL, GateSet, ThetaLayout, ThetaVector, build_gateset
from .lsgate import LsParams, Mode

SCHEMA_VERSION = 1
OUTCOMES = ("00", "01", "10", "11")


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DesignError(ValueError):
    """A design cannot identify every parameter."""

    def __init__(self, message: str, directions=None):
        super().__init__(message)
        self.directions = directions


@dataclass(frozen=True)
class Circuit:
    prep: tuple[str, ...] = ()
    germ: tuple[str, ...] = ()
    power: int = 0
    meas: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "prep", tuple(self.prep))
        object.__setattr__(self, "germ", tuple(self.germ))
        object.__setattr__(self, "meas", tuple(self.meas))
        if int(self.power) != self.power or self.power < 0:
            raise ValueError(f"germ power must be a non-negative integer, got {self.power}")
        for label in self.prep + self.germ + self.meas:
            if label not in GATE_LABELS:
                raise ValueError(f"unknown gate label {label!r}")
        if not self.germ:
            object.__setattr__(self, "power", 0)

    def __str__(self) -> str:
        return serialize_circuit(self)

    @property
    def ls_count(self) -> int:
        """Number of LS gates executed by the germ part."""
        return self.germ.count(LS_LABEL) * self.power

    def with_power(self, p: int) -> "Circuit":
        return Circuit(self.prep, self.germ, p, self.meas)


_TOKEN = re.compile(r"\s*(?:(?P<gate>[A-Za-z][A-Za-z0-9]*(?::\d+)?)|(?P<int>-?\d+)|(?P<sym>[|^()])|(?P<bad>\S))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # only trailing whitespace remains
            break
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, sym: str):
        kind, val, off = self.take()
        if kind != "sym" or val != sym:
            raise ParseError(f"expected {sym!r}, found {val or 'end of input'!r}", off)

    def gates(self, stop: set[str]) -> tuple[str, ...]:
        out = []
        while True:
            kind, val, off = self.peek()
            if kind == "gate":
                if val == "I" and not out:
                    self.take()
                    nxt = self.peek()
                    if nxt[0] == "gate":
                        raise ParseError("identity fiducial cannot be combined with gates", nxt[2])
                    return ()
                if val not in GATE_LABELS:
                    raise ParseError(f"unknown gate token {val!r}", off)
                out.append(val)
                self.take()
            elif (kind == "sym" and val in stop) or kind == "end":
                break
            else:
                raise ParseError(f"unexpected token {val!r}", off)
        if not out:
            raise ParseError("empty gate list (use 'I')", self.peek()[2])
        return tuple(out)


def parse_circuit(text: str) -> Circuit:
    parser = _Parser(text)
    prep = parser.gates({"|"})
    parser.expect("|")
    if parser.peek()[:2] == ("sym", "("):
        parser.take()
        germ = parser.gates({")"})
        parser.expect(")")
    else:
        germ = parser.gates({"^"})
    parser.expect("^")
    kind, val, off = parser.take()
    if kind != "int":
        raise ParseError(f"malformed power {val!r}", off)
    if val.startswith("-"):
        raise ParseError("germ power must be non-negative", off)
    power = int(val)
    parser.expect("|")
    meas = parser.gates(set())
    kind, val, off = parser.peek()
    if kind != "end":
        raise ParseError(f"trailing input {val!r}", off)
    return Circuit(prep, germ, power, meas)


def serialize_circuit(c: Circuit) -> str:
    def fid(labels):
        return " ".join(labels) if labels else "I"

    germ = fid(c.germ)
    if len(c.germ) > 1:
        germ = f"({germ})"
    return f"{fid(c.prep)} | {germ}^{c.power} | {fid(c.meas)}"


# --------------------------------------------------------------- evaluation


def _germ_power_ptm(gs: GateSet, germ: tuple[str, ...], power: int, mode: Mode) -> np.ndarray:
    if power == 0 or not germ:
        return np.eye(16)
    if LS_LABEL in germ and mode is Mode.CONTEXT_DEPENDENT:
        if any(g != LS_LABEL for g in germ):
            raise ValueError("context-dependent germs must consist of LS gates only")
        return gs.sequence_ptm(len(germ) * power, mode)
    m = np.eye(16)
    for label in germ:
        m = gs.ptms[label] @ m
    return np.linalg.matrix_power(m, power)


def _apply_labels(gs: GateSet, labels: Sequence[str], v: np.ndarray) -> np.ndarray:
    for label in labels:
        v = gs.ptms[label] @ v
    return v


def _check_probs(p: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if p.min() < -tol:
        raise PhysicalityError(f"negative outcome probability {p.min():.3g}")
    return p


def circuit_probabilities(c: Circuit, gs: GateSet, mode=Mode.CONTEXT_DEPENDENT, check: bool = True) -> np.ndarray:
    """Outcome distribution over ``00, 01, 10, 11``."""
    mode = Mode.parse(mode)
    v = _apply_labels(gs, c.prep, gs.rho0_pauli)
    v = _germ_power_ptm(gs, c.germ, c.power, mode) @ v
    v = _apply_labels(gs, c.meas, v)
    p = gs.povm_rows @ v
    return _check_probs(p) if check else p


class CircuitModel:
    """Maps raw theta values to the probability table of a circuit list.

    Germ powers, preparations and measurement rows are shared between
    circuits within one evaluation, which is what makes repeated evaluation
    inside an optimizer cheap.
    """

    def __init__(self, circuits: Iterable[Circuit], layout: ThetaLayout, base: LsParams | None = None,
                 mode=Mode.CONTEXT_DEPENDENT, physical=None):
        self.circuits = tuple(circuits)
        self.layout = layout
        self.mode = Mode.parse(mode)
        if base is None:
            base = LsParams.from_physical(physical) if physical is not None else LsParams()
        self.base = base
        self._preps = sorted({c.prep for c in self.circuits})
        self._meas = sorted({c.meas for c in self.circuits})
        self._germs = sorted({(c.germ, c.power) for c in self.circuits})
        pi = {k: i for i, k in enumerate(self._preps)}
        mi = {k: i for i, k in enumerate(self._meas)}
        gi = {k: i for i, k in enumerate(self._germs)}
        self._index = np.array([(pi[c.prep], gi[(c.germ, c.power)], mi[c.meas]) for c in self.circuits])
        for germ, power in self._germs:
            if LS_LABEL in germ and self.mode is Mode.CONTEXT_DEPENDENT and any(g != LS_LABEL for g in germ):
                raise ValueError("context-dependent germs must consist of LS gates only")

    def gateset(self, values) -> GateSet:
        return build_gateset(ThetaVector(self.layout, values), base=self.base)

    def probabilities(self, values, check: bool = False) -> np.ndarray:
        gs = self.gateset(values)
        preps = np.stack([_apply_labels(gs, p, gs.rho0_pauli) for p in self._preps])  # (P, 16)
        meas = np.stack([self._meas_rows(gs, m) for m in self._meas])  # (M, 4, 16)
        germs = np.stack([_germ_power_ptm(gs, g, p, self.mode) for g, p in self._germs])  # (G, 16, 16)
        ip, ig, im = self._index.T
        v = np.einsum("nij,nj->ni", germs[ig], preps[ip])
        p = np.einsum("nkj,nj->nk", meas[im], v)
        if check:
            _check_probs(p.ravel())
        return p

    @staticmethod
    def _meas_rows(gs: GateSet, labels) -> np.ndarray:
        m = np.eye(16)
        for label in labels:
            m = gs.ptms[label] @ m
        return gs.povm_rows @ m


# ------------------------------------------------------------------ designs


@dataclass(frozen=True)
class Design:
    circuits: tuple[Circuit, ...]
    n_samples: int = 10_000
    scheme: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "circuits", tuple(self.circuits))
        if not self.circuits:
            raise DesignError("design has no circuits")
        if len(set(self.circuits)) != len(self.circuits):
            raise DesignError("design circuits are not distinct")
        if self.n_samples < 1:
            raise DesignError("n_samples must be positive")

    def __len__(self) -> int:
        return len(self.circuits)

    @property
    def max_ls_depth(self) -> int:
        return max(c.ls_count for c in self.circuits)

    def to_json(self) -> str:
        return json.dumps({"schema_version": SCHEMA_VERSION, "scheme": self.scheme, "n_samples": self.n_samples,
                           "circuits": [str(c) for c in self.circuits]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Design":
        obj = json.loads(text)
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported design schema version {obj.get('schema_version')!r}")
        return cls(tuple(parse_circuit(s) for s in obj["circuits"]), int(obj["n_samples"]), obj["scheme"])


# The twelve base circuits; the germ of each is raised to the design depth.
# Fiducials: YP2 prepares |+>, XM2 prepares |+i>; YM2 and XP2 rotate X and Y
# into Z for readout.  LS circuits separate correlated from anticorrelated
# dephasing; the single-qubit germs amplify axis and dressed dephasing
# (XP2, XPI) and the residual detuning of each pulse class (XP2 XM2 for pi/2
# pulses alone, XPI YP2 mixing both).  Chosen by scripts/design_search.py.
DEFAULT12_TEXT = (
    "I | LS^1 | I",
    "XM2:0 YP2:1 | LS^1 | XP2:1",
    "XM2:0 YP2:1 | LS^1 | YM2:0 YM2:1",
    "YP2:0 XM2:1 | LS^1 | XP2:0 YM2:1",
    "XM2:0 XM2:1 | (XP2:0 XP2:1)^1 | XP2:0 XP2:1",
    "YP2:0 YP2:1 | (XP2:0 XP2:1)^1 | YM2:0 YM2:1",
    "YP2:0 YP2:1 | (XPI:0 XPI:1)^1 | YM2:0 YM2:1",
    "XM2:0 | (XPI:0 XPI:1)^1 | XP2:0",
    "XM2:0 | (XPI:0 YP2:0 XPI:1 YP2:1)^1 | XP2:0 YM2:1",
    "XM2:0 XM2:1 | (XPI:0 YP2:0 XPI:1 YP2:1)^1 | I",
    "YP2:0 YP2:1 | (XP2:0 XM2:0 XP2:1 XM2:1)^1 | XP2:0 XP2:1",
    "XM2:0 XM2:1 | (XP2:0 XM2:0 XPI:1 YP2:1 YP2:1)^1 | XP2:0 XP2:1",
)


def base_circuits() -> tuple[Circuit, ...]:
    return tuple(parse_circuit(s) for s in DEFAULT12_TEXT)


def design_last_depth(p: int, n_samples: int = 10_000, base: Sequence[Circuit] | None = None) -> Design:
    if p < 1:
        raise DesignError("depth must be at least 1")
    base = base_circuits() if base is None else base
    return Design(tuple(c.with_power(p) for c in base), n_samples, "last-depth")


def log_depths(p_max: int) -> list[int]:
    if p_max < 1 or p_max & (p_max - 1):
        raise DesignError(f"log-spaced designs need a power of two, got {p_max}")
    if p_max == 1:
        return [1]
    return [2 ** k for k in range(1, int(np.log2(p_max)) + 1)]


def design_log_spaced(p_max: int, n_samples: int = 10_000, base: Sequence[Circuit] | None = None) -> Design:
    """Base circuits at depths ``2, 4, ..., p_max``; ``N_c = 12 log2(p_max)``."""
    base = base_circuits() if base is None else base
    circuits = tuple(c.with_power(p) for p in log_depths(p_max) for c in base)
    return Design(circuits, n_samples, "log-spaced")


def design_default12(n_samples: int = 10_000) -> Design:
    return Design(base_circuits(), n_samples, "default12")


def design_ramsey_fi(p: int, n_samples: int = 10_000) -> Design:
    """|++> through ``LS^p``, read out in the X-X and X-Y bases."""
    circuits = (
        parse_circuit(f"YP2:0 YP2:1 | LS^{p} | YM2:0 YM2:1"),
        parse_circuit(f"YP2:0 YP2:1 | LS^{p} | YM2:0 XP2:1"),
    )
    return Design(circuits, n_samples, "ramsey-fi")


PREP_FIDUCIALS = ((), ("YP2",), ("XM2",))
MEAS_FIDUCIALS = ((), ("YM2",), ("XP2",))


def _two_qubit(fids) -> list[tuple[str, ...]]:
    return [tuple(f"{g}:0" for g in a) + tuple(f"{g}:1" for g in b) for a in fids for b in fids]


def design_ls_fiducials(p: int, n_samples: int = 10_000) -> Design:
    """Base circuits at depth ``p`` plus ``LS^p`` between all 81 fiducial pairs."""
    circuits = list(design_last_depth(p).circuits)
    seen = set(circuits)
    for prep in _two_qubit(PREP_FIDUCIALS):
        for meas in _two_qubit(MEAS_FIDUCIALS):
            c = Circuit(prep, (LS_LABEL,), p, meas)
            if c not in seen:
                seen.add(c)
                circuits.append(c)
    return Design(tuple(circuits), n_samples, "ls-fiducials")


def design_probabilities(design: Design, gs: GateSet, mode=Mode.CONTEXT_DEPENDENT) -> np.ndarray:
    return np.array([circuit_probabilities(c, gs, mode) for c in design.circuits])
