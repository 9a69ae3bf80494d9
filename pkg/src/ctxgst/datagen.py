"""Synthetic GST data: multinomial sampling of exact circuit probabilities."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import PhysicalityError
from .circuits import OUTCOMES, Circuit, CircuitModel, Design, parse_circuit
from .gateset import GateSet, ThetaVector
from .lsgate import Mode

SCHEMA_VERSION = 1
RNG_ALGORITHM = "numpy.Philox4x64-10/SeedSequence([seed, circuit_index])"
CLAMP_TOL = 1e-10


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    circuits: tuple[Circuit, ...]
    counts: np.ndarray  # (n_circuits, 4) integers, columns follow OUTCOMES
    seed: int | None = None
    theta: dict | None = None
    mode: str | None = None
    rng: str = RNG_ALGORITHM
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.size == 0 or not self.circuits:
            raise DatasetError("dataset is empty")
        if counts.shape != (len(self.circuits), len(OUTCOMES)):
            raise DatasetError(f"counts have shape {counts.shape}, expected ({len(self.circuits)}, 4)")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.round(counts)):
                raise DatasetError("counts must be integers")
            counts = counts.astype(np.int64)
        if (counts < 0).any():
            raise DatasetError("negative counts")
        if (counts.sum(axis=1) == 0).any():
            raise DatasetError("a circuit has no samples")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "circuits", tuple(self.circuits))
        object.__setattr__(self, "counts", counts)

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.totals[:, None]

    def to_json(self) -> str:
        obj = {
            "schema_version": SCHEMA_VERSION,
            "rng": self.rng,
            "seed": self.seed,
            "mode": self.mode,
            "theta": self.theta,
            "meta": self.meta,
            "outcomes": list(OUTCOMES),
            "counts": {str(c): {o: int(n) for o, n in zip(OUTCOMES, row)} for c, row in zip(self.circuits, self.counts)},
        }
        return json.dumps(obj, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Dataset":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"corrupt dataset file: {exc}") from exc
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise DatasetError(f"dataset schema version {obj.get('schema_version')!r} != {SCHEMA_VERSION}")
        if not obj.get("counts"):
            raise DatasetError("dataset is empty")
        circuits = tuple(parse_circuit(s) for s in obj["counts"])
        rows = []
        for row in obj["counts"].values():
            vals = [row[o] for o in OUTCOMES]
            if not all(isinstance(v, int) for v in vals):
                raise DatasetError("counts must be integers")
            rows.append(vals)
        return cls(circuits, np.array(rows, dtype=np.int64), obj.get("seed"), obj.get("theta"), obj.get("mode"),
                   obj.get("rng", RNG_ALGORITHM), obj.get("meta") or {})


def store(ds: Dataset, path) -> None:
    Path(path).write_text(ds.to_json())


def load(path) -> Dataset:
    return Dataset.from_json(Path(path).read_text())


def circuit_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def _clean(p: np.ndarray) -> np.ndarray:
    if p.min() < -CLAMP_TOL:
        raise PhysicalityError(f"negative outcome probability {p.min():.3g}")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def sample_probabilities(probs: np.ndarray, n_samples, seed: int) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    n = np.broadcast_to(np.asarray(n_samples), (probs.shape[0],))
    if (n < 1).any():
        raise DatasetError("n_samples must be at least 1")
    return np.array([circuit_rng(seed, i).multinomial(int(n[i]), _clean(p)) for i, p in enumerate(probs)])


def model_probabilities(design: Design, gs: GateSet, mode=Mode.CONTEXT_DEPENDENT) -> np.ndarray:
    model = CircuitModel(design.circuits, gs.theta.layout, base=gs.ls, mode=mode)
    return model.probabilities(gs.theta.values)


def sample(design: Design, gs: GateSet, mode=Mode.CONTEXT_DEPENDENT, seed: int = 0) -> Dataset:
    """One multinomial draw of ``design.n_samples`` shots per circuit."""
    mode = Mode.parse(mode)
    probs = model_probabilities(design, gs, mode)
    counts = sample_probabilities(probs, design.n_samples, seed)
    return Dataset(design.circuits, counts, seed, gs.theta.as_dict(), mode.value, meta={"scheme": design.scheme})


def exact_dataset(design: Design, gs: GateSet, mode=Mode.CONTEXT_DEPENDENT, n_total: int = 10 ** 9) -> Dataset:
    """Counts equal to rounded ``p * n_total``; the infinite-sample limit up to rounding."""
    mode = Mode.parse(mode)
    probs = np.array([_clean(p) for p in model_probabilities(design, gs, mode)])
    counts = np.round(probs * n_total).astype(np.int64)
    return Dataset(design.circuits, counts, None, gs.theta.as_dict(), mode.value, rng="exact",
                   meta={"scheme": design.scheme})
