"""Greedy search for a 12-circuit base list that identifies every parameter at all depths.

Per-circuit Fisher matrices are computed once for a pool of candidates at
each depth; circuits are then added one at a time to minimise the summed
log CRB variances over all depths.
"""
import argparse
import itertools

import numpy as np

from ctxgst.circuits import Circuit, CircuitModel, parse_circuit
from ctxgst.gateset import ThetaLayout, nominal_theta
from ctxgst.lsgate import LsParams
from ctxgst.spectra import PhysicalConfig

PREPS = {"I": "I", "+": "YP2", "y": "XM2"}
MEAS = {"z": "I", "x": "YM2", "y": "XP2"}


def fid(kind, labels, qubits):
    toks = [f"{PREPS[k] if kind == 'prep' else MEAS[k]}:{q}" for k, q in zip(labels, qubits) if (PREPS if kind == 'prep' else MEAS)[k] != "I"]
    return " ".join(toks) or "I"


def pool():
    out = set()
    ls_germ = "LS"
    for a, b in itertools.product(PREPS, repeat=2):
        for m, n in itertools.product(MEAS, repeat=2):
            out.add(f"{fid('prep', a + b, (0, 1))} | {ls_germ}^1 | {fid('meas', m + n, (0, 1))}")
    singles = ["XP2:{q}", "XPI:{q}", "XP2:{q} XM2:{q}", "XPI:{q} YP2:{q}", "XPI:{q} YP2:{q} YP2:{q}", "XP2:{q} YP2:{q}"]
    for g0, g1 in itertools.product(singles + [None], repeat=2):
        if g0 is None and g1 is None:
            continue
        germ = " ".join(x for x in (g0 and g0.format(q=0), g1 and g1.format(q=1)) if x)
        for a, b in itertools.product(PREPS, repeat=2):
            for m, n in itertools.product(MEAS, repeat=2):
                if (g0 is None and (a != "I" or m != "z")) or (g1 is None and (b != "I" or n != "z")):
                    continue
                out.add(f"{fid('prep', a + b, (0, 1))} | ({germ})^1 | {fid('meas', m + n, (0, 1))}")
    return [parse_circuit(s) for s in sorted(out)]


def per_circuit_fisher(circuits, layout, base, theta, p, n=1e4, h=1e-6):
    model = CircuitModel([c.with_power(p) for c in circuits], layout, base=base)
    v0 = theta.values
    jac = []
    for i in range(len(v0)):
        e = np.zeros_like(v0)
        e[i] = h
        jac.append((model.probabilities(v0 + e) - model.probabilities(v0 - e)) / (2 * h))
    jac = np.stack(jac, axis=-1)  # (C, 4, K)
    prob = np.maximum(model.probabilities(v0), 1e-12)
    return n * np.einsum("cmk,cml->ckl", jac / prob[..., None], jac)


def score(fsum, ridge=1e-6):
    total = 0.0
    for f in fsum:
        k = f.shape[0]
        inv = np.linalg.inv(f + ridge * np.eye(k))
        total += np.sum(np.log(np.diag(inv)))
    return total


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=12)
    ap.add_argument("--depths", type=int, nargs="+", default=[1, 2, 4, 8, 16, 32])
    ap.add_argument("--c", type=float, default=2e9)
    args = ap.parse_args()
    phys = PhysicalConfig(c=args.c, phase_residue=1 / 40.5)
    layout = ThetaLayout()
    theta = nominal_theta(layout, phys)
    base = LsParams.from_physical(phys)
    cands = pool()
    print(f"{len(cands)} candidates")
    fis = np.stack([per_circuit_fisher(cands, layout, base, theta, p) for p in args.depths], axis=1)  # (C, D, K, K)
    chosen: list[int] = []
    current = np.zeros(fis.shape[1:])
    for _ in range(args.size):
        best = min((i for i in range(len(cands)) if i not in chosen), key=lambda i: score(current + fis[i]))
        chosen.append(best)
        current = current + fis[best]
        print(f"{score(current):10.2f}  {cands[best]}")
    for d, p in enumerate(args.depths):
        ev = np.linalg.eigvalsh(current[d])
        crb = np.sqrt(np.diag(np.linalg.pinv(current[d])))
        print(p, f"min eig {ev[0]:.3g}", " ".join(f"{x:.2g}" for x in crb))


if __name__ == "__main__":
    main()
