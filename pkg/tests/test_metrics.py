import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxgst import channels as ch
from ctxgst import metrics as mt
from ctxgst.gateset import ThetaLayout, build_gateset, nominal_theta
from ctxgst.lsgate import LsParams, ls_gate_superop

from conftest import random_density, random_kraus


def zrot(angle):
    return ch.unitary_superop(np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)]))


def pauli_channel(q):
    q = np.asarray(q)
    ops = [np.sqrt(1 - q.sum()) * ch.I2] + [np.sqrt(w) * P for w, P in zip(q, (ch.X, ch.Y, ch.Z))]
    return ch.kraus_to_superop(ops)


def test_trace_norm_examples(rng):
    assert mt.trace_norm(np.eye(4)) == pytest.approx(4)
    m = np.diag([1.0, -2.0, 0.5])
    assert mt.trace_norm(m) == pytest.approx(3.5)
    d = random_density(rng, 4) - random_density(rng, 4)
    assert 0 <= mt.trace_norm(d) <= 2


def test_identical_channels_distance_zero():
    s = ls_gate_superop(LsParams(gamma_th=1e-3))
    assert mt.diamond_distance(s, s) == 0.0


@pytest.mark.parametrize("delta", [0.01, 0.1, 0.5, 1.0, 2.5])
def test_z_rotation_distance(delta):
    assert mt.diamond_distance(zrot(0.3), zrot(0.3 + delta)) == pytest.approx(2 * abs(np.sin(delta / 2)), abs=1e-6)


def test_pauli_pair_is_l1_distance():
    a, b = np.array([0.01, 0.02, 0.05]), np.array([0.03, 0.0, 0.01])
    l1 = np.abs(np.concatenate([[a.sum() - b.sum()], a - b])).sum()
    sa, sb = pauli_channel(a), pauli_channel(b)
    assert mt.diamond_distance(sa, sb) == pytest.approx(l1, abs=1e-6)
    assert mt.diamond_lower_bound(sa - sb, restarts=16) == pytest.approx(l1, abs=1e-4)


def test_non_diagonal_two_qubit_channel_is_bracketed(rng):
    a = ch.kraus_to_superop(random_kraus(rng, 4, n=2))
    b = ch.kraus_to_superop(random_kraus(rng, 4, n=2))
    d = mt.diamond_distance(a, b)
    lower = mt.diamond_lower_bound(a - b, restarts=4)
    upper = 4 * mt.trace_norm(ch.choi(a - b))
    assert lower - 1e-6 <= d <= upper + 1e-6
    # choi state with maximally entangled input gives a lower bound
    assert d >= mt.trace_norm(ch.choi(a - b)) - 1e-6
    assert d <= 2 + 1e-6


def test_diagonal_route_agrees_with_full_sdp():
    a = ls_gate_superop(LsParams(gamma_th=3e-2, gamma_d=1e-2, x=1.0, theta_ls=0.7))
    b = ls_gate_superop(LsParams())
    fast = mt.diamond_distance(a, b)
    # a tiny off-diagonal entry forces the general formulation
    bump = np.zeros((16, 16))
    bump[0, 5] = 1e-13
    full = mt.diamond_norm(a - b + bump)
    assert fast == pytest.approx(full, abs=1e-6)


@settings(max_examples=8)
@given(st.integers(0, 10_000))
def test_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (ch.kraus_to_superop(random_kraus(rng, 2, n=2)) for _ in range(3))
    ab, ba = mt.diamond_distance(a, b), mt.diamond_distance(b, a)
    assert ab >= 0 and ab == pytest.approx(ba, abs=1e-6)
    assert ab <= mt.diamond_distance(a, c) + mt.diamond_distance(c, b) + 1e-6


def test_solver_failure_reports_bracket(monkeypatch):
    def boom(delta):
        raise RuntimeError("infeasible")

    monkeypatch.setattr(mt, "_solve_sdp", boom)
    with pytest.raises(mt.DiamondSolverError) as exc:
        mt.diamond_norm(zrot(0.0) - zrot(0.5))
    lo, hi = exc.value.bracket
    assert lo <= 2 * np.sin(0.25) + 1e-6 <= hi + 2e-6


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        mt.diamond_distance(np.eye(4), np.eye(16))


def test_gate_set_distances():
    th = nominal_theta(ThetaLayout(), None, gamma_d=1e-3, gamma_th=1e-3)
    gs = build_gateset(th, base=LsParams())
    assert mt.avg_gate_distance(gs, gs) == 0.0
    other = build_gateset(th.replace(gamma_d=2e-3), base=LsParams())
    single = mt.gate_distance(other, gs, "LS")
    assert mt.avg_gate_distance(other, gs, include=["LS"]) == pytest.approx(single)
    assert single > 0
    with pytest.raises(KeyError):
        mt.avg_gate_distance(gs, gs, include=["nope"])
