import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxgst import channels as ch
from ctxgst import gateset as gsm
from ctxgst.lsgate import LsParams, Mode, sequence_diagonal
from ctxgst.spectra import PhysicalConfig

CARDINAL = ["0", "1", "+", "-"]


def _rot(spec):
    return ch.unitary_superop(gsm.ideal_single_qubit(spec, embed=False))


def _same_up_to_phase(u, v):
    k = np.vdot(u.ravel(), v.ravel())
    return np.allclose(u * (k / abs(k)), v, atol=1e-12)


def test_pi_pulse_is_x_gate():
    u = gsm.ideal_single_qubit(gsm.SingleQubitGateSpec(np.pi, 0.0), embed=False)
    assert _same_up_to_phase(u, ch.X)


def test_half_pi_twice_is_pi():
    half = gsm.ideal_single_qubit(gsm.SingleQubitGateSpec(np.pi / 2, 0.0), embed=False)
    full = gsm.ideal_single_qubit(gsm.SingleQubitGateSpec(np.pi, 0.0), embed=False)
    assert _same_up_to_phase(half @ half, full)


def test_gate_spec_validation():
    with pytest.raises(ValueError):
        gsm.SingleQubitGateSpec(np.pi, 0.0, qubit=2)


@pytest.mark.parametrize("label", gsm.SINGLE_LABELS)
def test_noiseless_pulse_equals_unitary(label):
    spec = gsm.SingleQubitGateSpec.from_label(label)
    noisy = gsm.noisy_single_qubit(spec, gsm.SingleQubitNoise())
    np.testing.assert_allclose(noisy, ch.unitary_superop(gsm.ideal_single_qubit(spec)), atol=1e-12)


def test_strong_axis_dephasing_keeps_x_populations():
    spec = gsm.SingleQubitGateSpec(np.pi / 2, 0.0)
    r = gsm.single_qubit_ptm(spec, gsm.SingleQubitNoise(gamma1=60.0))
    s = ch.ptm_to_superop(r)
    xproj = ch.Povm((ch.projector(ch.ket("+")), ch.projector(ch.ket("-"))))
    for lab in ("+", "-"):
        out = ch.apply(s, ch.projector(ch.ket(lab)))
        np.testing.assert_allclose(ch.probabilities(xproj, out), [1, 0] if lab == "+" else [0, 1], atol=1e-12)
    for lab in ("0", "1"):
        out = ch.apply(s, ch.projector(ch.ket(lab)))
        np.testing.assert_allclose(out, np.eye(2) / 2, atol=1e-12)


@given(st.floats(0, 0.2), st.floats(-0.2, 0.2), st.floats(0, 0.2), st.sampled_from(gsm.SINGLE_LABELS))
def test_noisy_pulse_is_cptp(g1, d1, dg, label):
    spec = gsm.SingleQubitGateSpec.from_label(label)
    s = ch.ptm_to_superop(gsm.single_qubit_ptm(spec, gsm.SingleQubitNoise(g1, d1, dg)))
    assert ch.is_trace_preserving(s)
    assert ch.is_cp(s)


def test_second_order_terms_unsupported():
    with pytest.raises(NotImplementedError):
        gsm.single_qubit_ptm(gsm.SingleQubitGateSpec(np.pi, 0), gsm.SingleQubitNoise(gamma2=1e-3))


def test_layout_names_and_bounds():
    lay = gsm.ThetaLayout()
    assert len(lay) == 17
    assert lay.names[:2] == ("gamma_th", "gamma_d")
    assert lay.names[-3:] == ("eps_rho", "eps_m0", "eps_m1")
    lo = lay.lower_bounds(cp=True)
    assert np.all(lo[lay.nonnegative] == 0) and np.all(np.isinf(lo[~lay.nonnegative]))
    assert np.isinf(lay.lower_bounds(cp=False)).all()
    assert len(gsm.ThetaLayout("gate", fit_theta_ls=True, fit_omega0=True)) == 2 + 2 * 5 * 3 + 3 + 2
    with pytest.raises(ValueError):
        gsm.ThetaLayout("pulse")


def test_theta_vector_json_roundtrip():
    th = gsm.nominal_theta(gsm.ThetaLayout(fit_theta_ls=True), PhysicalConfig())
    back = gsm.ThetaVector.from_json(th.to_json())
    np.testing.assert_array_equal(back.values, th.values)
    assert back.layout == th.layout
    assert th.replace(gamma_d=0.5)["gamma_d"] == 0.5
    with pytest.raises(ValueError):
        gsm.ThetaVector(th.layout, np.zeros(3))
    with pytest.raises(KeyError):
        gsm.ThetaVector.from_mapping(th.layout, {"nonsense": 1.0})


def test_theta_json_rejects_wrong_version():
    th = gsm.ideal_theta(gsm.ThetaLayout())
    text = th.to_json().replace('"schema_version": 1', '"schema_version": 99')
    with pytest.raises(ValueError, match="schema"):
        gsm.ThetaVector.from_json(text)


def test_ideal_gateset_is_unitary():
    gs = gsm.build_gateset(gsm.ideal_theta(gsm.ThetaLayout()))
    for label in gs.labels:
        s = gs.superop(label)
        # unitary channels preserve purity: S^dag S = 1
        np.testing.assert_allclose(s.conj().T @ s, np.eye(16), atol=1e-12)
    np.testing.assert_allclose(gs.rho0, ch.projector(ch.ket("00")), atol=1e-15)


def test_maximal_readout_confusion_is_uniform(rng):
    th = gsm.ideal_theta(gsm.ThetaLayout()).replace(eps_m0=0.5, eps_m1=0.5)
    gs = gsm.build_gateset(th, strict=True)
    from conftest import random_density
    for _ in range(5):
        np.testing.assert_allclose(ch.probabilities(gs.povm, random_density(rng, 4)), np.full(4, 0.25), atol=1e-12)


def test_spam_vectors_match_matrices():
    spam = gsm.SpamModel(0.02, 0.01, 0.03)
    rho, rows = gsm.spam_vectors(spam)
    np.testing.assert_allclose(rho, ch.state_to_pauli(spam.rho0()), atol=1e-15)
    np.testing.assert_allclose(rows, spam.povm().pauli_vectors(), atol=1e-15)
    with pytest.raises(ValueError):
        gsm.SpamModel(eps_m0=0.7)


def test_gateset_ls_matches_sequence():
    phys = PhysicalConfig(c=2e7, gate_time=95e-6, phase_residue=1 / 40.5)
    th = gsm.nominal_theta(gsm.ThetaLayout(), phys)
    gs = gsm.build_gateset(th, phys)
    assert gs.ls.gamma_th == th["gamma_th"]
    np.testing.assert_allclose(gs.superop("LS"), np.diag(sequence_diagonal(gs.ls, 1)), atol=1e-14)
    acc = np.eye(16)
    for r in range(1, 9):
        acc = gs.intermediate_ptm(r) @ acc
    np.testing.assert_allclose(acc, gs.sequence_ptm(8, Mode.CONTEXT_DEPENDENT), atol=1e-12)


def test_ls_params_of_respects_layout():
    lay = gsm.ThetaLayout(fit_theta_ls=True, fit_omega0=True)
    th = gsm.ideal_theta(lay).replace(theta_ls=0.7, omega0_t=0.1, gamma_th=1e-3)
    p = gsm.ls_params_of(th, base=LsParams(x=2.0))
    assert (p.theta_ls, p.omega0_t, p.gamma_th, p.x) == (0.7, 0.1, 1e-3, 2.0)
