import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxgst import circuits as cc
from ctxgst.gateset import GATE_LABELS, ThetaLayout, build_gateset, ideal_theta, nominal_theta
from ctxgst.lsgate import LsParams, Mode
from ctxgst.spectra import PhysicalConfig

labels = st.sampled_from(GATE_LABELS)
fid = st.lists(labels, max_size=3).map(tuple)


def test_parse_example():
    c = cc.parse_circuit("I | LS^4 | YP2:0 YP2:1")
    assert c == cc.Circuit((), ("LS",), 4, ("YP2:0", "YP2:1"))
    assert c.ls_count == 4


@pytest.mark.parametrize("text", ["LS^-1", "I | LS^-1 | I", "I | LS^x | I", "I | FOO^2 | I", "I | LS^2 | I garbage$",
                                  "I | (LS^2 | I", "I | LS^2 | I | I"])
def test_parse_errors(text):
    with pytest.raises((cc.ParseError, ValueError)):
        cc.parse_circuit(text)


def test_parse_error_reports_offset():
    with pytest.raises(cc.ParseError) as exc:
        cc.parse_circuit("I | LS^2 | I $")
    assert exc.value.offset == 13


@given(fid, st.lists(labels, min_size=1, max_size=3).map(tuple), st.integers(0, 50), fid)
def test_serialize_roundtrip(prep, germ, power, meas):
    c = cc.Circuit(prep, germ, power, meas)
    assert cc.parse_circuit(cc.serialize_circuit(c)) == c


def test_circuit_validation():
    with pytest.raises(ValueError):
        cc.Circuit((), ("LS",), -1, ())
    with pytest.raises(ValueError):
        cc.Circuit(("ZZ:0",), (), 0, ())


def test_bell_circuit_on_ideal_set():
    gs = build_gateset(ideal_theta(ThetaLayout()))
    p = cc.circuit_probabilities(cc.parse_circuit("YP2:0 YP2:1 | LS^1 | YM2:0 YM2:1"), gs)
    assert np.sort(p) == pytest.approx([0, 0, 0.5, 0.5], abs=1e-12)


def test_power_zero_is_spam_only():
    gs = build_gateset(nominal_theta(ThetaLayout(), PhysicalConfig()), PhysicalConfig())
    a = cc.circuit_probabilities(cc.parse_circuit("YP2:0 | LS^0 | YM2:0"), gs)
    b = cc.circuit_probabilities(cc.Circuit(("YP2:0",), (), 0, ("YM2:0",)), gs)
    np.testing.assert_allclose(a, b, atol=1e-15)


def test_model_matches_direct_evaluation():
    phys = PhysicalConfig(c=2e7, gate_time=95e-6, phase_residue=1 / 40.5)
    th = nominal_theta(ThetaLayout(), phys)
    gs = build_gateset(th, phys)
    design = cc.design_ls_fiducials(8)
    for mode in Mode:
        model = cc.CircuitModel(design.circuits, th.layout, base=gs.ls, mode=mode)
        np.testing.assert_allclose(model.probabilities(th.values), cc.design_probabilities(design, gs, mode), atol=1e-14)


def test_probabilities_sum_to_one():
    phys = PhysicalConfig()
    th = nominal_theta(ThetaLayout(), phys)
    model = cc.CircuitModel(cc.design_log_spaced(16).circuits, th.layout, physical=phys)
    p = model.probabilities(th.values, check=True)
    np.testing.assert_allclose(p.sum(axis=1), 1, atol=1e-12)
    assert p.min() >= 0


def test_context_dependent_germs_must_be_pure_ls():
    with pytest.raises(ValueError):
        cc.CircuitModel([cc.Circuit((), ("LS", "XP2:0"), 2, ())], ThetaLayout())
    cc.CircuitModel([cc.Circuit((), ("LS", "XP2:0"), 2, ())], ThetaLayout(), mode=Mode.CONTEXT_INDEPENDENT)


def test_design_sizes():
    assert len(cc.design_log_spaced(16)) == 48
    assert len(cc.design_last_depth(16)) == 12
    assert len(cc.design_default12()) == 12
    assert cc.design_last_depth(16).max_ls_depth == 16
    assert len(cc.design_ramsey_fi(4)) == 2
    assert cc.log_depths(1) == [1]
    with pytest.raises(cc.DesignError):
        cc.log_depths(12)
    with pytest.raises(cc.DesignError):
        cc.design_last_depth(0)


def test_ls_fiducial_design_is_distinct_and_complete():
    d = cc.design_ls_fiducials(4)
    assert len(d) == len(set(d.circuits))
    ls_only = [c for c in d.circuits if c.germ == ("LS",)]
    assert len(ls_only) >= 81


def test_design_json_roundtrip():
    d = cc.design_log_spaced(8, n_samples=500)
    back = cc.Design.from_json(d.to_json())
    assert back == d
    with pytest.raises(cc.DesignError):
        cc.Design((), 10)
    with pytest.raises(cc.DesignError):
        cc.Design((cc.Circuit(),) * 2, 10)


def test_default_design_identifies_all_parameters():
    from ctxgst.fisher import fisher_design

    phys = PhysicalConfig()
    th = nominal_theta(ThetaLayout(), phys)
    fm = fisher_design(cc.design_last_depth(4), th, base=LsParams.from_physical(phys))
    ev = fm.eigvals()
    assert ev.min() > 1e-6 * ev.max()
