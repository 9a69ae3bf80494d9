from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxgst import spectra as sp

OU = sp.OuProcess(2e9, 5e-4)


def test_ou_psd_values():
    assert sp.ou_psd(0.0, OU) == pytest.approx(2e9 * 5e-4 ** 2)
    assert sp.ou_psd(0.0, OU) == pytest.approx(500.0)
    assert sp.ou_psd(1 / OU.tau_c, OU) == pytest.approx(500.0 / 2)


def test_ou_rejects_nonpositive():
    with pytest.raises(ValueError):
        sp.OuProcess(0.0, 1e-3)


def test_filter_function_limits():
    t = 1e-4
    assert sp.filter_function(0.0, t) == pytest.approx(t ** 2 / (4 * np.pi))
    assert sp.filter_function(1e-3, t) == pytest.approx(t ** 2 / (4 * np.pi), rel=1e-9)
    assert abs(sp.filter_function(2 * np.pi / t, t)) < 1e-25
    with pytest.raises(ValueError):
        sp.filter_function(1.0, -1.0)


def test_gamma_d_closed_examples():
    assert sp.gamma_d_closed(OU, 0.0) == 0.0
    t = 100 * OU.tau_c
    assert sp.gamma_d_closed(OU, t) == pytest.approx(OU.c * OU.tau_c ** 2 * t / 2, rel=0.01)
    assert sp.gamma_d_closed(OU, 9.7e-5) == pytest.approx(2.21e-3, rel=5e-3)


@pytest.mark.parametrize("t", [1e-6, 9.7e-5, 5e-4, 3e-3])
def test_gamma_d_closed_matches_quadrature(t):
    closed = sp.gamma_d_closed(OU, t)
    assert sp.gamma_d_quadrature(OU, t) == pytest.approx(closed, rel=1e-6)


@given(st.floats(1e-6, 1e-2))
def test_gamma_d_monotone_in_time(t):
    assert sp.gamma_d_closed(OU, 1.01 * t) > sp.gamma_d_closed(OU, t) > 0


def test_gamma_th_closed_zero_on_closed_trajectory():
    com, breathing = sp.two_ion_modes(sp.TWO_PI * 1e6, 0.1, 5, 5)
    delta = sp.TWO_PI * 7e3
    drive = sp.LaserDrive(sp.TWO_PI * 50e3, breathing.frequency - delta, 3 * sp.TWO_PI / delta)
    assert abs(sp.gamma_th_closed(breathing, drive)) < 1e-20


def test_resonance_rejected():
    com, breathing = sp.two_ion_modes(sp.TWO_PI * 1e6, 0.1)
    drive = sp.LaserDrive(sp.TWO_PI * 50e3, breathing.frequency, 1e-4)
    with pytest.raises(sp.ResonanceError):
        sp.gamma_th_closed(breathing, drive)


@pytest.mark.parametrize("gate_time,residue", [(97e-6, None), (95e-6, 1 / 40.5), (50e-6, None)])
def test_gamma_th_two_routes(gate_time, residue):
    cfg = sp.PhysicalConfig(gate_time=gate_time, phase_residue=residue)
    drive, (com, breathing) = cfg.drive, cfg.modes
    a = sp.gamma_th_closed(breathing, drive)
    b = sp.gamma_th_from_qpsd(cfg.modes, drive)
    assert a > 0
    assert abs(a - b) <= 1e-12 * a


def test_qpsd_com_only_is_zero():
    cfg = sp.PhysicalConfig()
    com, breathing = cfg.modes
    silent = replace(breathing, lamb_dicke=0.0)
    assert abs(sp.gamma_th_from_qpsd((com, silent), cfg.drive)) < 1e-20


def test_displacement_closes_and_reaches_antipode():
    cfg = sp.PhysicalConfig(calibrate=False)
    _, breathing = cfg.modes
    drive = cfg.drive
    delta = drive.detuning(breathing)
    assert abs(sp.displacement_amplitude(breathing, drive, 0, 2 * np.pi / delta)) < 1e-12
    force = drive.stark_shift * breathing.lamb_dicke * breathing.displacement[0] / 2
    far = sp.displacement_amplitude(breathing, drive, 0, np.pi / abs(delta))
    assert abs(far) == pytest.approx(2 * abs(force / delta), rel=1e-12)


def test_coupling_zero_at_start_and_calibrated():
    cfg = sp.PhysicalConfig()
    assert sp.coupling_strength(cfg.modes, cfg.drive, 0.0) == 0.0
    assert sp.coupling_strength(cfg.modes, cfg.drive, cfg.drive.gate_time) == pytest.approx(np.pi / 4, abs=1e-10)


def test_calibration_is_idempotent():
    cfg = sp.PhysicalConfig()
    drive = cfg.drive
    again = sp.calibrate_force(cfg.modes, drive)
    assert again.stark_shift == pytest.approx(drive.stark_shift, rel=1e-10)


def test_tuned_gate_time_sets_phase_residue():
    cfg = sp.PhysicalConfig(gate_time=95e-6, phase_residue=1 / 40.5)
    x = cfg.derived()["x"]
    frac = (x / sp.TWO_PI) % 1
    assert frac == pytest.approx(1 / 40.5, abs=1e-9)
    assert abs(cfg.tuned_gate_time - 95e-6) < 1e-6


def test_physical_config_validation():
    with pytest.raises(ValueError):
        sp.PhysicalConfig(gate_time=-1.0)
    with pytest.raises(ValueError):
        sp.PhysicalConfig(phase_residue=1.5)


def test_equilibrium_phase_unsupported():
    with pytest.raises(NotImplementedError):
        sp.LaserDrive(1.0, 1.0, 1.0, equilibrium_phase=0.3)


def test_derived_quantities_are_consistent():
    d = sp.PhysicalConfig().derived()
    assert d["gamma_th"] > 0 and d["gamma_d"] > 0
    assert d["coupling"] == pytest.approx(np.pi / 4, abs=1e-10)
    assert d["x"] == pytest.approx(np.sqrt(3) * sp.TWO_PI * 1e6 * 97e-6)
