"""Noise spectra, filter functions and the two LS-gate noise parameters.

Units are SI with angular frequencies in rad/s.  The two-ion crystal has a
centre-of-mass mode at ``omega_z`` and a breathing mode at ``sqrt(3) omega_z``;
the gate time closes the centre-of-mass trajectory, so only the breathing mode
leaves residual qubit-phonon entanglement.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

TWO_PI = 2 * np.pi
SQRT3 = np.sqrt(3.0)


class ResonanceError(ValueError):
    """A mode detuning is zero, so the displacement formulas diverge."""


@dataclass(frozen=True)
class OuProcess:
    c: float  # diffusion constant, s^-3
    tau_c: float  # correlation time, s

    def __post_init__(self):
        if self.c <= 0 or self.tau_c <= 0:
            raise ValueError("OU diffusion constant and correlation time must be positive")


@dataclass(frozen=True)
class ModeSpec:
    index: int  # 1 = centre of mass, 2 = breathing
    omega_z: float
    lamb_dicke: float
    nbar: float = 0.0

    def __post_init__(self):
        if self.index not in (1, 2):
            raise ValueError("mode index must be 1 (com) or 2 (breathing)")
        if self.lamb_dicke > 0.3:
            warnings.warn(f"Lamb-Dicke parameter {self.lamb_dicke} is outside the small-eta regime")

    @property
    def frequency(self) -> float:
        return self.omega_z if self.index == 1 else SQRT3 * self.omega_z

    @property
    def displacement(self) -> tuple[float, float]:
        """Normal-mode participation of ions 1 and 2."""
        s = 1 / np.sqrt(2)
        return (s, s) if self.index == 1 else (s, -s)


@dataclass(frozen=True)
class LaserDrive:
    stark_shift: float  # |crossed-beam ac Stark shift|, rad/s
    beat_note: float  # rad/s
    gate_time: float  # s
    phase: float = 0.0
    equilibrium_phase: float = 0.0

    def __post_init__(self):
        if self.equilibrium_phase != 0.0:
            raise NotImplementedError("only the vanishing equilibrium phase is supported")

    def detuning(self, mode: ModeSpec) -> float:
        return mode.frequency - self.beat_note

    @classmethod
    def closing_com(cls, omega_z: float, gate_time: float, stark_shift: float) -> "LaserDrive":
        """Beat note above the com mode with ``t_g = 2 pi / |delta_com|``."""
        return cls(stark_shift=stark_shift, beat_note=omega_z + TWO_PI / gate_time, gate_time=gate_time)


def two_ion_modes(omega_z: float, eta_com: float, nbar_com: float = 0.0, nbar_b: float = 0.0):
    """Centre-of-mass and breathing modes; eta scales as omega**-1/2."""
    com = ModeSpec(1, omega_z, eta_com, nbar_com)
    breathing = ModeSpec(2, omega_z, eta_com / 3 ** 0.25, nbar_b)
    return com, breathing


def ou_psd(omega, process: OuProcess):
    omega = np.asarray(omega, dtype=float)
    return process.c * process.tau_c ** 2 / (1 + (omega * process.tau_c) ** 2)


def filter_function(omega, t: float):
    """``(1 - cos(omega t)) / (2 pi omega^2)``, written as a squared sine for accuracy."""
    if t < 0:
        raise ValueError("time must be non-negative")
    omega = np.asarray(omega, dtype=float)
    safe = np.where(omega == 0, 1.0, omega)
    val = np.sin(safe * t / 2) ** 2 / (np.pi * safe ** 2)
    return np.where(omega == 0, t ** 2 / (4 * np.pi), val)


def gamma_d_closed(process: OuProcess, t: float) -> float:
    if t < 0:
        raise ValueError("time must be non-negative")
    tau = process.tau_c
    return 0.5 * process.c * tau ** 2 * (t + tau * np.expm1(-t / tau))


def gamma_d_quadrature(process: OuProcess, t: float, tol: float = 1e-10) -> float:
    """Filtered integral of the OU spectrum, by adaptive quadrature on [-W, W]."""
    if t == 0:
        return 0.0
    w_max = max(100 / process.tau_c, 100 / t)

    def integrand(w):
        return float(ou_psd(w, process) * filter_function(w, t))

    # split at the filter zeros so each panel holds one lobe
    lobes = np.arange(0.0, w_max, TWO_PI / t)
    edges = np.append(lobes, w_max)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, epsabs=tol / len(edges), epsrel=1e-12, limit=200)
        total += val
    return 2 * total


def _force(mode: ModeSpec, drive: LaserDrive, ion: int) -> float:
    """Spin-dependent force amplitude in rad/s."""
    return drive.stark_shift * mode.lamb_dicke * mode.displacement[ion] / 2


def _nonzero_detuning(mode: ModeSpec, drive: LaserDrive) -> float:
    delta = drive.detuning(mode)
    if delta == 0:
        raise ResonanceError(f"beat note is resonant with mode {mode.index}")
    return delta


def gamma_th_closed(mode: ModeSpec, drive: LaserDrive) -> float:
    delta = _nonzero_detuning(mode, drive)
    amp = drive.stark_shift * mode.lamb_dicke / delta
    return amp ** 2 * (1 - np.cos(delta * drive.gate_time)) * (mode.nbar + 0.5)


def thermal_psd_peaks(modes, drive: LaserDrive):
    """Delta-peak content of the quantum PSD as ``(position, weight)`` pairs.

    Each mode contributes ``2 pi w_m |delta_m| (nbar_m + 1/2) delta(omega^2 - delta_m^2)``
    with ``w_m = |Omega_L|^2 eta_m^2``, the single-flip displacement variance.
    The square-argument delta splits into equal peaks at ``+-delta_m``.
    """
    peaks = []
    for mode in modes:
        delta = _nonzero_detuning(mode, drive)
        weight = 2 * np.pi * (drive.stark_shift * mode.lamb_dicke) ** 2 * abs(delta) * (mode.nbar + 0.5)
        for pos in (delta, -delta):
            peaks.append((pos, weight / (2 * abs(delta))))
    return peaks


def gamma_th_from_qpsd(modes, drive: LaserDrive) -> float:
    """Filtered integral of the quantum PSD, evaluated on its delta peaks."""
    t = drive.gate_time
    return float(sum(w * filter_function(pos, t) for pos, w in thermal_psd_peaks(modes, drive)))


def displacement_amplitude(mode: ModeSpec, drive: LaserDrive, ion: int, t) -> np.ndarray:
    """Phase-space displacement of ``mode`` driven by ``ion`` after time ``t``."""
    delta = _nonzero_detuning(mode, drive)
    f = _force(mode, drive, ion)
    return (f / delta) * (1 - np.exp(1j * delta * np.asarray(t, dtype=float)))


def coupling_strength(modes, drive: LaserDrive, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for mode in modes:
        delta = _nonzero_detuning(mode, drive)
        f1, f2 = _force(mode, drive, 0), _force(mode, drive, 1)
        total = total - (2 * f1 * f2 / delta) * (t + np.sin(delta * t) / delta)
    return total


def calibrate_force(modes, drive: LaserDrive, target: float = np.pi / 4, xtol: float = 1e-12) -> LaserDrive:
    """Rescale the Stark shift so that the coupling reaches ``target`` at the gate time."""
    if drive.stark_shift <= 0:
        raise ValueError("initial Stark shift must be positive")

    def residual(scale):
        return float(coupling_strength(modes, replace(drive, stark_shift=scale * drive.stark_shift), drive.gate_time)) - target

    j0 = residual(1.0) + target
    if j0 <= 0:
        raise ValueError("coupling has the wrong sign at this detuning: no positive root")
    hi = np.sqrt(target / j0) * 2
    scale = optimize.brentq(residual, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    return replace(drive, stark_shift=scale * drive.stark_shift)


@dataclass(frozen=True)
class PhysicalConfig:
    """Trap, laser and noise settings from which the LS-gate parameters follow.

    ``phase_residue`` optionally nudges the gate time so that the breathing
    mode advances by ``2 pi (n + phase_residue)`` per gate, which sets where
    the thermal amplification peaks and where the trajectory closes.
    """

    omega_z: float = TWO_PI * 1e6
    gate_time: float = 97e-6
    eta_com: float = 0.1
    nbar_b: float = 5.0
    nbar_com: float = 5.0
    c: float = 2e9
    tau_c: float = 5e-4
    stark_shift: float = TWO_PI * 50e3
    calibrate: bool = True
    phase_residue: float | None = None

    def __post_init__(self):
        if self.omega_z <= 0 or self.gate_time <= 0:
            raise ValueError("trap frequency and gate time must be positive")
        if self.phase_residue is not None and not 0 <= self.phase_residue < 1:
            raise ValueError("phase_residue must lie in [0, 1)")

    @property
    def tuned_gate_time(self) -> float:
        if self.phase_residue is None:
            return self.gate_time
        cycles = SQRT3 * self.omega_z * self.gate_time / TWO_PI
        n = np.floor(cycles - self.phase_residue + 0.5)
        return TWO_PI * (n + self.phase_residue) / (SQRT3 * self.omega_z)

    @property
    def modes(self):
        return two_ion_modes(self.omega_z, self.eta_com, self.nbar_com, self.nbar_b)

    @property
    def ou(self) -> OuProcess:
        return OuProcess(self.c, self.tau_c)

    @property
    def drive(self) -> LaserDrive:
        d = LaserDrive.closing_com(self.omega_z, self.tuned_gate_time, self.stark_shift)
        return calibrate_force(self.modes, d) if self.calibrate else d

    def derived(self) -> dict:
        """All LS-gate quantities that the channel model needs."""
        drive = self.drive
        com, breathing = self.modes
        t_g = drive.gate_time
        delta_b = drive.detuning(breathing)
        return {
            "gate_time": t_g,
            "stark_shift": drive.stark_shift,
            "gamma_th": gamma_th_closed(breathing, drive),
            "gamma_d": gamma_d_closed(self.ou, t_g),
            "x": breathing.frequency * t_g,
            "zeta_prefactor": (drive.stark_shift * breathing.lamb_dicke / delta_b) ** 2,
            "coupling": float(coupling_strength(self.modes, drive, t_g)),
            "phi_gate": complex(displacement_amplitude(breathing, drive, 0, t_g)),
            "delta_b": delta_b,
        }
