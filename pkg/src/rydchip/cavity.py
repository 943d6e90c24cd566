"""Pumped-cavity field and driven two-level Rydberg transition dynamics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import constants as cst
from .cpw import CpwGeometry, field_magnitude, lateral_log_slope

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CavityParams:
    """Resonator mode: frequency/linewidth (rad/s), transmission-line data."""

    omega_c: float = cst.TWO_PI * 20.55e9
    kappa: float = cst.TWO_PI * 9.0e6
    length_mm: float = 9.3
    capacitance_per_length_pf_m: float = 164.0
    harmonic_index: int = 3
    quality_factor: float | None = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.quality_factor is not None:
            q_from_kappa = self.omega_c / self.kappa
            if abs(q_from_kappa - self.quality_factor) > 0.05 * self.quality_factor:
                raise ValueError(
                    f"stored Q={self.quality_factor} inconsistent with "
                    f"omega_c/kappa={q_from_kappa:.0f} beyond 5%"
                )

    @property
    def capacitance(self) -> float:
        return self.capacitance_per_length_pf_m * 1e-12 * self.length_mm * 1e-3

    def ground_state_voltage(self) -> float:
        """rms zero-point voltage on the center conductor: sqrt(hbar w / C)."""
        return math.sqrt(cst.HBAR * self.omega_c / self.capacitance)

    def antinode_amplitude_factor(self, offset_mm: float) -> float:
        """Standing-wave amplitude at a distance from the nearest antinode."""
        k = self.harmonic_index * math.pi / self.length_mm
        return abs(math.cos(k * offset_mm))


@dataclass(frozen=True)
class DriveParams:
    """Injected microwave pump: frequency (rad/s), relative power, and the
    Rabi frequency at resonance with the mean atomic transition (rad/s)."""

    omega_mw: float
    power: float = 1.0
    rabi_ref: float | None = None

    def __post_init__(self):
        if self.power <= 0:
            raise ValueError("pump power must be positive")


@dataclass(frozen=True)
class TwoLevelParams:
    """Rydberg pair: mean transition frequency, inhomogeneous FWHM, decay
    rate (all rad/s), and transition dipole (e a0)."""

    omega_12_mean: float = cst.TWO_PI * 20.5513e9
    delta_omega_12: float = cst.TWO_PI * 1.1e6
    gamma_decay: float = cst.TWO_PI * 2.7e3
    dipole_ea0: float = 30.0

    def __post_init__(self):
        if min(self.omega_12_mean, self.delta_omega_12, self.gamma_decay) < 0:
            raise ValueError("two-level parameters must be >= 0")


@dataclass(frozen=True)
class EnsembleGeometry:
    """Cloud offset/radius and Rabi-gradient length (um)."""

    x0_um: float = 50.0
    sigma_um: float = 25.0
    chi_um: float = 125.0

    def __post_init__(self):
        if self.sigma_um <= 0:
            raise ValueError("cloud radius must be positive")

    @property
    def b_ratio(self) -> float:
        return self.sigma_um / self.chi_um


def cavity_field_response(drive: DriveParams, cavity: CavityParams) -> complex:
    """Intracavity field amplitude, normalized to 1 at P = 1 on resonance.

    E_c proportional to sqrt(P) / (kappa/2 - i (w_mw - w_c)).
    """
    detuning = drive.omega_mw - cavity.omega_c
    return (
        math.sqrt(drive.power)
        * (cavity.kappa / 2.0)
        / (cavity.kappa / 2.0 - 1j * detuning)
    )


def filtered_rabi_squared(
    drive: DriveParams, cavity: CavityParams, atoms: TwoLevelParams
) -> float:
    """|Omega(w_mw)|^2 given the Rabi frequency at w_mw = mean transition.

    |Omega|^2 = |Omega_bar|^2 [(w12 - w_c)^2 + k^2/4] / [(w_mw - w_c)^2 + k^2/4].
    """
    if drive.rabi_ref is None:
        raise ValueError("drive.rabi_ref must be set")
    num = (atoms.omega_12_mean - cavity.omega_c) ** 2 + cavity.kappa**2 / 4.0
    den = (drive.omega_mw - cavity.omega_c) ** 2 + cavity.kappa**2 / 4.0
    return drive.rabi_ref**2 * num / den


def steady_state_population(omega_mw, omega_12, gamma_decay, rabi_sq):
    """Steady-state upper-state population of the driven two-level atom.

    rho_22 = (|O|^2/4) / (delta^2 + Gamma^2/4 + |O|^2/2), bounded by 1/2.
    """
    delta = np.asarray(omega_mw, dtype=float) - omega_12
    den = delta**2 + gamma_decay**2 / 4.0 + np.asarray(rabi_sq) / 2.0
    if np.any(den == 0.0):
        log.warning("steady-state population undefined (Gamma=Omega=0 on resonance); returning 0")
        den = np.where(den == 0.0, np.inf, den)
    return np.asarray(rabi_sq) / 4.0 / den


def broadened_spectrum(
    drive_grid,
    cavity: CavityParams,
    atoms: TwoLevelParams,
    rabi_ref: float,
    power: float = 1.0,
    nodes: int = 201,
    span_fwhm: float = 4.0,
) -> np.ndarray:
    """Gaussian-broadened steady-state spectrum over pump frequencies.

    The transition frequencies are spread with FWHM delta_omega_12 around
    the mean; the cavity-filtered |Omega|^2 is evaluated per pump
    frequency.  Trapezoidal quadrature over +-span_fwhm widths.
    """
    if nodes < 201:
        raise ValueError("use at least 201 quadrature nodes")
    drive_grid = np.asarray(drive_grid, dtype=float)
    out = np.zeros_like(drive_grid)
    fwhm = atoms.delta_omega_12
    if fwhm == 0.0:
        for i, w_mw in enumerate(drive_grid):
            rabi_sq = filtered_rabi_squared(
                DriveParams(w_mw, power, rabi_ref * math.sqrt(power)), cavity, atoms
            )
            out[i] = steady_state_population(
                w_mw, atoms.omega_12_mean, atoms.gamma_decay, rabi_sq
            )
        return out
    w12 = np.linspace(
        atoms.omega_12_mean - span_fwhm * fwhm,
        atoms.omega_12_mean + span_fwhm * fwhm,
        nodes,
    )
    weights = np.exp(-math.log(2.0) * ((w12 - atoms.omega_12_mean) / (fwhm / 2.0)) ** 2)
    weights /= trapezoid(weights, w12)
    for i, w_mw in enumerate(drive_grid):
        rabi_sq = filtered_rabi_squared(
            DriveParams(w_mw, power, rabi_ref * math.sqrt(power)), cavity, atoms
        )
        rho = steady_state_population(w_mw, w12, atoms.gamma_decay, rabi_sq)
        out[i] = trapezoid(weights * rho, w12)
    return out


def rabi_trace(rabi: float, t_grid) -> np.ndarray:
    """Population difference D(t) = cos(Omega t) of resonant Rabi flopping."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0):
        raise ValueError("time grid must be non-negative")
    return np.cos(rabi * t)


def averaged_rabi_trace(
    rabi_mean: float,
    geometry: EnsembleGeometry,
    t_grid,
    method: str = "closed",
    nodes: int = 20001,
    span_sigma: float = 8.0,
) -> np.ndarray:
    """Ensemble-averaged population difference for a linear Rabi gradient.

    Closed form exp(-g^2 t^2) cos(Omega_bar t) with
    g^2 = (sigma^2 / 2 chi^2) Omega_bar^2; the quadrature method integrates
    cos(Omega(x) t) over the Gaussian density directly and must agree with
    the closed form to 1e-6.
    """
    t = np.asarray(t_grid, dtype=float)
    b = geometry.b_ratio
    if method == "closed":
        gamma_sq = 0.5 * b**2 * rabi_mean**2
        return np.exp(-gamma_sq * t**2) * np.cos(rabi_mean * t)
    if method != "quadrature":
        raise ValueError("method must be 'closed' or 'quadrature'")
    u = np.linspace(-span_sigma, span_sigma, nodes)  # (x - x0)/sigma
    dens = np.exp(-0.5 * u**2)
    dens /= trapezoid(dens, u)
    phases = rabi_mean * np.outer(t, 1.0 + b * u)
    return trapezoid(dens[None, :] * np.cos(phases), u, axis=1)


def rabi_from_field(dipole_ea0: float, field_v_per_m: float) -> float:
    """Rabi frequency d E / hbar (rad/s) for a dipole in e a0."""
    return dipole_ea0 * cst.AU_DIPOLE_CM * field_v_per_m / cst.HBAR


def vacuum_rabi_frequency(
    cavity: CavityParams,
    dipole_ea0: float,
    position_um: tuple[float, float],
    geometry: CpwGeometry | None = None,
    antinode_offset_mm: float = 0.85,
) -> float:
    """Single-photon Rabi frequency at (x, z) um above the waveguide.

    The per-photon field is the quasi-static CPW field at the zero-point
    conductor voltage, reduced by the standing-wave amplitude at the
    atoms' position along the resonator.
    """
    if dipole_ea0 <= 0:
        raise ValueError("dipole must be positive")
    x_um, z_um = position_um
    if z_um <= 0:
        raise ValueError("position must be above the chip plane (z > 0)")
    geometry = geometry or CpwGeometry()
    u_c = cavity.ground_state_voltage()
    e_field = float(field_magnitude(geometry, u_c, x_um, z_um))
    e_field *= cavity.antinode_amplitude_factor(antinode_offset_mm)
    return rabi_from_field(dipole_ea0, e_field)


def cavity_field_map(
    cavity: CavityParams,
    x_grid_um,
    z_grid_um,
    geometry: CpwGeometry | None = None,
    query_um: tuple[float, float] | None = None,
):
    """Relative per-photon field magnitude on a grid.

    Returns (grid, log_slope) where log_slope is d ln|E|/dx (1/um) at the
    query point (None when no query is given).
    """
    from .cpw import field_map as _field_map

    geometry = geometry or CpwGeometry()
    grid = _field_map(geometry, cavity.ground_state_voltage(), x_grid_um, z_grid_um)
    slope = None
    if query_um is not None:
        slope = lateral_log_slope(geometry, query_um[0], query_um[1])
    return grid, slope


def transition_linewidth(
    laser_linewidth_rads: float, d_r1_mhz_per_vcm: float, d_r2_mhz_per_vcm: float
) -> float:
    """Inhomogeneous transition linewidth from the differential Stark shift.

    Delta_w12 = Delta_w_las |(d_r2 - d_r1) / d_r1|.
    """
    if d_r1_mhz_per_vcm == 0:
        raise ValueError("d_r1 must be nonzero")
    return laser_linewidth_rads * abs(
        (d_r2_mhz_per_vcm - d_r1_mhz_per_vcm) / d_r1_mhz_per_vcm
    )
