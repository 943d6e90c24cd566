"""Physical constants and unit conversions.

All matrix/wavefunction work inside the atomic-structure code is done in
Hartree atomic units; every public interface speaks V/cm, Gauss, GHz (or
rad/s where explicitly stated).  This module is the single place where the
conversions live.
"""

import math

from scipy.constants import physical_constants as _pc
from scipy.constants import c as C_LIGHT  # m/s
from scipy.constants import e as E_CHARGE  # C
from scipy.constants import hbar as HBAR  # J s
from scipy.constants import h as H_PLANCK  # J s

BOHR_RADIUS = _pc["Bohr radius"][0]  # m
HARTREE = _pc["Hartree energy"][0]  # J
RYDBERG_INF = _pc["Rydberg constant"][0]  # 1/m
FINE_STRUCTURE = _pc["fine-structure constant"][0]
ELECTRON_MASS = _pc["electron mass"][0]  # kg
ATOMIC_MASS = _pc["atomic mass constant"][0]  # kg
BOHR_MAGNETON = _pc["Bohr magneton"][0]  # J/T
G_S = 2.00231930436  # electron spin g-factor (positive convention)

# 87Rb
RB87_MASS = 86.909180531 * ATOMIC_MASS  # kg
#: Mass-corrected Rydberg constant for 87Rb, as frequency c*R (Hz).
RYDBERG_RB_HZ = RYDBERG_INF * C_LIGHT / (1.0 + ELECTRON_MASS / RB87_MASS)

# Atomic units expressed in SI / lab units.
AU_TIME = HBAR / HARTREE  # s
AU_ENERGY_RADS = HARTREE / HBAR  # rad/s per Hartree
AU_EFIELD_VCM = HARTREE / (E_CHARGE * BOHR_RADIUS) / 100.0  # V/cm per a.u.
AU_BFIELD_GAUSS = HBAR / (E_CHARGE * BOHR_RADIUS**2) * 1e4  # G per a.u.
AU_DIPOLE_CM = E_CHARGE * BOHR_RADIUS  # C m per e*a0

TWO_PI = 2.0 * math.pi


def vcm_to_au(field_vcm):
    """Electric field V/cm -> atomic units."""
    return field_vcm / AU_EFIELD_VCM


def gauss_to_au(field_gauss):
    """Magnetic field Gauss -> atomic units."""
    return field_gauss / AU_BFIELD_GAUSS


def au_to_rads(energy_au):
    """Energy in Hartree -> angular frequency rad/s."""
    return energy_au * AU_ENERGY_RADS


def rads_to_au(omega):
    """Angular frequency rad/s -> energy in Hartree."""
    return omega / AU_ENERGY_RADS


def rads_to_ghz(omega):
    """Angular frequency rad/s -> plain frequency GHz."""
    return omega / TWO_PI / 1e9


def ghz_to_rads(freq_ghz):
    """Plain frequency GHz -> angular frequency rad/s."""
    return freq_ghz * 1e9 * TWO_PI


def mhz_to_rads(freq_mhz):
    return freq_mhz * 1e6 * TWO_PI


def rads_to_mhz(omega):
    return omega / TWO_PI / 1e6
