"""Unit conventions.

Lengths are in angstrom, masses in unified atomic mass units and energies in
cm^-1 internally.  Collision energies enter and leave the package in kelvin;
cross sections in angstrom^2; rate constants in cm^3 s^-1.
"""

from scipy import constants as _c

# hbar^2 / (2 u * 1 angstrom^2) expressed in cm^-1
HBAR2_2U = _c.hbar**2 / (2 * _c.atomic_mass * 1e-20) / (_c.h * _c.c * 100)

# 1 cm^-1 in kelvin (second radiation constant)
CM_TO_K = 1.4387769
K_TO_CM = 1.0 / CM_TO_K

H_ATOM_MASS = 1.00782503207
H2_MASS = 2 * H_ATOM_MASS


def hbar2_2mu(mass: float) -> float:
    """hbar^2/(2 mu) in cm^-1 angstrom^2 for a reduced mass in u."""
    return HBAR2_2U / mass


def kelvin_to_cm(e_k):
    return e_k * K_TO_CM


def cm_to_kelvin(e_cm):
    return e_cm * CM_TO_K
