"""Physical constants and unit conversions.

Canonical internal units: eV (energy), angstrom (length), amu (mass),
s (time). Constants are CODATA 2018 recommended values.

=====================  ==========================  ==================
name                   value                       unit
=====================  ==========================  ==================
HBAR_EV_S              6.582119569e-16             eV s
HBAR_J_S               1.054571817e-34             J s
PLANCK_J_S             6.62607015e-34              J s
ELEMENTARY_CHARGE      1.602176634e-19             C (= J/eV)
SPEED_OF_LIGHT         299792458.0                 m/s
VACUUM_PERMITTIVITY    8.8541878128e-12            F/m
VACUUM_PERMEABILITY    1.25663706212e-6            N/A^2
DEBYE_C_M              3.33564095198152e-30        C m (1e-21/c)
BOLTZMANN_EV_K         8.617333262e-5              eV/K
AMU_KG                 1.66053906660e-27           kg
BOHR_MAGNETON          9.2740100783e-24            J/T
NUCLEAR_MAGNETON       5.0507837461e-27            J/T
ELECTRON_G             2.00231930436256            (magnitude)
=====================  ==========================  ==================
"""
from __future__ import annotations

from dataclasses import dataclass

HBAR_EV_S = 6.582119569e-16
HBAR_J_S = 1.054571817e-34
PLANCK_J_S = 6.62607015e-34
ELEMENTARY_CHARGE = 1.602176634e-19
SPEED_OF_LIGHT = 299792458.0
VACUUM_PERMITTIVITY = 8.8541878128e-12
VACUUM_PERMEABILITY = 1.25663706212e-6
DEBYE_C_M = 1e-21 / SPEED_OF_LIGHT
BOLTZMANN_EV_K = 8.617333262e-5
AMU_KG = 1.66053906660e-27
BOHR_MAGNETON = 9.2740100783e-24
NUCLEAR_MAGNETON = 5.0507837461e-27
ELECTRON_G = 2.00231930436256
ANGSTROM_M = 1e-10


@dataclass(frozen=True)
class PhysicalConstants:
    hbar_ev_s: float = HBAR_EV_S
    speed_of_light: float = SPEED_OF_LIGHT
    vacuum_permittivity: float = VACUUM_PERMITTIVITY
    debye_c_m: float = DEBYE_C_M
    boltzmann_ev_k: float = BOLTZMANN_EV_K
    amu_kg: float = AMU_KG


CONSTANTS = PhysicalConstants()

# unit -> (dimension, factor to the SI/base unit of that dimension)
_UNITS = {
    "eV": ("energy", ELEMENTARY_CHARGE),
    "meV": ("energy", 1e-3 * ELEMENTARY_CHARGE),
    "J": ("energy", 1.0),
    "angstrom": ("length", ANGSTROM_M),
    "nm": ("length", 1e-9),
    "m": ("length", 1.0),
    "debye": ("dipole", DEBYE_C_M),
    "C*m": ("dipole", 1.0),
    "e*angstrom": ("dipole", ELEMENTARY_CHARGE * ANGSTROM_M),
    "K": ("temperature", 1.0),
}

_ALIASES = {
    "ev": "eV", "mev": "meV", "j": "J",
    "a": "angstrom", "å": "angstrom", "ang": "angstrom", "angstrom": "angstrom",
    "nm": "nm", "m": "m",
    "d": "debye", "debye": "debye",
    "c*m": "C*m", "c·m": "C*m", "cm": "C*m", "c m": "C*m",
    "e*angstrom": "e*angstrom", "eå": "e*angstrom", "e*a": "e*angstrom",
    "k": "K",
}


class UnitError(ValueError):
    """Unknown unit or conversion across dimensions."""


def canonical_unit(unit: str) -> str:
    if unit in _UNITS:
        return unit
    key = unit.strip().lower()
    if key in _ALIASES:
        return _ALIASES[key]
    raise UnitError(f"unknown unit {unit!r}")


def dimension(unit: str) -> str:
    return _UNITS[canonical_unit(unit)][0]


@dataclass(frozen=True)
class Quantity:
    """A magnitude tagged with a unit."""

    value: float
    unit: str

    def to(self, target: str) -> "Quantity":
        return convert(self, target)


def convert(q: Quantity, target: str) -> Quantity:
    """Rescale ``q`` to ``target`` unit; raises UnitError across dimensions."""
    src = canonical_unit(q.unit)
    dst = canonical_unit(target)
    dim_s, fs = _UNITS[src]
    dim_d, fd = _UNITS[dst]
    if dim_s != dim_d:
        raise UnitError(f"cannot convert {dim_s} ({src}) to {dim_d} ({dst})")
    if src == dst:
        return Quantity(float(q.value), dst)
    return Quantity(float(q.value) * (fs / fd), dst)


def energy_ev_to_angular_frequency(hw_ev: float) -> float:
    """Angular frequency (rad/s) of a quantum energy given in eV."""
    return hw_ev / HBAR_EV_S


def mass_weighted_to_si(q_amu_angstrom: float) -> float:
    """amu^(1/2) angstrom -> kg^(1/2) m."""
    return q_amu_angstrom * (AMU_KG ** 0.5) * ANGSTROM_M
