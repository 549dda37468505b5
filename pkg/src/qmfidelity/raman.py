"""Off-resonant Raman memory in a thermal atomic ensemble.

Thermal motion along the beam axis Doppler-shifts the read-in and read-out
couplings and imprints a velocity-dependent phase during storage.  Both are
governed by two dimensionless numbers::

    zeta = k_B T / (M c^2)            thermal velocity spread, (v/c)^2
    chi  = (k_p - k_c) c t_s          storage dephasing lever arm

and the carrier frequency ``omega_c = c k_c`` of the control field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import BroadeningParams
from .ensemble import RealizationModel
from .exceptions import DomainError

# Exact SI values (CODATA 2018).
BOLTZMANN = 1.380649e-23  # J/K
SPEED_OF_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class RamanConfig:
    temperature: float
    atomic_mass: float
    k_p: float
    k_c: float
    t_s: float
    kappa: float
    n_atoms: int
    # Recorded with the run; they do not enter the fidelity.
    detuning: float | None = None
    bandwidth: float | None = None

    def __post_init__(self):
        for name in ("temperature", "atomic_mass", "k_c", "kappa"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        if not math.isfinite(self.k_p):
            raise DomainError("k_p must be finite")
        if not (math.isfinite(self.t_s) and self.t_s >= 0):
            raise DomainError(f"t_s must be >= 0, got {self.t_s}")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise DomainError(f"n_atoms must be an integer >= 1, got {self.n_atoms}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))


@dataclass(frozen=True)
class RamanDerived:
    zeta: float
    chi: float
    omega_c: float

    def __post_init__(self):
        if not (math.isfinite(self.zeta) and self.zeta >= 0):
            raise DomainError(f"zeta must be >= 0, got {self.zeta}")
        if not (math.isfinite(self.omega_c) and self.omega_c > 0):
            raise DomainError(f"omega_c must be positive, got {self.omega_c}")
        if not math.isfinite(self.chi):
            raise DomainError("chi must be finite")

    @property
    def dephasing(self) -> float:
        """chi^2 zeta, the variance of the storage phase."""
        return self.chi**2 * self.zeta


class RamanFidelity(NamedTuple):
    fidelity: float
    out_of_regime: bool


class SweepRow(NamedTuple):
    chi: float
    zeta: float
    fidelity: float
    out_of_regime: bool


def derive_dimensionless(c: RamanConfig) -> RamanDerived:
    return RamanDerived(
        zeta=BOLTZMANN * c.temperature / (c.atomic_mass * SPEED_OF_LIGHT**2),
        chi=(c.k_p - c.k_c) * SPEED_OF_LIGHT * c.t_s,
        omega_c=SPEED_OF_LIGHT * c.k_c,
    )


def doppler_correction(d: RamanDerived, kappa: float, n_atoms: int) -> float:
    """The Doppler term 3 zeta omega_c^2 / (2 kappa^2 N^2)."""
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    if not n_atoms >= 1:
        raise DomainError(f"n_atoms must be >= 1, got {n_atoms}")
    return 3.0 * d.zeta * d.omega_c**2 / (2.0 * kappa**2 * float(n_atoms) ** 2)


def raman_fidelity(d: RamanDerived, kappa: float, n_atoms: int) -> RamanFidelity:
    """Entanglement fidelity of the Raman memory to order 1/N^2.

    The expression is perturbative.  It is returned unclamped, and flagged
    out of regime once ``u = chi^2 zeta`` reaches 1 or the storage term
    ``exp(-u/2)(1 - u)`` falls below the Doppler term.  Past that point the
    value is negative, and a little further on it turns back up with ``chi``.
    """
    u = d.dephasing
    storage = math.exp(-u / 2.0) * (1.0 - u)
    doppler = doppler_correction(d, kappa, n_atoms)
    fidelity = storage * (storage - doppler) + 0.0  # no negative zero
    out_of_regime = u >= 1.0 or storage < doppler
    return RamanFidelity(fidelity, out_of_regime)


def leading_order_fidelity(d: RamanDerived) -> float:
    """Large-N limit exp(-u)(1 - u)^2 of :func:`raman_fidelity`."""
    u = d.dephasing
    return math.exp(-u) * (1.0 - u) ** 2


def map_to_broadening(
    d: RamanDerived, kappa: float, n_atoms: int
) -> tuple[BroadeningParams, RealizationModel]:
    """Broadening widths and the correlated thermal-velocity sampling model."""
    sqrt_zeta = math.sqrt(d.zeta)
    p = BroadeningParams(
        kappa_mean=kappa,
        kappa_width=0.0,
        w_K=d.omega_c * sqrt_zeta,
        w_M=d.omega_c * sqrt_zeta,
        w_a=0.0,
        w_b=0.0,
        w_f=abs(d.chi) * sqrt_zeta,
        n_absorbers=n_atoms,
    )
    return p, RealizationModel.velocity_driven(d.omega_c, d.chi)


def sweep_chi(c: RamanConfig, chi_values) -> list[SweepRow]:
    """Fidelity against the storage dephasing parameter at fixed temperature."""
    chi_values = np.asarray(chi_values, dtype=float)
    if chi_values.ndim != 1 or chi_values.size == 0:
        raise DomainError("chi_values must be a non-empty 1-d sequence")
    if np.any(np.diff(chi_values) < 0):
        raise DomainError("chi_values must be sorted ascending")
    base = derive_dimensionless(c)
    rows = []
    for chi in chi_values:
        d = RamanDerived(base.zeta, float(chi), base.omega_c)
        f = raman_fidelity(d, c.kappa, c.n_atoms)
        rows.append(SweepRow(float(chi), base.zeta, f.fidelity, f.out_of_regime))
    return rows
