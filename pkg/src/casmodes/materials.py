"""Local permittivity models evaluated at real, imaginary and general complex frequency.

Every model is a pure function of the complex frequency ``zeta`` and (for
temperature-dependent damping) the temperature ``T``.  Frequencies are in
rad/s, temperatures in K, permittivities dimensionless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT

__all__ = [
    "PermittivityModel",
    "PerfectMirror",
    "PERFECT_MIRROR",
    "SingularFrequencyError",
    "vacuum",
    "constant",
    "plasma",
    "drude",
    "damping_rate",
    "plasma_wavelength",
    "eval_permittivity",
    "eval_at_imaginary_frequency",
]

VACUUM = "vacuum"
CONSTANT = "constant"
PLASMA = "plasma"
DRUDE = "drude"


class SingularFrequencyError(ValueError):
    """Permittivity evaluated exactly on one of its poles."""


@dataclass(frozen=True)
class PermittivityModel:
    """Tagged description of a local dielectric function.

    Parameters
    ----------
    kind : str
        One of ``"vacuum"``, ``"constant"``, ``"plasma"``, ``"drude"``.
    eps_const : float
        Static permittivity, used by the ``constant`` kind only.
    omega_p : float
        Plasma frequency in rad/s (``plasma`` and ``drude``).
    gamma0 : float
        Damping rate in rad/s at the reference temperature (``drude``).
    damping_exponent : int
        Exponent ``m`` of the low-temperature damping power law
        ``gamma(T) = gamma0 (T / T_ref)^m``.  ``m = 0`` keeps the damping
        temperature independent.
    damping_ref_temperature : float
        Reference temperature ``T_ref`` in K for the power law.
    """

    kind: str
    eps_const: float = 1.0
    omega_p: float = 0.0
    gamma0: float = 0.0
    damping_exponent: int = 0
    damping_ref_temperature: float = 300.0

    def __post_init__(self):
        if self.kind not in (VACUUM, CONSTANT, PLASMA, DRUDE):
            raise ValueError(f"unknown permittivity kind {self.kind!r}")
        if self.kind in (PLASMA, DRUDE) and not self.omega_p > 0:
            raise ValueError("omega_p must be positive for plasma/drude models")
        if self.kind == DRUDE and self.gamma0 < 0:
            raise ValueError("gamma0 must be non-negative")
        if self.kind == CONSTANT and self.eps_const < 1.0:
            raise ValueError("eps_const must be >= 1")
        if self.damping_exponent < 0 or int(self.damping_exponent) != self.damping_exponent:
            raise ValueError("damping_exponent must be a non-negative integer")
        if self.damping_ref_temperature <= 0:
            raise ValueError("damping_ref_temperature must be positive")

    @property
    def lambda_p(self) -> float:
        """Plasma wavelength 2*pi*c/omega_p in m."""
        if self.kind not in (PLASMA, DRUDE):
            raise ValueError("lambda_p only defined for plasma/drude models")
        return 2.0 * np.pi * C_LIGHT / self.omega_p


@dataclass(frozen=True)
class PerfectMirror:
    """Idealized perfectly reflecting wall (r_TE = -1, r_TM = +1).

    Not a dielectric function; accepted by the reflection and cavity code as
    the ideal-mirror limit.
    """


PERFECT_MIRROR = PerfectMirror()


def vacuum() -> PermittivityModel:
    return PermittivityModel(kind=VACUUM)


def constant(eps: float) -> PermittivityModel:
    return PermittivityModel(kind=CONSTANT, eps_const=eps)


def plasma(omega_p: float) -> PermittivityModel:
    return PermittivityModel(kind=PLASMA, omega_p=omega_p)


def drude(
    omega_p: float,
    gamma0: float,
    damping_exponent: int = 0,
    damping_ref_temperature: float = 300.0,
) -> PermittivityModel:
    return PermittivityModel(
        kind=DRUDE,
        omega_p=omega_p,
        gamma0=gamma0,
        damping_exponent=damping_exponent,
        damping_ref_temperature=damping_ref_temperature,
    )


def plasma_wavelength(model: PermittivityModel) -> float:
    return model.lambda_p


def damping_rate(model: PermittivityModel, T: float = 0.0) -> float:
    """Damping rate gamma(T), applying the power law when requested.

    ``m = 0`` ignores T entirely; for ``m > 0`` the rate is
    ``gamma0 (T / T_ref)^m``, which vanishes at T = 0.
    """
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if model.kind != DRUDE:
        return 0.0
    m = model.damping_exponent
    if m == 0:
        return model.gamma0
    return model.gamma0 * (T / model.damping_ref_temperature) ** m


def _check_not_singular(zeta, points, scale):
    tol = 1e-300 + 1e-14 * scale
    z = np.asarray(zeta)
    for p in points:
        if np.any(np.abs(z - p) <= tol):
            raise SingularFrequencyError(
                f"permittivity evaluated at excluded frequency {p!r}"
            )


def eval_permittivity(model: PermittivityModel, zeta, T: float = 0.0):
    """Evaluate eps(zeta) at complex frequency zeta (scalar or array).

    Raises
    ------
    SingularFrequencyError
        At zeta = 0 (plasma, drude) and zeta = -i*gamma(T) (drude).
    """
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if isinstance(model, PerfectMirror):
        raise TypeError("a perfect mirror has no permittivity")
    zeta = np.asarray(zeta, dtype=complex)
    if model.kind == VACUUM:
        return np.ones_like(zeta)
    if model.kind == CONSTANT:
        return np.full_like(zeta, model.eps_const)
    if model.kind == PLASMA:
        _check_not_singular(zeta, [0.0], model.omega_p)
        return 1.0 - model.omega_p**2 / zeta**2
    # drude
    gam = damping_rate(model, T)
    _check_not_singular(zeta, [0.0, -1j * gam], model.omega_p)
    return 1.0 - model.omega_p**2 / (zeta * (zeta + 1j * gam))


def eval_at_imaginary_frequency(model: PermittivityModel, xi, T: float = 0.0):
    """Evaluate eps(i*xi) for xi > 0; guaranteed real (and > 1 for metals)."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise ValueError("xi must be positive")
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if isinstance(model, PerfectMirror):
        raise TypeError("a perfect mirror has no permittivity")
    if model.kind == VACUUM:
        return np.ones_like(xi)
    if model.kind == CONSTANT:
        return np.full_like(xi, model.eps_const)
    if model.kind == PLASMA:
        return 1.0 + model.omega_p**2 / xi**2
    gam = damping_rate(model, T)
    return 1.0 + model.omega_p**2 / (xi * (xi + gam))
