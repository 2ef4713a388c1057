"""Reflection coefficients of planar structures: half-spaces, finite stacks,
semi-infinite superlattices (Bloch) and the uniaxial effective-medium limit.

Conventions
-----------
The transverse wavenumber is ``kappa = sqrt(k^2 - eps * omega^2 / c^2)`` on
the branch with ``Re kappa >= 0`` and, on the propagating cut, ``Im kappa <= 0``.
Fields inside each layer are combinations of ``exp(-kappa z)`` (decaying /
outgoing into the structure) and ``exp(+kappa z)``.  All functions broadcast
over numpy arrays of ``omega`` and ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT

from .materials import (
    PerfectMirror,
    PermittivityModel,
    damping_rate,
    eval_permittivity,
)

__all__ = [
    "TE",
    "TM",
    "PoleAtEvaluationError",
    "BlochBandEdgeError",
    "kappa",
    "fresnel",
    "fresnel_imag",
    "LayerStack",
    "half_space",
    "finite_stack",
    "superlattice",
    "stack_reflection",
    "EmaPermittivity",
    "ema_permittivity",
    "ema_of_stack",
    "ema_reflection",
]

TE = "TE"
TM = "TM"


class PoleAtEvaluationError(ZeroDivisionError):
    """Reflection coefficient evaluated exactly on one of its poles."""


class BlochBandEdgeError(RuntimeError):
    """Both Bloch eigenvalues are unimodular; the decaying branch is undefined."""


def kappa(omega, k, eps):
    """Transverse wavenumber sqrt(k^2 - eps*omega^2/c^2), branch Re>=0, Im<=0.

    The principal square root already carries ``Re >= 0``; exactly on the
    propagating cut (negative real radicand) the root is flipped to the
    ``-i|kappa|`` side, which matches evaluation at ``omega + i0+``.
    At a branch point the value is 0.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    w = k * k - np.asarray(eps, dtype=complex) * np.asarray(omega, dtype=complex) ** 2 / C_LIGHT**2
    kap = np.sqrt(w)
    flip = (kap.real == 0.0) & (kap.imag > 0.0)
    return np.where(flip, -kap, kap)


def _eta(pol, kap, eps):
    """Polarization impedance entering all interface formulas."""
    if pol == TE:
        return kap
    if pol == TM:
        return kap / eps
    raise ValueError(f"unknown polarization {pol!r}")


def fresnel(pol, omega, k, model, T: float = 0.0):
    """Fresnel reflection coefficient of a half-space seen from vacuum.

    r_TE = (kappa - kappa_i) / (kappa + kappa_i),
    r_TM = (eps*kappa - kappa_i) / (eps*kappa + kappa_i).

    ``model`` may be a PermittivityModel or a PerfectMirror (r = -1 / +1).
    """
    omega = np.asarray(omega, dtype=complex)
    k = np.asarray(k, dtype=float)
    if isinstance(model, PerfectMirror):
        val = -1.0 if pol == TE else 1.0
        return np.full(np.broadcast(omega, k).shape, val, dtype=complex)
    eps = eval_permittivity(model, omega, T)
    kap0 = kappa(omega, k, 1.0)
    kapi = kappa(omega, k, eps)
    if pol == TE:
        num, den = kap0 - kapi, kap0 + kapi
    else:
        num, den = eps * kap0 - kapi, eps * kap0 + kapi
    scale = np.abs(num) + np.abs(kap0) + np.abs(kapi)
    if np.any(np.abs(den) <= 1e-15 * scale):
        raise PoleAtEvaluationError(f"{pol} reflection pole at omega={omega}, k={k}")
    return num / den


def fresnel_imag(pol, xi, k, model, T: float = 0.0):
    """Half-space reflection at imaginary frequency ``zeta = i*xi`` (xi >= 0).

    Real arithmetic fast path for the rotated / Matsubara evaluation.  The
    ``xi = 0`` value is the per-model limit: the TM coefficient of any
    conductor tends to 1, the TE coefficient keeps a finite plasma limit
    through ``xi^2 eps -> omega_p^2`` but vanishes for Drude with gamma > 0.
    """
    xi = np.asarray(xi, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(xi < 0):
        raise ValueError("xi must be non-negative")
    if isinstance(model, PerfectMirror):
        val = -1.0 if pol == TE else 1.0
        return np.full(np.broadcast(xi, k).shape, val)

    xi_b, k_b = np.broadcast_arrays(xi, k)
    out = np.empty(xi_b.shape, dtype=float)
    pos = xi_b > 0.0

    if np.any(pos):
        xp, kp = xi_b[pos], k_b[pos]
        from .materials import eval_at_imaginary_frequency

        eps = eval_at_imaginary_frequency(model, xp, T)
        kap0 = np.sqrt(kp * kp + xp * xp / C_LIGHT**2)
        kapi = np.sqrt(kp * kp + eps * xp * xp / C_LIGHT**2)
        if pol == TE:
            out[pos] = (kap0 - kapi) / (kap0 + kapi)
        else:
            out[pos] = (eps * kap0 - kapi) / (eps * kap0 + kapi)

    if np.any(~pos):
        k0 = k_b[~pos]
        out[~pos] = _fresnel_imag_zero(pol, k0, model, T)
    return out if out.shape else float(out)


def _fresnel_imag_zero(pol, k, model, T):
    """xi -> 0+ limit of fresnel_imag, resolved per model kind."""
    kind = model.kind
    if pol == TM:
        if kind in ("plasma", "drude"):
            return np.ones_like(k)
        if kind == "constant":
            e = model.eps_const
            return np.full_like(k, (e - 1.0) / (e + 1.0))
        return np.zeros_like(k)
    # TE
    effective_plasma = kind == "plasma" or (kind == "drude" and damping_rate(model, T) == 0.0)
    if effective_plasma:
        kapi = np.sqrt(k * k + model.omega_p**2 / C_LIGHT**2)
        return (k - kapi) / (k + kapi)
    # xi^2 eps -> 0 for drude with dissipation, constants and vacuum
    return np.zeros_like(k)


# ---------------------------------------------------------------------------
# layer stacks
# ---------------------------------------------------------------------------

HALF_SPACE = "halfspace"
PERIODIC = "periodic"
VACUUM_TERM = "vacuum"


@dataclass(frozen=True)
class LayerStack:
    """Ordered planar structure seen from vacuum.

    ``layers`` lists (model, thickness) pairs from the vacuum interface
    inward.  ``termination`` closes the structure: a half-space of
    ``halfspace_model``, vacuum, or an infinite periodic repetition of the
    listed layers (one full period, currently two layers).
    """

    layers: tuple = ()
    termination: str = VACUUM_TERM
    halfspace_model: PermittivityModel | None = None

    def __post_init__(self):
        if self.termination not in (HALF_SPACE, PERIODIC, VACUUM_TERM):
            raise ValueError(f"unknown termination {self.termination!r}")
        for _, d in self.layers:
            if not d > 0:
                raise ValueError("layer thicknesses must be positive")
        if self.termination == HALF_SPACE and self.halfspace_model is None:
            raise ValueError("half-space termination requires a model")
        if self.termination == PERIODIC and len(self.layers) < 1:
            raise ValueError("periodic termination requires at least one full period")

    @property
    def filling_factor(self) -> float:
        """f = d_A / (d_A + d_B) for a two-layer period."""
        if len(self.layers) != 2:
            raise ValueError("filling factor defined for two-layer periods only")
        d_a, d_b = self.layers[0][1], self.layers[1][1]
        return d_a / (d_a + d_b)


def half_space(model) -> LayerStack:
    return LayerStack(layers=(), termination=HALF_SPACE, halfspace_model=model)


def finite_stack(layers, substrate=None) -> LayerStack:
    if substrate is None:
        return LayerStack(layers=tuple(layers), termination=VACUUM_TERM)
    return LayerStack(layers=tuple(layers), termination=HALF_SPACE, halfspace_model=substrate)


def superlattice(model_a, d_a, model_b, d_b) -> LayerStack:
    """Semi-infinite A|B|A|B|... superlattice; layer A faces the vacuum."""
    return LayerStack(layers=((model_a, d_a), (model_b, d_b)), termination=PERIODIC)


def _interface_r(pol, eta_top, eta_bot):
    return (eta_top - eta_bot) / (eta_top + eta_bot)


def _finite_reflection(pol, omega, k, stack, T):
    """Downward recursion r_j -> r_{j-1} from the terminating medium."""
    omega = np.asarray(omega, dtype=complex)
    k = np.asarray(k, dtype=float)
    media = [(1.0 + 0j, None)]  # vacuum on top
    for model, d in stack.layers:
        media.append((eval_permittivity(model, omega, T), d))
    if stack.termination == HALF_SPACE:
        media.append((eval_permittivity(stack.halfspace_model, omega, T), None))
    else:
        media.append((np.asarray(1.0 + 0j), None))

    kaps = [kappa(omega, k, eps) for eps, _ in media]
    etas = [_eta(pol, kp, eps) for kp, (eps, _) in zip(kaps, media)]

    r = _interface_r(pol, etas[-2], etas[-1])
    for j in range(len(media) - 2, 0, -1):
        phase = np.exp(-2.0 * kaps[j] * media[j][1])
        rho = _interface_r(pol, etas[j - 1], etas[j])
        r = (rho + r * phase) / (1.0 + rho * r * phase)
    return r


def _exp_clipped(z, cap=150.0):
    z = np.asarray(z, dtype=complex)
    return np.exp(np.minimum(z.real, cap) + 1j * z.imag)


def _bloch_reflection(pol, omega, k, stack, T, raise_on_edge=True):
    """Reflection of the semi-infinite two-layer superlattice.

    Bloch branch: the eigenvalue of the single-period transfer matrix with
    |lambda| < 1 selects the solution decaying into the stack.  At a band
    edge (both eigenvalues unimodular) the branch is ambiguous.
    """
    (model_a, d_a), (model_b, d_b) = stack.layers
    omega = np.asarray(omega, dtype=complex)
    k = np.asarray(k, dtype=float)
    eps_a = eval_permittivity(model_a, omega, T)
    eps_b = eval_permittivity(model_b, omega, T)
    kap0 = kappa(omega, k, 1.0)
    kap_a = kappa(omega, k, eps_a)
    kap_b = kappa(omega, k, eps_b)
    eta0 = _eta(pol, kap0, 1.0)
    eta_a = _eta(pol, kap_a, eps_a)
    eta_b = _eta(pol, kap_b, eps_b)

    # opaque layers short-circuit the period: an opaque A layer hides the
    # rest of the stack, an opaque B layer reduces it to A on a B half-space
    opaque_a = (kap_a * d_a).real > 120.0
    opaque_b = ((kap_b * d_b).real > 120.0) & ~opaque_a

    def interface(eta_from, eta_to):
        x = eta_from / eta_to
        return 0.5 * (1.0 + x), 0.5 * (1.0 - x)

    pa_m, pa_p = _exp_clipped(-kap_a * d_a), _exp_clipped(kap_a * d_a)
    pb_m, pb_p = _exp_clipped(-kap_b * d_b), _exp_clipped(kap_b * d_b)

    # M_{B<-A}: coefficients in B from coefficients in A at the A|B interface
    ba_d, ba_o = interface(eta_a, eta_b)
    ab_d, ab_o = interface(eta_b, eta_a)

    # T = M_{A<-B} P_B M_{B<-A} P_A, acting on (decaying, growing) amplitudes
    m1_00, m1_01 = ba_d * pa_m, ba_o * pa_p
    m1_10, m1_11 = ba_o * pa_m, ba_d * pa_p
    m2_00, m2_01 = pb_m * m1_00, pb_m * m1_01
    m2_10, m2_11 = pb_p * m1_10, pb_p * m1_11
    t00 = ab_d * m2_00 + ab_o * m2_10
    t01 = ab_d * m2_01 + ab_o * m2_11
    t10 = ab_o * m2_00 + ab_d * m2_10
    t11 = ab_o * m2_01 + ab_d * m2_11

    tr = t00 + t11
    det = t00 * t11 - t01 * t10  # analytically 1
    huge = np.abs(tr) > 1e100
    tr_safe = np.where(huge, 1.0, tr)
    disc = np.sqrt(tr_safe * tr_safe - 4.0 * det)
    lam_p = 0.5 * (tr_safe + disc)
    lam_m = 0.5 * (tr_safe - disc)
    big = np.where(np.abs(lam_p) >= np.abs(lam_m), lam_p, lam_m)
    big = np.where(huge, tr, big)
    small = det / big

    degenerate = opaque_a | opaque_b
    edge = (np.abs(np.abs(small) - 1.0) < 1e-9) & ~degenerate
    if raise_on_edge and np.any(edge):
        raise BlochBandEdgeError(
            "both Bloch eigenvalues unimodular; add dissipation or a small "
            "imaginary frequency part to select the decaying branch"
        )

    # eigenvector of the decaying branch; pick the better conditioned form
    v0_a, v1_a = t01, small - t00
    v0_b, v1_b = small - t11, t10
    use_b = (np.abs(v0_a) + np.abs(v1_a)) < (np.abs(v0_b) + np.abs(v1_b))
    v0 = np.where(use_b, v0_b, v0_a)
    v1 = np.where(use_b, v1_b, v1_a)

    top_d, top_o = interface(eta_a, eta0)
    w_in = top_d * v0 + top_o * v1
    w_out = top_o * v0 + top_d * v1
    r = w_out / w_in

    if np.any(opaque_a):
        r = np.where(opaque_a, _interface_r(pol, eta0, eta_a), r)
    if np.any(opaque_b):
        rho_ab = _interface_r(pol, eta_a, eta_b)
        rho_0a = _interface_r(pol, eta0, eta_a)
        x = pa_m * pa_m
        r = np.where(opaque_b, (rho_0a + rho_ab * x) / (1.0 + rho_0a * rho_ab * x), r)
    if not raise_on_edge:
        r = np.where(edge, np.nan + 1j * np.nan, r)
    return r


def stack_reflection(pol, omega, k, stack, T: float = 0.0):
    """Reflection coefficient of a LayerStack seen from vacuum.

    Half-space/vacuum terminations use the standard downward interface
    recursion; the periodic termination builds the semi-infinite
    superlattice coefficient from the decaying Bloch eigenvector.
    """
    if isinstance(stack, (PermittivityModel, PerfectMirror)):
        return fresnel(pol, omega, k, stack, T)
    if stack.termination == PERIODIC:
        if len(stack.layers) != 2:
            raise NotImplementedError("Bloch reflection implemented for two-layer periods")
        return _bloch_reflection(pol, omega, k, stack, T)
    return _finite_reflection(pol, omega, k, stack, T)


def periodic_approximant(stack, n_periods, substrate_model=None) -> LayerStack:
    """Finite N-period truncation of a periodic stack (convergence checks)."""
    if stack.termination != PERIODIC:
        raise ValueError("periodic stack required")
    layers = stack.layers * n_periods
    sub = substrate_model if substrate_model is not None else stack.layers[0][0]
    return LayerStack(layers=layers, termination=HALF_SPACE, halfspace_model=sub)


# ---------------------------------------------------------------------------
# effective medium (uniaxial) description of a two-layer superlattice
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmaPermittivity:
    """Uniaxial permittivity diag(eps_perp, eps_perp, eps_par); the optic
    axis (par) is the stack axis, normal to the interface."""

    eps_perp: complex
    eps_par: complex


def ema_permittivity(eps_a, eps_b, f) -> EmaPermittivity:
    """Layered-medium mixing rules: arithmetic in-plane, harmonic normal.

    eps_perp = f eps_A + (1-f) eps_B;  eps_par = [f/eps_A + (1-f)/eps_B]^-1.
    """
    if not 0.0 < f < 1.0:
        raise ValueError("filling factor must lie in (0, 1)")
    eps_a = np.asarray(eps_a, dtype=complex)
    eps_b = np.asarray(eps_b, dtype=complex)
    perp = f * eps_a + (1.0 - f) * eps_b
    h = f / eps_a + (1.0 - f) / eps_b
    if np.any(np.abs(h) * (np.abs(eps_a) + np.abs(eps_b)) < 1e-15):
        raise PoleAtEvaluationError("singular harmonic mean in EMA mixing")
    return EmaPermittivity(eps_perp=perp, eps_par=1.0 / h)


def ema_of_stack(stack, omega, T: float = 0.0) -> EmaPermittivity:
    """EMA permittivity of a two-layer periodic stack at frequency omega."""
    (model_a, _), (model_b, _) = stack.layers
    f = stack.filling_factor
    omega = np.asarray(omega, dtype=complex)
    return ema_permittivity(
        eval_permittivity(model_a, omega, T),
        eval_permittivity(model_b, omega, T),
        f,
    )


def ema_reflection(pol, omega, k, ema: EmaPermittivity):
    """Uniaxial half-space Fresnel coefficient, optic axis normal to the face.

    TE (ordinary) sees eps_perp only; TM (extraordinary) mixes eps_perp and
    eps_par through kappa_e^2 = (eps_perp/eps_par) k^2 - eps_perp omega^2/c^2.
    """
    omega = np.asarray(omega, dtype=complex)
    k = np.asarray(k, dtype=float)
    kap0 = kappa(omega, k, 1.0)
    if pol == TE:
        kap_o = kappa(omega, k, ema.eps_perp)
        return (kap0 - kap_o) / (kap0 + kap_o)
    w = (ema.eps_perp / ema.eps_par) * k * k - ema.eps_perp * omega**2 / C_LIGHT**2
    kap_e = np.sqrt(np.asarray(w, dtype=complex))
    kap_e = np.where((kap_e.real == 0.0) & (kap_e.imag > 0.0), -kap_e, kap_e)
    return (ema.eps_perp * kap0 - kap_e) / (ema.eps_perp * kap0 + kap_e)
