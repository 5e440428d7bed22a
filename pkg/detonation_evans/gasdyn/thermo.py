"""
Gas Dynamics Module
===================

Thermodynamic closure and jump algebra for the scaled reactive Navier-Stokes
model. This module provides:
- WaveParams: the physical/numerical parameter tuple (scaled so s = 1, tau+ = 1, u+ = 0)
- Ideal-gas pressure p = Gamma e / tau with its partial derivatives
- Arrhenius ignition with a temperature cut-off
- Rankine-Hugoniot burned end state and the Chapman-Jouguet heat-release limit
- Overdrive / Erpenbeck coordinate conversions

Every function is a pure function of its inputs. Array inputs are accepted
wherever the profile solver evaluates states on a whole mesh at once.
"""

from dataclasses import asdict, dataclass, replace
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from ..config import logger
from ..errors import CJLimitExceeded, DomainError

# Rounding noise tolerated in the discriminant before calling it negative
DISCRIMINANT_SLACK = 1e-14


def _as_output(value):
    """Return a Python float for scalar results, the array otherwise."""
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


def max_e_plus(Gamma: float) -> float:
    """Largest admissible unburned energy, 1/(Gamma(Gamma+1))."""
    return 1.0 / (Gamma * (Gamma + 1.0))


def discriminant(e_plus: float, q: float, Gamma: float) -> float:
    """End-state discriminant; nonnegative exactly when q <= q_CJ(e_plus)."""
    return (Gamma + 1.0) ** 2 * (Gamma * e_plus + 1.0) ** 2 - Gamma * (Gamma + 2.0) * (
        1.0 + 2.0 * (Gamma + 1.0) * e_plus + 2.0 * q
    )


def q_cj(e_plus: float, Gamma: float) -> float:
    """
    Chapman-Jouguet heat release limit for a given unburned energy.

    This is the heat release at which the end-state discriminant vanishes;
    strong detonations need 0 <= q <= q_cj.

    Args:
        e_plus: Unburned internal energy, 0 <= e_plus <= 1/(Gamma(Gamma+1))
        Gamma: Grueneisen coefficient, Gamma = gamma - 1 > 0

    Returns:
        q_CJ(e_plus)
    """
    if Gamma <= 0:
        raise DomainError(f"Gamma must be positive, got {Gamma}")
    if not 0.0 <= e_plus <= max_e_plus(Gamma):
        raise DomainError(
            f"e_plus={e_plus} outside [0, {max_e_plus(Gamma):.6g}] for Gamma={Gamma}"
        )
    numerator = (Gamma + 1.0) ** 2 * (Gamma * e_plus + 1.0) ** 2 - Gamma * (Gamma + 2.0) * (
        1.0 + 2.0 * (Gamma + 1.0) * e_plus
    )
    return numerator / (2.0 * Gamma * (Gamma + 2.0))


# ============================================================================
# PARAMETERS AND END STATES
# ============================================================================

@dataclass(frozen=True)
class WaveParams:
    """
    Scaled parameters of a viscous strong detonation.

    The scaling fixes the wave speed s = 1 and the unburned state tau+ = 1,
    u+ = 0; those are exposed as properties, not fields.

    Attributes:
        e_plus: Unburned specific internal energy
        q: Heat release
        E_A: Activation energy
        Gamma: Grueneisen coefficient (gamma - 1)
        nu: Viscosity
        d: Species diffusivity
        kappa_v: Heat conductivity over c_v
        k: Reaction rate
        T_ig: Ignition temperature
        c_v: Specific heat at constant volume
    """

    e_plus: float
    q: float
    E_A: float
    Gamma: float
    nu: float
    d: float
    kappa_v: float
    k: float
    T_ig: float
    c_v: float = 1.0

    def __post_init__(self):
        for name in ("nu", "d", "kappa_v", "k", "c_v", "Gamma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be strictly positive, got {value}")
        if self.E_A < 0:
            raise DomainError(f"E_A must be nonnegative, got {self.E_A}")
        if self.q < 0:
            raise DomainError(f"q must be nonnegative, got {self.q}")
        limit = q_cj(self.e_plus, self.Gamma)
        if self.q > limit:
            raise CJLimitExceeded(
                f"q={self.q} exceeds the Chapman-Jouguet limit q_CJ={limit:.6g} at e_plus={self.e_plus}"
            )

    @property
    def s(self) -> float:
        return 1.0

    @property
    def tau_plus(self) -> float:
        return 1.0

    @property
    def u_plus(self) -> float:
        return 0.0

    def with_changes(self, **changes) -> "WaveParams":
        """Copy with some fields replaced (validated again)."""
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class EndStates:
    """
    Unburned (+) and burned (-) equilibria closed by Rankine-Hugoniot.

    Profile vectors are ordered (tau, e, z, y).
    """

    tau_minus: float
    u_minus: float
    e_minus: float
    e_plus: float
    c_v: float = 1.0
    z_plus: float = 1.0
    z_minus: float = 0.0
    y_plus: float = 0.0
    y_minus: float = 0.0

    @property
    def T_plus(self) -> float:
        return self.e_plus / self.c_v

    @property
    def T_minus(self) -> float:
        return self.e_minus / self.c_v

    @property
    def U_plus(self) -> np.ndarray:
        return np.array([1.0, self.e_plus, self.z_plus, self.y_plus])

    @property
    def U_minus(self) -> np.ndarray:
        return np.array([self.tau_minus, self.e_minus, self.z_minus, self.y_minus])


def strong_branch(e_plus: float, q, Gamma: float):
    """
    Minus-root specific volume behind a wave releasing heat q.

    With q = 0 this is the Neumann (shocked, unreacted) volume. q may be an
    array of partial heat releases.
    """
    disc = np.asarray(discriminant(e_plus, np.asarray(q, dtype=float), Gamma))
    if np.any(disc < -DISCRIMINANT_SLACK):
        raise CJLimitExceeded(
            f"Negative end-state discriminant {disc.min():.3e} (q={q}, e_plus={e_plus}, Gamma={Gamma})"
        )
    disc = np.maximum(disc, 0.0)
    return _as_output(((Gamma + 1.0) * (Gamma * e_plus + 1.0) - np.sqrt(disc)) / (Gamma + 2.0))


def energy_on_branch(tau, e_plus: float, Gamma: float):
    """Internal energy on the Rayleigh line through the unburned state."""
    return tau * (Gamma * e_plus + 1.0 - tau) / Gamma


def rh_end_state(params: WaveParams) -> EndStates:
    """
    Burned end state of a strong detonation.

    Args:
        params: Wave parameters (q <= q_CJ checked at construction)

    Returns:
        EndStates with u- = 1 - tau- exactly
    """
    tau_minus = strong_branch(params.e_plus, params.q, params.Gamma)
    if not 0.0 < tau_minus < 1.0:
        raise DomainError(f"Burned specific volume {tau_minus:.6g} is not in (0, 1)")
    return EndStates(
        tau_minus=tau_minus,
        u_minus=1.0 - tau_minus,
        e_minus=energy_on_branch(tau_minus, params.e_plus, params.Gamma),
        e_plus=params.e_plus,
        c_v=params.c_v,
    )


# ============================================================================
# EQUATION OF STATE AND KINETICS
# ============================================================================

class PressureState(NamedTuple):
    p: object
    p_tau: object
    p_e: object
    p_z: object


def pressure(tau, e, params: WaveParams) -> PressureState:
    """
    Ideal-gas pressure p = Gamma e / tau and its partial derivatives.

    Args:
        tau: Specific volume (> 0), scalar or array
        e: Internal energy (> 0), scalar or array
        params: Wave parameters (Gamma is used)

    Returns:
        PressureState(p, p_tau, p_e, p_z)
    """
    tau = np.asarray(tau, dtype=float)
    e = np.asarray(e, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("Specific volume must be positive")
    if np.any(e <= 0):
        raise DomainError("Internal energy must be positive")

    Gamma = params.Gamma
    return PressureState(
        p=_as_output(Gamma * e / tau),
        p_tau=_as_output(-Gamma * e / tau**2),
        p_e=_as_output(Gamma / tau * np.ones_like(e)),
        p_z=_as_output(np.zeros(np.broadcast(tau, e).shape)),
    )


def ignition_phi(T, params: WaveParams):
    """
    Arrhenius ignition function with cut-off.

    phi = exp(-E_A/(T - T_ig)) above the ignition temperature and 0 at or
    below it; phi(T_ig) = 0 is the continuous limit.
    """
    T = np.asarray(T, dtype=float)
    excess = T - params.T_ig
    hot = excess > 0
    safe = np.where(hot, excess, 1.0)
    return _as_output(np.where(hot, np.exp(-params.E_A / safe), 0.0))


def ignition_phi_e(e, params: WaveParams):
    """phi as a function of internal energy, T = e / c_v."""
    return ignition_phi(np.asarray(e, dtype=float) / params.c_v, params)


def ignition_phi_prime_e(e, params: WaveParams):
    """Derivative of phi(e / c_v) with respect to e (zero below the cut-off)."""
    T = np.asarray(e, dtype=float) / params.c_v
    excess = T - params.T_ig
    hot = excess > 0
    safe = np.where(hot, excess, 1.0)
    phi = np.where(hot, np.exp(-params.E_A / safe), 0.0)
    return _as_output(np.where(hot, phi * params.E_A / (params.c_v * safe**2), 0.0))


# ============================================================================
# OVERDRIVE AND ERPENBECK COORDINATES
# ============================================================================

class OverdriveEstimate(NamedTuple):
    f: float
    within_validity: bool


@dataclass(frozen=True)
class ErpenbeckRecord:
    """Scaled parameters corresponding to Erpenbeck's (f, q0, E0) coordinates."""

    f: float
    e_plus: float
    q: float
    E_A: float
    e_plus_cj: float
    q0: float
    E0: float
    Gamma: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def overdrive_from_q(q: float, Gamma: float) -> OverdriveEstimate:
    """
    Strong-shock asymptotic overdrive f ~ 1/(2 Gamma (Gamma+2) q).

    The estimate is only meaningful for q below 1/(2 Gamma (Gamma+2)); outside
    that range the result is flagged and a warning logged.
    """
    if q <= 0 or Gamma <= 0:
        raise DomainError(f"q and Gamma must be positive, got q={q}, Gamma={Gamma}")
    threshold = 1.0 / (2.0 * Gamma * (Gamma + 2.0))
    valid = q < threshold
    if not valid:
        logger.warning(
            f"Asymptotic overdrive used at q={q} >= {threshold:.4g}, outside its range of validity"
        )
    return OverdriveEstimate(f=threshold / q, within_validity=valid)


def e_cj_solve(q0: float, Gamma: float, xtol: float = 1e-14) -> float:
    """
    Unburned energy at which a wave with q = q0 e_plus is exactly CJ.

    Solves q_cj(e) = q0 e on (0, 1/(Gamma(Gamma+1))]. The left end is positive
    (q_cj(0) = 1/(2 Gamma (Gamma+2))) and the right end negative (q_cj vanishes
    there), so the bracketed root is unique.

    Args:
        q0: Heat release in units of the unburned energy (> 0)
        Gamma: Grueneisen coefficient

    Returns:
        e_plus at the Chapman-Jouguet condition
    """
    if q0 <= 0 or Gamma <= 0:
        raise DomainError(f"q0 and Gamma must be positive, got q0={q0}, Gamma={Gamma}")
    upper = max_e_plus(Gamma)
    return brentq(lambda e: q_cj(e, Gamma) - q0 * e, 0.0, upper, xtol=xtol, rtol=4 * np.finfo(float).eps)


def overdrive_exact(e_plus: float, q0: float, Gamma: float) -> float:
    """Overdrive f = e_plus_CJ(q0) / e_plus from the numerical CJ root."""
    if e_plus <= 0:
        raise DomainError(f"e_plus must be positive, got {e_plus}")
    return e_cj_solve(q0, Gamma) / e_plus


def erpenbeck_convert(
    q0: float,
    E0: float,
    Gamma: float,
    f: Optional[float] = None,
    e_plus: Optional[float] = None,
) -> ErpenbeckRecord:
    """
    Convert between Erpenbeck's (f, q0, E0) and the scaled (e_plus, q, E_A).

    Exactly one of f or e_plus must be given; the other is computed.
    """
    if (f is None) == (e_plus is None):
        raise DomainError("Give exactly one of f or e_plus")
    e_cj = e_cj_solve(q0, Gamma)
    if f is not None:
        if f <= 0:
            raise DomainError(f"Overdrive must be positive, got {f}")
        e_plus = e_cj / f
    else:
        if e_plus <= 0:
            raise DomainError(f"e_plus must be positive, got {e_plus}")
        f = e_cj / e_plus
    return ErpenbeckRecord(
        f=f,
        e_plus=e_plus,
        q=q0 * e_plus,
        E_A=E0 * e_plus,
        e_plus_cj=e_cj,
        q0=q0,
        E0=E0,
        Gamma=Gamma,
    )


# ============================================================================
# IGNITION THRESHOLD CONVENTIONS
# ============================================================================

@dataclass(frozen=True)
class TigConvention:
    """One reading of a stated ignition threshold."""

    name: str
    T_ig: float
    description: str
    ignites: bool


def ignition_energy(e_plus: float, e_mid: float, weight: float) -> float:
    """Convex-combination ignition energy (1 - w) e_plus + w e_mid."""
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"Ignition weight must lie in [0, 1], got {weight}")
    return (1.0 - weight) * e_plus + weight * e_mid


def tig_conventions(stated: float, e_plus: float, e_mid: float, c_v: float = 1.0) -> List[TigConvention]:
    """
    Both readings of a stated threshold value.

    The value is read once as a temperature and once as the weight of the
    convex combination between the unburned and Neumann energies. Whether each
    reading lets the Neumann state ignite is recorded alongside.
    """
    T_neumann = e_mid / c_v
    readings = [
        TigConvention(
            name="temperature",
            T_ig=stated,
            description=f"T_ig = {stated} taken literally as a temperature",
            ignites=T_neumann > stated,
        )
    ]
    if 0.0 <= stated <= 1.0:
        T_weighted = ignition_energy(e_plus, e_mid, stated) / c_v
        readings.append(
            TigConvention(
                name="weight",
                T_ig=T_weighted,
                description=f"{stated} taken as the weight w in e_ig = (1-w) e_plus + w e_mid",
                ignites=T_neumann > T_weighted,
            )
        )
    return readings
