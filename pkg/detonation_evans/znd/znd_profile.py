"""
ZND Reaction Zone Module
========================

Inviscid ZND structure behind a lead shock at x = 0. This module provides:
- Partial-heat-release jump states along the strong branch
- Backward integration of dz/dx = k phi(T(z)) z from the Neumann spike
- Reaction-rate calibration so that z = 1/2 at x = -10

Notes:
- The spike itself is seeded at z = 1 - 1e-12
- The domain is either given (and checked against the 1e-4 tail criterion)
  or found by integrating until z reaches the tail value
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from ..config import Config, logger
from ..errors import DomainError, DomainTooShort, IgnitionFailure, SolverError
from ..gasdyn.thermo import WaveParams, energy_on_branch, ignition_phi, strong_branch


class ZndState(NamedTuple):
    tau: object
    u: object
    e: object
    T: object


def znd_state_at_z(z, params: WaveParams) -> ZndState:
    """
    Strong-branch state at reaction progress z (1 unburned, 0 burned).

    The heat released so far is q(1 - z); z = 1 gives the Neumann spike and
    z = 0 the burned end state.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0) or np.any(z > 1.0):
        raise DomainError("Reaction progress z must lie in [0, 1]")
    tau = np.asarray(strong_branch(params.e_plus, params.q * (1.0 - z), params.Gamma))
    e = energy_on_branch(tau, params.e_plus, params.Gamma)
    if tau.ndim == 0:
        return ZndState(float(tau), 1.0 - float(tau), float(e), float(e) / params.c_v)
    return ZndState(tau, 1.0 - tau, e, e / params.c_v)


def neumann_state(params: WaveParams) -> ZndState:
    """Shocked, unreacted state just behind the lead shock."""
    return znd_state_at_z(1.0, params)


def inviscid_flux_residual(z, params: WaveParams) -> np.ndarray:
    """
    Residuals of the steady inviscid mass, momentum and energy relations.

    Each residual is measured against the unburned state with heat released
    q(1 - z); a jump state satisfies all three to rounding.
    """
    tau, u, e, _ = znd_state_at_z(z, params)
    Gamma = params.Gamma
    p = Gamma * np.asarray(e) / np.asarray(tau)
    p_plus = Gamma * params.e_plus
    mass = u - (1.0 - tau)
    momentum = (p + tau) - (p_plus + 1.0)
    energy = (e + u**2 / 2.0 - p * u - params.q * (1.0 - np.asarray(z))) - params.e_plus
    return np.array([mass, momentum, energy])


def _rate(x, z, params: WaveParams):
    # dz/dx = k phi(T(z)) z, with z kept inside [0, 1] for the state lookup
    zc = np.clip(z[0], 0.0, 1.0)
    T = znd_state_at_z(zc, params).T
    return [params.k * ignition_phi(T, params) * z[0]]


@dataclass(frozen=True)
class ZndProfile:
    """
    Sampled ZND reaction zone on [-M_minus, 0].

    Attributes:
        x: Ascending grid ending at 0
        tau, u, e, z, T: Profile values on the grid
        neumann: State at x = 0- (before any reaction)
        e_mid: Internal energy at the jump (Neumann energy)
        M_minus: Length of the reaction zone domain
        params: Parameters used
    """

    x: np.ndarray
    tau: np.ndarray
    u: np.ndarray
    e: np.ndarray
    z: np.ndarray
    T: np.ndarray
    neumann: ZndState
    e_mid: float
    M_minus: float
    params: WaveParams
    solution: object = None

    def z_at(self, x):
        """Reaction progress at x <= 0 from the dense solution."""
        x = np.clip(np.asarray(x, dtype=float), -self.M_minus, 0.0)
        values = self.solution(np.atleast_1d(x))[0]
        values = np.clip(values, 0.0, 1.0)
        return values if np.ndim(x) else float(values[0])

    def state_at(self, x) -> ZndState:
        """ZND state at x <= 0."""
        return znd_state_at_z(self.z_at(x), self.params)

    def half_reaction_point(self) -> float:
        """The unique x with z(x) = 1/2."""
        if self.z[0] > 0.5:
            raise DomainTooShort("The ZND domain ends before half reaction")
        return brentq(lambda x: self.z_at(x) - 0.5, -self.M_minus, 0.0, xtol=1e-12)


def check_ignition(params: WaveParams) -> ZndState:
    """Return the Neumann state, raising IgnitionFailure when it is too cold."""
    spike = neumann_state(params)
    if spike.T <= params.T_ig:
        raise IgnitionFailure(
            f"Neumann temperature {spike.T:.6g} does not exceed T_ig={params.T_ig:.6g}; "
            "no steady reaction zone exists"
        )
    return spike


def _integrate(params: WaveParams, M_minus: float, events=None):
    z0 = 1.0 - Config.ZND_SEED
    result = solve_ivp(
        _rate,
        (0.0, -M_minus),
        [z0],
        method="DOP853",
        rtol=Config.ZND_RTOL,
        atol=Config.ZND_ATOL,
        dense_output=True,
        events=events,
        args=(params,),
    )
    if not result.success:
        raise SolverError(f"ZND integration failed: {result.message}")
    return result


def znd_profile(params: WaveParams, M_minus: Optional[float] = None, n_points: int = 2001) -> ZndProfile:
    """
    Integrate the ZND reaction zone backward from the lead shock.

    Args:
        params: Wave parameters (k, E_A, T_ig enter through the rate)
        M_minus: Domain length; None integrates until z falls to the tail value
        n_points: Size of the sampled output grid

    Returns:
        ZndProfile on [-M_minus, 0]
    """
    spike = check_ignition(params)

    if M_minus is None:
        def tail(x, z, params):
            return z[0] - Config.ZND_TAIL
        tail.terminal = True
        tail.direction = -1

        result = _integrate(params, Config.MAX_M_MINUS, events=tail)
        if result.status != 1:
            raise DomainTooShort(
                f"z did not fall to {Config.ZND_TAIL} within x >= -{Config.MAX_M_MINUS:g}"
            )
        M_minus = float(-result.t[-1])
    else:
        result = _integrate(params, M_minus)
        z_end = float(result.y[0, -1])
        if z_end > Config.ZND_TAIL:
            raise DomainTooShort(
                f"z(-{M_minus:g}) = {z_end:.3e} exceeds {Config.ZND_TAIL}; lengthen the domain"
            )

    x = np.linspace(-M_minus, 0.0, n_points)
    z = np.clip(result.sol(x)[0], 0.0, 1.0)
    tau, u, e, T = znd_state_at_z(z, params)
    logger.debug(f"ZND profile on [-{M_minus:.4g}, 0] with {result.t.size} adaptive steps")

    return ZndProfile(
        x=x,
        tau=tau,
        u=u,
        e=e,
        z=z,
        T=T,
        neumann=spike,
        e_mid=spike.e,
        M_minus=M_minus,
        params=params,
        solution=result.sol,
    )


def _half_reaction_x(params: WaveParams) -> float:
    def half(x, z, params):
        return z[0] - 0.5
    half.terminal = True
    half.direction = -1

    result = _integrate(params, Config.MAX_M_MINUS * 1e6, events=half)
    if result.status != 1 or not len(result.t_events[0]):
        raise DomainTooShort("Half reaction was never reached")
    return float(result.t_events[0][0])


def calibrate_k(params: WaveParams, x_half: float = Config.HALF_REACTION_X, ztol: float = 1e-8) -> float:
    """
    Reaction rate putting the ZND half-reaction point at x_half.

    The ZND equation is autonomous and linear in k, so x scales like 1/k: one
    reference integration at k = 1 gives the answer, which is then verified by
    re-integrating (and refined by root finding in log k if needed).

    Args:
        params: Wave parameters; their k is ignored
        x_half: Target location of z = 1/2 (negative)
        ztol: Accepted |z(x_half) - 1/2|

    Returns:
        Calibrated k
    """
    check_ignition(params)
    reference = params.with_changes(k=1.0)
    x_ref = _half_reaction_x(reference)
    k = x_ref / x_half
    logger.info(f"Half reaction at x={x_ref:.6g} for k=1; rescaled k={k:.6g}")

    def z_miss(log_k: float) -> float:
        trial = params.with_changes(k=float(np.exp(log_k)))
        result = _integrate(trial, -x_half)
        return float(result.y[0, -1]) - 0.5

    miss = z_miss(np.log(k))
    if abs(miss) > ztol:
        logger.warning(f"Rescaled k misses z(x_half)=1/2 by {miss:.2e}; refining")
        log_k = brentq(z_miss, np.log(k) - 0.5, np.log(k) + 0.5, xtol=1e-14)
        k = float(np.exp(log_k))
    return k
