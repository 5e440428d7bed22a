"""
Spectral System Module
======================

First-order eigenvalue system W' = G(x; lambda) W in flux variables for the
linearization about a viscous profile. This module provides:
- Block coefficients A, b^-1, a0 and E of the linearized operator
- G(x; lambda) = G0(x) + lambda G1(x), both real 7x7
- Limit matrices at both end states (profile derivatives set to zero)
- The nonlinear flux and source maps, for finite-difference validation

Layout of the unknown: (Y1, Y2[3], W2[3]) with W2 = (u, e, z) perturbations
and Y = A W - B W' the flux variables.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..config import logger
from ..errors import DomainError
from ..gasdyn.thermo import WaveParams, ignition_phi_e, ignition_phi_prime_e, pressure
from ..profile.traveling_wave import Profile

DIMENSION = 7


@dataclass(frozen=True)
class ProfileState:
    """Profile values and derivatives at one point, in (tau, u, e, z) form."""

    tau: float
    u: float
    e: float
    z: float
    u_x: float
    e_x: float
    z_x: float


def coefficient_blocks(state: ProfileState, params: WaveParams) -> Dict[str, np.ndarray]:
    """
    Blocks of the linearized operator at one profile state (s = 1).

    Returns:
        Dictionary with A11, A12, A21, A22, binv, a0_22 and E22
    """
    tau, u, e, z = state.tau, state.u, state.e, state.z
    u_x, e_x, z_x = state.u_x, state.e_x, state.z_x
    nu, kappa, d, k, q = params.nu, params.kappa_v, params.d, params.k, params.q
    s = params.s

    p, p_tau, p_e, p_z = pressure(tau, e, params)
    phi = ignition_phi_e(e, params)
    dphi = ignition_phi_prime_e(e, params)

    A21 = np.array([
        p_tau + nu * u_x / tau**2,
        p_tau * u + nu * u * u_x / tau**2 + kappa * e_x / tau**2,
        2.0 * d * z_x / tau**3,
    ])
    A22 = np.array([
        [-s, p_e, p_z],
        [-s * u + p - nu * u_x / tau, -s + u * p_e, u * p_z],
        [0.0, 0.0, -s],
    ])
    binv = np.array([
        [tau / nu, 0.0, 0.0],
        [-tau * u / kappa, tau / kappa, 0.0],
        [0.0, 0.0, tau**2 / d],
    ])
    a0_22 = np.array([
        [1.0, 0.0, 0.0],
        [u, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    E22 = np.array([
        [0.0, 0.0, 0.0],
        [0.0, q * k * dphi * z, q * k * phi],
        [0.0, -k * dphi * z, -k * phi],
    ])
    return {
        "A11": np.array([[-s]]),
        "A12": np.array([[-1.0, 0.0, 0.0]]),
        "A21": A21.reshape(3, 1),
        "A22": A22,
        "binv": binv,
        "a0_22": a0_22,
        "E22": E22,
    }


def split_coefficients(blocks: Dict[str, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Assemble G0 and G1 (G = G0 + lambda G1) from operator blocks.

    Follows the elimination W1 = A11^-1 (Y1 - A12 W2):
        Y1' = -lambda A11^-1 Y1 + lambda A11^-1 A12 W2
        Y2' = (E22 - lambda a0_22) W2
        W2' = b^-1 A21 A11^-1 Y1 - b^-1 Y2 + b^-1 (A22 - A21 A11^-1 A12) W2
    """
    A11_inv = 1.0 / blocks["A11"][0, 0]
    A12, A21, A22 = blocks["A12"], blocks["A21"], blocks["A22"]
    binv = blocks["binv"]

    G0 = np.zeros((DIMENSION, DIMENSION))
    G1 = np.zeros((DIMENSION, DIMENSION))

    G1[0, 0] = -A11_inv
    G1[0, 4:] = (A11_inv * A12).ravel()

    G0[1:4, 4:] = blocks["E22"]
    G1[1:4, 4:] = -blocks["a0_22"]

    G0[4:, 0] = (binv @ A21).ravel() * A11_inv
    G0[4:, 1:4] = -binv
    G0[4:, 4:] = binv @ (A22 - A11_inv * A21 @ A12)
    return G0, G1


class SpectralSystem:
    """
    Coefficient matrix G(x; lambda) along a resolved profile.

    Immutable after construction; all evaluations are pure, so one instance
    may be shared between threads or pickled into worker processes.

    Attributes:
        profile: The traveling wave being linearized about
        params: Its parameters
        G0_plus, G1_plus, G0_minus, G1_minus: Limit coefficients at U+ and U-
    """

    def __init__(self, profile: Profile):
        self.profile = profile
        self.params = profile.params
        self.x_min = -profile.M_minus
        self.x_max = profile.M_plus

        U_plus = profile.end_states.U_plus
        U_minus = profile.U_minus if profile.U_minus is not None else profile.end_states.U_minus
        self.G0_plus, self.G1_plus = split_coefficients(self._blocks_at_rest(U_plus))
        self.G0_minus, self.G1_minus = split_coefficients(self._blocks_at_rest(U_minus))
        logger.debug(f"Spectral system on [{self.x_min:.4g}, {self.x_max:.4g}]")

    def _blocks_at_rest(self, U: np.ndarray) -> Dict[str, np.ndarray]:
        tau, e, z, _ = U
        state = ProfileState(tau=tau, u=1.0 - tau, e=e, z=z, u_x=0.0, e_x=0.0, z_x=0.0)
        return coefficient_blocks(state, self.params)

    def state(self, x: float) -> ProfileState:
        """Profile values and derivatives at x, with u = 1 - tau and u_x = -tau'."""
        if not self.x_min <= x <= self.x_max:
            raise DomainError(f"x={x} outside the profile domain [{self.x_min}, {self.x_max}]")
        tau, e, z, _ = self.profile(x)
        tau_x, e_x, z_x, _ = self.profile.derivative(x)
        return ProfileState(tau=tau, u=1.0 - tau, e=e, z=z, u_x=-tau_x, e_x=e_x, z_x=z_x)

    def blocks(self, x: float) -> Dict[str, np.ndarray]:
        return coefficient_blocks(self.state(x), self.params)

    def coefficients(self, x: float) -> Tuple[np.ndarray, np.ndarray]:
        """G0(x), G1(x) with G(x; lambda) = G0 + lambda G1."""
        return split_coefficients(self.blocks(x))

    def assemble_G(self, x: float, lam: complex) -> np.ndarray:
        G0, G1 = self.coefficients(x)
        return G0 + lam * G1

    def limit_matrices(self, lam: complex) -> Tuple[np.ndarray, np.ndarray]:
        """(G_plus, G_minus) at the end states."""
        return self.G0_plus + lam * self.G1_plus, self.G0_minus + lam * self.G1_minus

    def limit_coefficients(self, side: str) -> Tuple[np.ndarray, np.ndarray]:
        if side == "plus":
            return self.G0_plus, self.G1_plus
        if side == "minus":
            return self.G0_minus, self.G1_minus
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


def assemble_G(x: float, lam: complex, system: SpectralSystem) -> np.ndarray:
    """G(x; lambda) as a complex 7x7 matrix."""
    return system.assemble_G(x, lam)


def limit_matrices(lam: complex, system: SpectralSystem) -> Tuple[np.ndarray, np.ndarray]:
    """G_plus(lambda), G_minus(lambda)."""
    return system.limit_matrices(lam)


# ============================================================================
# NONLINEAR MAPS
# ============================================================================

def flux_map(U: np.ndarray, U_x: np.ndarray, params: WaveParams) -> np.ndarray:
    """
    f1(U) - s f0(U) - B(U) U_x in the variables U = (tau, u, e, z).

    Its derivative in the direction W, with U_x frozen, is A W; its derivative
    in U_x is -B.
    """
    tau, u, e, z = U
    p = params.Gamma * e / tau
    s = params.s
    f0 = np.array([tau, u, e + u**2 / 2.0, z])
    f1 = np.array([-u, p, u * p, 0.0])
    B = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [0.0, params.nu / tau, 0.0, 0.0],
        [0.0, params.nu * u / tau, params.kappa_v / tau, 0.0],
        [0.0, 0.0, 0.0, params.d / tau**2],
    ])
    return f1 - s * f0 - B @ U_x


def source_map(U: np.ndarray, params: WaveParams) -> np.ndarray:
    """Reaction source R(U) = (0, 0, q k phi z, -k phi z)."""
    _, _, e, z = U
    rate = params.k * ignition_phi_e(e, params) * z
    return np.array([0.0, 0.0, params.q * rate, -rate])


def conserved_map(U: np.ndarray) -> np.ndarray:
    """f0(U) = (tau, u, e + u^2/2, z)."""
    tau, u, e, z = U
    return np.array([tau, u, e + u**2 / 2.0, z])
