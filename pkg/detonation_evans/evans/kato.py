"""
Kato Basis Module
=================

Analytic bases of the decaying subspaces of the limit matrices.

For G(lambda) = G0 + lambda G1 at an end state, the spectral projector P(lambda)
onto the relevant eigenvalue group is analytic wherever the group stays
separated from the rest of the spectrum. A basis transported by Kato's
equation dV/dlambda = (P'P - PP')V stays in range P and is analytic in lambda.

- plus side: eigenvalues with Re < 0 (solutions decaying as x -> +infinity)
- minus side: eigenvalues with Re > 0 (solutions decaying as x -> -infinity)

Transport always starts from the cached point nearest the requested value;
because the transported basis is analytic, the result does not depend on the
path as long as the splitting holds in between.
"""

from typing import Dict, NamedTuple, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eig, orth

from ..config import Config, logger
from ..errors import SplittingLost

# Real parts this close to zero (relative to the spectral radius) break the splitting
SPLITTING_TOL = 1e-12

SIDES = ("plus", "minus")


class SpectralSplit(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    mask: np.ndarray


def spectral_split(G: np.ndarray, side: str, lam: complex = None) -> SpectralSplit:
    """
    Eigen-decomposition of a limit matrix with the relevant group selected.

    Eigenvalues are ordered by real part, ties broken by imaginary part.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    values, vectors = eig(G)
    order = np.lexsort((values.imag, values.real))
    values, vectors = values[order], vectors[:, order]

    scale = 1.0 + np.max(np.abs(values))
    if np.min(np.abs(values.real)) <= SPLITTING_TOL * scale:
        raise SplittingLost(
            f"Limit matrix has an eigenvalue on the imaginary axis at lambda={lam}", spectral_value=lam
        )
    mask = values.real < 0 if side == "plus" else values.real > 0
    return SpectralSplit(values, vectors, np.linalg.inv(vectors), mask)


def projector(G: np.ndarray, side: str, lam: complex = None) -> np.ndarray:
    """Spectral projector onto the decaying subspace for the given side."""
    split = spectral_split(G, side, lam)
    return split.vectors[:, split.mask] @ split.inverse[split.mask]


def projector_derivative(split: SpectralSplit, G1: np.ndarray) -> np.ndarray:
    """
    dP/dlambda for G(lambda) = G0 + lambda G1.

    In the eigenbasis, (V^-1 P' V)_ij = M_ij / (mu_i - mu_j) for i in the group
    and j outside, M_ij / (mu_j - mu_i) for the reverse, zero otherwise, where
    M = V^-1 G1 V.
    """
    M = split.inverse @ G1 @ split.vectors
    mu = split.values
    inside = split.mask
    diff = mu[:, None] - mu[None, :]
    X = np.zeros_like(M)
    cross = inside[:, None] & ~inside[None, :]
    X[cross] = M[cross] / diff[cross]
    cross_t = ~inside[:, None] & inside[None, :]
    X[cross_t] = -M[cross_t] / diff[cross_t]
    return split.vectors @ X @ split.inverse


class KatoTransport:
    """
    Kato-analytic basis of one side's decaying subspace.

    The basis is seeded at a real lambda0 by an orthonormal (real) basis of the
    projector range, so that the basis at conj(lambda) is the conjugate of the
    basis at lambda.

    Attributes:
        G0, G1: Limit coefficients, G(lambda) = G0 + lambda G1
        side: 'plus' or 'minus'
        dimension: Dimension of the transported subspace
        cache: Bases already computed, keyed by lambda
    """

    def __init__(
        self,
        G0: np.ndarray,
        G1: np.ndarray,
        side: str,
        seed_lambda: float = Config.KATO_SEED,
        seed_scale: float = 1.0,
        rtol: float = Config.KATO_RTOL,
        atol: float = Config.KATO_ATOL,
    ):
        self.G0 = np.asarray(G0, dtype=float)
        self.G1 = np.asarray(G1, dtype=float)
        self.side = side
        self.rtol = rtol
        self.atol = atol

        seed_lambda = float(seed_lambda)
        P0 = projector(self.G0 + seed_lambda * self.G1, side, seed_lambda)
        V0 = orth(P0.real) * seed_scale
        self.dimension = V0.shape[1]
        self.cache: Dict[complex, np.ndarray] = {complex(seed_lambda): V0.astype(complex)}
        logger.debug(f"Kato seed on the {side} side at lambda={seed_lambda}: dimension {self.dimension}")

    def G(self, lam: complex) -> np.ndarray:
        return self.G0 + lam * self.G1

    def split(self, lam: complex) -> SpectralSplit:
        split = spectral_split(self.G(lam), self.side, lam)
        if int(split.mask.sum()) != self.dimension:
            raise SplittingLost(
                f"Decaying subspace on the {self.side} side changed dimension "
                f"({self.dimension} -> {int(split.mask.sum())}) at lambda={lam}",
                spectral_value=lam,
            )
        return split

    def projector(self, lam: complex) -> np.ndarray:
        split = self.split(lam)
        return split.vectors[:, split.mask] @ split.inverse[split.mask]

    def shift(self, lam: complex) -> complex:
        """Sum of the selected eigenvalues, trace(P G), analytic in lambda."""
        split = self.split(lam)
        return complex(np.sum(split.values[split.mask]))

    def _nearest(self, lam: complex) -> complex:
        keys = np.array(list(self.cache.keys()))
        return complex(keys[np.argmin(np.abs(keys - lam))])

    def transport(self, start: complex, end: complex, V_start: np.ndarray) -> np.ndarray:
        """Integrate Kato's equation along the straight segment start -> end."""
        step = end - start
        n, m = V_start.shape

        def rhs(t, v):
            lam = start + t * step
            split = self.split(lam)
            P = split.vectors[:, split.mask] @ split.inverse[split.mask]
            dP = projector_derivative(split, self.G1)
            V = v.reshape(n, m)
            return (step * ((dP @ P - P @ dP) @ V)).ravel()

        result = solve_ivp(rhs, (0.0, 1.0), V_start.ravel(), method="RK45", rtol=self.rtol, atol=self.atol)
        if not result.success:
            raise SplittingLost(f"Kato transport failed toward lambda={end}: {result.message}", spectral_value=end)
        return result.y[:, -1].reshape(n, m)

    def basis(self, lam: complex) -> np.ndarray:
        """Analytic basis at lambda (n x dimension), transported from the nearest cached value."""
        lam = complex(lam)
        if lam in self.cache:
            return self.cache[lam]
        start = self._nearest(lam)
        V = self.transport(start, lam, self.cache[start])
        self.cache[lam] = V
        return V


class KatoBases:
    """
    Kato bases for both sides of a spectral system.

    Attributes:
        plus: Transport of the subspace decaying at +infinity
        minus: Transport of the subspace decaying at -infinity
    """

    def __init__(self, system, seed_lambda: float = Config.KATO_SEED, seed_scale: float = 1.0):
        G0p, G1p = system.limit_coefficients("plus")
        G0m, G1m = system.limit_coefficients("minus")
        self.plus = KatoTransport(G0p, G1p, "plus", seed_lambda, seed_scale)
        self.minus = KatoTransport(G0m, G1m, "minus", seed_lambda, seed_scale)
        total = self.plus.dimension + self.minus.dimension
        if total != self.plus.G0.shape[0]:
            raise SplittingLost(
                f"Subspace dimensions {self.plus.dimension} + {self.minus.dimension} != {self.plus.G0.shape[0]}",
                spectral_value=complex(seed_lambda),
            )
        logger.info(
            f"Decaying subspace dimensions: {self.plus.dimension} at +infinity, {self.minus.dimension} at -infinity"
        )

    @property
    def dimensions(self) -> Tuple[int, int]:
        return self.plus.dimension, self.minus.dimension

    def at(self, lam: complex):
        """(V_plus, V_minus, shift_plus, shift_minus) at lambda."""
        return (
            self.plus.basis(lam),
            self.minus.basis(lam),
            self.plus.shift(lam),
            self.minus.shift(lam),
        )


def kato_basis(lambda_path, transport: KatoTransport):
    """Bases along a path of spectral values, transported point to point in order."""
    return [transport.basis(lam) for lam in lambda_path]
