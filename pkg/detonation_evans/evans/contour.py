"""
Contour Module
==============

Closed contours in the spectral plane, adaptive Evans sampling along them,
and the method of moments.

Contours are chains of parametrized pieces (segments and circular arcs) with
parameter t in [0, 1]. Moments use the continuous logarithm L = log D along
the contour and integration by parts,

    M_p = (1/2 pi i) [ (lambda_0 - lambda_hat)^p (L_end - L_start)
                       - sum_pieces int p (lambda - lambda_hat)^(p-1) L dlambda ]

so that D' is never evaluated. The remaining integrals use composite
Simpson's rule on each piece's (nonuniform) t nodes.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import simpson

from ..config import Config, logger
from ..errors import ContourThroughZero, DomainError, UnresolvedContour


# ============================================================================
# PIECES
# ============================================================================

@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def point(self, t):
        return self.start + np.asarray(t) * (self.end - self.start)

    def tangent(self, t):
        return (self.end - self.start) * np.ones_like(np.asarray(t, dtype=float))

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta_start: float
    theta_end: float

    def _theta(self, t):
        return self.theta_start + np.asarray(t) * (self.theta_end - self.theta_start)

    def point(self, t):
        return self.center + self.radius * np.exp(1j * self._theta(t))

    def tangent(self, t):
        return 1j * self.radius * (self.theta_end - self.theta_start) * np.exp(1j * self._theta(t))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta_end, self.theta_start)

    @property
    def start(self) -> complex:
        return complex(self.point(0.0))

    @property
    def end(self) -> complex:
        return complex(self.point(1.0))


Piece = Union[Segment, Arc]


@dataclass(frozen=True)
class Contour:
    """
    Closed, positively oriented chain of pieces.

    Attributes:
        pieces: Pieces in order; each ends where the next starts
        shape: Descriptor, e.g. {'kind': 'semi_annulus', 'R_out': 10, 'R_in': 1e-4}
    """

    pieces: Tuple[Piece, ...]
    shape: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for a, b in zip(self.pieces, self.pieces[1:] + self.pieces[:1]):
            if abs(complex(a.point(1.0)) - complex(b.point(0.0))) > 1e-12 * (1.0 + abs(complex(a.point(1.0)))):
                raise DomainError("Contour pieces do not join into a closed curve")

    def reversed(self) -> "Contour":
        shape = dict(self.shape, orientation=-self.shape.get("orientation", 1))
        return Contour(tuple(piece.reversed() for piece in reversed(self.pieces)), shape)

    def nodes(self, n_per_piece: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n_per_piece + 1)
        points = [piece.point(t[:-1]) for piece in self.pieces]
        return np.concatenate(points + [np.array([complex(self.pieces[0].point(0.0))])])

    def contains(self, lam: complex) -> bool:
        """Whether lambda lies inside the region the contour bounds."""
        kind = self.shape.get("kind")
        if kind == "semi_annulus":
            r = abs(lam)
            return lam.real >= 0 and self.shape["R_in"] <= r <= self.shape["R_out"]
        if kind == "rectangle":
            return (
                self.shape["re_min"] <= lam.real <= self.shape["re_max"]
                and self.shape["im_min"] <= lam.imag <= self.shape["im_max"]
            )
        if kind == "circle":
            return abs(lam - self.shape["center"]) <= self.shape["radius"]
        raise DomainError(f"Unknown contour kind {kind!r}")


def semi_annulus(R_out: float = Config.R_OUT, R_in: float = Config.R_IN) -> Contour:
    """Boundary of {R_in <= |lambda| <= R_out, Re lambda >= 0}, counterclockwise."""
    if not 0 < R_in < R_out:
        raise DomainError(f"Need 0 < R_in < R_out, got R_in={R_in}, R_out={R_out}")
    half = np.pi / 2.0
    pieces = (
        Arc(0j, R_out, -half, half),
        Segment(1j * R_out, 1j * R_in),
        Arc(0j, R_in, half, -half),
        Segment(-1j * R_in, -1j * R_out),
    )
    # Arc endpoints are evaluated numerically; snap the segments onto them
    pieces = (
        pieces[0],
        Segment(pieces[0].end, pieces[2].start),
        pieces[2],
        Segment(pieces[2].end, pieces[0].start),
    )
    return Contour(pieces, {"kind": "semi_annulus", "R_out": R_out, "R_in": R_in})


def rectangle(re_min: float, re_max: float, im_min: float, im_max: float) -> Contour:
    """Counterclockwise boundary of an axis-aligned rectangle."""
    if not (re_min < re_max and im_min < im_max):
        raise DomainError(f"Degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]")
    corners = [
        complex(re_min, im_min),
        complex(re_max, im_min),
        complex(re_max, im_max),
        complex(re_min, im_max),
    ]
    pieces = tuple(Segment(a, b) for a, b in zip(corners, corners[1:] + corners[:1]))
    return Contour(
        pieces,
        {"kind": "rectangle", "re_min": re_min, "re_max": re_max, "im_min": im_min, "im_max": im_max},
    )


def circle(center: complex, radius: float) -> Contour:
    """Counterclockwise circle, split into four quarter arcs."""
    if radius <= 0:
        raise DomainError(f"Radius must be positive, got {radius}")
    quarters = np.linspace(0.0, 2.0 * np.pi, 5)
    arcs = tuple(Arc(complex(center), radius, a, b) for a, b in zip(quarters[:-1], quarters[1:]))
    return Contour(arcs, {"kind": "circle", "center": complex(center), "radius": radius})


# ============================================================================
# SAMPLES
# ============================================================================

@dataclass
class EvansSample:
    """
    Evans values along a contour.

    Attributes:
        contour: The sampled contour
        t: Per piece, ascending parameter values (both ends included)
        lam: Per piece, spectral values at t
        D: Per piece, Evans values at t
        k_plus, k_minus: Subspace dimensions seen at the nodes
        insertions: Adaptive midpoint insertions made
        converged: Whether every neighbor pair met the adaptivity criterion
    """

    contour: Contour
    t: List[np.ndarray]
    lam: List[np.ndarray]
    D: List[np.ndarray]
    k_plus: int = 0
    k_minus: int = 0
    insertions: int = 0
    converged: bool = True

    def flat(self) -> Tuple[np.ndarray, np.ndarray]:
        """All nodes in contour order without repeated joints (closing node last)."""
        lam = [values[:-1] for values in self.lam]
        D = [values[:-1] for values in self.D]
        lam.append(self.lam[-1][-1:])
        D.append(self.D[-1][-1:])
        return np.concatenate(lam), np.concatenate(D)

    def log_D(self) -> List[np.ndarray]:
        """Continuous log D per piece, unwrapped along the whole contour."""
        _, D_flat = self.flat()
        check_nonzero(D_flat)
        phase = np.unwrap(np.angle(D_flat))
        L_flat = np.log(np.abs(D_flat)) + 1j * phase

        pieces, offset = [], 0
        for values in self.D:
            size = values.size
            pieces.append(L_flat[offset:offset + size])
            offset += size - 1
        return pieces

    def max_phase_step(self) -> float:
        """Largest |Delta arg D| between neighboring nodes."""
        _, D_flat = self.flat()
        with np.errstate(divide="ignore", invalid="ignore"):
            steps = np.abs(np.angle(D_flat[1:] / D_flat[:-1]))
        return float(np.max(steps)) if steps.size else 0.0

    def normalized(self, reference: int = 0) -> np.ndarray:
        """D divided by its value at a reference node, for plotting the image curve."""
        _, D_flat = self.flat()
        return D_flat / D_flat[reference]

    def rows(self) -> List[Tuple[float, float, float, float, int, int]]:
        lam, D = self.flat()
        return [
            (float(l.real), float(l.imag), float(d.real), float(d.imag), self.k_plus, self.k_minus)
            for l, d in zip(lam, D)
        ]


def check_nonzero(D: np.ndarray) -> None:
    magnitude = np.abs(D)
    if np.min(magnitude) < Config.ZERO_FLOOR * np.max(magnitude):
        raise ContourThroughZero(
            f"|D| falls to {np.min(magnitude):.3e} on the contour (max {np.max(magnitude):.3e})"
        )


def _violations(D: np.ndarray, max_arg_jump: float, max_rel_jump: float) -> np.ndarray:
    """Indices i where the step D[i] -> D[i+1] is too coarse."""
    a, b = D[:-1], D[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        arg_jump = np.abs(np.angle(b / a))
        rel_jump = np.abs(b - a) / np.maximum(np.abs(a), np.abs(b))
    bad = (arg_jump >= max_arg_jump) | (rel_jump >= max_rel_jump) | ~np.isfinite(arg_jump)
    return np.nonzero(bad)[0]


def evans_on_contour(
    contour: Contour,
    evaluator,
    n_per_piece: int = Config.NODES_PER_PIECE,
    max_bisections: int = Config.MAX_BISECTIONS,
    max_arg_jump: float = Config.MAX_ARG_JUMP,
    max_rel_jump: float = Config.MAX_REL_JUMP,
) -> EvansSample:
    """
    Sample D along a contour, bisecting coarse steps.

    Neighboring nodes must satisfy |Delta arg D| < max_arg_jump and
    |Delta D| / max|D| < max_rel_jump; failing intervals receive their
    midpoint, up to max_bisections levels.

    Args:
        contour: Closed contour
        evaluator: EvansEvaluator (or any object with evaluate(lambdas) -> D)

    Returns:
        EvansSample with per-piece nodes
    """
    ts, lams, Ds = [], [], []
    insertions = 0
    unresolved = []

    for piece in contour.pieces:
        t = np.linspace(0.0, 1.0, n_per_piece + 1)
        lam = piece.point(t)
        D = evaluator.evaluate(lam)

        for level in range(max_bisections + 1):
            bad = _violations(D, max_arg_jump, max_rel_jump)
            if bad.size == 0:
                break
            if level == max_bisections:
                unresolved.extend((complex(lam[i]), complex(lam[i + 1])) for i in bad)
                break
            t_new = 0.5 * (t[bad] + t[bad + 1])
            D_new = evaluator.evaluate(piece.point(t_new))
            insertions += t_new.size
            t = np.concatenate([t, t_new])
            D = np.concatenate([D, D_new])
            order = np.argsort(t)
            t, D = t[order], D[order]
            lam = piece.point(t)

        ts.append(t)
        lams.append(lam)
        Ds.append(D)

    sample = EvansSample(contour=contour, t=ts, lam=lams, D=Ds, insertions=insertions)
    bases = getattr(evaluator, "bases", None)
    if bases is not None:
        sample.k_plus, sample.k_minus = bases.dimensions

    if unresolved:
        sample.converged = False
        raise UnresolvedContour(
            f"{len(unresolved)} contour intervals still too coarse after {max_bisections} bisections",
            segments=unresolved,
        )
    logger.debug(f"Contour resolved with {sum(t.size for t in ts)} nodes ({insertions} inserted)")
    return sample


def moments(sample: EvansSample, p: int, lambda_hat: complex = 0j) -> complex:
    """
    p-th moment of D about lambda_hat, (1/2 pi i) contour integral of (lambda - lambda_hat)^p D'/D.

    M_0 counts zeros inside the contour; M_1 / M_0 is their mean location.
    """
    if p < 0:
        raise ValueError(f"Moment order must be nonnegative, got {p}")
    logs = sample.log_D()
    L_start, L_end = logs[0][0], logs[-1][-1]
    lam_0 = sample.lam[0][0]
    total = (lam_0 - lambda_hat) ** p * (L_end - L_start)

    if p > 0:
        for piece, t, L in zip(sample.contour.pieces, sample.t, logs):
            lam = piece.point(t)
            integrand = p * (lam - lambda_hat) ** (p - 1) * L * piece.tangent(t)
            total -= simpson(integrand.real, x=t) + 1j * simpson(integrand.imag, x=t)

    return complex(total / (2j * np.pi))


def winding_number(sample: EvansSample, max_arg_jump: float = Config.MAX_ARG_JUMP) -> Tuple[int, float]:
    """
    Rounded winding number of D about the origin and its residual.

    The residual is the rounding error of M0, raised to the largest phase
    step over 2 pi when a step between neighboring nodes reaches
    max_arg_jump (the unwrapped phase is then unreliable).
    """
    m0 = moments(sample, 0).real
    rounded = int(np.round(m0))
    residual = abs(m0 - rounded)
    step = sample.max_phase_step()
    if step >= max_arg_jump:
        residual = max(residual, step / (2.0 * np.pi))
    return rounded, residual
