"""
Root Location Module
====================

Counting and locating zeros of the Evans function inside a region.

- count_unstable: winding number of D over a region boundary
- locate_roots: quadtree bisection driven by the zeroth moment, with boxes
  holding a single zero shrunk around the M1/M0 estimate, then a secant
  polish along each axis

Only the upper half plane (plus a thin strip below the real axis, so that
real zeros never sit on a box edge) is searched; the lower half follows by
conjugation.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import Config, logger
from ..errors import ContourThroughZero, UnresolvedContour
from .contour import (
    Contour,
    EvansSample,
    circle,
    evans_on_contour,
    moments,
    rectangle,
    semi_annulus,
    winding_number,
)

Box = Tuple[float, float, float, float]

# Node-density doublings tried before a contour is declared unresolved
DENSITY_ESCALATIONS = 2
MAX_BOXES = 400


@dataclass(frozen=True)
class Root:
    """A located zero of D."""

    lam: complex
    multiplicity: int
    box: Box
    residual: float

    def conjugate(self) -> "Root":
        re0, re1, im0, im1 = self.box
        return Root(self.lam.conjugate(), self.multiplicity, (re0, re1, -im1, -im0), self.residual)


@dataclass
class RootSet:
    """
    Zeros found in a region, closed under conjugation.

    Attributes:
        roots: Located zeros
        region: Shape descriptor of the searched region
        target_accuracy: Requested box diameter
        region_count: Winding number over the region boundary
        boxes_examined: Quadtree boxes whose moments were computed
    """

    roots: List[Root] = field(default_factory=list)
    region: Dict[str, object] = field(default_factory=dict)
    target_accuracy: float = Config.TARGET_ACCURACY
    region_count: int = 0
    boxes_examined: int = 0

    @property
    def count(self) -> int:
        return sum(root.multiplicity for root in self.roots)

    @property
    def is_empty(self) -> bool:
        return not self.roots

    def values(self) -> np.ndarray:
        return np.array([root.lam for root in self.roots], dtype=complex)

    def rows(self) -> List[Tuple[float, float, int, float]]:
        return [(root.lam.real, root.lam.imag, root.multiplicity, root.residual) for root in self.roots]


# ============================================================================
# REGION CONTOURS
# ============================================================================

def region_contour(kind: str, **shape) -> Contour:
    """Build a region boundary from a descriptor."""
    if kind == "semi_annulus":
        return semi_annulus(shape.get("R_out", Config.R_OUT), shape.get("R_in", Config.R_IN))
    if kind == "rectangle":
        return rectangle(shape["re_min"], shape["re_max"], shape["im_min"], shape["im_max"])
    if kind == "circle":
        return circle(shape["center"], shape["radius"])
    raise ValueError(f"Unknown region kind {kind!r}")


def perturb(contour: Contour, amount: float = Config.BOUNDARY_PERTURBATION) -> Contour:
    """Move a region boundary outward by a small amount."""
    shape = dict(contour.shape)
    kind = shape.pop("kind")
    shape.pop("orientation", None)
    if kind == "semi_annulus":
        return semi_annulus(shape["R_out"] + amount, max(shape["R_in"] - amount, shape["R_in"] / 2.0))
    if kind == "rectangle":
        return rectangle(
            shape["re_min"] - amount, shape["re_max"] + amount,
            shape["im_min"] - amount, shape["im_max"] + amount,
        )
    return circle(shape["center"], shape["radius"] + amount)


def _resolved_count(contour: Contour, evaluator, density: int, max_bisections: int) -> Tuple[int, float, EvansSample]:
    sample = evans_on_contour(contour, evaluator, density, max_bisections)
    m0, residual = winding_number(sample)
    return m0, residual, sample


def contour_moments(
    contour: Contour,
    evaluator,
    n_per_piece: int = Config.NODES_PER_PIECE,
    max_bisections: int = Config.MAX_BISECTIONS,
    winding_tol: float = Config.WINDING_TOL,
) -> Tuple[int, complex, Contour]:
    """
    Integer M0 and raw M1 (about the region's center) over a contour.

    The count is accepted when a sample at the given node density and one
    at twice that density agree and both have a winding residual below
    winding_tol. Otherwise the density is doubled, up to
    DENSITY_ESCALATIONS times, before UnresolvedContour is raised. The
    boundary is nudged outward once if it runs through a zero.

    Returns:
        (M0, M1 about 0, the contour actually used)
    """
    perturbed = False
    density = n_per_piece
    escalation = 0
    while True:
        try:
            m0, residual, _ = _resolved_count(contour, evaluator, density, max_bisections)
            fine_m0, fine_residual, fine = _resolved_count(contour, evaluator, 2 * density, max_bisections)
        except ContourThroughZero:
            if perturbed:
                raise
            logger.warning("Evans function vanishes on the contour; perturbing the boundary")
            contour = perturb(contour)
            perturbed = True
            continue

        if m0 == fine_m0 and max(residual, fine_residual) < winding_tol:
            return fine_m0, moments(fine, 1), contour
        if escalation >= DENSITY_ESCALATIONS:
            raise UnresolvedContour(
                f"Winding number not settled after {DENSITY_ESCALATIONS} density doublings "
                f"(counts {m0} and {fine_m0}, residuals {residual:.3f} and {fine_residual:.3f})"
            )
        escalation += 1
        density *= 2
        logger.warning(
            f"Winding counts {m0} and {fine_m0} (residuals {residual:.3f}, {fine_residual:.3f}); "
            f"doubling nodes per piece to {density}"
        )


def count_unstable(evaluator, region: Optional[Contour] = None, **options) -> int:
    """Number of zeros of D inside the region (default: the standard semi-annulus)."""
    region = region or semi_annulus()
    count, _, _ = contour_moments(region, evaluator, **options)
    return count


# ============================================================================
# QUADTREE
# ============================================================================

def _box_contour(box: Box) -> Contour:
    return rectangle(*box)


def _diameter(box: Box) -> float:
    re0, re1, im0, im1 = box
    return float(np.hypot(re1 - re0, im1 - im0))


def _quadrants(box: Box) -> List[Box]:
    re0, re1, im0, im1 = box
    rm, im = 0.5 * (re0 + re1), 0.5 * (im0 + im1)
    return [(re0, rm, im0, im), (rm, re1, im0, im), (re0, rm, im, im1), (rm, re1, im, im1)]


def _shrunk(box: Box, center: complex) -> Box:
    re0, re1, im0, im1 = box
    hw, hh = (re1 - re0) / 8.0, (im1 - im0) / 8.0
    return (center.real - hw, center.real + hw, center.imag - hh, center.imag + hh)


class _BoxCounter:
    """Moments over boxes with density escalation shared across a search."""

    def __init__(self, evaluator, n_per_piece: int, max_bisections: int):
        self.evaluator = evaluator
        self.n_per_piece = n_per_piece
        self.max_bisections = max_bisections
        self.examined = 0

    def __call__(self, box: Box, density: Optional[int] = None) -> Tuple[int, complex]:
        self.examined += 1
        if self.examined > MAX_BOXES:
            raise UnresolvedContour(f"Root search exceeded {MAX_BOXES} boxes")
        m0, m1, _ = contour_moments(
            _box_contour(box), self.evaluator, density or self.n_per_piece, self.max_bisections
        )
        return m0, m1


def _subdivide(counter: _BoxCounter, box: Box, m0: int) -> List[Tuple[Box, int, complex]]:
    """Children of a box with their moments, checking M0 additivity."""
    density = counter.n_per_piece
    for escalation in range(DENSITY_ESCALATIONS + 1):
        children = []
        for child in _quadrants(box):
            c0, c1 = counter(child, density)
            children.append((child, c0, c1))
        total = sum(c0 for _, c0, _ in children)
        if total == m0:
            return children
        logger.warning(f"Moments not additive on box {box}: {m0} != {total}; doubling node density")
        density *= 2
        m0, _ = counter(box, density)
    raise UnresolvedContour(f"Zeroth moment is not additive on box {box}")


def _secant_polish(evaluator, lam: complex, step: complex, limit: float) -> complex:
    D0 = evaluator(lam)
    D1 = evaluator(lam + step)
    if D1 == D0:
        return lam
    candidate = lam + step - D1 * step / (D1 - D0)
    if abs(candidate - lam) > limit:
        return lam
    return candidate if abs(evaluator(candidate)) < abs(D0) else lam


def _polish(evaluator, lam: complex, accuracy: float) -> complex:
    h = accuracy / 10.0
    lam = _secant_polish(evaluator, lam, h, accuracy)
    return _secant_polish(evaluator, lam, 1j * h, accuracy)


def _root_box(region: Contour) -> Box:
    """Search box: upper half of the region plus a thin strip below the axis."""
    shape = region.shape
    kind = shape["kind"]
    if kind == "semi_annulus":
        R_out = shape["R_out"]
        eta = Config.STRIP_FRACTION * R_out
        return (shape["R_in"], R_out, -eta, R_out)
    if kind == "rectangle":
        eta = Config.STRIP_FRACTION * (shape["im_max"] - shape["im_min"])
        return (shape["re_min"], shape["re_max"], max(shape["im_min"], -eta), shape["im_max"])
    center, radius = shape["center"], shape["radius"]
    eta = Config.STRIP_FRACTION * radius
    return (center.real - radius, center.real + radius, max(center.imag - radius, -eta), center.imag + radius)


def _search(
    region: Contour,
    evaluator,
    target_accuracy: float,
    n_per_piece: int,
    max_bisections: int,
    polish: bool,
) -> Tuple[List[Root], int]:
    counter = _BoxCounter(evaluator, n_per_piece, max_bisections)
    root_box = _root_box(region)
    m0, m1 = counter(root_box)
    queue = deque([(root_box, m0, m1)])
    found: List[Root] = []

    while queue:
        box, m0, m1 = queue.popleft()
        if m0 == 0:
            continue

        if m0 == 1:
            estimate = m1
            current, current_m1 = box, m1
            while _diameter(current) > target_accuracy:
                trial = _shrunk(current, estimate)
                t0, t1 = counter(trial)
                if t0 != 1:
                    break
                current, current_m1, estimate = trial, t1, t1
            if _diameter(current) <= target_accuracy:
                lam = complex(current_m1)
                if polish:
                    lam = _polish(evaluator, lam, target_accuracy)
                found.append(Root(lam, 1, current, abs(evaluator(lam))))
                continue
            # The shrunk box lost the zero; fall back to plain subdivision
            queue.extend(_subdivide(counter, current, 1))
            continue

        if _diameter(box) <= target_accuracy:
            lam = complex(m1 / m0)
            found.append(Root(lam, m0, box, abs(evaluator(lam))))
            continue
        queue.extend(_subdivide(counter, box, m0))

    # Conjugate closure: drop the strip below the axis, reflect the upper half
    tol = target_accuracy
    closed: List[Root] = []
    for root in found:
        if root.lam.imag < -tol:
            continue
        if abs(root.lam.imag) <= tol:
            closed.append(Root(complex(root.lam.real, 0.0), root.multiplicity, root.box, root.residual))
        else:
            closed.extend([root, root.conjugate()])
    closed = [root for root in closed if region.contains(root.lam)]
    closed.sort(key=lambda root: (round(abs(root.lam), 9), root.lam.imag))
    return closed, counter.examined


def locate_roots(
    region: Contour,
    evaluator,
    target_accuracy: float = Config.TARGET_ACCURACY,
    n_per_piece: int = Config.NODES_PER_PIECE,
    max_bisections: int = Config.MAX_BISECTIONS,
    polish: bool = True,
) -> RootSet:
    """
    Locate the zeros of D inside a region.

    The conjugate-closed root count must equal the winding number of the
    region boundary. A mismatch is retried once at doubled node density and
    then raised as UnresolvedContour.

    Args:
        region: Semi-annulus, rectangle or circle contour
        evaluator: EvansEvaluator for the spectral system
        target_accuracy: Box diameter at which a zero counts as located

    Returns:
        RootSet closed under conjugation
    """
    region_count, _, region = contour_moments(region, evaluator, n_per_piece, max_bisections)
    result = RootSet(region=dict(region.shape), target_accuracy=target_accuracy, region_count=region_count)
    if region_count == 0:
        logger.info("No zeros inside the region")
        return result

    density = n_per_piece
    for _ in range(2):
        roots, examined = _search(region, evaluator, target_accuracy, density, max_bisections, polish)
        result.roots = roots
        result.boxes_examined += examined
        if result.count == region_count:
            logger.info(f"Located {result.count} zeros in {result.boxes_examined} boxes")
            return result
        logger.warning(
            f"Located {result.count} zeros but the region winding number is {region_count} "
            f"at {density} nodes per piece"
        )
        density *= 2

    raise UnresolvedContour(
        f"Located {result.count} zeros but the region winding number is {region_count}, "
        f"also at {density // 2} nodes per piece"
    )
