"""
Neutral Boundary Module
=======================

Neutral stability boundaries in the (nu, E_A) plane and their fits.

This module provides:
- neutral_boundary: bisection in E_A on "no zeros in the semi-annulus"
- boundary_curve: both boundaries for several viscosities, columns in parallel
- fit_boundary: least-squares fits E+ = a + b nu + c ln nu, E- = a' + b' nu
- TABULATED_*_BOUNDARY: reference boundary data, fit without any computation
- viscous_delay: relative delay of the lower boundary against a ZND value E*
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from ..config import Config, logger
from ..errors import BadBracket, ContourError, DomainError, FitError
from ..gasdyn.thermo import WaveParams
from .tracking import ParameterFamily, StabilityProbe

SIDES = ("lower", "upper")
FIT_MODELS = ("linear", "linear+log")

# Reference boundaries, in the T_ig convention they were computed with.
# Upper: no zeros for E_A above these values.
TABULATED_UPPER_BOUNDARY: Tuple[Tuple[float, float], ...] = (
    (0.01, 9.25), (0.025, 8.6), (0.05, 7.75), (0.1, 6.85), (0.12, 6.65), (0.14, 6.35),
    (0.16, 6.15), (0.2, 5.75), (0.24, 5.35), (0.27, 5.1), (0.3, 4.8), (0.31, 4.65),
    (0.32, 4.55), (0.33, 4.375), (0.34, 4.225), (0.342, 4.125),
)
# Lower: no zeros for E_A below these values.
TABULATED_LOWER_BOUNDARY: Tuple[Tuple[float, float], ...] = (
    (0.005, 2.45), (0.01, 2.45), (0.03, 2.55), (0.05, 2.65), (0.07, 2.65), (0.1, 2.75),
    (0.15, 2.85), (0.2, 3.05), (0.27, 3.25), (0.3, 3.45), (0.31, 3.5), (0.32, 3.6),
    (0.33, 3.675), (0.34, 3.85), (0.342, 3.925),
)

# Viscosity cut-offs used when fitting the tabulated data
UPPER_FIT_MAX_NU = 0.27     # strict: nu < 0.27
LOWER_FIT_MAX_NU = 0.27     # inclusive: nu <= 0.27


# ============================================================================
# BISECTION
# ============================================================================

@dataclass(frozen=True)
class BoundaryPoint:
    """
    One neutral-boundary estimate.

    Attributes:
        nu: Viscosity of the column
        side: 'lower' (onset) or 'upper' (restabilization)
        E_A: Midpoint of the final bracket
        abs_err: Half-width of the final bracket
        bracket: Final (E_lo, E_hi)
        evaluations: (E_A, zero count) for every predicate evaluation
    """

    nu: float
    side: str
    E_A: float
    abs_err: float
    bracket: Tuple[float, float]
    evaluations: Tuple[Tuple[float, int], ...] = ()


def neutral_boundary(
    probe: StabilityProbe,
    side: str,
    bracket: Sequence[float],
    tol: float = Config.BOUNDARY_TOL,
) -> BoundaryPoint:
    """
    Locate a neutral boundary by bisection on the zero count.

    Args:
        probe: Stability probe of the column's parameter family
        side: 'lower' or 'upper' (recorded; the bracket decides the direction)
        bracket: [E_lo, E_hi] whose ends differ in stability status
        tol: Absolute error bound on the returned E_A

    Returns:
        BoundaryPoint with E_A and its error bound

    Raises:
        BadBracket: Both ends have the same status
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    lo, hi = sorted(float(value) for value in bracket)
    nu = probe.family.base.nu if probe.family.nu is None else probe.family.nu
    evaluations: List[Tuple[float, int]] = []

    def stable(E_A: float) -> bool:
        try:
            count = probe.count(E_A)
        except ContourError as e:
            logger.warning(f"Bisection step at nu={nu}, E_A={E_A:.5g} aborted after {len(evaluations)} evaluations: {e}")
            raise
        evaluations.append((E_A, count))
        return count == 0

    stable_lo, stable_hi = stable(lo), stable(hi)
    if stable_lo == stable_hi:
        status = "stable" if stable_lo else "unstable"
        raise BadBracket(f"Both ends of [{lo}, {hi}] are {status} at nu={nu}")

    expected_lo = side == "lower"
    if stable_lo != expected_lo:
        logger.warning(f"Bracket [{lo}, {hi}] at nu={nu} has the orientation of the other boundary than '{side}'")

    while 0.5 * (hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid) == stable_lo:
            lo = mid
        else:
            hi = mid
        logger.info(f"nu={nu} {side} boundary bracket narrowed to [{lo:.5g}, {hi:.5g}]")

    return BoundaryPoint(
        nu=float(nu),
        side=side,
        E_A=0.5 * (lo + hi),
        abs_err=0.5 * (hi - lo),
        bracket=(lo, hi),
        evaluations=tuple(evaluations),
    )


@dataclass
class BoundaryCurve:
    """
    Lower and upper boundaries over a set of viscosities.

    Attributes:
        points: Per nu, (nu, E_A_minus, E_A_plus, abs_err)
        fits: Fitted models keyed by side
    """

    points: List[Tuple[float, float, float, float]] = field(default_factory=list)
    fits: Dict[str, "FitResult"] = field(default_factory=dict)

    def lower(self) -> List[Tuple[float, float]]:
        return [(nu, E_minus) for nu, E_minus, _, _ in self.points]

    def upper(self) -> List[Tuple[float, float]]:
        return [(nu, E_plus) for nu, _, E_plus, _ in self.points]

    def is_ordered(self) -> bool:
        """E_A- < E_A+ at every column."""
        return all(E_minus < E_plus for _, E_minus, E_plus, _ in self.points)

    def is_monotone(self) -> bool:
        """E_A+ decreasing and E_A- increasing in nu."""
        ordered = sorted(self.points)
        minus = np.array([p[1] for p in ordered])
        plus = np.array([p[2] for p in ordered])
        return bool(np.all(np.diff(plus) < 0) and np.all(np.diff(minus) > 0))


def _boundary_column(task) -> Tuple[float, float, float, float]:
    base, nu, lower_bracket, upper_bracket, tol, options = task
    family = ParameterFamily(base, calibrate=options.pop("calibrate", True), nu=nu,
                             tie_viscosities=options.pop("tie_viscosities", True))
    probe = StabilityProbe(family, **options)
    lower = neutral_boundary(probe, "lower", lower_bracket, tol)
    upper = neutral_boundary(probe, "upper", upper_bracket, tol)
    return nu, lower.E_A, upper.E_A, max(lower.abs_err, upper.abs_err)


def boundary_curve(
    base: WaveParams,
    nu_values: Sequence[float],
    lower_bracket: Sequence[float],
    upper_bracket: Sequence[float],
    tol: float = Config.BOUNDARY_TOL,
    jobs: int = 1,
    **probe_options,
) -> BoundaryCurve:
    """
    Both neutral boundaries at each viscosity.

    Columns are independent and may run in worker processes; inside a
    column the bisections are sequential and Evans evaluations run in-process.
    """
    tasks = [
        (base, float(nu), list(lower_bracket), list(upper_bracket), tol, dict(probe_options))
        for nu in nu_values
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_boundary_column, tasks))
    else:
        rows = [_boundary_column(task) for task in tasks]

    curve = BoundaryCurve(points=sorted(rows))
    if not curve.is_ordered():
        logger.warning("Lower boundary is not below the upper boundary at every viscosity")
    return curve


# ============================================================================
# FITS
# ============================================================================

@dataclass(frozen=True)
class FitResult:
    """
    Least-squares boundary fit.

    Attributes:
        model: 'linear' (a + b nu) or 'linear+log' (a + b nu + c ln nu)
        coefficients: Fitted coefficients in the order above
        residuals: Data minus model at each point
        nu: Viscosities used
    """

    model: str
    coefficients: Tuple[float, ...]
    residuals: Tuple[float, ...]
    nu: Tuple[float, ...]

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals else 0.0

    def __call__(self, nu):
        values = _design(np.atleast_1d(np.asarray(nu, dtype=float)), self.model) @ np.array(self.coefficients)
        return values if np.ndim(nu) else float(values[0])

    def to_dict(self) -> Dict[str, object]:
        return {
            "model": self.model,
            "coefficients": list(self.coefficients),
            "residuals": list(self.residuals),
            "max_residual": self.max_residual,
            "nu": list(self.nu),
        }


def _design(nu: np.ndarray, model: str) -> np.ndarray:
    if model == "linear":
        return np.column_stack([np.ones_like(nu), nu])
    if model == "linear+log":
        if np.any(nu <= 0):
            raise FitError("The linear+log model needs positive viscosities")
        return np.column_stack([np.ones_like(nu), nu, np.log(nu)])
    raise FitError(f"Unknown fit model {model!r}; expected one of {FIT_MODELS}")


def fit_boundary(points: Sequence[Tuple[float, float]], model: str) -> FitResult:
    """
    Fit a boundary curve by least squares.

    Args:
        points: (nu, E_A) pairs
        model: 'linear' or 'linear+log'

    Returns:
        FitResult with coefficients and residuals

    Raises:
        FitError: Fewer than 3 points or a rank-deficient design
    """
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    if data.shape[0] < 3:
        raise FitError(f"Need at least 3 points to fit a boundary, got {data.shape[0]}")
    nu, E = data[:, 0], data[:, 1]
    A = _design(nu, model)
    coefficients, _, rank, _ = np.linalg.lstsq(A, E, rcond=None)
    if rank < A.shape[1]:
        raise FitError(f"Design matrix for '{model}' is rank deficient (rank {rank} < {A.shape[1]})")
    residuals = E - A @ coefficients
    logger.info(f"Fitted '{model}' boundary: {np.round(coefficients, 4).tolist()}")
    return FitResult(model, tuple(float(c) for c in coefficients), tuple(float(r) for r in residuals), tuple(nu.tolist()))


def fit_tabulated() -> Dict[str, FitResult]:
    """Fits of the reference boundaries: upper on nu < 0.27, lower on nu <= 0.27."""
    upper = [(nu, E) for nu, E in TABULATED_UPPER_BOUNDARY if nu < UPPER_FIT_MAX_NU]
    lower = [(nu, E) for nu, E in TABULATED_LOWER_BOUNDARY if nu <= LOWER_FIT_MAX_NU]
    return {"upper": fit_boundary(upper, "linear+log"), "lower": fit_boundary(lower, "linear")}


# ============================================================================
# VISCOUS DELAY
# ============================================================================

def viscous_delay(
    nu_grid: Sequence[float],
    E_star: float,
    lower: Union[FitResult, Callable[[float], float], None] = None,
) -> List[Tuple[float, float]]:
    """
    Relative delay of the onset of instability caused by viscosity.

    Args:
        nu_grid: Viscosities to tabulate
        E_star: Inviscid (ZND) neutral activation energy, supplied by the caller
        lower: E_A-(nu) as a FitResult or callable (default: linear fit of the tabulated data)

    Returns:
        Rows (nu, (E_A-(nu) - E_star) / E_star)
    """
    if E_star is None or E_star <= 0:
        raise DomainError(f"E_star must be positive, got {E_star}")
    if lower is None:
        lower = fit_tabulated()["lower"]
    rows = []
    for nu in nu_grid:
        E_minus = float(lower(float(nu)))
        rows.append((float(nu), (E_minus - E_star) / E_star))
    return rows
