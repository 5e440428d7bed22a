"""Root tracking, neutral boundaries, fits and the viscous delay."""

from types import SimpleNamespace

import numpy as np
import pytest

from detonation_evans.errors import BadBracket, DomainError, FitError, UnresolvedContour
from detonation_evans.evans.roots import Root, RootSet
from detonation_evans.stab.boundary import (
    TABULATED_LOWER_BOUNDARY,
    TABULATED_UPPER_BOUNDARY,
    BoundaryCurve,
    fit_boundary,
    fit_tabulated,
    neutral_boundary,
    viscous_delay,
)
from detonation_evans.stab.tracking import ParameterFamily, StabilityProbe, match_roots, track_roots


class CountingProbe:
    """Zero count that switches at given activation energies."""

    def __init__(self, onset=2.8, restabilization=6.9, nu=0.1):
        self.onset = onset
        self.restabilization = restabilization
        self.family = SimpleNamespace(base=SimpleNamespace(nu=nu), nu=None)
        self.queries = []

    def count(self, E_A):
        self.queries.append(E_A)
        return 4 if self.onset <= E_A < self.restabilization else 0


def _root_set(values):
    return RootSet(roots=[Root(complex(v), 1, (0.0, 0.0, 0.0, 0.0), 0.0) for v in values])


class MovingRootsProbe:
    """A conjugate pair entering at E_A = 3 and drifting right."""

    def roots(self, E_A):
        if E_A < 3.0:
            return _root_set([])
        re = 0.1 * (E_A - 3.0)
        return _root_set([complex(re, 1.0), complex(re, -1.0)])


class PairJoinsPairRoots:
    """A fixed pair at 0.1 +- 1i, joined by a second pair at 0.01 +- 5i from E_A = 3."""

    def roots(self, E_A):
        values = [complex(0.1, 1.0), complex(0.1, -1.0)]
        if E_A >= 3.0:
            values += [complex(0.01, 5.0), complex(0.01, -5.0)]
        return _root_set(values)


# ============================================================================
# PARAMETER FAMILIES
# ============================================================================

def test_family_ties_viscosities(base_params):
    family = ParameterFamily(base_params, calibrate=False, nu=0.2)
    params = family.params_at(5.0)
    assert (params.E_A, params.nu, params.d, params.kappa_v) == (5.0, 0.2, 0.2, 0.2)
    assert params.k == base_params.k


def test_family_keeps_diffusivities_when_untied(base_params):
    family = ParameterFamily(base_params, calibrate=False, nu=0.2, tie_viscosities=False)
    params = family.params_at(5.0)
    assert (params.nu, params.d) == (0.2, base_params.d)


# ============================================================================
# TRACKING
# ============================================================================

def test_roots_are_matched_to_nearest_neighbors():
    previous = np.array([1 + 1j, 3 + 1j])
    current = np.array([3.1 + 1j, 1.1 + 1j])
    assert match_roots(previous, current) == [(0, 1), (1, 0)]


def test_matching_refuses_count_changes_and_long_links():
    assert match_roots(np.array([1 + 1j]), np.array([1 + 1j, 2 + 1j])) is None
    # A link longer than half the separation is ambiguous
    assert match_roots(np.array([0j, 1 + 0j]), np.array([0.6 + 0j, 1.6 + 0j])) is None
    assert match_roots(np.array([], dtype=complex), np.array([], dtype=complex)) == []


def test_tracking_records_entry_events():
    trajectory = track_roots(MovingRootsProbe(), 2.0, 4.0, step=0.25, min_step=0.03125)
    assert len(trajectory.events) == 1
    event = trajectory.events[0]
    assert event["kind"] == "entry"
    assert event["E_A_before"] < 3.0 <= event["E_A_after"]
    assert event["E_A_after"] - event["E_A_before"] <= 0.03125 + 1e-12
    assert trajectory.steps[-1][0] == pytest.approx(4.0)

    # Lineage stays fixed once the pair has entered
    after = [ids for (E_A, _), ids in zip(trajectory.steps, trajectory.lineage) if E_A >= event["E_A_after"]]
    assert all(ids == after[0] for ids in after)
    rows = trajectory.rows()
    assert rows[-1][0] == pytest.approx(4.0)
    assert {row[3] for row in rows} == set(after[0])


def test_partial_matching_links_the_smaller_set():
    previous = np.array([0.1 + 1j, 0.1 - 1j])
    current = np.array([0.1 + 1j, 0.1 - 1j, 0.01 + 5j, 0.01 - 5j])
    assert match_roots(previous, current) is None
    assert match_roots(previous, current, allow_unmatched=True) == [(0, 0), (1, 1)]
    # An exit links the survivors the other way round
    assert match_roots(current[[2, 0, 1]], previous, allow_unmatched=True) == [(1, 0), (2, 1)]


def test_persistent_roots_keep_their_lineage_through_an_entry():
    trajectory = track_roots(PairJoinsPairRoots(), 2.0, 4.0, step=0.25, min_step=0.03125)
    assert [event["kind"] for event in trajectory.events] == ["entry"]
    first, last = trajectory.lineage[0], trajectory.lineage[-1]
    assert first == [0, 1]
    assert last[:2] == first
    assert len(set(last)) == 4 and not set(last[2:]) & set(first)


# ============================================================================
# BISECTION
# ============================================================================

def test_lower_boundary_bisection():
    probe = CountingProbe(onset=2.8)
    point = neutral_boundary(probe, "lower", [2.0, 4.0], tol=0.01)
    assert abs(point.E_A - 2.8) <= point.abs_err + 1e-12
    assert point.abs_err <= 0.01
    assert point.bracket[0] < 2.8 <= point.bracket[1]
    assert point.nu == 0.1
    assert len(point.evaluations) == len(probe.queries)


def test_upper_boundary_bisection():
    point = neutral_boundary(CountingProbe(restabilization=6.9), "upper", [4.5, 9.5], tol=0.05)
    assert abs(point.E_A - 6.9) <= 0.05


def test_bad_bracket():
    with pytest.raises(BadBracket):
        neutral_boundary(CountingProbe(), "lower", [3.0, 4.0])
    with pytest.raises(ValueError):
        neutral_boundary(CountingProbe(), "middle", [2.0, 4.0])


def test_unresolved_contour_stops_the_bisection():
    class FailingProbe(CountingProbe):
        def count(self, E_A):
            if E_A > 3.5:
                raise UnresolvedContour("too coarse")
            return super().count(E_A)

    with pytest.raises(UnresolvedContour):
        neutral_boundary(FailingProbe(), "lower", [2.0, 4.0])


def test_boundary_curve_shape_checks():
    curve = BoundaryCurve(points=[(0.1, 2.75, 6.85, 0.05), (0.2, 3.05, 5.75, 0.05), (0.3, 3.45, 4.8, 0.05)])
    assert curve.is_ordered() and curve.is_monotone()
    assert curve.lower()[0] == (0.1, 2.75)
    assert curve.upper()[-1] == (0.3, 4.8)
    crossed = BoundaryCurve(points=[(0.1, 2.75, 6.85, 0.05), (0.4, 5.0, 4.0, 0.05)])
    assert not crossed.is_ordered()


# ============================================================================
# FITS
# ============================================================================

def test_tabulated_fits():
    fits = fit_tabulated()
    np.testing.assert_allclose(fits["upper"].coefficients, [5.67, -6.16, -0.804], rtol=0.05)
    np.testing.assert_allclose(fits["lower"].coefficients, [2.45, 2.95], rtol=0.05)
    assert all(nu < 0.27 for nu in fits["upper"].nu)
    assert max(fits["lower"].nu) == 0.27


def test_fit_recovers_exact_coefficients():
    nu = np.array([0.01, 0.03, 0.07, 0.1, 0.2, 0.3])
    upper = fit_boundary(list(zip(nu, 5.0 + 2.0 * nu - 0.5 * np.log(nu))), "linear+log")
    np.testing.assert_allclose(upper.coefficients, [5.0, 2.0, -0.5], atol=1e-10)
    assert upper.max_residual <= 1e-10
    lower = fit_boundary(list(zip(nu, 2.5 + 3.0 * nu)), "linear")
    np.testing.assert_allclose(lower.coefficients, [2.5, 3.0], atol=1e-10)


def test_fit_evaluation():
    fit = fit_boundary([(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)], "linear")
    assert fit(0.25) == pytest.approx(2.5)
    np.testing.assert_allclose(fit(np.array([0.1, 0.4])), [1.0, 4.0])
    assert fit.to_dict()["model"] == "linear"


def test_fit_errors():
    with pytest.raises(FitError):
        fit_boundary([(0.1, 1.0), (0.2, 2.0)], "linear")
    with pytest.raises(FitError):
        fit_boundary([(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)], "linear")
    with pytest.raises(FitError):
        fit_boundary([(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)], "quadratic")
    with pytest.raises(FitError):
        fit_boundary([(0.0, 1.0), (0.2, 2.0), (0.3, 3.0)], "linear+log")


def test_tabulated_boundaries_are_ordered():
    upper = dict(TABULATED_UPPER_BOUNDARY)
    lower = dict(TABULATED_LOWER_BOUNDARY)
    for nu in set(upper) & set(lower):
        assert lower[nu] < upper[nu]


# ============================================================================
# VISCOUS DELAY
# ============================================================================

def test_viscous_delay_uses_lower_fit():
    fit = fit_tabulated()["lower"]
    rows = viscous_delay([0.01, 0.1, 0.2], 2.4)
    for nu, delay in rows:
        assert delay == pytest.approx((fit(nu) - 2.4) / 2.4)
    delays = [delay for _, delay in rows]
    assert delays == sorted(delays)


def test_viscous_delay_with_custom_boundary():
    rows = viscous_delay([0.1], 2.0, lower=lambda nu: 3.0)
    assert rows == [(0.1, 0.5)]


def test_viscous_delay_rejects_nonpositive_reference():
    with pytest.raises(DomainError) as info:
        viscous_delay([0.1], 0.0)
    assert info.value.exit_code == 3
    with pytest.raises(DomainError):
        viscous_delay([0.1], -2.4)


# ============================================================================
# FULL-SCALE SWEEPS
# ============================================================================

@pytest.mark.slow
@pytest.mark.fullscale
@pytest.mark.parametrize("E_A, expected", [(2.0, 0), (5.0, 4), (7.5, 0)])
def test_hyperstabilization_counts(base_params, E_A, expected):
    probe = StabilityProbe(ParameterFamily(base_params, nu=0.1))
    assert probe.count(E_A) == expected


@pytest.mark.slow
@pytest.mark.fullscale
@pytest.mark.parametrize("nu, lower, upper", [(0.1, 2.75, 6.85), (0.342, 3.925, 4.125)])
def test_reference_boundaries(base_params, nu, lower, upper):
    probe = StabilityProbe(ParameterFamily(base_params, nu=nu))
    assert neutral_boundary(probe, "lower", [2.0, 4.0], tol=0.05).E_A == pytest.approx(lower, abs=0.15)
    assert neutral_boundary(probe, "upper", [4.05, 9.5], tol=0.05).E_A == pytest.approx(upper, abs=0.15)
