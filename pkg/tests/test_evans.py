"""Kato bases, the Evans function, contour moments and root location."""

import numpy as np
import pytest

from detonation_evans.errors import ContourError, DomainError, SplittingLost, UnresolvedContour
from detonation_evans.evans.contour import (
    EvansSample,
    circle,
    evans_on_contour,
    moments,
    rectangle,
    semi_annulus,
    winding_number,
)
from detonation_evans.evans.evans_function import EvansEvaluator, evans_eval
from detonation_evans.evans.kato import KatoBases, KatoTransport, kato_basis, projector, spectral_split
from detonation_evans.evans.roots import contour_moments, count_unstable, locate_roots, region_contour
from detonation_evans.gasdyn.thermo import rh_end_state
from detonation_evans.linop.spectral_system import ProfileState, coefficient_blocks, split_coefficients


class RestSystem:
    """Limit coefficients of the reference wave without solving its profile."""

    def __init__(self, params):
        ends = rh_end_state(params)
        self.coefficients = {}
        for side, U in (("plus", ends.U_plus), ("minus", ends.U_minus)):
            tau, e, z, _ = U
            state = ProfileState(tau=tau, u=1.0 - tau, e=e, z=z, u_x=0.0, e_x=0.0, z_x=0.0)
            self.coefficients[side] = split_coefficients(coefficient_blocks(state, params))

    def limit_coefficients(self, side):
        return self.coefficients[side]


class PolynomialEvaluator:
    """Stands in for an Evans evaluator with known zeros."""

    def __init__(self, zeros):
        self.zeros = np.asarray(zeros, dtype=complex)
        self.calls = 0

    def evaluate(self, lambdas):
        lambdas = np.asarray(lambdas, dtype=complex)
        self.calls += lambdas.size
        return np.prod(lambdas[:, None] - self.zeros[None, :], axis=1)

    def __call__(self, lam):
        return complex(self.evaluate([lam])[0])


class PowerEvaluator(PolynomialEvaluator):
    """D = lambda**m: an m-fold zero at the origin."""

    def __init__(self, m):
        super().__init__(np.zeros(m))


ZEROS = [1 + 2j, 1 - 2j, 3.0, -2.0, 20.0]


# ============================================================================
# KATO BASES
# ============================================================================

def test_decaying_subspace_dimensions(base_params):
    bases = KatoBases(RestSystem(base_params))
    assert bases.dimensions == (3, 4)


def test_projector_is_idempotent_and_spans_the_basis(base_params):
    G0, G1 = RestSystem(base_params).limit_coefficients("minus")
    transport = KatoTransport(G0, G1, "minus")
    lam = 2.0 + 1.0j
    P = transport.projector(lam)
    np.testing.assert_allclose(P @ P, P, atol=1e-10)
    V = transport.basis(lam)
    np.testing.assert_allclose(P @ V, V, atol=1e-8)


def test_kato_basis_is_conjugate_symmetric(base_params):
    G0, G1 = RestSystem(base_params).limit_coefficients("plus")
    lam = 1.5 + 2.0j
    upper = KatoTransport(G0, G1, "plus").basis(lam)
    lower = KatoTransport(G0, G1, "plus").basis(np.conj(lam))
    np.testing.assert_allclose(lower, upper.conj(), atol=1e-8)


def test_kato_basis_does_not_rotate_within_the_subspace(base_params):
    G0, G1 = RestSystem(base_params).limit_coefficients("minus")
    transport = KatoTransport(G0, G1, "minus")
    lam, h = 1.0 + 1.0j, 1e-4
    dV = (transport.basis(lam + h) - transport.basis(lam - h)) / (2 * h)
    P = transport.projector(lam)
    np.testing.assert_allclose(P @ dV, 0.0, atol=1e-5)


def test_bases_along_a_path_match_direct_transport(base_params):
    G0, G1 = RestSystem(base_params).limit_coefficients("plus")
    path = [0.5 + 0.5j, 1.0 + 1.0j, 2.0 + 1.0j]
    along = kato_basis(path, KatoTransport(G0, G1, "plus"))
    for lam, V in zip(path, along):
        np.testing.assert_allclose(V, KatoTransport(G0, G1, "plus").basis(lam), atol=1e-8)


def test_shift_is_trace_of_projected_matrix(base_params):
    G0, G1 = RestSystem(base_params).limit_coefficients("plus")
    transport = KatoTransport(G0, G1, "plus")
    lam = 0.5 + 3.0j
    G = G0 + lam * G1
    assert transport.shift(lam) == pytest.approx(np.trace(transport.projector(lam) @ G), rel=1e-10)


def test_neutral_eigenvalue_loses_the_splitting():
    G = np.diag([1j, -1.0, 2.0])
    with pytest.raises(SplittingLost):
        spectral_split(G, "plus")
    P = projector(np.diag([-1.0, 2.0, -3.0]), "plus")
    np.testing.assert_allclose(P, np.diag([1.0, 0.0, 1.0]), atol=1e-14)


# ============================================================================
# CONTOURS AND MOMENTS
# ============================================================================

def test_contours_are_closed():
    for contour in (semi_annulus(), rectangle(0, 1, -1, 1), circle(1 + 1j, 0.5)):
        nodes = contour.nodes(8)
        assert nodes[0] == pytest.approx(nodes[-1])
        assert nodes.size == 8 * len(contour.pieces) + 1


def test_contour_membership():
    region = semi_annulus(10.0, 1e-4)
    assert region.contains(1 + 2j)
    assert not region.contains(-1 + 0j)
    assert not region.contains(11.0 + 0j)
    assert circle(1j, 0.5).contains(1.2j)


def test_degenerate_contours_are_rejected():
    with pytest.raises(DomainError):
        rectangle(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        circle(0j, 0.0)
    with pytest.raises(DomainError):
        semi_annulus(1.0, 2.0)
    with pytest.raises(ValueError):
        region_contour("triangle")


def test_winding_number_counts_zeros_inside():
    sample = evans_on_contour(semi_annulus(), PolynomialEvaluator(ZEROS), n_per_piece=32)
    count, residual = winding_number(sample)
    assert count == 3
    assert residual < 1e-6


def test_moments_give_power_sums():
    sample = evans_on_contour(semi_annulus(), PolynomialEvaluator(ZEROS), n_per_piece=64)
    assert moments(sample, 1) == pytest.approx(5.0, abs=1e-3)
    assert moments(sample, 2) == pytest.approx(3.0, abs=1e-2)
    # About a shifted center: sum of (zero - 1)
    assert moments(sample, 1, lambda_hat=1.0) == pytest.approx(2.0, abs=1e-3)
    with pytest.raises(ValueError):
        moments(sample, -1)


def test_moments_are_additive():
    evaluator = PolynomialEvaluator(ZEROS)
    whole, whole_m1, _ = contour_moments(rectangle(0.5, 4.0, -3.0, 3.0), evaluator, 32)
    left, left_m1, _ = contour_moments(rectangle(0.5, 2.0, -3.0, 3.0), evaluator, 32)
    right, right_m1, _ = contour_moments(rectangle(2.0, 4.0, -3.0, 3.0), evaluator, 32)
    assert (whole, left, right) == (3, 2, 1)
    assert whole_m1 == pytest.approx(left_m1 + right_m1, abs=1e-3)


def test_adaptive_sampling_inserts_nodes_where_needed():
    evaluator = PolynomialEvaluator([2.0 + 0.05j])
    sample = evans_on_contour(rectangle(1.0, 3.0, 0.0, 1.0), evaluator, n_per_piece=4)
    assert sample.insertions > 0
    assert sample.converged
    assert sample.normalized()[0] == pytest.approx(1.0)


def test_zero_on_the_contour_is_reported():
    with pytest.raises(ContourError):
        evans_on_contour(rectangle(2.0, 4.0, -1.0, 1.0), PolynomialEvaluator([2.0]), n_per_piece=16, max_bisections=4)


def test_coarse_phase_steps_raise_the_residual():
    contour = circle(0j, 1.0)
    t = [np.linspace(0.0, 1.0, 3) for _ in contour.pieces]
    lam = [piece.point(ts) for piece, ts in zip(contour.pieces, t)]
    sample = EvansSample(contour=contour, t=t, lam=lam, D=[values**3 for values in lam])
    # Phase advances 3 pi / 4 per node
    count, residual = winding_number(sample)
    assert count == 3
    assert residual == pytest.approx(3.0 / 8.0)
    assert winding_number(sample, max_arg_jump=np.pi)[1] < 1e-10


def test_aliased_winding_escalates_the_density(caplog):
    # 40 nodes alias lambda**41 onto a single turn of small phase steps
    coarse = evans_on_contour(circle(0j, 1.0), PowerEvaluator(41), n_per_piece=10)
    assert coarse.insertions == 0
    assert winding_number(coarse) == (1, pytest.approx(0.0, abs=1e-8))

    count, _, _ = contour_moments(circle(0j, 1.0), PowerEvaluator(41), n_per_piece=10)
    assert count == 41
    assert "doubling nodes per piece" in caplog.text


def test_unsettled_winding_is_unresolved(monkeypatch):
    monkeypatch.setattr("detonation_evans.evans.roots.DENSITY_ESCALATIONS", 0)
    with pytest.raises(UnresolvedContour, match="counts 1 and 41"):
        contour_moments(circle(0j, 1.0), PowerEvaluator(41), n_per_piece=10)


def test_count_uses_the_standard_region():
    assert count_unstable(PolynomialEvaluator(ZEROS)) == 3
    assert count_unstable(PolynomialEvaluator([-1.0, -2 + 1j, -2 - 1j])) == 0


# ============================================================================
# ROOT LOCATION
# ============================================================================

def test_locates_simple_zeros():
    roots = locate_roots(semi_annulus(), PolynomialEvaluator(ZEROS), target_accuracy=1e-3)
    assert roots.count == 3 == roots.region_count
    found = sorted(roots.values(), key=lambda lam: (lam.real, lam.imag))
    expected = [1 - 2j, 1 + 2j, 3 + 0j]
    np.testing.assert_allclose(found, expected, atol=1e-3)
    assert all(root.multiplicity == 1 for root in roots.roots)


def test_root_set_is_conjugate_closed():
    roots = locate_roots(rectangle(0.0, 2.0, -3.0, 3.0), PolynomialEvaluator(ZEROS), target_accuracy=1e-3)
    values = roots.values()
    np.testing.assert_allclose(np.sort_complex(values), np.sort_complex(values.conj()), atol=1e-12)


def test_double_zero_is_reported_with_its_multiplicity():
    evaluator = PolynomialEvaluator([2 + 1j, 2 + 1j, 2 - 1j, 2 - 1j])
    roots = locate_roots(semi_annulus(), evaluator, target_accuracy=1e-2)
    assert roots.count == 4
    assert sorted(root.multiplicity for root in roots.roots) == [2, 2]
    np.testing.assert_allclose(sorted(abs(roots.values() - 2.0)), [1.0, 1.0], atol=1e-2)


def test_zero_hidden_below_the_axis_is_unresolved(caplog):
    # Not conjugate symmetric: the region holds one zero, the search drops it
    evaluator = PolynomialEvaluator([3 - 0.01j])
    assert count_unstable(evaluator) == 1
    with pytest.raises(UnresolvedContour, match="also at 32 nodes per piece"):
        locate_roots(semi_annulus(), evaluator, n_per_piece=16)
    assert "at 16 nodes per piece" in caplog.text


def test_empty_region():
    roots = locate_roots(circle(5 + 5j, 1.0), PolynomialEvaluator(ZEROS))
    assert roots.is_empty and roots.count == 0


# ============================================================================
# EVANS FUNCTION ON A SOLVED PROFILE
# ============================================================================

def _upper_points(n=20):
    rng = np.random.default_rng(5)
    radius = rng.uniform(0.1, 4.0, n)
    angle = rng.uniform(0.05, np.pi / 2, n)
    return radius * np.exp(1j * angle)


@pytest.mark.slow
def test_evans_dimensions_on_profile(stable_system):
    with EvansEvaluator(stable_system) as evaluator:
        assert evaluator.bases.dimensions == (3, 4)
        value = evaluator.evaluate_values([1.0 + 0.5j])[0]
    assert (value.k_plus, value.k_minus) == (3, 4)
    assert value.nfev > 0
    assert np.isfinite(value.D) and value.D != 0


@pytest.mark.slow
def test_evans_function_is_conjugate_symmetric(stable_system):
    lams = _upper_points()
    with EvansEvaluator(stable_system, reflect=False) as upper_eval:
        upper = upper_eval.evaluate(lams)
    with EvansEvaluator(stable_system, reflect=False) as lower_eval:
        lower = lower_eval.evaluate(lams.conj())
    np.testing.assert_allclose(lower, upper.conj(), rtol=1e-6)


@pytest.mark.slow
def test_basis_scaling_multiplies_by_a_constant(stable_system):
    lams = _upper_points(6)
    with EvansEvaluator(stable_system) as plain, EvansEvaluator(stable_system, seed_scale=2.0) as scaled:
        ratio = scaled.evaluate(lams) / plain.evaluate(lams)
    np.testing.assert_allclose(ratio, 2.0**7, rtol=1e-8)


@pytest.mark.slow
def test_winding_numbers_are_integers(stable_system):
    contours = [rectangle(0.1, 1.0, 0.1, 1.0), circle(1.0 + 1.0j, 0.5), semi_annulus(2.0, 1e-3)]
    with EvansEvaluator(stable_system) as evaluator:
        for contour in contours:
            _, residual = winding_number(evans_on_contour(contour, evaluator))
            assert residual < 0.05


@pytest.mark.slow
def test_weight_shift_does_not_change_counts(stable_system):
    region = rectangle(0.05, 2.0, -2.0, 2.0)
    with EvansEvaluator(stable_system, weighted=True) as weighted:
        with_shift = count_unstable(weighted, region)
        left, _, _ = contour_moments(rectangle(0.05, 1.0, -2.0, 2.0), weighted)
        right, _, _ = contour_moments(rectangle(1.0, 2.0, -2.0, 2.0), weighted)
    with EvansEvaluator(stable_system, weighted=False) as unweighted:
        without_shift = count_unstable(unweighted, region)
    assert with_shift == without_shift
    assert left + right == with_shift


@pytest.mark.slow
def test_single_point_evaluation_matches_the_evaluator(stable_system):
    lam = 0.8 + 0.6j
    with EvansEvaluator(stable_system, reflect=False) as evaluator:
        batch = evaluator.evaluate([lam])[0]
    assert evans_eval(lam, stable_system) == pytest.approx(batch, rel=1e-6)


@pytest.mark.slow
def test_worker_pool_matches_serial_evaluation(stable_system):
    upper = _upper_points(4)
    lams = np.concatenate([upper, upper.conj()])
    with EvansEvaluator(stable_system) as serial:
        expected = serial.evaluate(lams)
        assert len(serial.cache) == upper.size
    with EvansEvaluator(stable_system, jobs=2) as pooled:
        values = pooled.evaluate(lams)
        assert len(pooled.cache) == upper.size
    np.testing.assert_allclose(values, expected, rtol=1e-10)
    np.testing.assert_allclose(expected[upper.size:], expected[:upper.size].conj(), rtol=1e-12)
