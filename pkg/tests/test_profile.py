"""Viscous traveling-wave profiles, boundary conditions and continuation."""

from types import SimpleNamespace

import numpy as np
import pytest

from detonation_evans.errors import ContinuationStalled, DomainError, ProfileNotFound
from detonation_evans.gasdyn.thermo import rh_end_state
from detonation_evans.profile import traveling_wave
from detonation_evans.profile.traveling_wave import (
    compare_with_znd,
    continue_profiles,
    end_jacobians,
    interpolate_params,
    reaction_length,
    shock_reaction_ratio,
    shock_width,
    solve_profile,
    tw_jacobian,
    tw_rhs,
)
from detonation_evans.znd.znd_profile import znd_profile

from .conftest import reference_params


# ============================================================================
# RIGHT-HAND SIDE
# ============================================================================

def test_end_states_are_equilibria(base_params):
    ends = rh_end_state(base_params)
    np.testing.assert_allclose(tw_rhs(ends.U_plus, base_params), 0.0, atol=1e-14)
    np.testing.assert_allclose(tw_rhs(ends.U_minus, base_params), 0.0, atol=1e-12)


def test_jacobian_matches_finite_differences(base_params):
    rng = np.random.default_rng(11)
    for _ in range(10):
        U = np.array([
            rng.uniform(0.2, 1.0),
            rng.uniform(0.2, 1.0),
            rng.uniform(0.0, 1.0),
            rng.uniform(-0.1, 0.1),
        ])
        J = tw_jacobian(U, base_params)
        numeric = np.empty((4, 4))
        for j in range(4):
            h = 1e-6 * (1.0 + abs(U[j]))
            step = np.zeros(4)
            step[j] = h
            numeric[:, j] = (tw_rhs(U + step, base_params) - tw_rhs(U - step, base_params)) / (2 * h)
        np.testing.assert_allclose(J, numeric, rtol=1e-6, atol=1e-6 * np.max(np.abs(J)))


def test_nonpositive_volume_is_rejected(base_params):
    with pytest.raises(DomainError):
        tw_rhs([0.0, 0.5, 0.5, 0.0], base_params)


def test_vectorized_rhs(base_params):
    U = np.array([[0.5, 0.6], [0.4, 0.3], [0.5, 0.9], [0.0, 0.01]])
    F = tw_rhs(U, base_params)
    assert F.shape == (4, 2)
    np.testing.assert_allclose(F[:, 1], tw_rhs(U[:, 1], base_params))


# ============================================================================
# BOUNDARY CONDITIONS
# ============================================================================

def test_boundary_rows_close_the_problem(base_params):
    ends = end_jacobians(base_params)
    n_minus, n_plus = ends.condition_count
    # Four matching conditions and a phase condition complete the eight needed
    assert n_minus + n_plus == 3
    for L in (ends.L_plus, ends.L_minus):
        np.testing.assert_allclose(L @ L.T, np.eye(L.shape[0]), atol=1e-12)


def test_projectors_are_idempotent(base_params):
    ends = end_jacobians(base_params)
    for P in (ends.P_plus, ends.P_minus):
        np.testing.assert_allclose(P @ P, P, atol=1e-12)


def test_unburned_state_has_no_reaction_coupling(base_params):
    # T+ is below the ignition temperature, so phi and phi' vanish there
    ends = end_jacobians(base_params)
    assert ends.J_plus[3, 1] == 0.0
    assert ends.J_plus[3, 2] == 0.0


def test_boundary_rows_annihilate_constrained_directions(base_params):
    ends = end_jacobians(base_params)
    np.testing.assert_allclose(ends.L_plus @ (np.eye(4) - ends.P_plus), 0.0, atol=1e-10)


# ============================================================================
# SOLVES
# ============================================================================

def _frozen_guess(x):
    x = np.asarray(x, dtype=float)
    w = 0.5 * (1.0 + np.tanh(x / 0.2))
    tau = (1.0 - w) * 0.104502 + w
    e = (1.0 - w) * 0.474415 + w * 6.23e-2
    z = 1.0 + 1e-3 * np.exp(-x**2)
    return np.array([tau, e, z, np.zeros_like(x)])


def test_nonreactive_shock_keeps_z_at_one():
    params = reference_params(q=0.0, T_ig=0.6)
    profile = solve_profile(params, init_guess=_frozen_guess)
    assert np.max(np.abs(profile.z - 1.0)) <= 1e-8
    assert max(profile.endpoint_deviation) <= 1e-4
    assert profile(0.0)[0] == pytest.approx(0.5 * (1.0 + profile.U_minus[0]), abs=1e-6)
    assert np.all(np.diff(profile.tau) >= -1e-10)


@pytest.mark.slow
def test_reactive_profile_invariants(bench_profile):
    profile = bench_profile
    assert max(profile.endpoint_deviation) <= 1e-4
    assert np.all(profile.tau > 0) and np.all(profile.e > 0)
    assert profile.z.min() >= -1e-6 and profile.z.max() <= 1.0 + 1e-6
    assert profile.residual <= 1e-5
    tau_mid = 0.5 * (1.0 + profile.end_states.tau_minus)
    assert profile(0.0)[0] == pytest.approx(tau_mid, abs=1e-6)


@pytest.mark.slow
def test_velocity_identities(bench_profile):
    np.testing.assert_allclose(bench_profile.u, 1.0 - bench_profile.tau)
    slope = bench_profile.derivative(bench_profile.x)[0]
    np.testing.assert_allclose(bench_profile.u_x, -slope, atol=1e-8)


@pytest.mark.slow
def test_profile_departs_from_znd_at_the_shock(bench_profile):
    report = compare_with_znd(bench_profile, znd_profile(bench_profile.params))
    assert report["tau_shock_layer"] > report["tau_reaction_zone"]
    assert report["bench_z_entry"] < 1.0 - 1e-4
    assert report["bench_z_jump"] > 0.0


@pytest.mark.slow
def test_shock_layer_is_thinner_than_reaction_zone(bench_profile):
    assert 0.0 < shock_width(bench_profile) < reaction_length(bench_profile)
    assert shock_reaction_ratio(bench_profile) < 1.0


@pytest.mark.slow
@pytest.mark.fullscale
def test_bench_reactant_enters_shock_layer_partly_burned(bench_profile):
    report = compare_with_znd(bench_profile, znd_profile(bench_profile.params))
    assert report["bench_z_entry"] < 0.95
    assert 0.05 <= shock_reaction_ratio(bench_profile) <= 0.2


@pytest.mark.slow
def test_continuation_round_trip(bench_profile):
    start = bench_profile.params
    forward = continue_profiles([start, start.with_changes(E_A=3.3)], init_guess=bench_profile)
    assert forward[-1].params.E_A == 3.3
    np.testing.assert_allclose(forward[-1].end_states.U_minus, bench_profile.end_states.U_minus)

    back = continue_profiles([forward[-1].params, start], init_guess=forward[-1])[-1]
    x = np.linspace(-10.0, 2.0, 241)
    assert np.max(np.abs(back(x) - bench_profile(x))) <= 1e-4


# ============================================================================
# CONTINUATION LOGIC
# ============================================================================

def _reach_limited_solver(reach):
    calls = []

    def fake_solve(params, init_guess=None, **options):
        calls.append(params.E_A)
        if init_guess is not None and abs(params.E_A - init_guess.params.E_A) > reach:
            raise ProfileNotFound("step too long", residual=1.0)
        return SimpleNamespace(params=params)

    fake_solve.calls = calls
    return fake_solve


def test_continuation_halves_failed_steps(monkeypatch, base_params):
    fake = _reach_limited_solver(0.3)
    monkeypatch.setattr(traveling_wave, "solve_profile", fake)
    profiles = continue_profiles([base_params.with_changes(E_A=3.0), base_params.with_changes(E_A=4.0)])
    assert [p.params.E_A for p in profiles] == [3.0, 4.0]
    assert any(3.0 < E < 4.0 for E in fake.calls)


def test_continuation_reports_frontier(monkeypatch, base_params):
    monkeypatch.setattr(traveling_wave, "solve_profile", _reach_limited_solver(0.01))
    with pytest.raises(ContinuationStalled) as info:
        continue_profiles(
            [base_params.with_changes(E_A=3.0), base_params.with_changes(E_A=4.0)], max_halvings=3
        )
    assert info.value.frontier.E_A == 3.0


def test_empty_path():
    assert continue_profiles([]) == []


def test_parameter_interpolation(base_params):
    end = base_params.with_changes(E_A=5.1, k=4.0)
    assert interpolate_params(base_params, end, 0.0) == base_params
    middle = interpolate_params(base_params, end, 0.5)
    assert middle.E_A == pytest.approx(4.1)
    assert middle.k == pytest.approx(2.0)
