"""
Traveling-Wave Profile Module
=============================

Viscous strong-detonation profiles as heteroclinic orbits of the scaled,
once-integrated traveling-wave system in the unknowns U = (tau, e, z, y),
y := d z' / tau^2:

    tau' = -(1/nu) [tau (tau - 1) + Gamma (e - e+ tau)]
    e'   = -(tau/kappa_v) [(e - e+) - (tau - 1)^2 / 2 + Gamma e+ (tau - 1) + q (y + z - 1)]
    z'   = tau^2 y / d
    y'   = k phi(e) z - tau^2 y / d

This module provides:
- The right-hand side and its analytic Jacobian
- End-state Jacobians with projective boundary conditions
- A collocation solve on [-M-, M+] split at x = 0 (scipy solve_bvp)
- Automatic domain extension, retries and post-hoc invariant checks
- Continuation along a path of parameters with step halving
- Width diagnostics and comparison with the ZND structure
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_bvp
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import eig, orth

from ..config import Config, logger
from ..errors import (
    ContinuationStalled,
    DetonationEvansError,
    DomainError,
    DomainTooShort,
    IllConditionedEnds,
    ProfileNotFound,
)
from ..gasdyn.thermo import (
    EndStates,
    WaveParams,
    ignition_phi_e,
    ignition_phi_prime_e,
    rh_end_state,
)
from ..znd.znd_profile import ZndProfile, znd_profile, znd_state_at_z

# Eigenvalues closer than this are treated as a (near) defective pair
EIGEN_GAP = 1e-10
# Real parts within this of zero count as neutral
NEUTRAL_TOL = 1e-10


# ============================================================================
# RIGHT-HAND SIDE
# ============================================================================

def _rhs(U: np.ndarray, params: WaveParams) -> np.ndarray:
    tau, e, z, y = U
    Gamma, e_plus, q = params.Gamma, params.e_plus, params.q
    bracket = (e - e_plus) - (tau - 1.0) ** 2 / 2.0 + Gamma * e_plus * (tau - 1.0) + q * (y + z - 1.0)
    flux = tau**2 * y / params.d
    return np.array([
        -(tau * (tau - 1.0) + Gamma * (e - e_plus * tau)) / params.nu,
        -tau * bracket / params.kappa_v,
        flux,
        params.k * ignition_phi_e(e, params) * z - flux,
    ])


def _jacobian(U: np.ndarray, params: WaveParams) -> np.ndarray:
    tau, e, z, y = U
    Gamma, e_plus, q = params.Gamma, params.e_plus, params.q
    nu, kappa, d, k = params.nu, params.kappa_v, params.d, params.k
    bracket = (e - e_plus) - (tau - 1.0) ** 2 / 2.0 + Gamma * e_plus * (tau - 1.0) + q * (y + z - 1.0)
    phi = ignition_phi_e(e, params)
    dphi = ignition_phi_prime_e(e, params)
    zero = np.zeros_like(np.asarray(tau, dtype=float))

    J = np.array([
        [-(2.0 * tau - 1.0 - Gamma * e_plus) / nu, -Gamma / nu + zero, zero, zero],
        [
            -bracket / kappa - tau * (-(tau - 1.0) + Gamma * e_plus) / kappa,
            -tau / kappa,
            -tau * q / kappa,
            -tau * q / kappa,
        ],
        [2.0 * tau * y / d, zero, zero, tau**2 / d],
        [-2.0 * tau * y / d, k * dphi * z + zero, k * phi + zero, -(tau**2) / d],
    ], dtype=float)
    return J


def tw_rhs(U, params: WaveParams) -> np.ndarray:
    """
    Right-hand side of the traveling-wave system.

    Args:
        U: State (tau, e, z, y), shape (4,) or (4, m)
        params: Wave parameters

    Returns:
        U' with the same shape as U
    """
    U = np.asarray(U, dtype=float)
    if np.any(U[0] <= 0):
        raise DomainError("Specific volume must be positive")
    return _rhs(U, params)


def tw_jacobian(U, params: WaveParams) -> np.ndarray:
    """Analytic Jacobian dF/dU, shape (4, 4) or (4, 4, m)."""
    U = np.asarray(U, dtype=float)
    if np.any(U[0] <= 0):
        raise DomainError("Specific volume must be positive")
    return _jacobian(U, params)


# ============================================================================
# END STATES AND PROJECTIVE BOUNDARY CONDITIONS
# ============================================================================

@dataclass(frozen=True)
class EndJacobians:
    """
    Linearizations at both end states with the boundary rows they induce.

    At U+ the boundary rows annihilate the growing and neutral directions
    (the orbit must arrive along the stable subspace); at U- they annihilate
    the decaying directions (it must leave along the unstable subspace).

    Attributes:
        J_plus, J_minus: 4x4 Jacobians at U+ and U-
        eig_plus, eig_minus: Eigenvalues sorted by real part, then imaginary part
        L_plus, L_minus: Orthonormal boundary rows at each end
        P_plus, P_minus: Spectral projectors onto the constrained subspaces
        U_plus, U_minus: The end states themselves
    """

    J_plus: np.ndarray
    J_minus: np.ndarray
    eig_plus: np.ndarray
    eig_minus: np.ndarray
    L_plus: np.ndarray
    L_minus: np.ndarray
    P_plus: np.ndarray
    P_minus: np.ndarray
    U_plus: np.ndarray
    U_minus: np.ndarray

    @property
    def condition_count(self) -> Tuple[int, int]:
        return self.L_minus.shape[0], self.L_plus.shape[0]


def _sorted_eig(J: np.ndarray):
    values, left, right = eig(J, left=True, right=True)
    order = np.lexsort((values.imag, values.real))
    values, right = values[order], right[:, order]

    gaps = np.abs(values[:, None] - values[None, :]) + np.eye(len(values)) * np.inf
    if np.min(gaps) < EIGEN_GAP:
        raise IllConditionedEnds(f"End-state Jacobian is nearly defective (eigenvalues {values})")

    # Left eigenvectors as the rows of V^-1 keep the projector exact
    left_rows = np.linalg.inv(right)
    return values, right, left_rows


def _boundary_rows(values, right, left_rows, mask) -> Tuple[np.ndarray, np.ndarray]:
    selected = left_rows[mask]
    # Real orthonormal basis of the span of the selected left eigenvectors
    basis = orth(np.hstack([selected.real.T, selected.imag.T]))
    if basis.shape[1] != int(mask.sum()):
        raise IllConditionedEnds("Selected left eigenvectors are not conjugate-closed")
    projector = (right[:, mask] @ selected).real
    return basis.T, projector


def burned_target(params: WaveParams, ends: EndStates) -> np.ndarray:
    """
    Target state at x = -infinity.

    A wave whose burned state never ignites (only possible without heat
    release) is a frozen gas-dynamical shock and keeps z = 1.
    """
    U_minus = ends.U_minus
    if params.q == 0 and ignition_phi_e(ends.e_minus, params) == 0.0:
        U_minus = U_minus.copy()
        U_minus[2] = 1.0
    return U_minus


def end_jacobians(params: WaveParams) -> EndJacobians:
    """
    Jacobians of the traveling-wave system at U+ and U- and their BC rows.

    Returns:
        EndJacobians with one row at U+ and two rows at U- for a reacting wave
    """
    ends = rh_end_state(params)
    U_plus = ends.U_plus
    U_minus = burned_target(params, ends)

    J_plus = _jacobian(U_plus, params)
    J_minus = _jacobian(U_minus, params)

    values_p, right_p, left_p = _sorted_eig(J_plus)
    values_m, right_m, left_m = _sorted_eig(J_minus)

    # Neutral modes at U+ are constrained (z + y is conserved ahead of ignition)
    mask_plus = values_p.real >= -NEUTRAL_TOL
    # Neutral modes at U- only occur for frozen shocks; conservation already fixes them
    mask_minus = values_m.real < -NEUTRAL_TOL

    L_plus, P_plus = _boundary_rows(values_p, right_p, left_p, mask_plus)
    L_minus, P_minus = _boundary_rows(values_m, right_m, left_m, mask_minus)

    if L_plus.shape[0] + L_minus.shape[0] != 3:
        raise IllConditionedEnds(
            f"Boundary condition count {L_plus.shape[0]} + {L_minus.shape[0]} != 3 "
            f"(eigenvalues at U+ {values_p}, at U- {values_m})"
        )

    return EndJacobians(
        J_plus=J_plus,
        J_minus=J_minus,
        eig_plus=values_p,
        eig_minus=values_m,
        L_plus=L_plus,
        L_minus=L_minus,
        P_plus=P_plus,
        P_minus=P_minus,
        U_plus=U_plus,
        U_minus=U_minus,
    )


# ============================================================================
# PROFILE
# ============================================================================

@dataclass(frozen=True)
class Profile:
    """
    Resolved viscous profile on [-M_minus, M_plus].

    Attributes:
        x: Ascending mesh
        U: Values (tau, e, z, y) on the mesh, shape (4, n)
        dU: x-derivatives on the mesh
        params: Parameters used
        end_states: Rankine-Hugoniot end states
        M_minus, M_plus: Domain half-lengths
        endpoint_deviation: (|U(-M-) - U-|, |U(M+) - U+|), max norm
        residual: Largest relative midpoint defect of the interpolant
        interpolant: C1 cubic Hermite interpolant of U
    """

    x: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    params: WaveParams
    end_states: EndStates
    M_minus: float
    M_plus: float
    endpoint_deviation: Tuple[float, float]
    residual: float
    interpolant: CubicHermiteSpline = field(repr=False)
    U_minus: np.ndarray = field(default=None, repr=False)

    def __call__(self, x):
        return self.interpolant(x)

    def derivative(self, x):
        return self.interpolant(x, 1)

    def extended(self, x):
        """U(x) with constant extension beyond the domain."""
        return self.interpolant(np.clip(x, -self.M_minus, self.M_plus))

    @property
    def tau(self) -> np.ndarray:
        return self.U[0]

    @property
    def e(self) -> np.ndarray:
        return self.U[1]

    @property
    def z(self) -> np.ndarray:
        return self.U[2]

    @property
    def y(self) -> np.ndarray:
        return self.U[3]

    @property
    def u(self) -> np.ndarray:
        return 1.0 - self.U[0]

    @property
    def u_x(self) -> np.ndarray:
        return -self.dU[0]

    def summary(self) -> Dict[str, float]:
        return {
            "M_minus": self.M_minus,
            "M_plus": self.M_plus,
            "nodes": int(self.x.size),
            "endpoint_deviation_minus": self.endpoint_deviation[0],
            "endpoint_deviation_plus": self.endpoint_deviation[1],
            "residual": self.residual,
        }


GuessSource = Union[None, Profile, Callable[[np.ndarray], np.ndarray]]


def znd_template(params: WaveParams, znd: Optional[ZndProfile] = None) -> Callable[[np.ndarray], np.ndarray]:
    """
    Smoothed ZND guess: ZND structure for x < 0, unburned state for x > 0.

    The jump is mollified over a width nu and y is seeded as d z'/tau^2 of
    the blended template.
    """
    if znd is None:
        znd = znd_profile(params)
    width = max(params.nu, params.kappa_v)

    def template(x: np.ndarray) -> np.ndarray:
        xs, inverse = np.unique(np.asarray(x, dtype=float), return_inverse=True)

        z_znd = np.atleast_1d(znd.z_at(np.minimum(xs, 0.0)))
        tau_z, _, e_z, _ = znd_state_at_z(z_znd, params)
        w = 0.5 * (1.0 + np.tanh(xs / width))
        tau = (1.0 - w) * tau_z + w
        e = (1.0 - w) * e_z + w * params.e_plus
        z = (1.0 - w) * z_znd + w
        dz = np.gradient(z, xs) if xs.size > 1 else np.zeros_like(z)
        y = params.d * dz / tau**2

        return np.array([tau, e, z, y])[:, inverse.ravel()]

    template.znd = znd
    return template


@dataclass
class _Domain:
    M_minus: float
    M_plus: float


def _split_guess(source: Callable[[np.ndarray], np.ndarray], domain: _Domain, s: np.ndarray) -> np.ndarray:
    x_left = -domain.M_minus * s
    x_right = domain.M_plus * s
    values = source(np.concatenate([x_left, x_right]))
    return np.vstack([values[:, : s.size], values[:, s.size:]])


def _solve_split(
    params: WaveParams,
    ends: EndJacobians,
    domain: _Domain,
    guess: Callable[[np.ndarray], np.ndarray],
    nodes: int,
    max_nodes: int,
    rtol: float,
    bc_tol: float,
):
    """One collocation solve of the split eight-dimensional problem."""
    M_minus, M_plus = domain.M_minus, domain.M_plus
    tau_mid = 0.5 * (1.0 + ends.U_minus[0])
    L_plus, L_minus = ends.L_plus, ends.L_minus
    U_plus, U_minus = ends.U_plus, ends.U_minus

    def fun(s, Y):
        return np.vstack([-M_minus * _rhs(Y[:4], params), M_plus * _rhs(Y[4:], params)])

    def fun_jac(s, Y):
        jac = np.zeros((8, 8, s.size))
        jac[:4, :4] = -M_minus * _jacobian(Y[:4], params)
        jac[4:, 4:] = M_plus * _jacobian(Y[4:], params)
        return jac

    def bc(ya, yb):
        return np.concatenate([
            ya[:4] - ya[4:],
            [ya[4] - tau_mid],
            L_plus @ (yb[4:] - U_plus),
            L_minus @ (yb[:4] - U_minus),
        ])

    n_minus = L_minus.shape[0]
    n_plus = L_plus.shape[0]
    dbc_dya = np.zeros((8, 8))
    dbc_dyb = np.zeros((8, 8))
    dbc_dya[:4, :4] = np.eye(4)
    dbc_dya[:4, 4:] = -np.eye(4)
    dbc_dya[4, 4] = 1.0
    dbc_dyb[5:5 + n_plus, 4:] = L_plus
    dbc_dyb[5 + n_plus:5 + n_plus + n_minus, :4] = L_minus

    def bc_jac(ya, yb):
        return dbc_dya, dbc_dyb

    # Quadratic spacing clusters the initial mesh at the shock
    s = np.linspace(0.0, 1.0, nodes) ** 2
    Y0 = _split_guess(guess, domain, s)
    result = solve_bvp(
        fun, bc, s, Y0,
        fun_jac=fun_jac, bc_jac=bc_jac,
        tol=rtol, max_nodes=max_nodes, bc_tol=bc_tol,
    )
    return result, fun


def _midpoint_defect(result, fun) -> float:
    """Largest relative defect of the collocation polynomial on a 10x finer grid."""
    s = result.x
    fractions = (np.arange(10) + 0.5) / 10.0
    fine = (s[:-1, None] + np.diff(s)[:, None] * fractions[None, :]).ravel()
    values = result.sol(fine)
    slopes = result.sol(fine, 1)
    f = fun(fine, values)
    return float(np.max(np.abs(slopes - f) / (1.0 + np.abs(f))))


def _assemble_profile(result, params, end_states, ends, domain, residual) -> Profile:
    s = result.x
    UL = result.y[:4]
    UR = result.y[4:]
    x = np.concatenate([-domain.M_minus * s[::-1], domain.M_plus * s[1:]])
    U = np.hstack([UL[:, ::-1], UR[:, 1:]])
    dU = _rhs(U, params)
    deviation = (
        float(np.max(np.abs(UL[:, -1] - ends.U_minus))),
        float(np.max(np.abs(UR[:, -1] - ends.U_plus))),
    )
    return Profile(
        x=x,
        U=U,
        dU=dU,
        params=params,
        end_states=end_states,
        M_minus=domain.M_minus,
        M_plus=domain.M_plus,
        endpoint_deviation=deviation,
        residual=residual,
        interpolant=CubicHermiteSpline(x, U, dU, axis=1),
        U_minus=ends.U_minus,
    )


def _check_invariants(profile: Profile) -> None:
    if np.any(profile.tau <= 0) or np.any(profile.e <= 0):
        raise ProfileNotFound("Profile left the physical region (tau or e not positive)", profile.residual)
    ceiling = Config.Z_CEILING
    if np.any(profile.z < -ceiling) or np.any(profile.z > 1.0 + ceiling):
        raise ProfileNotFound(
            f"Reaction progress left [0, 1] (range {profile.z.min():.3e}..{profile.z.max():.6f})",
            profile.residual,
        )


def solve_profile(
    params: WaveParams,
    domain: Optional[Tuple[float, float]] = None,
    init_guess: GuessSource = None,
    rtol: float = Config.PROFILE_RTOL,
    atol: float = Config.PROFILE_ATOL,
    endpoint_tol: float = Config.ENDPOINT_TOL,
    initial_nodes: int = Config.INITIAL_NODES,
    max_nodes: int = Config.MAX_NODES,
    growth: float = Config.DOMAIN_GROWTH,
    max_M_minus: float = Config.MAX_M_MINUS,
    max_M_plus: float = Config.MAX_M_PLUS,
) -> Profile:
    """
    Solve for the viscous traveling wave on a truncated domain.

    The domain is split at the shock (x = 0), each half is mapped to [0, 1]
    and the resulting eight-dimensional system is solved by adaptive
    collocation. Translation is fixed by tau(0) = (1 + tau-)/2. A side whose
    endpoint misses its end state by more than endpoint_tol is lengthened by
    the growth factor and the problem is re-solved from the last solution.

    Args:
        params: Wave parameters
        domain: (M-, M+); None uses the defaults, lengthened to cover the ZND tail
        init_guess: Previous Profile, callable x -> U, or None for the ZND template
        rtol: Collocation residual tolerance
        atol: Boundary-condition tolerance
        endpoint_tol: Required |U(+-M) - U+-|

    Returns:
        Profile satisfying the endpoint, positivity and residual checks
    """
    end_states = rh_end_state(params)
    ends = end_jacobians(params)

    default_plus = Config.DEFAULT_M_PLUS
    if init_guess is None:
        guess = znd_template(params)
        default_minus = max(Config.DEFAULT_M_MINUS, guess.znd.M_minus)
    elif isinstance(init_guess, Profile):
        guess = init_guess.extended
        default_minus, default_plus = init_guess.M_minus, init_guess.M_plus
    else:
        guess = init_guess
        default_minus = Config.DEFAULT_M_MINUS

    if domain is None:
        domain = (min(default_minus, max_M_minus), min(default_plus, max_M_plus))
    current = _Domain(float(domain[0]), float(domain[1]))
    if current.M_minus <= 0 or current.M_plus <= 0:
        raise DomainError(f"Domain half-lengths must be positive, got {domain}")

    while True:
        result, fun = _solve_split(params, ends, current, guess, initial_nodes, max_nodes, rtol, atol)
        if result.status != 0:
            logger.warning(
                f"Collocation failed on [-{current.M_minus:.4g}, {current.M_plus:.4g}] "
                f"({result.message}); retrying with twice the nodes"
            )
            result, fun = _solve_split(
                params, ends, current, guess, 2 * initial_nodes, 2 * max_nodes, rtol, atol
            )
        if result.status != 0:
            residual = float(np.max(result.rms_residuals)) if result.rms_residuals.size else None
            raise ProfileNotFound(f"Collocation did not converge: {result.message}", residual)

        residual = _midpoint_defect(result, fun)
        profile = _assemble_profile(result, params, end_states, ends, current, residual)
        dev_minus, dev_plus = profile.endpoint_deviation

        if dev_minus <= endpoint_tol and dev_plus <= endpoint_tol:
            break

        extended = False
        if dev_minus > endpoint_tol and current.M_minus < max_M_minus:
            current.M_minus = min(current.M_minus * growth, max_M_minus)
            extended = True
        if dev_plus > endpoint_tol and current.M_plus < max_M_plus:
            current.M_plus = min(current.M_plus * growth, max_M_plus)
            extended = True
        if not extended:
            raise DomainTooShort(
                f"Endpoint deviations ({dev_minus:.2e}, {dev_plus:.2e}) exceed {endpoint_tol} "
                f"at the largest domain [-{current.M_minus:.4g}, {current.M_plus:.4g}]"
            )
        logger.warning(
            f"Endpoint deviations ({dev_minus:.2e}, {dev_plus:.2e}); "
            f"extending domain to [-{current.M_minus:.4g}, {current.M_plus:.4g}]"
        )
        guess = profile.extended

    if residual > Config.RESIDUAL_SAFETY * rtol:
        raise ProfileNotFound(f"Midpoint defect {residual:.2e} exceeds {Config.RESIDUAL_SAFETY * rtol:.1e}", residual)
    _check_invariants(profile)

    logger.info(
        f"Profile solved on [-{profile.M_minus:.4g}, {profile.M_plus:.4g}] with {profile.x.size} nodes "
        f"(defect {residual:.1e}, endpoint deviations {dev_minus:.1e}/{dev_plus:.1e})"
    )
    return profile


# ============================================================================
# CONTINUATION
# ============================================================================

def interpolate_params(start: WaveParams, end: WaveParams, fraction: float) -> WaveParams:
    """Point along the straight path between two parameter sets (k geometrically)."""
    values = {}
    for name, a in start.to_dict().items():
        b = getattr(end, name)
        if name == "k":
            values[name] = float(np.exp((1.0 - fraction) * np.log(a) + fraction * np.log(b)))
        else:
            values[name] = (1.0 - fraction) * a + fraction * b
    return WaveParams(**values)


def continue_profiles(
    params_path: Sequence[WaveParams],
    init_guess: GuessSource = None,
    max_halvings: int = Config.MAX_HALVINGS,
    **solver_options,
) -> List[Profile]:
    """
    Solve along a path of parameters, each solution seeding the next.

    A failed step is retried from the last solution toward a point halfway
    there, up to max_halvings times.

    Args:
        params_path: Parameter sets to solve, in order
        init_guess: Guess for the first entry (default ZND template)
        max_halvings: Allowed step halvings per path entry

    Returns:
        One Profile per entry of params_path
    """
    params_path = list(params_path)
    if not params_path:
        return []

    first = solve_profile(params_path[0], init_guess=init_guess, **solver_options)
    profiles = [first]
    last_params, last_profile = params_path[0], first

    for target in params_path[1:]:
        fraction, halvings = 1.0, 0
        reached = 0.0
        while reached < 1.0:
            trial_fraction = min(1.0, reached + fraction)
            trial = target if trial_fraction >= 1.0 else interpolate_params(last_params, target, trial_fraction)
            try:
                last_profile = solve_profile(trial, init_guess=last_profile, **solver_options)
            except DetonationEvansError as e:
                halvings += 1
                if halvings > max_halvings:
                    raise ContinuationStalled(
                        f"Continuation stalled toward {target} after {max_halvings} halvings: {e}",
                        frontier=last_profile.params,
                    )
                fraction /= 2.0
                logger.warning(f"Continuation step failed ({e}); halving step to {fraction:.4g}")
                continue
            reached = trial_fraction
            if trial_fraction < 1.0:
                # Rebase the remaining path on the new solution
                last_params = trial
                reached, fraction = 0.0, 1.0
        last_params = target
        profiles.append(last_profile)

    return profiles


# ============================================================================
# DIAGNOSTICS
# ============================================================================

def shock_layer(profile: Profile) -> Tuple[float, float]:
    """Interval where |tau'| exceeds half its maximum."""
    slope = np.abs(profile.dU[0])
    peak = int(np.argmax(slope))
    half = slope[peak] / 2.0
    lo = peak
    while lo > 0 and slope[lo - 1] > half:
        lo -= 1
    hi = peak
    while hi < slope.size - 1 and slope[hi + 1] > half:
        hi += 1
    return float(profile.x[lo]), float(profile.x[hi])


def shock_width(profile: Profile) -> float:
    """Viscous shock-layer width from the |tau'| half-maximum criterion."""
    lo, hi = shock_layer(profile)
    return hi - lo


def reaction_length(profile: Profile, z_level: float = 0.01) -> float:
    """Distance behind x = 0 at which z has fallen to z_level."""
    left = profile.x <= 0
    x, z = profile.x[left], profile.z[left]
    below = np.nonzero(z <= z_level)[0]
    if below.size == 0:
        raise DomainTooShort(f"z never falls to {z_level} on the domain")
    i = below[-1]
    if i + 1 >= x.size:
        return float(-x[i])
    # Linear interpolation between the bracketing nodes
    x_cross = x[i] + (z_level - z[i]) * (x[i + 1] - x[i]) / (z[i + 1] - z[i])
    return float(-x_cross)


def shock_reaction_ratio(profile: Profile, z_level: float = 0.01) -> float:
    """Ratio of the viscous shock-layer width to the reaction-zone length."""
    return shock_width(profile) / reaction_length(profile, z_level)


def compare_with_znd(profile: Profile, znd: ZndProfile) -> Dict[str, float]:
    """
    Sup-norm differences between the viscous profile and its ZND counterpart.

    Differences are split between the shock layer and the reaction zone behind
    it; the bench metric reports z at the burned edge of the shock layer and
    the rise of z across the layer.
    """
    lo, hi = shock_layer(profile)
    x = profile.x[(profile.x <= 0) & (profile.x >= -znd.M_minus)]
    tau_z, u_z, e_z, _ = znd.state_at(x)
    z_z = znd.z_at(x)
    U = profile(x)
    in_layer = x >= lo

    report = {"shock_layer_lo": lo, "shock_layer_hi": hi}
    for name, viscous, inviscid in (("tau", U[0], tau_z), ("e", U[1], e_z), ("z", U[2], z_z)):
        diff = np.abs(viscous - inviscid)
        report[f"{name}_shock_layer"] = float(diff[in_layer].max()) if in_layer.any() else 0.0
        report[f"{name}_reaction_zone"] = float(diff[~in_layer].max()) if (~in_layer).any() else 0.0

    z_entry = float(profile(lo)[2])
    z_exit = float(profile(hi)[2])
    report["bench_z_entry"] = z_entry
    report["bench_z_jump"] = z_exit - z_entry
    return report
