"""
Detonation Evans MCP Server
===========================

A local Model Context Protocol (MCP) server exposing the stability toolkit
as tools, for interactive exploration next to the command line.

Architecture Overview:
- tools.py: MCP tool definitions and input validation (this file)
- gasdyn/: End states, CJ limit, overdrive conversions
- znd/: ZND reaction zone and rate calibration
- profile/: Viscous traveling-wave solver
- evans/: Evans function, contours and root location
- stab/: Boundary fits and viscous delay
- config.py: Central configuration management

Tools return dictionaries; library errors become error dictionaries with a
suggestion. The server only speaks stdio.
"""

from typing import Dict, List, Optional

from fastmcp import FastMCP

from .config import Config, logger
from .errors import (
    CJLimitExceeded,
    ContourError,
    DetonationEvansError,
    DomainError,
    IgnitionFailure,
    SolverError,
)
from .evans.contour import evans_on_contour, winding_number as contour_winding_number
from .evans.evans_function import EvansEvaluator
from .evans.roots import locate_roots, region_contour
from .gasdyn.thermo import WaveParams, erpenbeck_convert, overdrive_from_q, q_cj, rh_end_state
from .linop.spectral_system import SpectralSystem
from .profile.traveling_wave import shock_reaction_ratio, solve_profile
from .stab.boundary import fit_tabulated, viscous_delay
from .znd.znd_profile import calibrate_k, znd_profile

# Initialize the FastMCP server with configuration
mcp = FastMCP(Config.SERVER_NAME)


# ============================================================================
# HELPER FUNCTIONS
# ============================================================================

SUGGESTIONS = {
    CJLimitExceeded: "Lower q or e_plus; q must not exceed cj_limit(e_plus, Gamma)",
    IgnitionFailure: "Lower T_ig below the Neumann temperature reported by znd_summary",
    DomainError: "Check that all rates and diffusivities are positive",
    SolverError: "Try a smaller parameter step or looser tolerances",
    ContourError: "Try a different contour radius or more nodes per piece",
}


def error_result(e: DetonationEvansError) -> Dict:
    """Error dictionary for a library exception."""
    suggestion = "See the server log for details"
    for family, text in SUGGESTIONS.items():
        if isinstance(e, family):
            suggestion = text
            break
    logger.warning(f"Tool call failed: {type(e).__name__}: {e}")
    return {"error": type(e).__name__, "message": str(e), "suggestion": suggestion}


def build_params(
    e_plus: float,
    q: float,
    E_A: float,
    Gamma: float,
    nu: float,
    d: Optional[float],
    kappa_v: Optional[float],
    k: Optional[float],
    T_ig: float,
) -> WaveParams:
    """WaveParams with d and kappa_v defaulting to nu and k calibrated when omitted."""
    params = WaveParams(
        e_plus=e_plus,
        q=q,
        E_A=E_A,
        Gamma=Gamma,
        nu=nu,
        d=nu if d is None else d,
        kappa_v=nu if kappa_v is None else kappa_v,
        k=1.0 if k is None else k,
        T_ig=T_ig,
    )
    if k is None:
        params = params.with_changes(k=calibrate_k(params))
    return params


def _complex(value: complex) -> List[float]:
    return [float(value.real), float(value.imag)]


# ============================================================================
# GAS DYNAMICS TOOLS
# ============================================================================

@mcp.tool()
def end_state(e_plus: float = 0.0623, q: float = 0.623, Gamma: float = 0.2) -> Dict:
    """
    Burned end state of a strong detonation from the Rankine-Hugoniot conditions.

    Args:
        e_plus: Unburned internal energy
        q: Heat release
        Gamma: Grueneisen coefficient

    Returns:
        Dictionary with tau_minus, u_minus, e_minus, T_minus
    """
    try:
        params = WaveParams(e_plus, q, 0.0, Gamma, 1.0, 1.0, 1.0, 1.0, 0.0)
        ends = rh_end_state(params)
    except DetonationEvansError as e:
        return error_result(e)
    return {"tau_minus": ends.tau_minus, "u_minus": ends.u_minus, "e_minus": ends.e_minus, "T_minus": ends.T_minus}


@mcp.tool()
def cj_limit(e_plus: float, Gamma: float = 0.2) -> Dict:
    """
    Largest heat release for which a strong detonation exists.

    Args:
        e_plus: Unburned internal energy
        Gamma: Grueneisen coefficient
    """
    try:
        return {"e_plus": e_plus, "Gamma": Gamma, "q_cj": q_cj(e_plus, Gamma)}
    except DetonationEvansError as e:
        return error_result(e)


@mcp.tool()
def overdrive(
    q0: float,
    E0: float,
    Gamma: float = 0.2,
    f: Optional[float] = None,
    e_plus: Optional[float] = None,
) -> Dict:
    """
    Convert between overdrive coordinates (f, q0, E0) and scaled (e_plus, q, E_A).

    Give exactly one of f or e_plus. The strong-shock asymptotic estimate of f
    from q = q0 e_plus is returned alongside, with its validity flag.
    """
    try:
        record = erpenbeck_convert(q0, E0, Gamma, f=f, e_plus=e_plus)
        estimate = overdrive_from_q(record.q, Gamma)
    except DetonationEvansError as e:
        return error_result(e)
    result = record.to_dict()
    result["asymptotic_f"] = estimate.f
    result["asymptotic_within_validity"] = estimate.within_validity
    return result


# ============================================================================
# PROFILE TOOLS
# ============================================================================

@mcp.tool()
def znd_summary(
    e_plus: float = 0.0623,
    q: float = 0.623,
    E_A: float = 3.1,
    Gamma: float = 0.2,
    k: float = 1.0,
    T_ig: float = 0.0664,
) -> Dict:
    """
    Neumann state and reaction-zone length of the inviscid ZND wave.

    Returns:
        Dictionary with the Neumann state, the zone length and the half-reaction point
    """
    try:
        params = WaveParams(e_plus, q, E_A, Gamma, 1.0, 1.0, 1.0, k, T_ig)
        znd = znd_profile(params)
        return {
            "neumann": {key: float(value) for key, value in znd.neumann._asdict().items()},
            "M_minus": znd.M_minus,
            "half_reaction_x": znd.half_reaction_point(),
        }
    except DetonationEvansError as e:
        return error_result(e)


@mcp.tool()
def calibrate_rate(
    e_plus: float = 0.0623,
    q: float = 0.623,
    E_A: float = 3.1,
    Gamma: float = 0.2,
    T_ig: float = 0.0664,
    x_half: float = Config.HALF_REACTION_X,
) -> Dict:
    """
    Reaction rate k placing the ZND half-reaction point at x_half.

    Args:
        x_half: Target location of z = 1/2 (negative, default -10)
    """
    if x_half >= 0:
        return {"error": "Invalid x_half", "message": "x_half must be negative",
                "suggestion": "The reaction zone lies behind the shock, e.g. x_half=-10"}
    try:
        params = WaveParams(e_plus, q, E_A, Gamma, 1.0, 1.0, 1.0, 1.0, T_ig)
        return {"k": calibrate_k(params, x_half), "x_half": x_half}
    except DetonationEvansError as e:
        return error_result(e)


@mcp.tool()
def profile_summary(
    e_plus: float = 0.0623,
    q: float = 0.623,
    E_A: float = 3.1,
    Gamma: float = 0.2,
    nu: float = 0.1,
    d: Optional[float] = None,
    kappa_v: Optional[float] = None,
    k: Optional[float] = None,
    T_ig: float = 0.0664,
) -> Dict:
    """
    Solve the viscous traveling wave and summarize it.

    d and kappa_v default to nu; k is calibrated when omitted.

    Returns:
        Dictionary with domain, residual, endpoint deviations and the shock/reaction width ratio
    """
    try:
        params = build_params(e_plus, q, E_A, Gamma, nu, d, kappa_v, k, T_ig)
        profile = solve_profile(params)
        summary = profile.summary()
        summary["k"] = params.k
        summary["shock_reaction_ratio"] = shock_reaction_ratio(profile)
        return summary
    except DetonationEvansError as e:
        return error_result(e)


# ============================================================================
# EVANS FUNCTION TOOLS
# ============================================================================

@mcp.tool()
def evans_value(
    re_lambda: float,
    im_lambda: float,
    E_A: float = 3.1,
    nu: float = 0.1,
    e_plus: float = 0.0623,
    q: float = 0.623,
    Gamma: float = 0.2,
    k: Optional[float] = None,
    T_ig: float = 0.0664,
) -> Dict:
    """
    Evans function D(lambda) for the wave with nu = d = kappa_v.

    Returns:
        Dictionary with D as [re, im] and the subspace dimensions
    """
    try:
        params = build_params(e_plus, q, E_A, Gamma, nu, None, None, k, T_ig)
        with EvansEvaluator(SpectralSystem(solve_profile(params))) as evaluator:
            value = evaluator.evaluate_values([complex(re_lambda, im_lambda)])[0]
        return {
            "lambda": [re_lambda, im_lambda],
            "D": _complex(value.D),
            "k_plus": value.k_plus,
            "k_minus": value.k_minus,
        }
    except DetonationEvansError as e:
        return error_result(e)


@mcp.tool()
def winding_number(
    E_A: float = 3.1,
    nu: float = 0.1,
    R_out: float = Config.R_OUT,
    R_in: float = Config.R_IN,
    k: Optional[float] = None,
    T_ig: float = 0.0664,
    nodes_per_piece: int = Config.NODES_PER_PIECE,
) -> Dict:
    """
    Number of unstable eigenvalues inside the semi-annulus R_in < |lambda| < R_out, Re >= 0.

    Returns:
        Dictionary with the count and its rounding residual
    """
    if not 0 < R_in < R_out:
        return {"error": "Invalid radii", "message": "Need 0 < R_in < R_out",
                "suggestion": f"Defaults are R_in={Config.R_IN}, R_out={Config.R_OUT}"}
    try:
        params = build_params(0.0623, 0.623, E_A, 0.2, nu, None, None, k, T_ig)
        with EvansEvaluator(SpectralSystem(solve_profile(params))) as evaluator:
            sample = evans_on_contour(region_contour("semi_annulus", R_out=R_out, R_in=R_in), evaluator, nodes_per_piece)
            count, residual = contour_winding_number(sample)
        return {"count": count, "residual": residual, "nodes": int(sample.flat()[0].size)}
    except DetonationEvansError as e:
        return error_result(e)


@mcp.tool()
def find_roots(
    E_A: float = 5.0,
    nu: float = 0.1,
    R_out: float = Config.R_OUT,
    R_in: float = Config.R_IN,
    k: Optional[float] = None,
    T_ig: float = 0.0664,
    target_accuracy: float = Config.TARGET_ACCURACY,
) -> Dict:
    """
    Locate the unstable eigenvalues in the semi-annulus.

    Returns:
        Dictionary with roots as [re, im, multiplicity] triples
    """
    if target_accuracy <= 0:
        return {"error": "Invalid accuracy", "message": "target_accuracy must be positive",
                "suggestion": f"Default is {Config.TARGET_ACCURACY}"}
    try:
        params = build_params(0.0623, 0.623, E_A, 0.2, nu, None, None, k, T_ig)
        with EvansEvaluator(SpectralSystem(solve_profile(params))) as evaluator:
            roots = locate_roots(region_contour("semi_annulus", R_out=R_out, R_in=R_in), evaluator, target_accuracy)
        return {
            "count": roots.count,
            "roots": [[root.lam.real, root.lam.imag, root.multiplicity] for root in roots.roots],
        }
    except DetonationEvansError as e:
        return error_result(e)


# ============================================================================
# BOUNDARY TOOLS
# ============================================================================

@mcp.tool()
def fit_tabulated_boundary() -> Dict:
    """
    Least-squares fits of the reference neutral boundaries.

    Upper: E_A+ = a + b nu + c ln nu on nu < 0.27; lower: E_A- = a' + b' nu on nu <= 0.27.
    """
    try:
        return {side: fit.to_dict() for side, fit in fit_tabulated().items()}
    except DetonationEvansError as e:
        return error_result(e)


@mcp.tool()
def viscous_delay_table(E_star: float, nu_grid: Optional[List[float]] = None) -> Dict:
    """
    Relative delay (E_A-(nu) - E*) / E* of the onset of instability.

    Args:
        E_star: Inviscid neutral activation energy (must be supplied)
        nu_grid: Viscosities (default 0.01 ... 0.2)
    """
    if E_star <= 0:
        return {"error": "Invalid E_star", "message": "E_star must be positive",
                "suggestion": "Pass the ZND neutral activation energy"}
    grid = nu_grid or [0.01, 0.025, 0.05, 0.1, 0.15, 0.2]
    rows = viscous_delay(grid, E_star)
    return {"E_star": E_star, "rows": [{"nu": nu, "delay": delay} for nu, delay in rows]}
