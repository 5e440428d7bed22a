"""
Evans Function Module
=====================

Evaluation of the Evans function D(lambda) by the polar-coordinate
(analytic orthogonalization) method.

Each side's decaying solutions W = Omega alpha are carried as an orthonormal
frame Omega and the scalar gamma = det(alpha):

    Omega'     = G Omega - Omega (Omega^H G Omega)
    (log gamma)' = trace(Omega^H G Omega) - mu

mu is the sum of the selected limit eigenvalues (an analytic function of
lambda), which keeps gamma of order one over long domains. The frames start
from the Kato bases at x = +M+ and x = -M- and meet at x = 0:

    D(lambda) = gamma+(0) gamma-(0) det[Omega+(0) | Omega-(0)]

Drift away from orthonormality is removed chunk by chunk with a polar
retraction whose log-determinant is folded into log gamma.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import polar

from ..config import Config, logger
from ..errors import EvansIntegrationFailure
from ..linop.spectral_system import SpectralSystem
from .kato import KatoBases


@dataclass(frozen=True)
class EvansValue:
    """
    D at one spectral value with its ingredients.

    Attributes:
        lam: Spectral value
        D: Evans function value
        log_gamma_plus, log_gamma_minus: Radial log accumulators at x = 0
        k_plus, k_minus: Dimensions of the decaying subspaces
        nfev: Right-hand-side evaluations used by both frame integrations
    """

    lam: complex
    D: complex
    log_gamma_plus: complex
    log_gamma_minus: complex
    k_plus: int
    k_minus: int
    nfev: int

    def conjugate(self) -> "EvansValue":
        return EvansValue(
            lam=np.conj(self.lam),
            D=np.conj(self.D),
            log_gamma_plus=np.conj(self.log_gamma_plus),
            log_gamma_minus=np.conj(self.log_gamma_minus),
            k_plus=self.k_plus,
            k_minus=self.k_minus,
            nfev=self.nfev,
        )


def _orthonormal_start(V: np.ndarray):
    Q, R = np.linalg.qr(V)
    return Q, complex(np.sum(np.log(np.diag(R).astype(complex))))


def integrate_frame(
    system: SpectralSystem,
    lam: complex,
    V: np.ndarray,
    shift: complex,
    x_start: float,
    x_end: float,
    rtol: float = Config.EVANS_RTOL,
    atol: float = Config.EVANS_ATOL,
    chunks: int = Config.FRAME_CHUNKS,
):
    """
    Carry one side's frame from x_start to x_end.

    Returns:
        (Omega, log_gamma, nfev) at x_end
    """
    n, k = V.shape
    Omega, log_gamma = _orthonormal_start(V)
    nfev = 0

    def rhs(x, state):
        G0, G1 = system.coefficients(x)
        G = G0 + lam * G1
        Om = state[:-1].reshape(n, k)
        GOm = G @ Om
        H = Om.conj().T @ GOm
        d_omega = GOm - Om @ H
        return np.concatenate([d_omega.ravel(), [np.trace(H) - shift]])

    edges = np.linspace(x_start, x_end, chunks + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        state = np.concatenate([Omega.ravel(), [log_gamma]]).astype(complex)
        result = solve_ivp(rhs, (a, b), state, method="RK45", rtol=rtol, atol=atol)
        nfev += result.nfev
        if not result.success:
            raise EvansIntegrationFailure(f"Frame integration failed at lambda={lam}, x~{result.t[-1]:.4g}: {result.message}")
        final = result.y[:, -1]
        Omega = final[:-1].reshape(n, k)
        log_gamma = final[-1]

        drift = np.linalg.norm(Omega.conj().T @ Omega - np.eye(k))
        if drift > Config.FRAME_DRIFT_TOL:
            # Omega = U H with U orthonormal and H Hermitian positive definite
            U, H = polar(Omega)
            Omega = U
            log_gamma = log_gamma + np.log(complex(np.linalg.det(H)))

    return Omega, complex(log_gamma), nfev


def evans_from_bases(
    system: SpectralSystem,
    lam: complex,
    V_plus: np.ndarray,
    V_minus: np.ndarray,
    shift_plus: complex,
    shift_minus: complex,
    rtol: float = Config.EVANS_RTOL,
    atol: float = Config.EVANS_ATOL,
) -> EvansValue:
    """D(lambda) from given initial bases and radial shifts."""
    lam = complex(lam)
    Om_p, lg_p, nfev_p = integrate_frame(system, lam, V_plus, shift_plus, system.x_max, 0.0, rtol, atol)
    Om_m, lg_m, nfev_m = integrate_frame(system, lam, V_minus, shift_minus, system.x_min, 0.0, rtol, atol)
    D = np.exp(lg_p + lg_m) * np.linalg.det(np.hstack([Om_p, Om_m]))
    return EvansValue(
        lam=lam,
        D=complex(D),
        log_gamma_plus=lg_p,
        log_gamma_minus=lg_m,
        k_plus=V_plus.shape[1],
        k_minus=V_minus.shape[1],
        nfev=nfev_p + nfev_m,
    )


def evans_eval(lam: complex, system: SpectralSystem, bases: Optional[KatoBases] = None, **tolerances) -> complex:
    """
    Evans function at a single spectral value.

    Args:
        lam: Spectral value (any half plane; no reflection is applied here)
        system: Spectral system of the profile
        bases: Kato bases (created with the default seed if omitted)

    Returns:
        D(lambda)
    """
    if bases is None:
        bases = KatoBases(system)
    V_p, V_m, mu_p, mu_m = bases.at(lam)
    return evans_from_bases(system, lam, V_p, V_m, mu_p, mu_m, **tolerances).D


# ============================================================================
# BATCH EVALUATION
# ============================================================================

_worker_system: Optional[SpectralSystem] = None
_worker_tolerances: Dict[str, float] = {}


def _init_worker(system: SpectralSystem, tolerances: Dict[str, float]):
    global _worker_system, _worker_tolerances
    _worker_system = system
    _worker_tolerances = tolerances


def _evans_task(task) -> EvansValue:
    lam, V_p, V_m, mu_p, mu_m = task
    return evans_from_bases(_worker_system, lam, V_p, V_m, mu_p, mu_m, **_worker_tolerances)


class EvansEvaluator:
    """
    Cached, optionally parallel Evans evaluations for one spectral system.

    Kato bases are transported sequentially in request order (the transport
    cache makes the result depend on that order only through integration
    error); frame integrations are independent and may run in worker
    processes. Values with Im lambda < 0 are obtained by reflection,
    D(conj lambda) = conj D(lambda).

    Attributes:
        system: Spectral system being evaluated
        bases: Kato bases shared by all evaluations
        jobs: Worker processes (1 evaluates in-process)
        weighted: Subtract the limit-eigenvalue shift in the radial equation
        cache: Values computed so far, keyed by lambda with Im >= 0
    """

    def __init__(
        self,
        system: SpectralSystem,
        jobs: int = 1,
        rtol: float = Config.EVANS_RTOL,
        atol: float = Config.EVANS_ATOL,
        seed_scale: float = 1.0,
        reflect: bool = True,
        weighted: bool = True,
    ):
        self.system = system
        self.bases = KatoBases(system, seed_scale=seed_scale)
        self.jobs = max(1, int(jobs))
        self.tolerances = {"rtol": rtol, "atol": atol}
        self.reflect = reflect
        self.weighted = weighted
        self.cache: Dict[complex, EvansValue] = {}
        self._pool: Optional[ProcessPoolExecutor] = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _key(self, lam: complex) -> complex:
        lam = complex(lam)
        if self.reflect and lam.imag < 0:
            return lam.conjugate()
        return lam

    def _run(self, tasks: List[tuple]) -> List[EvansValue]:
        if self.jobs == 1 or len(tasks) < 2:
            return [evans_from_bases(self.system, *task, **self.tolerances) for task in tasks]
        if self._pool is None:
            self._pool = ProcessPoolExecutor(
                max_workers=self.jobs,
                initializer=_init_worker,
                initargs=(self.system, self.tolerances),
            )
        # map keeps input order, so results do not depend on worker count
        return list(self._pool.map(_evans_task, tasks))

    def evaluate_values(self, lambdas: Sequence[complex]) -> List[EvansValue]:
        """EvansValue records for each requested lambda, in order."""
        pending = []
        for lam in lambdas:
            key = self._key(lam)
            if key not in self.cache and key not in pending:
                pending.append(key)

        if pending:
            tasks = []
            for key in pending:
                V_p, V_m, mu_p, mu_m = self.bases.at(key)
                if not self.weighted:
                    mu_p = mu_m = 0j
                tasks.append((key, V_p, V_m, mu_p, mu_m))
            for key, value in zip(pending, self._run(tasks)):
                self.cache[key] = value
            logger.debug(f"Evaluated D at {len(pending)} new points ({len(self.cache)} cached)")

        values = []
        for lam in lambdas:
            value = self.cache[self._key(lam)]
            values.append(value.conjugate() if self._key(lam) != complex(lam) else value)
        return values

    def evaluate(self, lambdas: Sequence[complex]) -> np.ndarray:
        """D at each requested lambda, in order."""
        return np.array([value.D for value in self.evaluate_values(lambdas)], dtype=complex)

    def __call__(self, lam: complex) -> complex:
        return complex(self.evaluate([lam])[0])
