"""
Root Tracking Module
====================

Movement of unstable Evans zeros as the activation energy increases.

This module provides:
- ParameterFamily: wave parameters as a function of E_A (k calibrated per E_A)
- StabilityProbe: profiles cached per E_A and seeded by continuation
- track_roots: root sets along an E_A grid with nearest-neighbor lineage,
  halving the step around entry/exit events and ambiguous matches
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import Config, logger
from ..errors import DetonationEvansError
from ..evans.contour import Contour, semi_annulus
from ..evans.evans_function import EvansEvaluator
from ..evans.roots import RootSet, count_unstable, locate_roots
from ..gasdyn.thermo import WaveParams
from ..linop.spectral_system import SpectralSystem
from ..profile.traveling_wave import Profile, continue_profiles, solve_profile
from ..znd.znd_profile import calibrate_k


# ============================================================================
# PARAMETER FAMILIES
# ============================================================================

@dataclass(frozen=True)
class ParameterFamily:
    """
    Wave parameters along an activation-energy sweep.

    Attributes:
        base: Parameters whose E_A (and, when calibrating, k) are replaced
        calibrate: Recalibrate k at every E_A so the ZND wave has z(-10) = 1/2
        nu: If given, overrides nu (and d, kappa_v when tie_viscosities is set)
        tie_viscosities: Keep nu = d = kappa_v
    """

    base: WaveParams
    calibrate: bool = True
    nu: Optional[float] = None
    tie_viscosities: bool = True

    def params_at(self, E_A: float) -> WaveParams:
        changes = {"E_A": float(E_A)}
        if self.nu is not None:
            changes["nu"] = self.nu
            if self.tie_viscosities:
                changes["d"] = self.nu
                changes["kappa_v"] = self.nu
        params = self.base.with_changes(**changes)
        if self.calibrate:
            params = params.with_changes(k=calibrate_k(params))
        return params


class StabilityProbe:
    """
    Profiles and Evans queries across one parameter family.

    Every new E_A is seeded from the nearest profile already solved, falling
    back to continuation with step halving.

    Attributes:
        family: The swept family
        region: Contour bounding the stability query region
        profiles: Profiles solved so far, keyed by E_A
    """

    def __init__(
        self,
        family: ParameterFamily,
        region: Optional[Contour] = None,
        solver_options: Optional[Dict] = None,
        evans_options: Optional[Dict] = None,
        jobs: int = 1,
        n_per_piece: int = Config.NODES_PER_PIECE,
        max_bisections: int = Config.MAX_BISECTIONS,
        target_accuracy: float = Config.TARGET_ACCURACY,
        max_halvings: int = Config.MAX_HALVINGS,
    ):
        self.family = family
        self.region = region or semi_annulus()
        self.solver_options = dict(solver_options or {})
        self.evans_options = dict(evans_options or {})
        self.jobs = jobs
        self.n_per_piece = n_per_piece
        self.max_bisections = max_bisections
        self.target_accuracy = target_accuracy
        self.max_halvings = max_halvings
        self.profiles: Dict[float, Profile] = {}
        self._counts: Dict[float, int] = {}

    def profile(self, E_A: float) -> Profile:
        E_A = float(E_A)
        if E_A in self.profiles:
            return self.profiles[E_A]
        params = self.family.params_at(E_A)

        if not self.profiles:
            profile = solve_profile(params, **self.solver_options)
        else:
            nearest = min(self.profiles, key=lambda known: abs(known - E_A))
            seed = self.profiles[nearest]
            try:
                profile = solve_profile(params, init_guess=seed, **self.solver_options)
            except DetonationEvansError as e:
                logger.warning(f"Direct solve at E_A={E_A} from E_A={nearest} failed ({e}); continuing")
                profile = continue_profiles(
                    [seed.params, params], init_guess=seed, max_halvings=self.max_halvings, **self.solver_options
                )[-1]

        self.profiles[E_A] = profile
        return profile

    def evaluator(self, E_A: float) -> EvansEvaluator:
        return EvansEvaluator(SpectralSystem(self.profile(E_A)), jobs=self.jobs, **self.evans_options)

    def count(self, E_A: float) -> int:
        """Number of zeros in the query region at E_A."""
        E_A = float(E_A)
        if E_A not in self._counts:
            with self.evaluator(E_A) as evaluator:
                self._counts[E_A] = count_unstable(
                    evaluator, self.region, n_per_piece=self.n_per_piece, max_bisections=self.max_bisections
                )
            logger.info(f"E_A={E_A:.5g}: {self._counts[E_A]} zeros in the query region")
        return self._counts[E_A]

    def roots(self, E_A: float) -> RootSet:
        with self.evaluator(E_A) as evaluator:
            return locate_roots(
                self.region, evaluator, self.target_accuracy, self.n_per_piece, self.max_bisections
            )


# ============================================================================
# TRAJECTORIES
# ============================================================================

@dataclass
class RootTrajectory:
    """
    Root sets along an E_A path with lineage links.

    Attributes:
        steps: (E_A, RootSet) in increasing E_A
        lineage: Per step, lineage id of each root (same order as the RootSet)
        events: Entry/exit/broken-lineage events with their E_A brackets
    """

    steps: List[Tuple[float, RootSet]] = field(default_factory=list)
    lineage: List[List[int]] = field(default_factory=list)
    events: List[Dict[str, object]] = field(default_factory=list)

    def rows(self) -> List[Tuple[float, float, float, int]]:
        rows = []
        for (E_A, roots), ids in zip(self.steps, self.lineage):
            for root, lineage_id in zip(roots.roots, ids):
                rows.append((E_A, root.lam.real, root.lam.imag, lineage_id))
        return rows


def _min_separation(values: np.ndarray) -> float:
    if values.size < 2:
        return np.inf
    gaps = np.abs(values[:, None] - values[None, :]) + np.diag(np.full(values.size, np.inf))
    return float(np.min(gaps))


def match_roots(
    previous: np.ndarray, current: np.ndarray, allow_unmatched: bool = False
) -> Optional[List[Tuple[int, int]]]:
    """
    Nearest-neighbor links minimizing the total squared displacement.

    Every link must be shorter than half the smallest root separation at
    either step. Returns None when a link is too long, two assignments tie,
    or the counts differ. With allow_unmatched, differing counts link every
    root of the smaller set to a distinct root of the larger one and leave
    the rest unlinked.
    """
    if previous.size != current.size and not allow_unmatched:
        return None
    if previous.size == 0 or current.size == 0:
        return []
    if max(previous.size, current.size) > Config.MAX_LINEAGE_ROOTS:
        return None

    limit = 0.5 * min(_min_separation(previous), _min_separation(current))
    forward = previous.size <= current.size
    small, large = (previous, current) if forward else (current, previous)
    costs = []
    for perm in itertools.permutations(range(large.size), small.size):
        cost = float(np.sum(np.abs(small - large[list(perm)]) ** 2))
        costs.append((cost, perm))
    costs.sort(key=lambda item: item[0])
    best_cost, best = costs[0]
    if len(costs) > 1 and costs[1][0] - best_cost <= 1e-12 * (1.0 + best_cost):
        return None

    links = [(i, j) if forward else (j, i) for i, j in enumerate(best)]
    if any(abs(previous[i] - current[j]) >= limit for i, j in links):
        return None
    return sorted(links)


def track_roots(
    probe: StabilityProbe,
    E_start: float,
    E_stop: float,
    step: float = Config.E_A_STEP,
    min_step: float = Config.E_A_MIN_STEP,
) -> RootTrajectory:
    """
    Follow the zeros in the query region from E_start to E_stop.

    A step whose root count changes, or whose matching is ambiguous, is halved
    down to min_step. At the minimum step, count changes are recorded as
    entry/exit events (roots present on both sides keep their lineage) and
    ambiguous matches as broken lineage.

    Returns:
        RootTrajectory with plot-ready rows (E_A, re, im, lineage id)
    """
    trajectory = RootTrajectory()
    E = float(E_start)
    current = probe.roots(E)
    ids = list(range(len(current.roots)))
    next_id = len(ids)
    trajectory.steps.append((E, current))
    trajectory.lineage.append(ids)

    h = step
    while E < E_stop - 1e-12:
        E_new = min(E + h, E_stop)
        candidate = probe.roots(E_new)
        links = match_roots(current.values(), candidate.values())

        if links is None and h > min_step:
            h = max(h / 2.0, min_step)
            logger.info(f"Halving E_A step to {h} after E_A={E:.5g}")
            continue

        if links is None:
            # Roots that persist through an entry or exit keep their ids
            partial = []
            if len(candidate.roots) != len(current.roots):
                partial = match_roots(current.values(), candidate.values(), allow_unmatched=True) or []
            kept = {j: ids[i] for i, j in partial}
            new_ids = []
            for j in range(len(candidate.roots)):
                if j in kept:
                    new_ids.append(kept[j])
                else:
                    new_ids.append(next_id)
                    next_id += 1
            kind = "broken"
            if candidate.count > current.count:
                kind = "entry"
            elif candidate.count < current.count:
                kind = "exit"
            trajectory.events.append({
                "kind": kind,
                "E_A_before": E,
                "E_A_after": E_new,
                "count_before": current.count,
                "count_after": candidate.count,
            })
            logger.info(f"{kind} event between E_A={E:.5g} and {E_new:.5g}")
        else:
            new_ids = [0] * len(candidate.roots)
            for i, j in links:
                new_ids[j] = ids[i]

        trajectory.steps.append((E_new, candidate))
        trajectory.lineage.append(new_ids)
        E, current, ids = E_new, candidate, new_ids
        h = min(step, 2.0 * h)

    return trajectory
