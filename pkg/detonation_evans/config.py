"""
Configuration module for the viscous detonation stability toolkit.

Holds the numerical defaults every module reads, the environment overrides,
and the run configuration loaded from YAML files for the command line.
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from .errors import ConfigError

# Get logger instance (uses default or parent configuration)
logger = logging.getLogger(__name__)


class Config:
    """Numerical defaults and process-level settings."""

    SERVER_NAME = "detonation-evans"
    TOOL_VERSION = "0.1.0"
    MANIFEST_VERSION = 1

    # Profile boundary-value problem
    PROFILE_RTOL = 1e-6
    PROFILE_ATOL = 1e-8
    ENDPOINT_TOL = 1e-4
    DEFAULT_M_MINUS = 25.0
    DEFAULT_M_PLUS = 5.0
    DOMAIN_GROWTH = 1.5
    MAX_M_MINUS = 5000.0
    MAX_M_PLUS = 200.0
    INITIAL_NODES = 400
    MAX_NODES = 200000
    RESIDUAL_SAFETY = 10.0
    Z_CEILING = 1e-6
    MAX_HALVINGS = 8

    # ZND reaction zone
    ZND_RTOL = 1e-10
    ZND_ATOL = 1e-14
    ZND_SEED = 1e-12
    ZND_TAIL = 1e-4
    HALF_REACTION_X = -10.0

    # Evans function
    EVANS_RTOL = 1e-6
    EVANS_ATOL = 1e-8
    KATO_RTOL = 1e-10
    KATO_ATOL = 1e-12
    KATO_SEED = 1.0
    FRAME_DRIFT_TOL = 1e-8
    FRAME_CHUNKS = 16
    SPLITTING_DELTA = 1e-4

    # Contours and roots
    R_OUT = 10.0
    R_IN = 1e-4
    NODES_PER_PIECE = 16
    MAX_BISECTIONS = 12
    MAX_ARG_JUMP = 1.5707963267948966
    MAX_REL_JUMP = 0.2
    ZERO_FLOOR = 1e-13
    WINDING_TOL = 0.05
    TARGET_ACCURACY = 1e-3
    BOUNDARY_PERTURBATION = 1e-6
    STRIP_FRACTION = 0.0137

    # Sweeps
    E_A_STEP = 0.25
    E_A_MIN_STEP = 0.03125
    BOUNDARY_TOL = 0.05
    MAX_LINEAGE_ROOTS = 8

    @classmethod
    def default_jobs(cls) -> int:
        """Worker count, overridable through the environment."""
        value = os.environ.get("DETONATION_EVANS_JOBS")
        if not value:
            return 1
        try:
            jobs = int(value)
        except ValueError:
            raise ConfigError(f"DETONATION_EVANS_JOBS must be an integer, got {value!r}")
        if jobs < 1:
            raise ConfigError("DETONATION_EVANS_JOBS must be at least 1")
        return jobs

    @classmethod
    def default_output_dir(cls) -> Path:
        """Output directory, checking environment variable first."""
        return Path(os.environ.get("DETONATION_EVANS_OUT", "out"))

    @classmethod
    def log_level(cls) -> str:
        return os.environ.get("DETONATION_EVANS_LOG_LEVEL", "INFO").upper()


# ============================================================================
# RUN CONFIGURATION
# ============================================================================

# Every key a config file may set, with its recorded default.
DEFAULT_RUN_CONFIG: Dict[str, Dict[str, Any]] = {
    "wave": {
        "e_plus": 6.23e-2,
        "q": 6.23e-1,
        "E_A": 3.1,
        "Gamma": 0.2,
        "nu": 0.1,
        "d": 0.1,
        "kappa_v": 0.1,
        "k": None,              # None: calibrate so the ZND wave has z(-10) = 1/2
        "T_ig": 6.64e-2,
        "c_v": 1.0,
        "tig_weight": None,     # set: T_ig from the convex-combination rule instead
    },
    "solver": {
        "M_minus": Config.DEFAULT_M_MINUS,
        "M_plus": Config.DEFAULT_M_PLUS,
        "rtol": Config.PROFILE_RTOL,
        "atol": Config.PROFILE_ATOL,
        "endpoint_tol": Config.ENDPOINT_TOL,
        "initial_nodes": Config.INITIAL_NODES,
        "max_nodes": Config.MAX_NODES,
        "domain_growth": Config.DOMAIN_GROWTH,
        "max_M_minus": Config.MAX_M_MINUS,
        "max_M_plus": Config.MAX_M_PLUS,
        "max_halvings": Config.MAX_HALVINGS,
    },
    "evans": {
        "region": "semi_annulus",           # semi_annulus | rectangle | circle
        "R_out": Config.R_OUT,
        "R_in": Config.R_IN,
        "rectangle": None,                  # [re_min, re_max, im_min, im_max]
        "circle": None,                     # [re_center, im_center, radius]
        "nodes_per_piece": Config.NODES_PER_PIECE,
        "max_bisections": Config.MAX_BISECTIONS,
        "rtol": Config.EVANS_RTOL,
        "atol": Config.EVANS_ATOL,
        "target_accuracy": Config.TARGET_ACCURACY,
        "weighted": True,
        "seed_scale": 1.0,
        "lambda": None,                     # [re, im] for a single-point evaluation
        "dump_G": [],                       # list of [x, re, im] for coefficient dumps
    },
    "sweep": {
        "E_A_min": 2.0,
        "E_A_max": 8.0,
        "E_A_step": Config.E_A_STEP,
        "E_A_min_step": Config.E_A_MIN_STEP,
        "nu_values": [0.1],
        "tie_viscosities": True,            # nu = d = kappa_v
        "lower_bracket": [2.0, 4.0],
        "upper_bracket": [4.5, 9.5],
        "boundary_tol": Config.BOUNDARY_TOL,
        "fit_model": "both",                # linear | linear+log | both
        "tabulated": False,
        "E_star": None,
        "nu_grid": [0.01, 0.025, 0.05, 0.1, 0.15, 0.2],
        "boundary_csv": None,               # boundary CSV of a previous run, for fit/delay
    },
    "output": {
        "directory": None,                  # None: DETONATION_EVANS_OUT or ./out
        "jobs": None,                       # None: DETONATION_EVANS_JOBS or 1
    },
}


@dataclass(frozen=True)
class RunConfig:
    """
    Fully resolved run configuration.

    Attributes:
        sections: Resolved values per section (defaults merged with the file and overrides)
        source_text: The config file exactly as read, echoed into the manifest
        source_path: Where the config came from, if anywhere
        overrides: The --set overrides as given
    """

    sections: Dict[str, Dict[str, Any]]
    source_text: str = ""
    source_path: Optional[str] = None
    overrides: List[str] = field(default_factory=list)

    @property
    def wave(self) -> Dict[str, Any]:
        return self.sections["wave"]

    @property
    def solver(self) -> Dict[str, Any]:
        return self.sections["solver"]

    @property
    def evans(self) -> Dict[str, Any]:
        return self.sections["evans"]

    @property
    def sweep(self) -> Dict[str, Any]:
        return self.sections["sweep"]

    @property
    def output(self) -> Dict[str, Any]:
        return self.sections["output"]

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return copy.deepcopy(self.sections)


def _merge_section(name: str, base: Dict[str, Any], update: Any) -> None:
    if update is None:
        return
    if not isinstance(update, dict):
        raise ConfigError(f"Section '{name}' must be a mapping, got {type(update).__name__}")
    for key, value in update.items():
        if key not in base:
            raise ConfigError(f"Unknown key '{name}.{key}'")
        base[key] = value


def _apply_override(sections: Dict[str, Dict[str, Any]], override: str) -> None:
    """Apply one 'section.key=value' override, parsing the value as YAML."""
    if "=" not in override:
        raise ConfigError(f"Override must look like section.key=value, got {override!r}")
    dotted, raw_value = override.split("=", 1)
    if dotted.count(".") != 1:
        raise ConfigError(f"Override key must be section.key, got {dotted!r}")
    section, key = dotted.strip().split(".")
    if section not in sections:
        raise ConfigError(f"Unknown section '{section}' in override {override!r}")
    if key not in sections[section]:
        raise ConfigError(f"Unknown key '{section}.{key}' in override {override!r}")
    try:
        sections[section][key] = yaml.safe_load(raw_value)
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse override value {raw_value!r}: {e}")


def load_run_config(path: Optional[Path] = None, overrides: Optional[List[str]] = None) -> RunConfig:
    """
    Load a run configuration from YAML, merging it onto the recorded defaults.

    A manifest JSON written by a previous run is accepted too; its 'config'
    block is used so that a re-run reproduces the same outputs.

    Args:
        path: YAML (or manifest JSON) file; None uses defaults only
        overrides: 'section.key=value' strings applied after the file

    Returns:
        RunConfig with every field resolved
    """
    sections = copy.deepcopy(DEFAULT_RUN_CONFIG)
    source_text = ""
    overrides = list(overrides or [])

    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file does not exist: {path}")
        try:
            source_text = path.read_text(encoding="utf-8")
            loaded = yaml.safe_load(source_text) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}")

        if not isinstance(loaded, dict):
            raise ConfigError(f"Config {path} must contain a mapping at top level")

        # Manifests carry the resolved config under 'config'
        if "manifest_version" in loaded:
            logger.info(f"Using the resolved config recorded in manifest {path}")
            loaded = loaded.get("config") or {}

        for name, update in loaded.items():
            if name not in sections:
                raise ConfigError(f"Unknown section '{name}' in {path}")
            _merge_section(name, sections[name], update)

    for override in overrides:
        _apply_override(sections, override)

    return RunConfig(
        sections=sections,
        source_text=source_text,
        source_path=str(path) if path is not None else None,
        overrides=overrides,
    )


def _json_default(value: Any) -> Any:
    # numpy scalars/arrays and complex numbers appear in result records
    if isinstance(value, np.generic):
        return _json_default(value.item()) if isinstance(value, np.complexfloating) else value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return str(value)


def dump_json(payload: Dict[str, Any], path: Path) -> None:
    """Write JSON with sorted keys so repeated runs produce identical bytes."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
