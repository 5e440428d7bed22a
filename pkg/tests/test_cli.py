"""Run configuration, manifests and the command-line entry point."""

import json

import pytest

from detonation_evans.cli.runner import read_boundary_csv, run
from detonation_evans.config import Config, dump_json, load_run_config
from detonation_evans.errors import ConfigError, DomainError
from detonation_evans.main import build_parser, flag_overrides, main
from detonation_evans.tools import build_params, error_result


# ============================================================================
# CONFIG LOADING
# ============================================================================

def test_defaults_without_a_file():
    config = load_run_config()
    assert config.wave["E_A"] == 3.1
    assert config.wave["k"] is None
    assert config.evans["region"] == "semi_annulus"
    assert config.source_path is None and config.source_text == ""


def test_yaml_file_merges_onto_defaults(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("wave:\n  E_A: 4.0\nsweep:\n  nu_values: [0.1, 0.2]\n", encoding="utf-8")
    config = load_run_config(path)
    assert config.wave["E_A"] == 4.0
    assert config.wave["nu"] == 0.1
    assert config.sweep["nu_values"] == [0.1, 0.2]
    assert config.source_text.startswith("wave:")


@pytest.mark.parametrize("text", ["bogus:\n  a: 1\n", "wave:\n  speed: 2\n", "wave: 3\n", "- 1\n- 2\n"])
def test_bad_config_files(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.yaml")


def test_overrides_parse_yaml_values():
    config = load_run_config(overrides=["wave.nu=0.2", "evans.lambda=[0.5, 1.0]", "sweep.tabulated=true"])
    assert config.wave["nu"] == 0.2
    assert config.evans["lambda"] == [0.5, 1.0]
    assert config.sweep["tabulated"] is True
    assert config.overrides == ["wave.nu=0.2", "evans.lambda=[0.5, 1.0]", "sweep.tabulated=true"]


@pytest.mark.parametrize("override", ["wave.nu", "nu=0.2", "other.nu=0.2", "wave.speed=1", "wave.nu=[1,"])
def test_bad_overrides(override):
    with pytest.raises(ConfigError):
        load_run_config(overrides=[override])


def test_jobs_from_environment(monkeypatch):
    monkeypatch.setenv("DETONATION_EVANS_JOBS", "3")
    assert Config.default_jobs() == 3
    monkeypatch.setenv("DETONATION_EVANS_JOBS", "many")
    with pytest.raises(ConfigError):
        Config.default_jobs()
    monkeypatch.setenv("DETONATION_EVANS_JOBS", "0")
    with pytest.raises(ConfigError):
        Config.default_jobs()


def test_json_handles_complex_values(tmp_path):
    path = tmp_path / "values.json"
    dump_json({"lam": 1.0 + 2.0j, "b": 1, "a": [0.5]}, path)
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["lam"] == [1.0, 2.0]
    assert list(data) == ["a", "b", "lam"]


# ============================================================================
# RUNS AND MANIFESTS
# ============================================================================

def _manifest(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_fit_from_tabulated_boundaries(tmp_path):
    manifest_path = run("fit", overrides=["sweep.tabulated=true"], out_dir=tmp_path)
    assert manifest_path == tmp_path / "fit_manifest.json"
    manifest = _manifest(manifest_path)
    assert manifest["status"] == "ok" and manifest["error"] is None
    assert manifest["artifacts"] == ["fit.json"]
    assert manifest["config"]["sweep"]["tabulated"] is True
    assert manifest["overrides"] == ["sweep.tabulated=true"]
    assert manifest["tool_version"] == Config.TOOL_VERSION

    fits = json.loads((tmp_path / "fit.json").read_text(encoding="utf-8"))
    assert fits["source"] == "tabulated"
    assert set(fits["fits"]) == {"upper", "lower"}


def test_delay_table(tmp_path):
    run("delay", overrides=["sweep.tabulated=true", "sweep.E_star=2.4"], out_dir=tmp_path)
    lines = (tmp_path / "delay.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "nu,relative_delay"
    assert len(lines) == 1 + len(load_run_config().sweep["nu_grid"])
    delays = [float(line.split(",")[1]) for line in lines[1:]]
    assert delays == sorted(delays)


def test_failed_run_still_writes_a_manifest(tmp_path):
    with pytest.raises(ConfigError):
        run("delay", overrides=["sweep.tabulated=true"], out_dir=tmp_path)
    manifest = _manifest(tmp_path / "delay_manifest.json")
    assert manifest["status"] == "failed"
    assert manifest["error"]["type"] == "ConfigError"
    assert manifest["error"]["exit_code"] == 2
    assert manifest["artifacts"] == []


def test_fit_needs_a_boundary_source(tmp_path):
    with pytest.raises(ConfigError):
        run("fit", out_dir=tmp_path)


def test_unknown_subcommand_and_bad_jobs(tmp_path):
    with pytest.raises(ConfigError):
        run("plot", out_dir=tmp_path)
    with pytest.raises(ConfigError):
        run("fit", overrides=["sweep.tabulated=true"], jobs=0, out_dir=tmp_path)


def test_rerun_from_manifest_reproduces_outputs(tmp_path):
    first = run("delay", overrides=["sweep.tabulated=true", "sweep.E_star=2.4"], out_dir=tmp_path / "first")
    second = run("delay", config_path=first, out_dir=tmp_path / "second")
    assert (tmp_path / "first" / "delay.csv").read_bytes() == (tmp_path / "second" / "delay.csv").read_bytes()
    assert _manifest(second)["config"] == _manifest(first)["config"]


def _write_boundary_csv(path):
    path.write_text(
        "nu,E_A_minus,E_A_plus,abs_err\n"
        "0.3,3.45,4.8,0.05\n"
        "0.1,2.75,6.85,0.05\n"
        "0.2,3.05,5.75,0.05\n"
        "0.05,2.6,7.6,0.05\n",
        encoding="utf-8",
    )


def test_boundary_csv_is_read_sorted(tmp_path):
    path = tmp_path / "boundary.csv"
    _write_boundary_csv(path)
    curve = read_boundary_csv(path)
    assert [point[0] for point in curve.points] == [0.05, 0.1, 0.2, 0.3]
    assert curve.is_ordered()


def test_malformed_boundary_csv(tmp_path):
    path = tmp_path / "boundary.csv"
    path.write_text("nu,E_A_minus\n0.1,2.7\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_boundary_csv(path)
    with pytest.raises(ConfigError):
        read_boundary_csv(tmp_path / "absent.csv")


def test_fit_from_boundary_points(tmp_path):
    path = tmp_path / "boundary.csv"
    _write_boundary_csv(path)
    run("fit", overrides=[f"sweep.boundary_csv={path}"], out_dir=tmp_path / "out")
    fits = json.loads((tmp_path / "out" / "fit.json").read_text(encoding="utf-8"))
    assert fits["source"] == str(path)
    assert fits["fits"]["lower"]["model"] == "linear"
    assert fits["fits"]["upper"]["model"] == "linear+log"


# ============================================================================
# COMMAND LINE
# ============================================================================

def test_flags_become_overrides():
    args = build_parser().parse_args(
        ["evans", "--lambda", "0.5,1.0", "--dump-G", "0,0.5,1.0", "--set", "wave.nu=0.2"]
    )
    overrides = flag_overrides(args)
    assert overrides[0] == "wave.nu=0.2"
    config = load_run_config(overrides=overrides)
    assert config.evans["lambda"] == [0.5, 1.0]
    assert config.evans["dump_G"] == [[0.0, 0.5, 1.0]]


def test_delay_flags():
    args = build_parser().parse_args(["delay", "--tabulated", "--e-star", "2.4"])
    config = load_run_config(overrides=flag_overrides(args))
    assert config.sweep["tabulated"] is True
    assert config.sweep["E_star"] == 2.4


def test_boundary_viscosity_flags():
    args = build_parser().parse_args(["boundary", "--nu", "0.1", "--nu", "0.2"])
    assert load_run_config(overrides=flag_overrides(args)).sweep["nu_values"] == [0.1, 0.2]


def test_bad_lambda_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["evans", "--lambda", "0.5"])
    assert info.value.code == 2


def test_main_runs_a_subcommand(tmp_path):
    main(["fit", "--tabulated", "--out", str(tmp_path)])
    assert (tmp_path / "fit.json").exists()


def test_main_maps_errors_to_exit_codes(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["delay", "--tabulated", "--out", str(tmp_path)])
    assert info.value.code == 2

    with pytest.raises(SystemExit) as info:
        main(["fit", "--set", "wave.speed=1", "--out", str(tmp_path)])
    assert info.value.code == 2


# ============================================================================
# TOOL HELPERS
# ============================================================================

def test_error_result_carries_a_suggestion():
    result = error_result(DomainError("nu must be positive"))
    assert result["error"] == "DomainError"
    assert result["message"] == "nu must be positive"
    assert "positive" in result["suggestion"]


def test_build_params_ties_diffusivities():
    params = build_params(6.23e-2, 0.623, 3.1, 0.2, 0.1, None, None, 1.0, 6.64e-2)
    assert params.d == params.kappa_v == params.nu == 0.1
    assert params.k == 1.0
