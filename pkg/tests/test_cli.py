"""End-to-end tests for the imethod-lab command line."""

import csv
import json
import math
from pathlib import Path

import pytest

from imethod_lab.checks.registry import CHECK_RUNNERS, CheckContext, get_check_runners
from imethod_lab.cli import build_parser, main
from imethod_lab.config import CheckSpec, ConfigError, RunConfig, load_config
from imethod_lab.runner import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, ExperimentRunner, exit_code_for
from imethod_lab.types import CheckReport

PLANE_WAVE_CONFIG = {
    "dimension": 3,
    "grid_points": 8,
    "box_length": 2 * math.pi,
    "dt": 0.001,
    "t_final": 0.1,
    "snapshot_stride": 10,
    "initial_data": {"kind": "plane_wave", "amplitude": 1.0, "wavevector": [1, 0, 0]},
    "checks": [
        {"name": "exact_plane_wave"},
        {"name": "mass_conservation"},
        {"name": "reversibility", "params": {"steps": 20}},
    ],
    "output_dir": "runs",
}

SWEEP_CONFIG = {
    "dimension": 1,
    "grid_points": 64,
    "box_length": 16 * math.pi,
    "dt": 0.01,
    "t_final": 0.1,
    "s": 0.5,
    "N_list": [100.0],
    "initial_data": {"kind": "gaussian", "width": 2.0},
    "output_dir": "runs",
}


def write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def run_dir(out, command):
    (directory,) = [path for path in out.iterdir() if path.name.startswith(f"{command}-")]
    return directory


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_norms_requires_checkpoint(tmp_path):
    with pytest.raises(SystemExit):
        main(["norms", "--config", str(write_config(tmp_path, PLANE_WAVE_CONFIG))])


def test_check_plane_wave_passes(tmp_path):
    config = write_config(tmp_path, PLANE_WAVE_CONFIG)
    out = tmp_path / "out"
    assert main(["check", "--config", str(config), "--out", str(out)]) == EXIT_OK

    directory = run_dir(out, "check")
    rows = read_csv(directory / "summary.csv")
    assert [row["name"] for row in rows] == ["exact_plane_wave", "mass_conservation", "reversibility"]
    assert all(row["status"] == "PASS" for row in rows)
    report = json.loads((directory / "reports" / "exact_plane_wave.json").read_text())
    assert report["passed"] is True
    metadata = json.loads((directory / "metadata.json").read_text())
    assert metadata["exit_code"] == 0
    assert (directory / "SUMMARY.md").read_text().count("Generated:") == 1


def test_check_reports_are_reproducible(tmp_path):
    config = write_config(tmp_path, PLANE_WAVE_CONFIG)
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["check", "--config", str(config), "--out", str(first)]) == EXIT_OK
    assert main(["check", "--config", str(config), "--out", str(second)]) == EXIT_OK

    a, b = run_dir(first, "check"), run_dir(second, "check")
    for relative in ["summary.csv", "reports/exact_plane_wave.json", "reports/reversibility.json"]:
        assert (a / relative).read_bytes() == (b / relative).read_bytes(), relative


def test_failing_hard_check_exits_nonzero(tmp_path):
    data = dict(PLANE_WAVE_CONFIG, checks=[{"name": "exact_plane_wave", "tolerance": 1e-300}])
    data["initial_data"] = {"kind": "plane_wave", "amplitude": 1.0, "wavevector": [3, 0, 0]}
    config = write_config(tmp_path, data)
    assert main(["check", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_FAILED


def test_check_with_unusable_input_records_failure(tmp_path):
    data = dict(PLANE_WAVE_CONFIG, checks=[{"name": "exact_plane_wave"}])
    data["initial_data"] = {"kind": "gaussian"}
    config = write_config(tmp_path, data)
    out = tmp_path / "out"
    assert main(["check", "--config", str(config), "--out", str(out)]) == EXIT_FAILED
    report = json.loads((run_dir(out, "check") / "reports" / "exact_plane_wave.json").read_text())
    assert report["status"] == "FAIL"
    assert "plane_wave" in report["notes"][0]


def test_sweep_with_single_threshold_is_inconclusive(tmp_path):
    config = write_config(tmp_path, SWEEP_CONFIG)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == EXIT_OK

    directory = run_dir(out, "sweep")
    report = json.loads((directory / "reports" / "almost_conservation.json").read_text())
    assert report["status"] == "INCONCLUSIVE"
    assert report["measured"]["is_control"] == [True]
    rows = read_csv(directory / "sweep.csv")
    assert len(rows) == 1
    assert rows[0]["slope"] == ""
    assert (directory / "points" / "N_100.json").exists()

    # cached points are reused on a rerun
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == EXIT_OK


def test_sweep_requires_thresholds(tmp_path):
    data = {key: value for key, value in SWEEP_CONFIG.items() if key not in ("N_list", "s")}
    config = write_config(tmp_path, data)
    assert main(["sweep", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_missing_output_dir_is_config_error(tmp_path, capsys):
    data = {key: value for key, value in PLANE_WAVE_CONFIG.items() if key != "output_dir"}
    config = write_config(tmp_path, data)
    assert main(["check", "--config", str(config)]) == EXIT_CONFIG
    assert "output_dir" in capsys.readouterr().err


def test_evolve_then_norms(tmp_path):
    config = write_config(tmp_path, dict(PLANE_WAVE_CONFIG, N=0.5, s=0.5))
    out = tmp_path / "out"
    assert main(["evolve", "--config", str(config), "--out", str(out)]) == EXIT_OK

    directory = run_dir(out, "evolve")
    checkpoints = sorted((directory / "checkpoints").glob("state_*.nlsf"))
    assert len(checkpoints) == 11
    rows = read_csv(directory / "norms.csv")
    assert float(rows[-1]["t"]) == 0.1
    assert all(float(row["mass"]) == pytest.approx(float(rows[0]["mass"]), rel=1e-10) for row in rows)
    assert rows[0]["modified_energy"] != ""

    assert main(["norms", "--config", str(config), "--out", str(out), "--checkpoint", str(checkpoints[-1])]) == EXIT_OK
    (row,) = read_csv(run_dir(out, "norms") / "norms.csv")
    assert float(row["mass"]) == pytest.approx((2 * math.pi) ** 3, rel=1e-12)
    assert float(row["linf"]) == pytest.approx(1.0, rel=1e-12)


def test_exit_code_ignores_soft_and_inconclusive_reports():
    soft_fail = CheckReport(name="partition", status="FAIL", hard=False)
    inconclusive = CheckReport(name="almost_conservation", status="INCONCLUSIVE")
    assert exit_code_for([soft_fail, inconclusive]) == EXIT_OK
    assert exit_code_for([CheckReport(name="scaling", status="FAIL")]) == EXIT_FAILED


def test_get_check_runners():
    assert get_check_runners() == CHECK_RUNNERS
    selected = get_check_runners(["scaling", "mass_conservation"])
    assert list(selected) == ["scaling", "mass_conservation"]
    with pytest.raises(KeyError, match="no_such_check"):
        get_check_runners(["no_such_check"])


def test_check_context_shares_trajectory():
    config = RunConfig.model_validate(PLANE_WAVE_CONFIG)
    context = CheckContext(config)
    assert context.trajectory is context.trajectory
    report = CHECK_RUNNERS["mass_conservation"](context, CheckSpec(name="mass_conservation"))
    assert report.status == "PASS"
    with pytest.raises(ValueError, match="requires s"):
        context.regularity(CheckSpec(name="frequency_tail"))


def test_check_rejects_unregistered_names_before_running(tmp_path):
    config = RunConfig.model_validate(PLANE_WAVE_CONFIG).with_overrides(output_dir=str(tmp_path / "out"))
    bogus = config.model_copy(
        update={"checks": [CheckSpec(name="mass_conservation"), CheckSpec.model_construct(name="no_such_check")]}
    )
    with pytest.raises(ConfigError, match="no_such_check"):
        ExperimentRunner(bogus).run("check")
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize(
    "path", sorted((Path(__file__).parent.parent / "configs").glob("*.json")), ids=lambda p: p.name
)
def test_shipped_config_exits_cleanly(tmp_path, path):
    """Every shipped config runs its command (check, else sweep) with exit 0."""
    config = load_config(path).with_overrides(output_dir=str(tmp_path))
    command = "check" if config.checks else "sweep"
    assert ExperimentRunner(config).run(command) == EXIT_OK
    reports = sorted((run_dir(tmp_path, command) / "reports").glob("*.json"))
    assert reports
    for report in reports:
        data = json.loads(report.read_text())
        assert data["status"] != "FAIL" or not data["hard"], report.name
