import json
import subprocess
import sys
from pathlib import Path

import pytest

from aebscore.cli import main
from aebscore.protocol import bundled_protocol_path

DATA_DIR = bundled_protocol_path().parent
FIXTURE_SIM = Path(__file__).parent / "data" / "fixture_sim.json"


@pytest.fixture(scope="module")
def fixture_log(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim") / "campaign.jsonl"
    code = main(
        [
            "simulate",
            "--protocol",
            str(bundled_protocol_path()),
            "--oracle",
            str(FIXTURE_SIM),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    return out


def _protocol_args():
    return ["--protocol", str(bundled_protocol_path())]


def test_simulate_is_seed_deterministic(tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    for out in (a, b):
        assert (
            main(
                [
                    "simulate",
                    *_protocol_args(),
                    "--oracle",
                    str(FIXTURE_SIM),
                    "--seed",
                    "99",
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
    assert a.read_bytes() == b.read_bytes()


def test_validate_clean_log(fixture_log, capsys):
    assert main(["validate", *_protocol_args(), "--log", str(fixture_log)]) == 0
    assert capsys.readouterr().out == ""


def test_validate_reports_findings(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    lines = [
        {"vehicle": "V", "scenario": "CCRs", "light": "day", "vut_speed": 75,
         "tg_speed": None, "overlap": 100, "outcome": "impacted",
         "impact_speed": 70, "intervention": False},
        {"vehicle": "V", "scenario": "CCRs", "light": "day", "vut_speed": 95,
         "tg_speed": None, "overlap": 100, "outcome": "avoided"},
    ]
    bad.write_text("\n".join(json.dumps(l) for l in lines) + "\n")
    assert main(["validate", *_protocol_args(), "--log", str(bad)]) == 1
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 1
    assert "executed-above-failure" in out[0]
    assert "vut=95" in out[0]


def test_validate_missing_file_exits_2(tmp_path, capsys):
    assert main(["validate", *_protocol_args(), "--log", str(tmp_path / "nope.jsonl")]) == 2
    assert "error:" in capsys.readouterr().err


def test_stats_output(fixture_log, capsys):
    assert main(["stats", *_protocol_args(), "--log", str(fixture_log)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[1] == "vehicle,expected,executed,judged,completion_percent"
    rows = [line.split(",") for line in lines[2:]]
    assert [r[0] for r in rows] == ["1A", "2", "6", "7B"]
    assert all(r[1] == "224" for r in rows)
    assert all(r[4] == "100%" for r in rows)  # replayed logs always complete


def test_score_writes_eight_tables_per_two_regions(fixture_log, tmp_path, capsys):
    out = tmp_path / "reports"
    code = main(
        [
            "score",
            *_protocol_args(),
            "--log",
            str(fixture_log),
            "--weights",
            str(DATA_DIR / "weights_eu_example.json"),
            "--weights",
            str(DATA_DIR / "weights_us_example.json"),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    files = sorted(p.name for p in out.glob("*.csv"))
    assert files == [
        "freq_score_mean_day_eu.csv",
        "freq_score_mean_day_us.csv",
        "freq_score_mean_night_eu.csv",
        "freq_score_mean_night_us.csv",
        "mit_pow_day_eu.csv",
        "mit_pow_day_us.csv",
        "mit_pow_night_eu.csv",
        "mit_pow_night_us.csv",
    ]
    day_eu = (out / "freq_score_mean_day_eu.csv").read_text()
    assert "CPLAs,NA,NA,NA,NA" in day_eu
    night_eu = (out / "freq_score_mean_night_eu.csv").read_text()
    assert "CBNA,NA,NA,NA,NA" in night_eu


def test_compare_writes_matrices(fixture_log, tmp_path):
    out = tmp_path / "matrices"
    code = main(
        [
            "compare",
            *_protocol_args(),
            "--log",
            str(fixture_log),
            "--weights",
            str(DATA_DIR / "weights_eu_example.json"),
            "--out",
            str(out),
            "--format",
            "csv,markdown,html",
        ]
    )
    assert code == 0
    csvs = sorted(p.name for p in out.glob("*.csv"))
    assert csvs == [
        "rel_freq_c2c_eu.csv",
        "rel_freq_c2o_eu.csv",
        "rel_freq_c2vru_eu.csv",
        "rel_mp_c2c_eu.csv",
        "rel_mp_c2o_eu.csv",
        "rel_mp_c2vru_eu.csv",
    ]
    assert len(list(out.glob("*.md"))) == 6
    assert len(list(out.glob("*.html"))) == 6
    c2c = (out / "rel_freq_c2c_eu.csv").read_text()
    # the never-responding vehicle scores zero: only -100% in its row
    row_2 = next(line for line in c2c.splitlines() if line.startswith("2,"))
    cells = row_2.split(",")[1:]
    assert set(cells) == {"-100.00%", "0.00%"}


def test_compare_two_groups_two_regions_gives_eight_matrices(fixture_log, tmp_path):
    # weight tables restricted to two groups: 2 metrics x 2 groups x 2 regions
    out = tmp_path / "matrices"
    table_paths = []
    for region in ("EU", "US"):
        source = json.loads((DATA_DIR / f"weights_{region.lower()}_example.json").read_text())
        source["groups"].pop("C2O")
        source["weights"] = [
            w for w in source["weights"] if w["scenario"] not in ("Pallets", "Tire")
        ]
        path = tmp_path / f"w_{region}.json"
        path.write_text(json.dumps(source))
        table_paths += ["--weights", str(path)]
    code = main(
        ["compare", *_protocol_args(), "--log", str(fixture_log), *table_paths, "--out", str(out)]
    )
    assert code == 0
    assert len(list(out.glob("*.csv"))) == 8


def test_compare_single_vehicle_single_cell(tmp_path):
    spec = {
        "seed": 3,
        "vehicles": [{"id": "solo", "mass": 1500, "oracle": {"type": "always_avoid"}}],
    }
    oracle = tmp_path / "solo.json"
    oracle.write_text(json.dumps(spec))
    log = tmp_path / "solo.jsonl"
    assert main(["simulate", *_protocol_args(), "--oracle", str(oracle), "--out", str(log)]) == 0
    out = tmp_path / "m"
    assert (
        main(
            [
                "compare",
                *_protocol_args(),
                "--log",
                str(log),
                "--weights",
                str(DATA_DIR / "weights_eu_example.json"),
                "--out",
                str(out),
            ]
        )
        == 0
    )
    text = (out / "rel_freq_c2c_eu.csv").read_text()
    assert text.splitlines()[2] == "solo,0.00%"


def test_score_exits_1_on_validation_findings(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text(
        json.dumps(
            {
                "vehicle": "V",
                "scenario": "CCRs",
                "light": "day",
                "vut_speed": 55,
                "overlap": 100,
                "outcome": "judged_failed",
                "impact_speed": 10,
            }
        )
        + "\n"
    )
    code = main(
        [
            "score",
            *_protocol_args(),
            "--log",
            str(bad),
            "--weights",
            str(DATA_DIR / "weights_eu_example.json"),
            "--out",
            str(tmp_path / "o"),
        ]
    )
    assert code == 1
    assert "invalid-outcome" in capsys.readouterr().err


def test_score_requires_weights(fixture_log, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["score", *_protocol_args(), "--log", str(fixture_log), "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_unknown_format_exits_2(fixture_log, tmp_path, capsys):
    code = main(
        [
            "score",
            *_protocol_args(),
            "--log",
            str(fixture_log),
            "--weights",
            str(DATA_DIR / "weights_eu_example.json"),
            "--out",
            str(tmp_path),
            "--format",
            "pdf",
        ]
    )
    assert code == 2
    assert "unknown format" in capsys.readouterr().err


def test_mismatched_weight_table_exits_2(fixture_log, tmp_path, capsys):
    table = {
        "region": "XX",
        "weights": [{"scenario": "Ghost", "light": "day", "w": 1.0}],
        "groups": {"C2C": [{"scenario": "Ghost", "light": "day"}]},
    }
    weights = tmp_path / "w.json"
    weights.write_text(json.dumps(table))
    code = main(
        [
            "score",
            *_protocol_args(),
            "--log",
            str(fixture_log),
            "--weights",
            str(weights),
            "--out",
            str(tmp_path / "o"),
        ]
    )
    assert code == 2
    assert "not licensed" in capsys.readouterr().err


def test_impact_model_config(fixture_log, tmp_path):
    config = tmp_path / "impact.json"
    config.write_text(
        json.dumps(
            {
                "tg_masses": {"C2C": 1400},
                "geometry_rule": "unit",
                "vut_masses": {"1A": 1620, "2": 1480, "6": 1850, "7B": 1705},
                "default_vut_mass": 1500,
            }
        )
    )
    out = tmp_path / "reports"
    code = main(
        [
            "score",
            *_protocol_args(),
            "--log",
            str(fixture_log),
            "--impact-model",
            str(config),
            "--weights",
            str(DATA_DIR / "weights_eu_example.json"),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert (out / "mit_pow_day_eu.csv").exists()


def test_console_entry_point_runs():
    result = subprocess.run(
        [sys.executable, "-m", "aebscore", "--help"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert "validate" in result.stdout and "compare" in result.stdout
