import json
import subprocess
import sys
from pathlib import Path

import pytest

from qdesigndb.cli import run
from qdesigndb.physics import g_from_lamb

GOLDEN = Path(__file__).parent / "golden"


def cli(capsys, *args):
    code = run(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture()
def toy_store(tmp_path):
    path = tmp_path / "store"
    code = run(["synth", "--out", str(path), "--seed", "7", "--qubits", "14",
                "--quarter", "5", "--half", "4", "--couplers", "2",
                "--validated", "2"])
    assert code == 0
    return path


def test_stats_on_empty_store(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code, out, _ = cli(capsys, "stats", "--store", str(empty))
    assert code == 0
    payload = json.loads(out)
    assert payload["qubit_claws"] == 0
    assert payload["composed_candidates"] == 0


def test_oracle_reference_row(capsys):
    code, out, _ = cli(capsys, "oracle", "--fq", "4.216", "--fr", "6.116",
                       "--alpha", "-0.153", "--g", "0.0603")
    assert code == 0
    payload = json.loads(out)
    assert payload["chi_L"]["rel_delta"] < 0.03
    assert payload["chi"]["rel_delta"] < 0.03
    code, table, _ = cli(capsys, "oracle", "--fq", "4.216", "--fr", "6.116",
                         "--alpha", "-0.153", "--g", "0.0603",
                         "--output", "table")
    assert code == 0
    assert "chi_L" in table and "perturbative" in table


def test_query_output_is_byte_identical_across_runs(toy_store, capsys):
    args = ("query", "--store", str(toy_store), "--target",
            "f_q=4.2,alpha=-0.2,f_r=6.5,kappa=0.5,g=0.06",
            "--weights", "f_r=2", "--k", "3")
    code1, out1, _ = cli(capsys, *args)
    code2, out2, _ = cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    payload = json.loads(out1)
    assert len(payload["ranked"]) == 3
    assert payload["ranked"][0]["cost"] <= payload["ranked"][1]["cost"]
    assert payload["closest_validated"] is not None
    assert "wall_time" not in json.dumps(payload)


def test_query_golden_schema(toy_store, capsys):
    code, out, _ = cli(capsys, "query", "--store", str(toy_store), "--target",
                       "f_q=4.2,alpha=-0.2,f_r=6.5,kappa=0.5,g=0.06",
                       "--k", "2")
    assert code == 0
    golden = json.loads((GOLDEN / "query_toy.json").read_text())
    assert json.loads(out) == golden


def test_synth_production_counts_preset(tmp_path, capsys):
    code, out, _ = cli(capsys, "synth", "--out", str(tmp_path / "big"),
                       "--preset", "production-counts", "--seed", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["qubit_claws"] == 1934
    assert payload["resonator_combinations"] == 693 + 174580


def test_ingest_reports_bad_records(tmp_path, capsys):
    store = tmp_path / "store"
    store.mkdir()
    (store / "manifest.json").write_text('{"schema_version": 1}')
    (store / "qubit_claw.jsonl").write_text("not-json\n")
    code, out, _ = cli(capsys, "ingest", "--store", str(store))
    assert code == 0
    payload = json.loads(out)
    assert len(payload["errors"]) == 1
    assert payload["errors"][0]["line"] == 1


def test_data_errors_exit_2(tmp_path, capsys):
    store = tmp_path / "store"
    store.mkdir()
    (store / "manifest.json").write_text('{"schema_version": 42}')
    code, _, err = cli(capsys, "stats", "--store", str(store))
    assert code == 2
    assert "schema_version" in err


def test_usage_errors_exit_1(toy_store, capsys):
    code, _, _ = cli(capsys, "query", "--store", str(toy_store),
                     "--target", "f_q4.2")
    assert code == 1
    code, _, _ = cli(capsys, "--bogus-flag")
    assert code == 1
    code, _, err = cli(capsys, "physics", "--name", "not_an_op")
    assert code == 1
    assert "unknown physics operation" in err


def test_physics_subcommand_parity(capsys):
    code, out, _ = cli(capsys, "physics", "--name", "g_from_lamb",
                       "--args", "chi_L=0.00156,f_q=4.216,f_r=6.116")
    assert code == 0
    value = json.loads(out)["result"]
    assert value == g_from_lamb(0.00156, 4.216, 6.116)
    code, out, _ = cli(capsys, "physics", "--name",
                       "resonator_effective_capacitance",
                       "--args", "f_r=7,Z_c=50", "--str-args", "mode=quarter")
    assert code == 0
    assert json.loads(out)["result"] == pytest.approx(357.14, abs=0.01)


def test_store_resolution_env_and_config(toy_store, capsys, monkeypatch,
                                          tmp_path):
    monkeypatch.setenv("QDESIGNDB_STORE", str(toy_store))
    code, out, _ = cli(capsys, "stats")
    assert code == 0
    assert json.loads(out)["qubit_claws"] == 14

    monkeypatch.delenv("QDESIGNDB_STORE")
    cfg = tmp_path / "conf"
    cfg.write_text(f"store={toy_store}\nlog_level=WARNING\noutput=table\n"
                   "threads=2\n")
    code, out, _ = cli(capsys, "--config", str(cfg), "stats")
    assert code == 0
    assert "qubit_claws: 14" in out  # config switched output to table
    code, out, _ = cli(capsys, "--config", str(cfg), "stats",
                       "--output", "json")  # flag overrides config
    assert code == 0
    assert json.loads(out)["qubit_claws"] == 14

    code, _, err = cli(capsys, "stats")
    assert code == 1
    assert "store" in err


def test_interpolate_command(toy_store, capsys):
    code, out, _ = cli(capsys, "query", "--store", str(toy_store), "--target",
                       "f_q=4.2,alpha=-0.2,f_r=6.5,kappa=0.5,g=0.06", "--k", "1")
    assert code == 0
    best = json.loads(out)["ranked"][0]["params"]
    target = ",".join(f"{k}={v}" for k, v in best.items())
    code, out, _ = cli(capsys, "interpolate", "--store", str(toy_store),
                       "--target", target, "--resonator-type", "half")
    assert code == 0
    payload = json.loads(out)
    assert set(payload["scale_factors"]) == {"s_cross", "s_claw", "s_res",
                                             "s_fline"}
    assert payload["estimated"]["f_q"] > 0


def test_module_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "qdesigndb", "physics", "--name",
         "charging_energy", "--args", "C=100"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"] == pytest.approx(0.19370, abs=1e-4)
