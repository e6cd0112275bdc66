# tests/test_cli.py
import json

from click.testing import CliRunner

from cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, cli
from database import get_recent_runs, get_run_rows
from utils import SCHEMA_LINE, read_csv_report
from version import RELEASE_NOTES, VERSION


def _invoke(*args):
    return CliRunner().invoke(cli, list(args))


class TestCatalog:
    def test_version(self):
        result = _invoke("--version")
        assert result.exit_code == 0
        assert VERSION in result.output
        assert result.output.startswith(f"dmlab {VERSION}\n")
        assert RELEASE_NOTES.splitlines()[0] in result.output

    def test_catalog_all(self):
        result = _invoke("catalog")
        assert result.exit_code == 0
        assert "families:" in result.output and "ex_first" in result.output
        assert "pipelines: verify, represent, envelope, lsc, dual" in result.output

    def test_catalog_filtered(self):
        result = _invoke("catalog", "rings")
        assert result.exit_code == 0
        assert "abs_frac" in result.output
        assert "families:" not in result.output

    def test_bad_log_level(self):
        assert _invoke("--log-level", "LOUD", "catalog").exit_code == 2


class TestRun:
    def test_verify_passes(self, scenario_dir, tmp_path):
        out = tmp_path / "report.csv"
        result = _invoke("run", "--scenario", str(scenario_dir / "verify_ex_first.scn"), "--k-max", "10",
                         "--out", str(out))
        assert result.exit_code == EXIT_OK, result.output
        text = out.read_text(encoding="utf-8")
        assert text.splitlines()[0] == SCHEMA_LINE
        header, rows = read_csv_report(text)
        assert header[0] == "scenario" and header[-1] == "pass"
        assert len(rows) == 12
        assert all(r[-1] == "true" for r in rows)
        assert "12/12 rows pass" in result.output

    def test_csv_to_stdout(self, scenario_dir):
        result = _invoke("run", "--scenario", str(scenario_dir / "lsc_sawtooth.scn"), "--k-max", "8")
        assert result.exit_code == EXIT_OK, result.output
        assert SCHEMA_LINE in result.output
        assert "sawtooth_double_well" in result.output

    def test_variant_mismatch_fails(self, scenario_dir, tmp_path):
        result = _invoke("run", "--scenario", str(scenario_dir / "verify_variant_mismatch.scn"), "--k-max", "10",
                         "--out", str(tmp_path / "r.csv"))
        assert result.exit_code == EXIT_FAIL
        assert "FAIL ex_first_vs_down_up_down" in result.output

    def test_unknown_family_is_config_error(self, tmp_path):
        scn = tmp_path / "bad.scn"
        scn.write_text(json.dumps({"schema": 1, "pipeline": "verify", "scenarios": [
            {"name": "typo", "family": "exfirst", "triple": "ex_first"}]}), encoding="utf-8")
        result = _invoke("run", "--scenario", str(scn))
        assert result.exit_code == EXIT_CONFIG
        assert "scenarios[0].family" in result.output

    def test_missing_file(self, tmp_path):
        assert _invoke("run", "--scenario", str(tmp_path / "none.scn")).exit_code == EXIT_CONFIG

    def test_schedule_guard(self, scenario_dir):
        result = _invoke("run", "--scenario", str(scenario_dir / "verify_ex_first.scn"), "--k-max", "41")
        assert result.exit_code == EXIT_CONFIG
        assert "--k-max" in result.output

    def test_report_independent_of_jobs(self, scenario_dir, tmp_path):
        scn = str(scenario_dir / "verify_ex_first.scn")
        one, eight = tmp_path / "j1.csv", tmp_path / "j8.csv"
        assert _invoke("run", "--scenario", scn, "--k-max", "9", "--jobs", "1", "--out", str(one)).exit_code == 0
        assert _invoke("run", "--scenario", scn, "--k-max", "9", "--jobs", "8", "--out", str(eight)).exit_code == 0
        assert one.read_bytes() == eight.read_bytes()

    def test_ledger_and_metrics(self, scenario_dir, tmp_path):
        url = f"sqlite:///{tmp_path / 'lab.sqlite3'}"
        metrics = tmp_path / "metrics.prom"
        result = _invoke("run", "--scenario", str(scenario_dir / "lsc_sawtooth.scn"), "--k-max", "8",
                         "--out", str(tmp_path / "r.csv"), "--ledger", url, "--metrics-file", str(metrics))
        assert result.exit_code == EXIT_OK, result.output
        run = get_recent_runs(1)[0]
        assert (run.pipeline, run.rows, run.failures, run.exit_code) == ("lsc", 2, 0, 0)
        assert run.version == VERSION
        assert run.release_notes == RELEASE_NOTES
        assert run.finished_at >= run.started_at
        rows = get_run_rows(run.id)
        assert [r["verdict"] for r in rows] == ["lsc", "not_lsc"]
        assert "dm_lab_report_rows_total" in metrics.read_text(encoding="utf-8")


class TestCommands:
    def test_envelope_with_witness(self, tmp_path):
        out = tmp_path / "env.csv"
        result = _invoke("envelope", "--psi", "double_well", "--s0", "0", "--n", "16", "--m", "4", "--witness",
                         "--out", str(out))
        assert result.exit_code == EXIT_OK, result.output
        assert "witness" in result.output
        _, rows = read_csv_report(out.read_text(encoding="utf-8"))
        assert len(rows) == 1 and rows[0][-1] == "true"

    def test_envelope_matrix_point(self, tmp_path):
        out = tmp_path / "env.csv"
        result = _invoke("envelope", "--psi", "frobenius_well", "--s0", "[[0, 0], [0, 0]]", "--n", "8", "--m", "2",
                         "--out", str(out))
        assert result.exit_code == EXIT_OK, result.output
        _, rows = read_csv_report(out.read_text(encoding="utf-8"))
        assert rows[0][1] == "[[0.0,0.0],[0.0,0.0]]"
        assert rows[0][5] == ""

    def test_envelope_bad_psi(self):
        result = _invoke("envelope", "--psi", "quartic", "--s0", "0")
        assert result.exit_code == EXIT_CONFIG

    def test_lsc_command(self, tmp_path):
        args = ["lsc", "--family", "sawtooth", "--triple", "sawtooth", "--k-max", "8", "--out", str(tmp_path / "l.csv")]
        assert _invoke(*args, "--integrand", "grad_power(2)", "--expect", "lsc").exit_code == EXIT_OK
        assert _invoke(*args, "--integrand", "double_well").exit_code == EXIT_FAIL

    def test_pqscb(self):
        ok = _invoke("pqscb", "--psi", "square", "--p", "2")
        assert ok.exit_code == EXIT_OK
        assert ok.output.splitlines()[0] == "eps,constant,exponent,violated"
        assert _invoke("pqscb", "--psi", "neg_power(2)", "--p", "2").exit_code == EXIT_FAIL
        assert _invoke("pqscb", "--psi", "nope", "--p", "2").exit_code == EXIT_CONFIG
