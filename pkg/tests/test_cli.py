import csv
import io
import json

import pytest

from conftest import BASE_TEXT
from modules.cli import EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_OK, main, sweep_rows, write_sweep_csv
from modules.errors import DelegatixError
from modules.parsers import parse_scenario_text

ALIGNED_TEXT = BASE_TEXT.replace("v00 = 1.25", "v00 = 1").replace("v01 = -0.25", "v01 = 0") \
    .replace("v10 = 0.25", "v10 = 0").replace("v11 = 0.75", "v11 = 1")


@pytest.fixture
def base_path(scenario_file):
    return scenario_file()


def run_json(capsys, argv):
    code = main(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out)


class TestDelegate:
    def test_delegates_at_prior(self, capsys, base_path):
        code, payload = run_json(capsys, ["delegate", base_path])
        assert code == EXIT_OK
        assert payload["decision"]["delegate"] is True
        assert payload["decision"]["H"] == pytest.approx(0.8)
        assert payload["equivalence_holds"] is True
        assert payload["disagreement_interval"] == pytest.approx([0.5, 0.75])

    def test_acts_directly_at_high_interim(self, capsys, base_path):
        code, payload = run_json(capsys, ["delegate", base_path, "--interim", "0.9"])
        assert code == EXIT_OK
        assert payload["decision"]["delegate"] is False
        assert payload["final_posteriors"]["low"] == pytest.approx(9 / 13)

    def test_text_output(self, capsys, base_path):
        assert main(["delegate", base_path, "--interim", "3/7"]) == EXIT_OK
        assert "delegate" in capsys.readouterr().out

    def test_save_writes_run(self, capsys, base_path, tmp_path):
        out = tmp_path / "runs"
        assert main(["delegate", base_path, "--save", "--out", str(out)]) == EXIT_OK
        (run,) = list(out.iterdir())
        assert run.name.startswith("run_base_")
        assert len(list((run / "results").glob("delegation_*.json"))) == 1


class TestDesign:
    def test_one_sided(self, capsys, base_path):
        code, payload = run_json(capsys, ["design", base_path])
        assert code == EXIT_OK
        assert payload["design"]["regime"] == "OneSidedHigh"
        assert payload["rho"] == pytest.approx(3 / 7)
        assert payload["breakpoints"] == pytest.approx([3 / 7, 12 / 13])
        # table form of the maximal posteriors [0.35, 0.55] at prior 0.5
        assert payload["constraint_signal"] == pytest.approx({"p0": 0.325, "p1": 0.825})

    def test_text_lists_maximal_signal(self, capsys, base_path):
        assert main(["design", base_path]) == EXIT_OK
        assert "maximal signal: p0 = 0.325000, p1 = 0.825000" in capsys.readouterr().out

    def test_missing_constraint(self, capsys, scenario_file):
        path = scenario_file(BASE_TEXT.split("[constraint]")[0])
        assert main(["design", path]) == EXIT_INVALID
        assert "constraint" in capsys.readouterr().err

    def test_bracket_violation(self, capsys, scenario_file):
        path = scenario_file(BASE_TEXT.replace("[0.35, 0.55]", "[0.6, 0.9]"))
        assert main(["design", path]) == EXIT_INVALID
        assert "bracket" in capsys.readouterr().err


class TestSweep:
    def test_delegation_rows(self):
        doc = parse_scenario_text(BASE_TEXT)
        rows = sweep_rows(doc, "q", 0.55, 0.8, 2, ["Delegation"], interim=0.9)
        assert [r["value"] for r in rows] == pytest.approx([0.55, 0.8])
        assert [r["payoff"] for r in rows] == pytest.approx([0.9, 0.8])

    def test_single_step(self):
        doc = parse_scenario_text(BASE_TEXT)
        rows = sweep_rows(doc, "prior", 0.5, 0.9, 1, ["OptimalJoint", "NoHuman"])
        assert len(rows) == 2
        assert {r["value"] for r in rows} == {0.5}

    def test_policy_rows(self):
        doc = parse_scenario_text(BASE_TEXT)
        rows = sweep_rows(doc, "max_low", 0.35, 0.1, 2, ["OptimalJoint"])
        assert rows[0]["design_regime"] == "OneSidedHigh"
        # widening the constraint past the jump makes the maximal split convexifiable
        assert rows[1]["design_regime"] == "Maximal"
        assert rows[1]["payoff"] == pytest.approx(0.8 + 0.1 / 9)

    def test_unknown_field(self):
        with pytest.raises(DelegatixError):
            sweep_rows(parse_scenario_text(BASE_TEXT), "gamma", 0.1, 0.2, 2, ["OptimalJoint"])

    def test_unknown_regime(self):
        with pytest.raises(ValueError):
            sweep_rows(parse_scenario_text(BASE_TEXT), "q", 0.6, 0.8, 2, ["Everything"])

    def test_csv_format(self):
        stream = io.StringIO()
        write_sweep_csv([{"value": 0.1, "regime": "H", "payoff": 1 / 3, "design_regime": "",
                          "delegate": False}], stream)
        header, row = list(csv.reader(io.StringIO(stream.getvalue())))
        assert header == ["value", "regime", "payoff", "design_regime", "delegate"]
        assert row == ["0.10000000000000001", "H", "0.33333333333333331", "", "false"]

    def test_cli_writes_csv(self, base_path, tmp_path):
        target = tmp_path / "sweep.csv"
        code = main(["sweep", base_path, "--vary", "interim", "--from", "0.1", "--to", "0.9",
                     "--steps", "5", "--regimes", "Delegation,H", "--csv", str(target)])
        assert code == EXIT_OK
        rows = list(csv.DictReader(target.open(encoding="utf-8")))
        assert len(rows) == 10
        assert {r["delegate"] for r in rows} <= {"true", "false"}


class TestWitness:
    def test_prop6(self, capsys, base_path):
        code, payload = run_json(capsys, ["witness", base_path, "--prop", "6"])
        assert code == EXIT_OK
        assert payload["found"] is True
        assert payload["witness"]["payoff_gap"] == pytest.approx(0.1)

    def test_not_found_is_a_failed_check(self, capsys, base_path):
        code = main(["witness", base_path, "--prop", "7", "--low-range", "0.43,1", "--high-range", "0.43,1"])
        assert code == EXIT_CHECK_FAILED
        assert "NotFound" in capsys.readouterr().out

    def test_precondition_is_reported(self, capsys, scenario_file):
        code, payload = run_json(capsys, ["witness", scenario_file(ALIGNED_TEXT), "--prop", "7"])
        assert code == EXIT_OK
        assert payload["reason"] == "AlignedPreferences"

    def test_bad_range(self, base_path):
        with pytest.raises(SystemExit) as info:
            main(["witness", base_path, "--prop", "7", "--low-range", "0.4"])
        assert info.value.code == 2


class TestOracleAndReport:
    def test_sample_floor(self, capsys, base_path):
        assert main(["oracle-check", base_path, "--mc-samples", "10"]) == EXIT_INVALID
        assert "1000" in capsys.readouterr().err

    def test_oracle_passes(self, capsys, base_path):
        code, payload = run_json(capsys, ["oracle-check", base_path, "--grid-n", "101",
                                          "--mc-samples", "20000", "--seed", "3"])
        assert code == EXIT_OK
        assert all(check["passed"] for check in payload["checks"])

    def test_report(self, capsys, base_path):
        code, payload = run_json(capsys, ["report", base_path])
        assert code == EXIT_OK
        ranks = {row["regime"]: row["rank"] for row in payload["rows"]}
        assert ranks["OptimalJoint"] == 1 and ranks["NoHuman"] == 3

    def test_pdf_goes_to_the_run_with_save(self, capsys, base_path, tmp_path):
        out = tmp_path / "runs"
        code = main(["report", base_path, "--save", "--out", str(out), "--pdf", "elsewhere/regimes.pdf"])
        assert code == EXIT_OK
        (run,) = list(out.iterdir())
        assert (run / "reports" / "regimes.pdf").read_bytes()[:5] == b"%PDF-"
        assert len(list((run / "results").glob("regime_report_*.json"))) == 1

    def test_pdf_without_save(self, capsys, base_path, tmp_path):
        target = tmp_path / "regimes.pdf"
        assert main(["report", base_path, "--pdf", str(target)]) == EXIT_OK
        assert target.read_bytes()[:5] == b"%PDF-"

    def test_malformed_file(self, capsys, scenario_file):
        path = scenario_file("[principal]\nr00 = one\n")
        assert main(["report", path]) == EXIT_INVALID
        assert "line 2" in capsys.readouterr().err

    def test_missing_file(self, capsys, tmp_path):
        assert main(["design", str(tmp_path / "missing.txt")]) == EXIT_INVALID
