import csv
import io
import json

import pytest

from selbergzeta import cli, geodesics


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestZeta:
    def test_both_backends_agree_within_budget(self):
        code, out = run("zeta", "--m", "1", "--s", "2", "--backend", "both", "--t-max", "1000")
        assert code == 0
        t, e = rows(out)
        assert {t["backend"], e["backend"]} == {"transfer", "euler"}
        diff = abs(float(t["value_re"]) - float(e["value_re"]))
        assert diff <= float(t["error"]) + float(e["error"])

    def test_newform_row(self):
        code, out = run("zeta", "--newform", "6", "--s", "2")
        assert code == 0
        (row,) = rows(out)
        assert row["quantity"] == "newform_zeta" and float(row["error"]) >= 0

    def test_region_guard(self):
        code, _ = run("zeta", "--m", "1", "--s", "0.9", "--backend", "euler")
        assert code == cli.EXIT_INPUT

    def test_discriminant_guard(self):
        code, _ = run("zeta", "--newform", "30", "--s", "2", "--quaternion")
        assert code == cli.EXIT_INPUT

    def test_exactly_one_level(self):
        assert run("zeta", "--s", "2")[0] == cli.EXIT_INPUT

    def test_json_is_deterministic_and_sorted(self):
        a = run("--format", "json", "zeta", "--m", "2", "--s", "2", "3+1i")[1]
        b = run("zeta", "--m", "2", "--s", "2", "3+1i", "--format", "json")[1]
        assert a == b
        data = json.loads(a)
        assert len(data) == 2 and list(data[0]) == sorted(data[0])
        assert data[1]["s_im"] == 1.0

    def test_config_file_under_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("m=2\ns=2\nK=16\n")
        code, out = run("--config", str(cfg), "zeta")
        assert code == 0 and rows(out)[0]["level"] == "2"
        code, out = run("--config", str(cfg), "zeta", "--m", "3")
        assert rows(out)[0]["level"] == "3"

    def test_bad_order(self):
        assert run("zeta", "--m", "1", "--s", "2", "--K", "2")[0] == cli.EXIT_INPUT


class TestZeros:
    def test_first_zero(self):
        code, out = run("zeros", "--m", "1", "--r", "9", "10")
        assert code == 0
        (row,) = rows(out)
        assert abs(float(row["r"]) - 9.5337) < 1e-3 and row["winding"] == "1"

    def test_empty_interval(self):
        code, out = run("zeros", "--m", "1", "--r", "1", "5")
        assert code == 0 and rows(out) == []

    def test_idempotent(self):
        assert run("zeros", "--m", "1", "--r", "9", "10") == run("zeros", "--m", "1", "--r", "9", "10")


class TestTrace:
    def test_missing_table(self):
        assert run("trace", "--eigenvalues", "none")[0] == cli.EXIT_INPUT
        assert run("trace", "--eigenvalues", "/nonexistent.csv")[0] == cli.EXIT_INPUT

    def test_balance(self):
        code, out = run("--format", "json", "trace", "--t", "0.05", "--t-max", "300")
        assert code == 0
        (rep,) = json.loads(out)
        assert rep["within_budget"] is True
        for key in ("identity", "hyperbolic", "elliptic", "parabolic", "continuous", "spectral"):
            assert key in rep

    def test_budget_exceeded(self, tmp_path):
        bad = tmp_path / "bad.csv"
        # the first eigenvalue is missing, which shifts the balance by h(9.53) ~ 1e-2
        bad.write_text("level,r,multiplicity,tag\n1,12.17300832468,1,new\n")
        code, _ = run("trace", "--t", "0.05", "--eigenvalues", str(bad), "--t-max", "300")
        assert code == cli.EXIT_BUDGET

    def test_newform_terms(self):
        code, out = run("trace", "--t", "0.3", "--t-max", "200", "--newform", "6")
        assert code == 0
        table = rows(out)
        assert [r["kind"] for r in table] == ["per_level"] * 4 + ["newform"]
        assert [int(r["level"]) for r in table] == [1, 2, 3, 6, 6]
        assert table[-1]["hyperbolic"] != ""


class TestIngest:
    def test_accept_and_store(self, isolated_cache):
        from selbergzeta.traceformula import load_eigenvalues
        src = isolated_cache / "in.csv"
        src.write_text(load_eigenvalues().to_csv())
        code, out = run("ingest", str(src))
        assert code == 0 and int(rows(out)[0]["rows"]) >= 50
        assert (geodesics.cache_dir() / cli.INGESTED_NAME).exists()

    def test_rejects_with_line_number(self, tmp_path, capsys):
        p = tmp_path / "t.csv"
        p.write_text("level,r,lambda,multiplicity,tag\n1,9.5,90.5,1,new\n1,12.0,144.3,1,new\n")
        assert run("ingest", str(p))[0] == cli.EXIT_INPUT
        assert "line 3" in capsys.readouterr().err

    def test_duplicates_warn(self, tmp_path, capsys):
        p = tmp_path / "t.csv"
        p.write_text("level,r,multiplicity,tag\n1,9.5,1,new\n1,9.5,1,new\n")
        code, out = run("ingest", str(p))
        assert code == 0 and rows(out)[0]["multiplicity"] == "2"
        assert "warning" in capsys.readouterr().err


class TestSpectrum:
    def test_export(self):
        code, out = run("spectrum", "--t-max", "10")
        table = rows(out)
        assert code == 0 and len(table) == len(geodesics.compute_length_spectrum(10))
        assert all(float(r["error"]) > 0 for r in table)
