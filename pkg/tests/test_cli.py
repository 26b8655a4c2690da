import csv
import io
import json
import subprocess
import sys

import pytest

from modfrac.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestDeriv:
    def test_monomial(self, capsys):
        assert main(["deriv", "--order", "0.5", "--power", "2", "--ts", "0.5", "--t-end", "1"]) == 0
        rows = rows_of(capsys.readouterr().out)
        assert [float(r["t"]) for r in rows] == [0.5, 1.0]
        assert float(rows[1]["value"]) == pytest.approx(1.5045055561273502, rel=1e-14)

    def test_sin_with_oracle(self, capsys):
        assert main(["deriv", "--kind", "sin", "--order", "0.5", "--ts", "0.001", "--t-end", "2",
                     "--gl"]) == 0
        last = rows_of(capsys.readouterr().out)[-1]
        assert float(last["value"]) == pytest.approx(0.8031000261393039, rel=1e-12)
        assert float(last["gl_oracle"]) == pytest.approx(float(last["value"]), rel=1e-2)

    def test_basis_to_file(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["deriv", "--kind", "basis", "--order", "1.5", "--index", "3",
                     "--out", str(out)]) == 0
        assert len(rows_of(out.read_text())) == 800


class TestBasisCheck:
    def test_pass(self, capsys):
        assert main(["basis-check"]) == EXIT_OK
        assert "all properties hold" in capsys.readouterr().out

    def test_fail(self, capsys):
        assert main(["basis-check", "--mu", "0", "--l", "2", "--orders", "0"]) == EXIT_NUMERIC
        assert "failed" in capsys.readouterr().out


class TestRunCommands:
    def test_identify(self, tmp_path):
        out = tmp_path / "id.csv"
        code = main(["identify", "--noise", "none", "--horizon-start", "8", "--out", str(out)])
        assert code == EXIT_OK
        rows = rows_of(out.read_text())
        assert [r["param_name"] for r in rows] == ["a0", "a1", "a2"]
        assert all(float(r["rel_error"]) < 1e-2 for r in rows)
        meta = json.loads((tmp_path / "id.csv.meta.json").read_text())
        assert meta["command"] == "identify" and meta["config"]["noise"] == "none"

    def test_identify_from_data(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        lines = ["t,u,y"] + [f"{j * 0.1!r},1.0,1.0" for j in range(60)]
        data.write_text("\n".join(lines) + "\n")
        assert main(["identify", "--data", str(data), "--t-end", "5.9", "--ts", "0.1",
                     "--horizon-start", "5.9"]) == EXIT_OK
        rows = rows_of(capsys.readouterr().out)
        assert rows[0]["noise_kind"] == "data"

    def test_config_then_flags(self, tmp_path, capsys):
        config = tmp_path / "c.toml"
        config.write_text("[noise]\nkind = \"none\"\n[horizons]\nstart = 7.0\nstep = 0.5\n")
        assert main(["identify", "--config", str(config), "--horizon-start", "7.5"]) == EXIT_OK
        horizons = {float(r["horizon_s"]) for r in rows_of(capsys.readouterr().out)}
        assert horizons == {7.5, 8.0}

    def test_example1_bounds(self, tmp_path):
        out, bounds = tmp_path / "e1.csv", tmp_path / "b.csv"
        assert main(["example1", "--horizon-start", "8", "--out", str(out),
                     "--bounds-out", str(bounds)]) == EXIT_OK
        assert all(float(r["rel_error"]) < 0.05 for r in rows_of(out.read_text()))
        assert len(rows_of(bounds.read_text())) == 13 * 3

    def test_example2_summary(self, capsys):
        assert main(["example2", "--seeds", "2", "--horizon-start", "8"]) == EXIT_OK
        captured = capsys.readouterr()
        assert len(rows_of(captured.out)) == 2 * 3
        assert "mean rel error" in captured.err

    def test_sweep(self, capsys):
        assert main(["sweep-ts", "--ts-list", "0.02,0.01", "--seeds", "5"]) == EXIT_OK
        assert [float(r["ts_s"]) for r in rows_of(capsys.readouterr().out)] == [0.02, 0.01]

    def test_bound_check(self, capsys):
        assert main(["bound-check", "--phases", "5"]) == EXIT_OK
        rows = rows_of(capsys.readouterr().out)
        assert all(r["within_bound"] == "true" for r in rows)

    def test_strict_flags_ill_conditioning(self, tmp_path, capsys):
        data = tmp_path / "zeros.csv"
        data.write_text("t,u,y\n" + "".join(f"{j * 0.1!r},0.0,0.0\n" for j in range(60)))
        argv = ["identify", "--data", str(data), "--t-end", "5.9", "--ts", "0.1",
                "--horizon-start", "5.9"]
        assert main(argv) == EXIT_OK
        assert float(rows_of(capsys.readouterr().out)[0]["cond_number"]) == float("inf")
        assert main(argv + ["--strict"]) == EXIT_NUMERIC
        assert "--strict" in capsys.readouterr().err


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ["identify", "--ts", "0.03"],
        ["identify", "--config", "/nonexistent.toml"],
        ["example1", "--horizon-start", "0.2"],
        ["sweep-ts", "--ts-list", "0.03"],
        ["identify", "--data", "/nonexistent.csv"],
    ])
    def test_config_errors(self, argv, capsys):
        assert main(argv) == EXIT_CONFIG
        assert capsys.readouterr().err

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["identify", "--normalize", "maybe"])
        assert exc.value.code == 2

    def test_convergence_failure(self, monkeypatch, capsys):
        from modfrac import cli
        from modfrac.fractional import ConvergenceError

        def boom(*args, **kwargs):
            raise ConvergenceError("series did not converge")

        monkeypatch.setattr(cli, "rl_deriv_sin", boom)
        assert main(["deriv", "--kind", "sin", "--order", "0.5"]) == EXIT_NUMERIC
        assert "numerical failure" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "modfrac", "deriv", "--order", "1",
                           "--ts", "0.5", "--t-end", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert rows_of(proc.stdout)[-1]["value"] == "2.0"
