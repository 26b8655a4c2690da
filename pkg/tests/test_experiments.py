import csv
import dataclasses
import io
import json
import math

import numpy as np
import pytest

from modfrac.experiments import (
    BOUND_COLUMNS,
    IDENTIFY_COLUMNS,
    SCHEMA_VERSION,
    SWEEP_COLUMNS,
    ConfigError,
    ExperimentConfig,
    config_from_mapping,
    load_config,
    load_data,
    paper_input,
    paper_output,
    paper_system,
    run_bound_check,
    run_example1,
    run_example2,
    run_identify,
    run_ts_sweep,
    synthetic_input,
    write_csv,
    write_metadata,
)
from modfrac.fractional import gl_deriv
from modfrac.identification import SystemStructure
from modfrac.signals import SampledSignal


def parse(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestPaperSystem:
    def test_structure(self):
        structure, a = paper_system()
        assert structure.alpha_orders == (0.0, 0.5, 1.5)
        assert structure.beta_orders == (0.0,)
        assert (structure.l, structure.W, a) == (2, 3, (3.0, 2.0, 1.0))
        assert ExperimentConfig().n_basis == 13

    def test_output(self):
        assert paper_output(0.0) == 1.0
        assert paper_output(math.pi / 6) == pytest.approx(2.0, rel=1e-15)
        assert paper_output(8.0) == pytest.approx(0.0944216379933762, rel=1e-14)

    def test_input_against_gl(self):
        h, n = 1e-4, 40_000
        y = SampledSignal.from_function(paper_output, h, n)
        gl = 3 * y.values[n] + 2 * gl_deriv(y, 0.5, n) + gl_deriv(y, 1.5, n)
        assert paper_input(4.0) == pytest.approx(gl, rel=1e-2)

    def test_input_singular_limit(self):
        t = 1e-8
        assert paper_input(t) * t ** 1.5 == pytest.approx(-0.28209479177387814, rel=1e-6)

    def test_input_domain(self):
        with pytest.raises(ValueError):
            paper_input(0.0)
        with pytest.raises(ConfigError):
            synthetic_input(SystemStructure((0.0,), (0.0, 1.0)), (1.0,), [1.0])


class TestConfig:
    def test_defaults(self):
        c = ExperimentConfig()
        assert (c.m, c.ts, c.t_end, c.amp, c.omega, c.snr_db) == (800, 0.01, 8.0, 0.5, 1e3, 22.0)
        assert len(c.horizon_indices()) == 63

    @pytest.mark.parametrize("bad", [
        {"ts": 0.03}, {"noise": "pink"}, {"horizon_start": 9.0}, {"seeds": 0},
        {"alpha": (0.5, 0.2)}, {"a_true": (1.0,)},
    ])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            ExperimentConfig(**bad)

    def test_toml(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text('[grid]\nts = 0.02\n[noise]\nkind = "gauss"\nseeds = 4\n'
                        '[system]\nalpha = [0.0, 0.5, 1.5]\n')
        c = load_config(path)
        assert (c.ts, c.noise, c.seeds, c.alpha) == (0.02, "gauss", 4, (0.0, 0.5, 1.5))

    def test_toml_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.toml")
        bad = tmp_path / "bad.toml"
        bad.write_text("[grid\n")
        with pytest.raises(ConfigError):
            load_config(bad)
        with pytest.raises(ConfigError, match="section"):
            config_from_mapping({"plot": {}})
        with pytest.raises(ConfigError, match="key"):
            config_from_mapping({"grid": {"dt": 0.1}})


class TestData:
    def write(self, path, u0="inf"):
        t = np.arange(401) * 0.01
        u = [u0] + [repr(float(v)) for v in paper_input(t[1:])]
        with open(path, "w") as fh:
            fh.write("t,u,y\n")
            for x, a, b in zip(t, u, paper_output(t)):
                fh.write(f"{float(x)!r},{a},{float(b)!r}\n")

    def test_identify_from_file(self, tmp_path):
        path = tmp_path / "d.csv"
        self.write(path)
        u, y = load_data(path)
        assert u.m == 400 and math.isinf(u.values[0])
        result = run_identify(ExperimentConfig(data=str(path), noise="none", t_end=4.0,
                                               horizon_start=4.0))
        est = result.estimates[0][-1]
        assert est.params == pytest.approx([3, 2, 1], rel=1e-2)
        assert result.rows[0]["noise_kind"] == "data"

    def test_bad_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("t,u\n0,1\n")
        with pytest.raises(ConfigError):
            load_data(path)
        path.write_text("t,u,y\n0,1,1\n0.1,1,1\n0.3,1,1\n")
        with pytest.raises(ConfigError):
            load_data(path)
        path.write_text("t,u,y\n0,1,1\nx,1,1\n0.2,1,1\n")
        with pytest.raises(ConfigError):
            load_data(path)


class TestRuns:
    def test_identify_noise_free(self):
        result = run_identify(ExperimentConfig(noise="none", horizon_start=8.0))
        rows = result.rows
        assert [r["param_name"] for r in rows] == ["a0", "a1", "a2"]
        assert all(r["rel_error"] < 1e-2 and r["schema_version"] == SCHEMA_VERSION for r in rows)

    def test_example1(self):
        result = run_example1(ExperimentConfig(horizon_start=7.0, horizon_step=0.5))
        assert max(r["rel_error"] for r in result.rows) < 0.05
        assert len(result.extra) == 3 * 13 * 3
        assert all(b["max_discrete"] <= b["bound"] for b in result.extra)

    def test_example2_deterministic(self):
        config = ExperimentConfig(noise="gauss", seeds=3, horizon_start=7.5, horizon_step=0.5)
        first, second = run_example2(config), run_example2(config)
        assert first.csv() == second.csv()
        assert {r["seed"] for r in first.rows} == {0, 1, 2}
        assert len(first.extra) == 2 * 3

    def test_example2_sigma_doubling(self):
        base = ExperimentConfig(noise="gauss", seeds=20, horizon_start=8.0)
        loud = dataclasses.replace(base, snr_db=22.0 - 20 * math.log10(2))
        spread = [np.array([[r["estimate"] for r in run_example2(c).rows
                             if r["param_name"] == "a1"]]).std() for c in (base, loud)]
        assert spread[1] / spread[0] == pytest.approx(2.0, rel=0.05)

    def test_sweep_single_row(self):
        result = run_ts_sweep(ExperimentConfig(noise="gauss", ts_list=(0.01,), seeds=5))
        assert len(result.rows) == 1
        assert result.rows[0]["seeds"] == 5
        with pytest.raises(ConfigError):
            run_ts_sweep(ExperimentConfig(ts_list=(0.03,)))

    def test_bound_check(self):
        result = run_bound_check(ExperimentConfig(phases=10))
        assert len(result.rows) == 13 * 3
        assert all(r["within_bound"] for r in result.rows)


class TestOutput:
    def test_csv_format(self, tmp_path):
        rows = [{"a": 0.1, "b": True, "c": None, "d": 3}]
        text = write_csv(rows, ["a", "b", "c", "d"], tmp_path / "x.csv")
        assert text == "a,b,c,d\n0.1,true,,3\n"
        assert (tmp_path / "x.csv").read_text() == text

    def test_float_round_trip(self):
        value = 1 / 3
        assert float(parse(write_csv([{"x": value}], ["x"]))[0]["x"]) == value

    def test_metadata(self, tmp_path):
        write_metadata(tmp_path / "r.csv", ExperimentConfig(), "example1")
        meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
        assert meta["schema_version"] == SCHEMA_VERSION and "PCG64" in meta["rng"]
        assert meta["config"]["omega"] == 1e3

    def test_schema_columns(self):
        assert IDENTIFY_COLUMNS[0] == BOUND_COLUMNS[0] == SWEEP_COLUMNS[0] == "schema_version"
