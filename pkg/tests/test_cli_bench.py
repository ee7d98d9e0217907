import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from cli_bench import (
    ExperimentConfig,
    SolverSpec,
    default_table_config,
    load_bench_configs,
    main,
    parse_complex,
    parse_length,
    parse_points,
    profile_from_dict,
)
from core.config import Constants
from core.exceptions import ConfigSchemaError
from vsie_operator import ProfileKind

SMALL_BENCH = {
    "cases": [
        {"name": "eps=2", "problem": {"profile": {"eps": 2, "radius": "1/30"}, "n_cells": 3}},
        {"name": "eps=4+1i", "problem": {"profile": {"eps": "4+1i", "radius": "1/30"}, "n_cells": 3}},
    ],
    "solvers": [{"method": "GSI"}, {"method": "GCI", "n": 3}, {"method": "GMRES", "n": 2}],
}


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


class TestParsing:

    @pytest.mark.parametrize("value, expected", [
        (2, 2 + 0j),
        (1.5, 1.5 + 0j),
        ([12, 4], 12 + 4j),
        ("12+4i", 12 + 4j),
        ("15 + 10i", 15 + 10j),
    ])
    def test_complex(self, value, expected):
        assert parse_complex(value) == expected

    @pytest.mark.parametrize("value", ["abc", [1, 2, 3], True, None])
    def test_bad_complex(self, value):
        with pytest.raises(ConfigSchemaError):
            parse_complex(value)

    def test_length(self):
        assert_allclose(parse_length("1/30", "radius"), 1 / 30)
        with pytest.raises(ConfigSchemaError):
            parse_length("-1", "radius")

    def test_points(self):
        assert parse_points("1,0:3,1:2,2") == [1 + 0j, 3 + 1j, 2 + 2j]
        with pytest.raises(ConfigSchemaError):
            parse_points("1;0")

    def test_solver_spec(self):
        assert SolverSpec.parse("GCI:5") == SolverSpec("GCI", 5)
        assert SolverSpec.parse("gmres:10").label == "GMRES, n=10"
        assert SolverSpec.parse("GSI").label == "GSI"
        for text in ("GSI:2", "GCI:x", "CG:3", "GCI:0"):
            with pytest.raises(ConfigSchemaError):
                SolverSpec.parse(text)

    def test_layered_profile(self):
        profile = profile_from_dict({"kind": "LayeredBall", "eps2": "2+2i", "eps1": "3+1i", "radius": "1/30"})
        assert profile.kind == ProfileKind.LAYERED_BALL
        assert_allclose([profile.d2, profile.d1], [1 / 60, 2 / 90])

    def test_unknown_profile_key(self):
        with pytest.raises(ConfigSchemaError):
            profile_from_dict({"epsilon": 2})


class TestExperimentConfig:

    def test_round_trip(self):
        cfg = ExperimentConfig.from_dict({"name": "x", "problem": {"profile": {"eps": "12+4i"}, "n_cells": 4},
                                          "solvers": [{"method": "GCI", "n": 5}], "tol": 1e-6})
        again = ExperimentConfig.from_dict(cfg.to_dict())
        assert again.to_dict() == cfg.to_dict()
        assert again.solvers == (SolverSpec("GCI", 5),)

    @pytest.mark.parametrize("payload", [
        {"bogus": 1},
        {"problem": {"n_cells": 1}},
        {"problem": {"k0": -1}},
        {"tol": 0},
        {"solvers": []},
        {"solvers": [{"method": "GSI", "n": 3}]},
        {"initial_guess": "ones"},
    ])
    def test_invalid(self, payload):
        with pytest.raises(ConfigSchemaError):
            ExperimentConfig.from_dict(payload)

    def test_default_table(self):
        configs = load_bench_configs(default_table_config(4))
        assert len(configs) == 7
        assert all(len(cfg.solvers) == 6 for cfg in configs)
        assert configs[-1].profile.kind == ProfileKind.LAYERED_BALL
        assert configs[-1].profile.eps2 == 2 + 2j
        assert [cfg.name for cfg in configs][:2] == ["eps=2", "eps=8"]

    def test_shared_settings(self):
        configs = load_bench_configs({**SMALL_BENCH, "tol": 1e-7})
        assert all(cfg.tol == 1e-7 for cfg in configs)
        assert configs[1].profile.eps == 4 + 1j


class TestParamsCommand:

    def test_real_segment(self, capsys):
        assert main(["params", "--segment", "1,0:3,0"]) == Constants.EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert_allclose([payload["mu0"]["re"], payload["mu0"]["im"]], [2.0, 0.0], atol=1e-14)
        assert_allclose(payload["rho0"], 0.5, atol=1e-14)
        assert payload["provenance"] == "RealSegment"
        assert_allclose(payload["schedule"][0]["tau_re"], 0.5, atol=1e-14)

    def test_triangle(self, out_dir):
        assert main(["params", "--triangle", "1,0:3,1:2,2", "--n", "10", "--out", str(out_dir)]) == 0
        payload = json.loads((out_dir / Constants.PARAMS_JSON).read_text())
        assert payload["n"] == 10
        assert payload["provenance"] == "TriangleSides"
        assert len(payload["schedule"]) == 10
        assert payload["rho_bound"] < 1

    def test_circle(self, capsys):
        assert main(["params", "--circle", "2,0:1", "--n", "4"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert_allclose(payload["rho_bound"], 1 / 16)

    def test_origin_inside(self):
        assert main(["params", "--points", "1,0:-1,0:0,1"]) == Constants.EXIT_INVALID_REGION

    def test_segment_through_origin(self):
        assert main(["params", "--segment", "-1,-1:1,1"]) == Constants.EXIT_INVALID_REGION

    def test_malformed_points(self):
        assert main(["params", "--points", "1;0"]) == Constants.EXIT_CONFIG_ERROR


class TestSpectrumCommand:

    def test_vacuum(self, out_dir):
        code = main(["spectrum", "--eps", "1", "--radius", "1/20", "--n-cells", "3", "--out", str(out_dir)])
        assert code == Constants.EXIT_OK
        frame = pd.read_csv(out_dir / Constants.SPECTRUM_CSV)
        assert list(frame.columns) == ["re", "im"]
        assert len(frame) == 81
        assert_allclose(frame["re"], 1.0, atol=1e-14)
        assert_allclose(frame["im"], 0.0, atol=1e-14)
        report = json.loads((out_dir / Constants.REPORT_JSON).read_text())
        assert report["containment_fraction"] == 1.0
        assert report["config"]["problem"]["n_cells"] == 3

    def test_bad_config(self, tmp_path, out_dir):
        path = write_config(tmp_path / "bad.json", {"problem": {"profile": {"eps": "two"}}})
        assert main(["spectrum", "--config", path, "--out", str(out_dir)]) == Constants.EXIT_CONFIG_ERROR

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["spectrum", "--config", str(path)]) == Constants.EXIT_CONFIG_ERROR


class TestSolveCommand:

    def test_vacuum_takes_one_matvec(self, out_dir):
        code = main(["solve", "--eps", "1", "--radius", "1/20", "--n-cells", "3", "--out", str(out_dir)])
        assert code == Constants.EXIT_OK
        frame = pd.read_csv(out_dir / Constants.BENCH_CSV)
        assert list(frame.columns) == ["case", "solver", "n", "L", "converged", "delta", "rho_bound"]
        assert list(frame["solver"]) == ["GSI", "GCI", "GMRES"]
        assert list(frame["L"]) == [1, 1, 1]
        assert frame["converged"].all()
        rows = json.loads((out_dir / Constants.REPORT_JSON).read_text())["rows"]
        assert_allclose([row["rho_realized"] for row in rows[:2]], 0.0, atol=1e-14)
        assert rows[2]["rho_realized"] is None

    def test_homogeneous_gsi(self, out_dir):
        code = main(["solve", "--eps", "2", "--radius", "1/30", "--n-cells", "4", "--solver", "GSI",
                     "--out", str(out_dir)])
        assert code == Constants.EXIT_OK
        report = json.loads((out_dir / Constants.REPORT_JSON).read_text())
        row = report["rows"][0]
        assert row["converged"]
        assert 5 <= row["L"] <= 20
        assert report["config"]["problem"]["profile"]["eps"] == [2.0, 0.0]

    def test_config_file_with_override(self, tmp_path, out_dir):
        path = write_config(tmp_path / "case.json", {"problem": {"profile": {"eps": 8}, "n_cells": 3},
                                                     "solvers": [{"method": "GMRES", "n": 5}]})
        assert main(["solve", "--config", path, "--eps", "2", "--out", str(out_dir)]) == 0
        report = json.loads((out_dir / Constants.REPORT_JSON).read_text())
        assert report["config"]["problem"]["profile"]["eps"] == [2.0, 0.0]
        assert report["config"]["solvers"] == [{"method": "GMRES", "n": 5}]

    def test_none_converged(self, out_dir):
        code = main(["solve", "--eps", "2", "--n-cells", "3", "--max-matvecs", "1", "--out", str(out_dir)])
        assert code == Constants.EXIT_NOT_CONVERGED
        frame = pd.read_csv(out_dir / Constants.BENCH_CSV)
        assert not frame["converged"].any()
        assert (frame["L"] <= 1).all()

    def test_random_initial_guess(self, tmp_path, out_dir):
        path = write_config(tmp_path / "case.json", {"problem": {"profile": {"eps": 2}, "n_cells": 3},
                                                     "solvers": [{"method": "GMRES", "n": 5}],
                                                     "initial_guess": "random", "seed": 3})
        assert main(["solve", "--config", path, "--out", str(out_dir)]) == 0
        frame = pd.read_csv(out_dir / Constants.BENCH_CSV)
        assert frame["converged"].all()


class TestBenchCommand:

    def test_artifacts(self, tmp_path, out_dir):
        path = write_config(tmp_path / "bench.json", SMALL_BENCH)
        assert main(["bench", "--config", path, "--out", str(out_dir)]) == Constants.EXIT_OK
        frame = pd.read_csv(out_dir / Constants.BENCH_CSV)
        assert list(frame["case"]) == ["eps=2"] * 3 + ["eps=4+1i"] * 3
        assert list(frame["solver"]) == ["GSI", "GCI", "GMRES"] * 2
        cost = pd.read_csv(out_dir / Constants.BENCH_COST_CSV)
        assert (cost["M_iter_est"] > 0).all()
        table = (out_dir / Constants.TABLE_MD).read_text()
        assert "| case | GSI | GCI, n=3 | GMRES, n=2 |" in table
        assert "```json" in table

    def test_deterministic(self, tmp_path):
        path = write_config(tmp_path / "bench.json", SMALL_BENCH)
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["bench", "--config", path, "--out", str(first)]) == 0
        assert main(["bench", "--config", path, "--out", str(second)]) == 0
        assert (first / Constants.BENCH_CSV).read_bytes() == (second / Constants.BENCH_CSV).read_bytes()

    def test_workers_keep_order(self, tmp_path):
        path = write_config(tmp_path / "bench.json", SMALL_BENCH)
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        assert main(["bench", "--config", path, "--workers", "1", "--out", str(serial)]) == 0
        assert main(["bench", "--config", path, "--workers", "2", "--out", str(parallel)]) == 0
        assert (serial / Constants.BENCH_CSV).read_bytes() == (parallel / Constants.BENCH_CSV).read_bytes()

    def test_failed_solver_is_recorded(self, tmp_path, out_dir):
        payload = {"cases": [{"problem": {"profile": {"eps": 2}, "n_cells": 3},
                              "region": {"kind": "polygon", "points": [[1, 0], [-1, 0], [0, 1]]}}],
                   "solvers": [{"method": "GSI"}, {"method": "GMRES", "n": 3}]}
        path = write_config(tmp_path / "bench.json", payload)
        assert main(["bench", "--config", path, "--out", str(out_dir)]) == Constants.EXIT_OK
        frame = pd.read_csv(out_dir / Constants.BENCH_CSV)
        assert list(frame["converged"]) == [False, True]
        assert "error" in (out_dir / Constants.TABLE_MD).read_text()
        assert np.isnan(frame["delta"][0])


@pytest.mark.slow
class TestTableOrdering:

    @staticmethod
    def rows_for(eps, solvers):
        from cli_bench import run_case

        cfg = ExperimentConfig.from_dict({"name": f"eps={eps}",
                                          "problem": {"profile": {"eps": eps, "radius": "1/30"}, "n_cells": 6},
                                          "solvers": solvers})
        return {SolverSpec(row.solver, row.n).label: row for row in run_case(cfg)}

    def test_gsi_low_contrast(self):
        row = self.rows_for(2, [{"method": "GSI"}])["GSI"]
        assert row.converged
        assert row.L <= 25

    def test_gci_beats_gsi_high_contrast(self):
        rows = self.rows_for(20, [{"method": "GSI"}, {"method": "GCI", "n": 10}])
        assert rows["GCI, n=10"].converged
        assert rows["GCI, n=10"].L < rows["GSI"].L

    def test_lossy_all_converge(self):
        rows = self.rows_for("12+4i", [{"method": "GSI"}, {"method": "GCI", "n": 10}, {"method": "GMRES", "n": 10}])
        for row in rows.values():
            assert row.converged
            assert row.L <= 200

    def test_gmres_memory_exceeds_gci(self):
        rows = self.rows_for(15, [{"method": "GCI", "n": 10}, {"method": "GMRES", "n": 10}])
        gci = rows["GCI, n=10"].report.cost_model.M_iter_est
        gmres = rows["GMRES, n=10"].report.cost_model.M_iter_est
        assert gmres >= 3 * gci

    @pytest.mark.parametrize("eps", [15, 20])
    def test_spectrum_escapes_segment(self, eps):
        from spectral_analysis import operator_spectrum
        from vsie_operator import PermittivityProfile

        eigs = np.asarray(operator_spectrum(PermittivityProfile.homogeneous_ball(eps, 1.0 / 30), 6))
        assert eigs.real.min() < 1.0

        rows = self.rows_for(eps, [{"method": "GSI"}, {"method": "GCI", "n": 10}, {"method": "GMRES", "n": 10}])
        assert all(row.converged for row in rows.values())
        assert rows["GMRES, n=10"].L < rows["GCI, n=10"].L < rows["GSI"].L

        gci = rows["GCI, n=10"]
        assert gci.rho_realized > 10 * gci.rho_bound
        if eps == 20:
            assert gci.rho_realized > 1.0
