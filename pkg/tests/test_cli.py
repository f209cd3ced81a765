import subprocess
import sys

import pytest

import bicov as bc
from bicov.bimodels import LmcBivariate, model_from_text, model_to_text
from bicov.cli import main
from bicov import BivariateModel, matern, spherical, stable


def write_model(tmp_path, model, name="model.txt"):
    path = tmp_path / name
    path.write_text(model_to_text(model))
    return str(path)


VALID_STABLE = bc.stable_bivariate(1.0, 1.0, 0.2, 0.2, 0.6, 0.5, 2.0, 1.0, 3.0)
NZ_STABLE = bc.stable_bivariate(1.0, 1.0, 0.3, 0.8, 0.55, 0.6, 1.0, 1.0, 1.0)
EDGE_STABLE = bc.stable_bivariate(1.0, 1.0, 0.2, 1.0, 1.5, 1.0, 1.0, 1.0, 1.0)


class TestValidate:
    def test_valid_stable_within_bound(self, tmp_path, capsys):
        code = main(["validate", write_model(tmp_path, VALID_STABLE), "--dim", "1"])
        out = capsys.readouterr().out
        assert code == 0
        fields = dict(ln.split("=", 1) for ln in out.strip().splitlines())
        assert fields["kind"] == "stable"
        assert fields["decidability"] == "SufficientBound"
        assert 0.2 <= float(fields["rho_bound"]) < 1.0

    def test_above_bound_is_inconclusive(self, tmp_path):
        m = bc.stable_bivariate(1.0, 1.0, 0.5, 0.2, 0.6, 0.5, 2.0, 1.0, 3.0)
        assert main(["validate", write_model(tmp_path, m)]) == 1

    def test_necessarily_zero_rejects_nonzero_rho(self, tmp_path, capsys):
        code = main(["validate", write_model(tmp_path, NZ_STABLE)])
        out = capsys.readouterr().out
        assert code == 2
        assert "decidability=NecessarilyZero" in out

    def test_necessarily_zero_accepts_zero_rho(self, tmp_path):
        m = bc.stable_bivariate(1.0, 1.0, 0.0, 0.8, 0.55, 0.6, 1.0, 1.0, 1.0)
        assert main(["validate", write_model(tmp_path, m)]) == 0

    def test_marginal_exponent_edge_is_inconclusive(self, tmp_path, capsys):
        code = main(["validate", write_model(tmp_path, EDGE_STABLE)])
        out = capsys.readouterr().out
        assert code == 1
        assert "decidability=ZeroInfimumInconclusive" in out

    def test_valid_cauchy(self, tmp_path):
        m = bc.cauchy_bivariate(1.0, 1.0, 0.2, 0.5, 0.7, 0.9,
                                2.0, 2.5, 2.1, 2.0, 2.25, 2.5)
        assert main(["validate", write_model(tmp_path, m)]) == 0

    def test_spherical_distinct_scales_invalid(self, tmp_path, capsys):
        m = BivariateModel(1.0, 1.0, 0.05, spherical(1.0),
                           spherical(1.4), spherical(2.0))
        code = main(["validate", write_model(tmp_path, m)])
        out = capsys.readouterr().out
        assert code == 2
        assert "valid=false" in out
        assert "witness_frequency=" in out

    def test_spherical_common_scale_valid(self, tmp_path):
        m = BivariateModel(1.0, 1.0, 0.3, spherical(1.3),
                           spherical(1.3), spherical(1.3))
        assert main(["validate", write_model(tmp_path, m)]) == 0

    def test_lmc_always_valid(self, tmp_path):
        m = LmcBivariate((1.0, 0.3, 0.2), (0.1, 0.25, 0.9),
                         stable(1.0, 0.5), stable(1.0, 2.0))
        assert main(["validate", write_model(tmp_path, m)]) == 0

    def test_matern_zero_rho_valid(self, tmp_path, capsys):
        m = BivariateModel(1.0, 1.0, 0.0, matern(0.6, 1.0),
                           matern(1.0, 1.0), matern(1.4, 1.0))
        code = main(["validate", write_model(tmp_path, m)])
        assert code == 0
        assert "separable" in capsys.readouterr().out

    def test_matern_nonzero_rho_inconclusive(self, tmp_path, capsys):
        m = BivariateModel(1.0, 1.0, 0.3, matern(0.6, 1.0),
                           matern(1.0, 1.0), matern(1.4, 1.0))
        code = main(["validate", write_model(tmp_path, m)])
        assert code == 1
        assert "ZeroInfimumInconclusive" in capsys.readouterr().out


class TestUsageAndFileErrors:
    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == 64

    def test_rho_is_not_sweepable(self, tmp_path, capsys):
        path = write_model(tmp_path, VALID_STABLE)
        code = main(["curve", path, "--sweep", "rho=0:1:5",
                     "--out", str(tmp_path / "c.csv")])
        assert code == 64
        assert "certified output" in capsys.readouterr().err

    def test_missing_model_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.txt")]) == 65

    def test_malformed_model_reports_line(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("kind = stable\nsigma1 = banana\n")
        assert main(["validate", str(path)]) == 66
        assert "line 2" in capsys.readouterr().err

    def test_malformed_data_reports_row(self, tmp_path, capsys):
        model = write_model(tmp_path, VALID_STABLE)
        data = tmp_path / "data.csv"
        data.write_text("x,y,component,value\n0,0,1,1.0\n1,oops,2,0.5\n")
        targets = tmp_path / "targets.csv"
        targets.write_text("x,y\n0.5,0.5\n")
        code = main(["krige", model, str(data), str(targets),
                     "--out", str(tmp_path / "k.csv")])
        assert code == 66
        assert "row 3" in capsys.readouterr().err

    def test_wrong_data_header(self, tmp_path, capsys):
        model = write_model(tmp_path, VALID_STABLE)
        data = tmp_path / "data.csv"
        data.write_text("lon,lat,component,value\n0,0,1,1.0\n")
        targets = tmp_path / "targets.csv"
        targets.write_text("x,y\n0.5,0.5\n")
        code = main(["krige", model, str(data), str(targets),
                     "--out", str(tmp_path / "k.csv")])
        assert code == 66
        assert "row 1" in capsys.readouterr().err

    def test_bad_sweep_spec(self, tmp_path):
        path = write_model(tmp_path, VALID_STABLE)
        assert main(["curve", path, "--sweep", "alpha12=1:2",
                     "--out", str(tmp_path / "c.csv")]) == 66

    def test_bad_grid_spec(self, tmp_path):
        path = write_model(tmp_path, VALID_STABLE)
        assert main(["simulate", path, "--grid", "4by4:2",
                     "--out", str(tmp_path / "s.csv")]) == 66


class TestCurve:
    def test_sweep_writes_bound_table(self, tmp_path, capsys):
        path = write_model(tmp_path, VALID_STABLE)
        out = tmp_path / "curve.csv"
        code = main(["curve", path, "--sweep", "alpha12=0.3:1.1:6",
                     "--dim", "1", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "alpha12,rho_bound,decidability"
        assert len(lines) == 7
        tags = {ln.split(",")[2] for ln in lines[1:]}
        assert tags <= {"SufficientBound", "NecessarilyZero",
                        "ZeroInfimumInconclusive"}
        # alpha12 below the marginal mean pins the bound at zero
        first = lines[1].split(",")
        assert float(first[1]) == 0.0
        assert first[2] == "NecessarilyZero"

    def test_unknown_parameter(self, tmp_path):
        path = write_model(tmp_path, VALID_STABLE)
        assert main(["curve", path, "--sweep", "zeta=0:1:4",
                     "--out", str(tmp_path / "c.csv")]) == 66


class TestSpectral:
    def test_profile_csv(self, tmp_path):
        path = write_model(tmp_path, VALID_STABLE)
        out = tmp_path / "spec.csv"
        code = main(["spectral", path, "--dim", "1", "--umax", "5",
                     "--points", "11", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "u,f11,f12,f22"
        assert len(lines) == 12

    def test_heavy_cauchy_is_a_compute_error(self, tmp_path, capsys):
        m = bc.cauchy_bivariate(1.0, 1.0, 0.2, 1.0, 1.0, 1.0,
                                0.5, 0.5, 0.5, 1.0, 1.0, 1.0)
        code = main(["spectral", write_model(tmp_path, m), "--dim", "1",
                     "--out", str(tmp_path / "s.csv")])
        assert code == 70
        assert "diverging" in capsys.readouterr().err


class TestSimulate:
    def test_grid_rows_and_determinism(self, tmp_path):
        path = write_model(tmp_path, VALID_STABLE)
        out1, out2, out3 = (tmp_path / f"s{i}.csv" for i in range(3))
        for out in (out1, out2):
            assert main(["simulate", path, "--grid", "4x3:2.0",
                         "--seed", "7", "--out", str(out)]) == 0
        assert main(["simulate", path, "--grid", "4x3:2.0",
                     "--seed", "8", "--out", str(out3)]) == 0
        lines = out1.read_text().strip().splitlines()
        assert lines[0] == "x,y,component,value"
        assert len(lines) == 25          # 12 nodes, both components
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.read_bytes() != out3.read_bytes()

    def test_points_file_with_components(self, tmp_path):
        path = write_model(tmp_path, VALID_STABLE)
        pts = tmp_path / "pts.csv"
        pts.write_text("x,y,component\n0,0,1\n0,0,2\n1,1,1\n")
        out = tmp_path / "sim.csv"
        assert main(["simulate", path, "--points", str(pts),
                     "--seed", "3", "--out", str(out)]) == 0
        assert len(out.read_text().strip().splitlines()) == 4


class TestFitAndKrige:
    def test_fit_smoke_and_krige_exactness(self, tmp_path, capsys):
        model_path = write_model(tmp_path, VALID_STABLE)
        data = tmp_path / "data.csv"
        assert main(["simulate", model_path, "--grid", "5x5:8.0",
                     "--seed", "1", "--out", str(data)]) == 0

        fitted = tmp_path / "fitted.txt"
        code = main(["fit", str(data), "--kind", "stable", "--starts", "1",
                     "--max-evals", "80", "--out", str(fitted)])
        out = capsys.readouterr().out
        assert code == 0
        assert "kind=stable" in out
        assert "loo_rmse=" in out
        refit = model_from_text(fitted.read_text())
        assert refit.kind == "stable"

        targets = tmp_path / "targets.csv"
        targets.write_text("x,y\n0,0\n0.37,4.2\n")
        kout = tmp_path / "krige.csv"
        code = main(["krige", model_path, str(data), str(targets),
                     "--component", "1", "--out", str(kout)])
        assert code == 0
        lines = kout.read_text().strip().splitlines()
        assert lines[0] == "x,y,prediction,variance"
        assert len(lines) == 3
        # first target coincides with an observed node: exact reproduction
        first_obs = float(data.read_text().splitlines()[1].split(",")[3])
        pred, var = (float(v) for v in lines[1].split(",")[2:])
        assert pred == pytest.approx(first_obs, abs=1e-6)
        assert var <= 1e-8

    def test_fit_rejects_constant_data(self, tmp_path, capsys):
        data = tmp_path / "flat.csv"
        rows = ["x,y,component,value"]
        for i in range(12):
            rows.append(f"{i * 0.37},{(i * i) % 5},1,2.5")
            rows.append(f"{i * 0.37},{(i * i) % 5},2,{0.1 * i}")
        data.write_text("\n".join(rows) + "\n")
        code = main(["fit", str(data), "--kind", "stable",
                     "--out", str(tmp_path / "m.txt")])
        assert code == 70
        assert "degenerate" in capsys.readouterr().err


class TestModuleEntryPoint:
    def test_subprocess_byte_determinism(self, tmp_path):
        path = write_model(tmp_path, VALID_STABLE)
        outs = [tmp_path / f"run{i}.csv" for i in range(2)]
        for out in outs:
            res = subprocess.run(
                [sys.executable, "-m", "bicov.cli", "simulate", path,
                 "--grid", "3x3:1.5", "--seed", "42", "--out", str(out)],
                capture_output=True, text=True)
            assert res.returncode == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()
