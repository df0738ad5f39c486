import pytest

from contactreach.cli import EXIT_ERROR, EXIT_NOT_VERIFIED, EXIT_SAFE, main
from contactreach.export import read_dump
from contactreach.scenario import Scenario, save_scenario


@pytest.fixture
def safe_scn(tmp_path):
    path = tmp_path / "safe.scn"
    save_scenario(Scenario(mass=1.5, speed=0.2, horizon=0.3), path)
    return str(path)


@pytest.fixture
def unsafe_scn(tmp_path):
    path = tmp_path / "unsafe.scn"
    save_scenario(Scenario(mass=8.0, speed=0.55, horizon=0.3), path)
    return str(path)


class TestRun:
    def test_safe_exit_zero(self, safe_scn, capsys):
        assert main(["run", "--scenario", safe_scn]) == EXIT_SAFE
        out = capsys.readouterr().out
        assert "verdict: SAFE" in out
        assert "peak force" in out

    def test_unsafe_exit_one(self, unsafe_scn, capsys):
        assert main(["run", "--scenario", unsafe_scn]) == EXIT_NOT_VERIFIED
        assert "verdict: UNSAFE" in capsys.readouterr().out

    def test_out_files_written(self, safe_scn, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--scenario", safe_scn,
                     "--out", str(out), "--dump"]) == EXIT_SAFE
        assert (out / "run_envelope.csv").exists()
        assert (out / "run_metadata.txt").exists()
        branches = read_dump(out / "run_sets.txt")
        assert branches and branches[0]["entries"]

    def test_method_override(self, safe_scn):
        assert main(["run", "--scenario", safe_scn,
                     "--method", "geometric"]) == EXIT_SAFE

    def test_missing_scenario_file_exit_two(self, capsys):
        assert main(["run", "--scenario", "/nonexistent.scn"]) == EXIT_ERROR
        assert "error:" in capsys.readouterr().err

    def test_bad_scenario_exit_two(self, tmp_path, capsys):
        path = tmp_path / "bad.scn"
        path.write_text("mass = -3.0\nhorizon = 0.3\n")
        assert main(["run", "--scenario", str(path)]) == EXIT_ERROR
        assert "ValueError" in capsys.readouterr().err


class TestGrid:
    def test_single_cell_grid(self, safe_scn, tmp_path, capsys):
        out = tmp_path / "grid"
        code = main(["grid", "--scenario", safe_scn,
                     "--masses", "1.5", "--speeds", "0.2",
                     "--out", str(out)])
        assert code == EXIT_SAFE
        assert "m=1.5 v=0.2: SAFE" in capsys.readouterr().out
        grid_csv = (out / "grid.csv").read_text().splitlines()
        assert len(grid_csv) == 2
        assert (out / "m1.5_v0.2_envelope.csv").exists()

    def test_mixed_grid_exit_one(self, safe_scn, capsys):
        code = main(["grid", "--scenario", safe_scn,
                     "--masses", "8.0", "--speeds", "0.55"])
        assert code == EXIT_NOT_VERIFIED
        assert "UNSAFE" in capsys.readouterr().out


class TestCheck:
    def test_containment_passes(self, safe_scn, capsys):
        code = main(["check", "--scenario", safe_scn,
                     "--samples", "20", "--seed", "1"])
        assert code == EXIT_SAFE
        out = capsys.readouterr().out
        assert "0 outside the reachable sets" in out
        assert "pass rate 1.000000" in out


class TestBench:
    def test_bench_csv_shape(self, safe_scn, tmp_path):
        out = tmp_path / "bench"
        code = main(["bench", "--scenario", safe_scn,
                     "--methods", "geometric,trinal",
                     "--masses", "1.5", "--speeds", "0.2",
                     "--out", str(out)])
        assert code == EXIT_SAFE
        lines = (out / "bench.csv").read_text().splitlines()
        assert lines[0] == ("mass,speed,method,order,transition,"
                            "measure_x1e3,wall_time_s,error")
        rows = [line.split(",") for line in lines[1:]]
        assert rows
        methods = {r[2] for r in rows}
        assert methods == {"geometric", "trinal"}
        for r in rows:
            assert r[0] == "1.5" and r[1] == "0.2"
            assert int(r[3]) >= 1
            assert float(r[5]) >= 0.0
            assert float(r[6]) >= 0.0
