import csv
import io
import json
from pathlib import Path


from zrpfluid.cli import main

FIXTURES = Path(__file__).parent / "fixtures"
EXAMPLE_W = str(FIXTURES / "example_w.json")


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestValidate:
    def test_example_w(self):
        code, out, _ = run(["validate", EXAMPLE_W])
        assert code == 0 and out.strip() == "valid, 3 sites, irreducible"

    def test_nonzero_diagonal(self, tmp_path):
        path = write(tmp_path, "m.json", {"sites": ["a", "b"], "rates": [[1.0, 1], [1, 0]]})
        code, _, err = run(["validate", path])
        assert code == 2 and "NonZeroDiagonal at sites[0]" in err

    def test_disconnected(self, tmp_path):
        path = write(tmp_path, "m.json", {"rates": [[0, 1, 0], [1, 0, 0], [0, 0, 0]]})
        code, _, err = run(["validate", path])
        assert code == 2 and "NotIrreducible" in err and "partition" in err

    def test_unreadable(self, tmp_path):
        (tmp_path / "bad.json").write_text("{not json")
        assert run(["validate", str(tmp_path / "bad.json")])[0] == 2
        assert run(["validate", str(tmp_path / "missing.json")])[0] == 2


class TestTrace:
    def test_example_w(self, tmp_path):
        code, out, _ = run(["trace", EXAMPLE_W, "0,1", "--out", str(tmp_path)])
        doc = json.loads(out)
        assert code == 0
        assert doc["trace"]["rates"] == [[0.0, 2.0], [1.0, 0.0]]
        assert doc["flow"] == {"0": -1.0, "1": 1.0}
        assert doc["tol"] == 1e-9
        assert json.loads((tmp_path / "trace.json").read_text()) == doc

    def test_unknown_site(self):
        code, _, err = run(["trace", EXAMPLE_W, "0,9"])
        assert code == 2 and "subset[1]" in err


def test_absorb_example_w():
    code, out, _ = run(["absorb", EXAMPLE_W, "0"])
    doc = json.loads(out)
    assert code == 0
    assert doc["result"] == ["0", "1"]
    assert doc["iterations"] == [{"set": ["0", "1", "2"], "removed": ["2"]}, {"set": ["0", "1"], "removed": []}]
    assert doc["bottlenecks"] == ["1"]
    assert doc["input_report"]["absorbing"] is False


class TestFluid:
    def test_example_w(self, tmp_path):
        code, out, _ = run(["fluid", EXAMPLE_W, "--regulator", "--grid", "4", "--out", str(tmp_path)])
        doc = json.loads(out)
        assert code == 0
        assert doc["segments"] == 2
        assert [b["t"] for b in doc["breakpoints"]] == [0.0, 1.0]
        assert doc["breakpoints"][-1]["point"] == {"0": 0.0, "1": 1.0, "2": 0.0}
        assert doc["orp"]["passed"]
        lines = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert lines[0].startswith("# zrpfluid fluid tol=")
        rows = list(csv.reader(lines[1:]))
        assert rows[0] == ["t", "0", "1", "2", "rho_0", "rho_1", "rho_2"]
        assert rows[2] == ["0.5", "0.5", "0.5", "0", "0", "0", "0.5"]
        assert len(rows) == 6

    def test_bottleneck_start(self):
        code, out, _ = run(["fluid", EXAMPLE_W, "--u", "0,1,0"])
        assert code == 0 and json.loads(out)["segments"] == 1

    def test_support_jumps_from_non_absorbing_face(self):
        code, out, _ = run(["fluid", EXAMPLE_W, "--u", "1,0,0"])
        first = json.loads(out)["breakpoints"][0]
        assert first["support"] == ["0"] and first["closure"] == ["0", "1"]

    def test_bad_point(self):
        code, _, err = run(["fluid", EXAMPLE_W, "--u", "0.5,0.6,0"])
        assert code == 2 and "--u" in err

    def test_twelve_significant_digits(self, tmp_path):
        path = write(tmp_path, "m.json", {"rates": [[0, 3], [1, 0]], "u": [1, 0]})
        run(["fluid", path, "--grid", "3", "--out", str(tmp_path)])
        rows = list(csv.reader((tmp_path / "trajectory.csv").read_text().splitlines()[2:]))
        assert all(len(x.replace("-", "").replace(".", "").lstrip("0")) <= 12 for row in rows for x in row)

    def test_byte_stable(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["fluid", EXAMPLE_W, "--regulator", "--out", str(a)])
        run(["fluid", EXAMPLE_W, "--regulator", "--out", str(b)])
        for name in ("trajectory.csv", "breakpoints.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_tol_flag_recorded(self):
        code, out, _ = run(["fluid", EXAMPLE_W, "--tol", "1e-7"])
        assert json.loads(out)["tol"] == 1e-7


class TestSimulate:
    def experiment(self, tmp_path, **extra):
        doc = {
            "sites": ["0", "1", "2"],
            "rates": [[0, 2, 0], [1, 0, 1], [0, 2, 0]],
            "g": {"kind": "evans", "b": 2},
            "u": [1, 0, 0],
            "N": [100, 1000, 10000],
            "T": 2.0,
            "trials": 5,
            "seed": 1,
        }
        doc.update(extra)
        return write(tmp_path, "exp.json", doc)

    def test_outputs(self, tmp_path):
        path = self.experiment(tmp_path, threshold=0.05)
        out_dir = tmp_path / "out"
        code, out, _ = run(["simulate", path, "--out", str(out_dir)])
        summary = json.loads(out)
        assert code == 0 and summary["passed"] and summary["strictly_decreasing"]
        assert [s["N"] for s in summary["summary"]] == [100, 1000, 10000]
        lines = (out_dir / "results.csv").read_text().splitlines()
        assert lines[1] == "N,trial,sup_distance" and len(lines) == 2 + 15
        again = tmp_path / "again"
        run(["simulate", path, "--out", str(again)])
        assert (again / "results.csv").read_bytes() == (out_dir / "results.csv").read_bytes()

    def test_threshold_failure(self, tmp_path):
        path = self.experiment(tmp_path, threshold=1e-6, N=[100, 1000], trials=3)
        assert run(["simulate", path])[0] == 4

    def test_bad_experiment(self, tmp_path):
        path = self.experiment(tmp_path, g={"kind": "evans", "b": -1})
        code, _, err = run(["simulate", path])
        assert code == 2 and err.startswith("error: g:")


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "zrpfluid", "validate", EXAMPLE_W], capture_output=True, text=True)
    assert res.returncode == 0 and "irreducible" in res.stdout
