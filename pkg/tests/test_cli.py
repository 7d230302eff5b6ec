import json
import subprocess
import sys


from speedlab.cli import main
from speedlab.runner import suite_files


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


WEAK = {
    "name": "weak-small",
    "operation": "weak_speed_test",
    "horizon": 40,
    "inputs": {"a": {"named": "geometric-half"}, "b": {"named": "geometric-half"}},
    "params": {"rho": "1/2"},
}


class TestRun:
    def test_ok(self, tmp_path, capsys):
        p = write(tmp_path, "s.json", WEAK)
        assert main(["run", str(p), "--out", str(tmp_path / "out")]) == 0
        out = capsys.readouterr().out
        assert out.startswith("ok   weak-small (")
        assert (tmp_path / "out" / "weak-small.trace.jsonl").exists()
        assert (tmp_path / "out" / "weak-small.summary.csv").read_text().startswith("kind,name,value")

    def test_golden_mismatch(self, tmp_path, capsys):
        p = write(tmp_path, "s.json", dict(WEAK, expect={"summary": {"blocks": 999}}))
        assert main(["run", str(p), "--out", str(tmp_path / "out")]) == 1
        captured = capsys.readouterr()
        assert "FAIL weak-small" in captured.out
        assert "blocks" in captured.err

    def test_broken_class_tag(self, tmp_path, capsys):
        doc = dict(WEAK, inputs={"a": {"inline": {"prefix": ["0", "1/4"], "class_tag": "sideways"}},
                                 "b": {"named": "geometric-half"}})
        p = write(tmp_path, "s.json", doc)
        assert main(["run", str(p), "--out", str(tmp_path / "out")]) == 2
        assert "MALFORMED" in capsys.readouterr().out

    def test_malformed_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["run", str(p), "--out", str(tmp_path / "out")]) == 2
        assert "invalid JSON" in capsys.readouterr().err

    def test_missing_fields_and_unknown_operation(self, tmp_path):
        p = write(tmp_path, "a.json", {"name": "x", "horizon": 3})
        assert main(["run", str(p), "--out", str(tmp_path)]) == 2
        p = write(tmp_path, "b.json", dict(WEAK, operation="teleport"))
        assert main(["run", str(p), "--out", str(tmp_path)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2

    def test_no_arguments(self, capsys):
        assert main(["run"]) == 2

    def test_worst_code_wins(self, tmp_path, capsys):
        good = write(tmp_path, "g.json", WEAK)
        bad = write(tmp_path, "b.json", dict(WEAK, name="other", expect={"summary": {"blocks": 0}}))
        assert main(["run", str(good), str(bad), "--out", str(tmp_path / "o")]) == 1
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("ok") and lines[1] == "FAIL other"

    def test_suite_parallel(self, tmp_path, capsys):
        assert main(["run", "--suite", "--jobs", "2", "--out", str(tmp_path)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == len(suite_files()) >= 12
        assert all(line.startswith("ok   ") for line in lines)


class TestVerify:
    def test_dce_corpus(self, capsys):
        assert main(["verify", "corpus", "oscillator", "--class", "dce"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["ok"] is True

    def test_wrong_class(self, capsys):
        assert main(["verify", "corpus", "oscillator", "--class", "LeftCE"]) == 1

    def test_bounded_increments(self, capsys):
        assert main(["verify", "corpus", "bounded-increments-quarter", "--bounded-increments", "1/2"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["bounded_increments"] is True and rep["lce"] is True

    def test_shuffled_not_lce(self, capsys):
        assert main(["verify", "corpus", "shuffled-increments", "--class", "lce"]) == 1
        assert json.loads(capsys.readouterr().out)["lce"] is False

    def test_json_files(self, tmp_path, capsys):
        p = write(tmp_path, "t.json", {"intervals": [["0", "1/2"], ["1/4", "3/4"], ["1/2", "1"]]})
        assert main(["verify", str(p), "--class", "lce", "--bounded-increments", "1/2"]) == 0
        p = write(tmp_path, "m.json", {"levels": [["0"], ["0"]]})
        assert main(["verify", str(p)]) == 0
        assert json.loads(capsys.readouterr().out.splitlines()[-1])["disjoint"] is False
        p = write(tmp_path, "a.json", {"prefix": ["1/4", "1/2", "3/8"], "class_tag": "CA"})
        assert main(["verify", str(p), "--class", "CA", "--horizon", "2"]) == 0

    def test_unknown(self, tmp_path, capsys):
        assert main(["verify", "corpus", "nonsense"]) == 2
        p = write(tmp_path, "x.json", {"what": 1})
        assert main(["verify", str(p)]) == 2
        assert main(["verify", "corpus", "oscillator", "--bounded-increments", "1/2"]) == 2


class TestTraceRatio:
    def test_constant_quarter(self, capsys):
        assert main(["trace-ratio", "corpus", "geometric-quarter", "--horizon", "5"]) == 0
        captured = capsys.readouterr()
        rows = captured.out.splitlines()
        assert rows[0] == "s,f_s,ratio_num,ratio_den,skipped_flag"
        assert all(r.split(",")[2:4] == ["1", "4"] for r in rows[1:])
        assert len(rows) == 7
        assert captured.err.startswith("verdict: ")

    def test_window(self, capsys):
        assert main(["trace-ratio", "corpus", "geometric-quarter", "--horizon", "5", "--window", "3"]) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "liminf_upper_bound[window=3],,1,4,0"

    def test_rational_limit(self, tmp_path, capsys):
        p = write(tmp_path, "a.json", {"prefix": ["0", "1/4", "1/2", "1/2", "1/2"],
                                       "class_tag": "LeftCE", "declared_limit": "1/2"})
        assert main(["trace-ratio", str(p), "--order", "identity", "--horizon", "4"]) == 0
        captured = capsys.readouterr()
        assert "rational limit" in captured.err
        assert captured.out.splitlines()[3].endswith(",1")

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "r.csv"
        assert main(["trace-ratio", "corpus", "oscillator", "--order", "shift:2", "--out", str(target)]) == 0
        assert capsys.readouterr().out == ""
        assert target.read_text().splitlines()[1] == "0,2,1,4,0"

    def test_no_limit(self, tmp_path, capsys):
        p = write(tmp_path, "a.json", {"prefix": ["0", "1/4"], "class_tag": "LeftCE"})
        assert main(["trace-ratio", str(p)]) == 2
        assert "declared limit" in capsys.readouterr().err


class TestCorpus:
    def test_list(self, capsys):
        assert main(["corpus", "list"]) == 0
        out = capsys.readouterr().out
        assert "real  geometric-half  geometric" in out
        assert "test  nested-half  nested" in out

    def test_emit(self, capsys):
        assert main(["corpus", "emit", "geometric-half", "--horizon", "3"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["prefix"][:2] == ["0", "1/2^2"] and doc["class_tag"] == "LeftCE"

    def test_emit_unknown(self, capsys):
        assert main(["corpus", "emit", "nothing"]) == 2
        assert main(["corpus", "emit"]) == 2


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "speedlab.cli", "corpus", "list"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "oscillator" in proc.stdout
