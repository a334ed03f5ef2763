import json
import subprocess
import sys

import pytest

from ait.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip().startswith("{") else out), err


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def test_enumerate_and_k_from_cache(capsys, tmp_path):
    cache = str(tmp_path / "c.tsv")
    code, out, _ = run(capsys, "enumerate", "--max-len", "10", "--budget", "100", "--cache", cache)
    assert code == 0 and out["prefix_free"] is True and out["programs"] == 2**11 - 1
    code, out, _ = run(capsys, "k", "--x", "1", "--cache", cache)
    assert code == 0 and out["K"] == 6 and out["witness"] == "010000"
    code, out, _ = run(capsys, "k", "--x", "1", "--mode", "em", "--max-len", "6", "--budget", "10")
    assert out["K"] == 3
    code, out, _ = run(capsys, "k", "--x", "1" * 30, "--max-len", "6", "--budget", "10")
    assert out["K"] == "absent"
    code, _, err = run(capsys, "k", "--x", "1", "--mode", "em", "--cache", cache)
    assert code == 2 and "ait: error" in err


def test_omega(capsys):
    code, out, _ = run(capsys, "omega", "--max-len", "3", "--budget", "10")
    assert code == 0 and out["omega"] == "1/2^3"


def test_coding_code(capsys, tmp_path):
    stream = write(tmp_path, "s.tsv", "a\t1\nb\t2\n")
    code, out, _ = run(capsys, "coding-code", "--stream", stream)
    assert code == 0
    assert out["code"] == [{"codeword": "00", "label": "a"}, {"codeword": "010", "label": "b"}]
    assert out["kraft_sum"] == "3/2^3"


def test_lln(capsys):
    code, out, _ = run(capsys, "lln", "--x", "11")
    assert code == 0 and out["payoff"] == "4/3"


def test_check_test(capsys, tmp_path):
    dist = write(tmp_path, "d.json", {"kind": "uniform", "n": 2})
    good = write(tmp_path, "t1.json", {"n": 2, "values": {x: "1/1" for x in ["00", "01", "10", "11"]}})
    bad = write(tmp_path, "t2.json", {"n": 2, "values": {x: "2/1" for x in ["00", "01", "10", "11"]}})
    code, out, _ = run(capsys, "check-test", "--test", good, "--dist", dist)
    assert code == 0 and out["integrable"] and out["expectation"] == "1/1"
    code, out, _ = run(capsys, "check-test", "--test", bad, "--dist", dist)
    assert code == 1 and not out["integrable"]


def test_bernoulli_validate(capsys, tmp_path):
    values = {x: "1/1" for x in ["", "0", "1"]}
    code, out, _ = run(capsys, "bernoulli-validate", "--table", write(tmp_path, "b.json", {"n": 1, "values": values}))
    assert code == 0 and out["valid"]
    values["1"] = "2/1"
    code, out, _ = run(capsys, "bernoulli-validate", "--table", write(tmp_path, "c.json", {"n": 1, "values": values}))
    assert code == 1 and out["violations"]


def test_conserve(capsys):
    code, out, _ = run(capsys, "conserve", "--map", "parity-extend", "--n", "3", "--max-len", "12", "--budget", "100")
    assert code == 0 and out["ok"]
    code, _, err = run(capsys, "conserve", "--map", "reverse", "--n", "3", "--max-len", "12", "--budget", "100")
    assert code == 2 and "unknown map" in err


def test_entropy_and_distances(capsys, tmp_path):
    p = write(tmp_path, "p.json", {"points": ["a", "b"], "masses": ["1/2", "1/2"]})
    q = write(tmp_path, "q.json", {"points": ["a", "b"], "masses": ["1/1", "0/1"]})
    metric = write(tmp_path, "m.json", {"points": ["a", "b"], "distance": [["0", "1/4"], ["1/4", "0"]]})
    code, out, _ = run(capsys, "entropy", "--dist", p)
    assert code == 0 and out["lo"] == out["hi"] == "1/1"
    code, out, _ = run(capsys, "entropy", "--dist", write(tmp_path, "u.json", {"kind": "uniform", "n": 3}))
    assert code == 0 and out["lo"] == out["hi"] == "3/1"
    code, out, _ = run(capsys, "distance", "--kind", "tv", "--p", p, "--q", q)
    assert out["value"] == "1/1"
    code, out, _ = run(capsys, "distance", "--kind", "prokhorov", "--p", p, "--q", q, "--metric", metric)
    assert out["value"] == "1/4"
    code, out, _ = run(capsys, "distance", "--kind", "wasserstein", "--p", p, "--q", q, "--metric", metric)
    assert code == 0 and out["value"] == "1/8" and out["dual_certified"]
    code, _, err = run(capsys, "distance", "--kind", "wasserstein", "--p", p, "--q", q)
    assert code == 2 and "--metric" in err


def test_run_bundled_smoke(capsys, tmp_path):
    report, table = tmp_path / "r.json", tmp_path / "r.csv"
    code = main(["run", "smoke", "--quiet", "--report", str(report), "--csv", str(table)])
    _, err = capsys.readouterr()
    assert code == 0
    assert json.loads(report.read_text())["ok"] is True
    assert table.read_text().startswith("name,status")
    assert all(line.startswith("PASS") for line in err.splitlines())


def test_run_errors(capsys, tmp_path):
    cfg = write(tmp_path, "big.json", {"id": "big", "L": 40, "t": 10})
    code, _, err = run(capsys, "run", cfg)
    assert code == 2 and "cap" in err
    code, _, err = run(capsys, "run", write(tmp_path, "bad.json", "{"))
    assert code == 2
    code, _, err = run(capsys, "run", str(tmp_path / "nope.json"))
    assert code == 2


def test_cache_merge_cli(capsys, tmp_path):
    a, b, out = (str(tmp_path / n) for n in ("a.tsv", "b.tsv", "m.tsv"))
    run(capsys, "enumerate", "--max-len", "6", "--budget", "2", "--cache", a)
    run(capsys, "enumerate", "--max-len", "6", "--budget", "20", "--cache", b)
    code, res, _ = run(capsys, "cache-merge", a, b, "--out", out)
    assert code == 0 and res["t"] == 20
    run(capsys, "enumerate", "--mode", "em", "--max-len", "6", "--budget", "2", "--cache", b)
    code, _, err = run(capsys, "cache-merge", a, b, "--out", out)
    assert code == 2 and "cannot merge" in err


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ait.cli", "lln", "--x", "01"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["payoff"] == "1/3"


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as err:
        main(["nonsense"])
    assert err.value.code == 2
