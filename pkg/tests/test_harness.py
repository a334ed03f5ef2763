import json
import time

import pytest

from ait import harness, machine
from ait.harness import (
    CHECKS,
    INVARIANTS,
    ConfigError,
    ExperimentConfig,
    UnwritablePathError,
    bundled_config,
    cache_merge,
    run_experiment,
)
from ait.machine import ResourceCapError


def smoke(**overrides) -> ExperimentConfig:
    data = json.loads(bundled_config("smoke").read_text())
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


def test_smoke_passes_quickly():
    machine.clear_memo()
    start = time.perf_counter()
    report = run_experiment(smoke())
    assert time.perf_counter() - start < 5
    assert report.ok
    assert report.counts()["fail"] == 0 and report.counts()["inconclusive"] == 0
    assert {r.name for r in report.records if r.asserted} == set(CHECKS) - {
        r.name for r in report.records if r.status == "report-only"
    }


def test_every_module_invariant_is_wired_to_a_check():
    for invariant, names in INVARIANTS.items():
        assert names, invariant
        assert all(n in CHECKS for n in names), invariant
    modules = {inv.split(":")[0] for inv in INVARIANTS}
    assert modules >= {"codec", "machine", "semimeasure", "randomness", "measures"}


def test_empty_report_is_valid(tmp_path):
    out = tmp_path / "r.json"
    report = run_experiment(smoke(checks=[], targets=[], distributions=[], report=str(out)))
    assert report.records == () and report.ok
    data = json.loads(out.read_text())
    assert data["checks"] == [] and data["ok"] is True


def test_targets_and_distributions_are_report_only():
    report = run_experiment(smoke(checks=[]))
    assert {r.status for r in report.records} == {"report-only"}
    assert report.record("target:1").values["K"] == str(machine.complexity_K("1", "", 8, 100))
    assert report.record("target:0000").values["K"] == "absent"


def test_errors_are_distinct(tmp_path):
    with pytest.raises(ResourceCapError) as err:
        run_experiment(smoke(L=40))
    assert str(machine.MAX_ENUM_LEN) in str(err.value)
    with pytest.raises(ConfigError):
        smoke(L="eight")
    with pytest.raises(ConfigError):
        smoke(colour="blue")
    with pytest.raises(ConfigError):
        smoke(checks=["no.such.check"])
    with pytest.raises(ConfigError):
        smoke(seed=2**64)
    with pytest.raises(UnwritablePathError):
        run_experiment(smoke(checks=[], report=str(tmp_path / "missing" / "r.json")))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(bad)
    assert len({ResourceCapError, ConfigError, UnwritablePathError}) == 3
    assert not issubclass(ConfigError, UnwritablePathError) and not issubclass(UnwritablePathError, ConfigError)


def test_parent_that_is_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(UnwritablePathError):
        run_experiment(smoke(checks=[], csv=str(blocker / "r.csv")))
    with pytest.raises(UnwritablePathError):
        run_experiment(smoke(checks=[], cache_dir=str(blocker / "caches")))


def test_config_roundtrip():
    cfg = smoke()
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.budgets == [10, 100]
    assert cfg.enumeration_estimate == 8 * 2**8


def test_determinism_with_masked_elapsed():
    a = run_experiment(smoke()).to_json(mask_elapsed=True)
    machine.clear_memo()
    b = run_experiment(smoke()).to_json(mask_elapsed=True)
    assert a == b
    assert '"elapsed": null' in a


def test_csv_summary(tmp_path):
    out = tmp_path / "r.csv"
    report = run_experiment(smoke(checks=["codec.pairing", "machine.kraft"], targets=[], distributions=[], csv=str(out)))
    lines = out.read_text().splitlines()
    assert lines[0] == "name,status,values,elapsed"
    assert [ln.split(",")[0] for ln in lines[1:]] == [r.name for r in report.records]


def test_crashing_check_is_recorded_as_fail():
    CHECKS["test.boom"] = lambda ctx: 1 / 0
    try:
        report = run_experiment(smoke(checks=["test.boom"], targets=[], distributions=[]))
    finally:
        del CHECKS["test.boom"]
    rec = report.record("test.boom")
    assert rec.status == "fail" and "ZeroDivisionError" in rec.values["error"]
    assert not report.ok


def test_cache_lifecycle(tmp_path):
    machine.clear_memo()
    run_experiment(smoke(checks=["machine.kraft"], targets=[], distributions=[], cache_dir=str(tmp_path)))
    files = sorted(p.name for p in tmp_path.glob("*.tsv"))
    assert files and all(f.startswith(f"isa{machine.ISA_VERSION}-") for f in files)
    machine.clear_memo()
    assert harness.load_caches(tmp_path) == len(files)
    assert len(machine.memoised()) == len(files)


def test_cache_merge(tmp_path):
    small, big = tmp_path / "a.tsv", tmp_path / "b.tsv"
    machine.save_cache(machine.enumerate_programs("sd", 9, 5), small)
    machine.save_cache(machine.enumerate_programs("sd", 9, 50), big)
    same = cache_merge([small, small])
    assert same.entries == machine.load_cache(small).entries
    merged = cache_merge([small, big], tmp_path / "m.tsv")
    for c in (machine.load_cache(small), machine.load_cache(big)):
        assert set(c.halted()) <= set(merged.halted())
    assert machine.load_cache(tmp_path / "m.tsv").entries == merged.entries
    text = small.read_text().replace("isa=1", "isa=99", 1)
    other = tmp_path / "c.tsv"
    other.write_text(text)
    with pytest.raises(machine.CacheMismatchError):
        cache_merge([small, other])
