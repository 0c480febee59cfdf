import json

import pytest

from akbrst import cli
from akbrst.suites import DEFAULT_TOLERANCES, SUITES, ConfigError, SuiteConfig, SuiteReport, run_suite


def _json(report):
    return cli.report_json(report, include_wall_time=False)


def test_config_validation():
    with pytest.raises(ConfigError):
        SuiteConfig("sphere", ("frames", "bogus"))
    with pytest.raises(ConfigError):
        SuiteConfig("sphere", points=0)
    with pytest.raises(ConfigError):
        SuiteConfig("sphere", tolerance_overrides={"nope": 1.0})
    with pytest.raises(ConfigError):
        run_suite(SuiteConfig("klein_bottle", ("frames",)))


def test_tolerance_table_covers_every_suite():
    assert set(DEFAULT_TOLERANCES) == set(SUITES)
    cfg = SuiteConfig("sphere", tolerance_overrides={"brst": 1e-3})
    assert cfg.tolerance("brst") == 1e-3
    assert cfg.tolerance("frames") == DEFAULT_TOLERANCES["frames"]


def test_empty_suite_list_passes():
    rep = run_suite(SuiteConfig("flat_kahler", ()))
    assert rep.records == [] and rep.passed


@pytest.mark.parametrize("suites", [("frames", "nijenhuis"), ("currents",), ("witten",)])
def test_json_is_deterministic(suites):
    a = run_suite(SuiteConfig("nilmanifold", suites, points=4, seed=11))
    b = run_suite(SuiteConfig("nilmanifold", suites, points=4, seed=11))
    assert _json(a) == _json(b)
    c = run_suite(SuiteConfig("nilmanifold", suites, points=4, seed=12))
    assert json.loads(_json(c))["seed"] == 12


def test_round_trip():
    rep = run_suite(SuiteConfig("sphere", ("frames", "darboux"), points=3, seed=2))
    back = SuiteReport.from_dict(json.loads(cli.report_json(rep)))
    assert back == rep
    for chk in json.loads(cli.report_json(rep))["checks"]:
        assert isinstance(chk["residual"], str)
        float(chk["residual"])


def test_every_check_once_and_overall_status():
    rep = run_suite(SuiteConfig("nilmanifold", ("nijenhuis", "darboux"), points=3))
    ids = [r.check for r in rep.records]
    assert len(ids) == len(set(ids))
    assert rep.passed == all(r.passed for r in rep.records)
    assert "nijenhuis/N-strict" in ids and "nijenhuis/N-oracle" in ids


def test_verify_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["verify", "--manifold", "sphere", "--suite", "frames,nijenhuis", "--points", "3",
                     "--format", "json", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"] is True
    # an impossible tolerance fails but the report is still written
    out2 = tmp_path / "f.json"
    code = cli.main(["verify", "--manifold", "sphere", "--suite", "frames", "--points", "2",
                     "--tolerance", "frames=-1", "--format", "json", "--out", str(out2)])
    assert code == 1
    assert json.loads(out2.read_text())["passed"] is False
    assert cli.main(["verify", "--manifold", "sphere", "--suite", "nope"]) == 2
    assert cli.main(["verify", "--manifold", "sphere", "--tolerance", "frames"]) == 2
    assert cli.main(["verify", "--manifold", "nowhere"]) == 2
    assert cli.main(["frobnicate"]) == 2
    capsys.readouterr()


def test_text_format_one_line_per_check(capsys):
    assert cli.main(["verify", "--manifold", "flat_kahler", "--suite", "nijenhuis,darboux", "--points", "2"]) == 0
    lines = [ln for ln in capsys.readouterr().out.splitlines() if not ln.startswith("#")]
    rep = run_suite(SuiteConfig("flat_kahler", ("nijenhuis", "darboux"), points=2))
    assert len(lines) == len(rep.records)
    assert all(ln.split()[0] in ("PASS", "FAIL", "INFO") for ln in lines)


def test_manifolds_commands(capsys):
    assert cli.main(["manifolds", "list"]) == 0
    listed = capsys.readouterr().out
    assert all(n in listed for n in ("flat_kahler", "sphere", "nilmanifold"))
    assert cli.main(["manifolds", "show", "nilmanifold"]) == 0
    shown = capsys.readouterr().out
    assert "1 + x**2" in shown and "J[0, 1] = x" in shown
    assert cli.main(["manifolds", "show", "mobius"]) == 2


def test_unwritable_sink(tmp_path):
    target = tmp_path / "missing" / "r.json"
    assert cli.main(["verify", "--manifold", "sphere", "--suite", "nijenhuis", "--out", str(target)]) == 2
