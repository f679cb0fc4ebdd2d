import io
import json

import pytest

from simplexledger.scenarios import (
    ScenarioError,
    ScenarioReport,
    load_scenarios,
    run_scenario,
    write_report_csv,
)


def test_catalog_loads_with_unique_names():
    specs = load_scenarios()
    names = [s.name for s in specs]
    assert len(names) == len(set(names))
    assert "all-new-every-year" in names
    assert "frozen-vocabulary" in names


def test_duplicate_scenario_names_rejected(tmp_path):
    entry = {"name": "dup", "params": {"n_articles": 10, "vocab_size": 10}}
    path = tmp_path / "cat.json"
    path.write_text(json.dumps([entry, entry]))
    with pytest.raises(ScenarioError, match="duplicate"):
        load_scenarios(path)


@pytest.mark.parametrize(
    "name",
    [
        "all-new-every-year",
        "frozen-vocabulary",
        "paper-shape",
        "dense-core",
        "sparse-frontier",
        "bursty-entry",
    ],
)
def test_scenario_pipeline_matches_oracle(name, tmp_path):
    (spec,) = [s for s in load_scenarios() if s.name == name]
    report = run_scenario(spec, workdir=tmp_path)
    failures = [r for r in report.rows if r["status"] != "ok"]
    assert report.ok, failures


def test_report_csv_shape():
    report = ScenarioReport(scenario="x", ok=True)
    report.add(1, "all", "ok")
    report.add(2, "major", "mismatch", "new_simplices@1999: pipeline 3 != oracle 4")
    out = io.StringIO()
    write_report_csv([report], out)
    lines = out.getvalue().splitlines()
    assert lines[0] == "scenario,k,refinement,status,detail"
    assert len(lines) == 3
    assert not report.ok
