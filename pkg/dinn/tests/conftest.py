"""Shared fixtures: one exported dataset and one quick fit per session."""
import json
import subprocess
import sys

import pytest

from dinn_estimator import DinnConfig, load_dataset, train


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """Noise-free nominal trajectory exported by the simulation package."""
    out = tmp_path_factory.mktemp("dataset")
    scenario = out / "scenario.json"
    scenario.write_text(json.dumps({"horizon": 100.0}))
    subprocess.run(
        [sys.executable, "-m", "ebofrac.cli", "export-dinn",
         "--config", str(scenario), "--out", str(out), "--n-points", "200"],
        check=True, capture_output=True, text=True)
    return out


@pytest.fixture(scope="session")
def dataset(dataset_dir):
    return load_dataset(dataset_dir / "dataset.csv")


#: deliberately shallow settings: enough optimization for structural
#: checks (bounds, schemas, determinism) at a fraction of a full fit
QUICK = dict(epochs=150, lbfgs_iters=0, restarts=1)


@pytest.fixture(scope="session")
def quick_result(dataset):
    return train(dataset, DinnConfig(**QUICK))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        return
    outcomes = {}
    for status, reports in terminalreporter.stats.items():
        for report in reports:
            nodeid = getattr(report, "nodeid", "")
            name = nodeid.split("::")[-1]
            if name not in CRITERIA:
                continue
            if status in ("failed", "error"):
                outcomes[name] = "FAIL"
            elif status == "passed" and getattr(report, "when", "call") == "call":
                outcomes.setdefault(name, "PASS")
    if not outcomes:
        return
    terminalreporter.section("acceptance checklist")
    for name, label in CRITERIA.items():
        if name in outcomes:
            terminalreporter.write_line(f"[ACCEPTANCE] {label}: {outcomes[name]}")
