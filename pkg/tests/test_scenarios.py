"""Regression runs of the packaged scenarios not already run by the acceptance tests."""

import time

import pytest

from rose.harness import run_scenario


@pytest.mark.parametrize("name", ["er_yso_gain", "er_yso_spectrum"])
def test_scenario_regressions(name, tmp_path):
    t0 = time.perf_counter()
    out = run_scenario(name, tmp_path)
    elapsed = time.perf_counter() - t0
    failed = [f"{k}={m!r} (expected {e})" for k, m, ok, e in out.checks if not ok]
    assert elapsed < 300
    assert out.files["summary"].read_text().startswith(f"scenario={name}\n")
    assert not failed, "; ".join(failed)
