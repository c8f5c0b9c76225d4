# Copyright 2026 The lagsim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import pytest

import lagsim

SMALL = {
    "schema_version": 1,
    "run": {"cores": 2, "horizon_us": 2_000_000},
    "workload": {"kind": "random", "n_functions": 4},
}


def test_run_returns_summary_and_cdf():
    r = lagsim.run(SMALL)
    s = r["summary"]
    assert r["label"] == "CFS"
    assert s["cores"] == 2
    assert s["completions"] > 0
    assert s["util_perceived_pct"] >= s["util_effective_pct"]
    assert r["cdf"][-1][1] == 1.0


def test_deterministic():
    assert lagsim.run(SMALL) == lagsim.run(SMALL)


def test_config_errors_name_the_field():
    bad = {"schema_version": 1, "run": {"policy_params": {"rr_bandwidth_cap": 1.3}}}
    with pytest.raises(lagsim.ConfigError, match="run.policy_params.rr_bandwidth_cap"):
        lagsim.run(bad)
    with pytest.raises(ValueError, match="unknown key"):
        lagsim.resolve({"schema_version": 1, "extra": 1})


def test_resolve_fills_defaults():
    c = lagsim.resolve({"schema_version": lagsim.SCHEMA_VERSION})
    assert c["run"]["cores"] == 12
    assert c["workload"]["hierarchy"] == "knative"


def test_sweep():
    cfg = dict(SMALL, sweep={"densities": [1, 2], "policies": ["CFS", "LAGS"]})
    cfg["workload"] = {"kind": "random"}
    rows = lagsim.sweep(cfg)
    assert [(r["policy"], r["density"]) for r in rows] == [
        ("CFS", 1), ("LAGS", 1), ("CFS", 2), ("LAGS", 2)]
    assert all("result" in r for r in rows)


def test_percentile():
    assert lagsim.percentile(list(range(100, 0, -1)), 0.95) == 95
