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

"""Deterministic simulator of hierarchical cgroup CPU scheduling."""

import json as _json

from lagsim import _lagsim
from lagsim._lagsim import SCHEMA_VERSION, ConfigError, percentile

__all__ = ["SCHEMA_VERSION", "ConfigError", "percentile", "resolve", "run", "sweep"]


def _text(config):
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def resolve(config):
    """Validates a config and returns it with every default filled in."""
    return _json.loads(_lagsim.resolve(_text(config)))


def run(config):
    """Runs one scenario. Returns {"label", "summary", "cdf"}."""
    return _json.loads(_lagsim.run(_text(config)))


def sweep(config):
    """Runs the config's sweep section; one entry per point."""
    return _json.loads(_lagsim.sweep(_text(config)))
