import json

import numpy as np
import pytest

from symdiv.parser import samples_csv, write_text_atomic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_samples(tmp_path):
    """Write points (and optional weights) to a sample CSV under tmp_path."""

    def _write(name, points, weights=None):
        path = tmp_path / name
        write_text_atomic(str(path), samples_csv(points, weights))
        return str(path)

    return _write


@pytest.fixture
def json_lines():
    """JSON objects printed by the CLI, skipping any stderr chatter mixed in."""

    def _parse(text):
        return [json.loads(line) for line in text.splitlines() if line.startswith("{")]

    return _parse
