import os

import numpy as np
import pytest

from symdiv.errors import ArgumentError
from symdiv.parser import (
    RAW_HEADER,
    csv_text,
    format_value,
    parse_spec_string,
    read_raw_rows,
    read_samples,
    samples_csv,
    write_text_atomic,
)


def test_parse_spec_string():
    assert parse_spec_string("gaussian:s=0.0654") == ("gaussian", {"s": "0.0654"})
    assert parse_spec_string(" mog8 ") == ("mog8", {})
    assert parse_spec_string("a:x=1, y=2") == ("a", {"x": "1", "y": "2"})


@pytest.mark.parametrize("text", ["", ":s=1", "gaussian:s", "gaussian:=1", "gaussian:s="])
def test_parse_spec_string_rejects(text):
    with pytest.raises(ArgumentError):
        parse_spec_string(text)


def test_format_value():
    assert format_value(3) == "3"
    assert format_value(np.int64(7)) == "7"
    assert format_value(0.1) == "0.10000000000000001"
    assert float(format_value(1 / 3)) == 1 / 3
    assert format_value(True) == "true"
    assert format_value("wss1d") == "wss1d"


def test_csv_text():
    assert csv_text(("a", "b"), [(1, 0.5)]) == "a,b\n1,0.5\n"


def test_samples_round_trip(tmp_path):
    pts = np.array([[0.25, -1.0], [1 / 3, 2.0]])
    path = tmp_path / "s.csv"
    write_text_atomic(str(path), samples_csv(pts))
    assert path.read_text().splitlines()[0] == "x1,x2"

    measure = read_samples(str(path))
    assert measure.size == 2
    np.testing.assert_array_equal(measure.points[np.argsort(measure.points[:, 0])], pts)
    np.testing.assert_allclose(measure.weights, 0.5)


def test_weighted_samples(tmp_path):
    path = tmp_path / "w.csv"
    path.write_text("x1,weight\n0.1,0.25\n0.2,0.75\n")
    measure = read_samples(str(path))
    np.testing.assert_allclose(measure.weights, [0.25, 0.75])


@pytest.mark.parametrize(
    "content",
    [
        "",
        "x1\n",
        "y1\n0.1\n",
        "x2,x1\n0.1,0.2\n",
        "x1\nabc\n",
        "x1,x2\n0.1\n",
        "x1,weight\n0.1,0.5\n",
    ],
)
def test_bad_sample_files(tmp_path, content):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(ArgumentError):
        read_samples(str(path))


def test_missing_sample_file(tmp_path):
    with pytest.raises(ArgumentError):
        read_samples(str(tmp_path / "nope.csv"))


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out" / "table.csv"
    write_text_atomic(str(target), "a\n")
    write_text_atomic(str(target), "b\n")
    assert target.read_text() == "b\n"
    assert os.listdir(target.parent) == ["table.csv"]


def test_read_raw_rows(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text(csv_text(RAW_HEADER, [("wss1d", 4, 64, 0, 123, 0.5)]))
    assert read_raw_rows(str(path)) == [("wss1d", 4, 64, 0, 123, 0.5)]

    path.write_text("experiment,n\nwss1d,3\n")
    with pytest.raises(ArgumentError):
        read_raw_rows(str(path))
