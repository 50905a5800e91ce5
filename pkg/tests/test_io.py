import io

import numpy as np
import pytest

from swcoreset.io import export_coreset_csv, iter_stream, read_stream, read_weighted, write_stream, write_weighted
from swcoreset.metric import WeightedSet


def test_stream_roundtrip(tmp_path, rng):
    X = rng.normal(size=(20, 3))
    write_stream(tmp_path / "s.csv", X)
    ws = read_stream(tmp_path / "s.csv")
    assert np.array_equal(ws.points, X) and ws.timestamps.tolist() == list(range(1, 21))


def test_headerless_stream():
    rows = list(iter_stream(io.StringIO("1,1,0.5,2\n2,2,1.5,3\n")))
    assert [r[0] for r in rows] == [1, 2] and rows[1][2].tolist() == [1.5, 3.0]


@pytest.mark.parametrize("text", ["id,timestamp,c1\n1,1,0\n2,2,0,1\n", "1,x,3\n", "1,1\n"])
def test_malformed_stream(text):
    with pytest.raises(ValueError):
        list(iter_stream(io.StringIO(text)))


def test_weighted_roundtrip(tmp_path, rng):
    ws = WeightedSet(rng.normal(size=(7, 2)), rng.uniform(0.5, 3, 7), np.arange(3, 10), np.arange(1, 8))
    write_weighted(tmp_path / "w.csv", ws)
    back = read_weighted(tmp_path / "w.csv")
    assert np.array_equal(back.points, ws.points) and np.array_equal(back.weights, ws.weights)
    assert np.array_equal(back.ids, ws.ids) and np.array_equal(back.timestamps, ws.timestamps)


def test_weighted_rejects_nonpositive(tmp_path):
    (tmp_path / "w.csv").write_text("id,timestamp,c1,weight\n1,1,0.0,0\n")
    with pytest.raises(ValueError):
        read_weighted(tmp_path / "w.csv")


def test_export_layout(tmp_path):
    export_coreset_csv(tmp_path / "e.csv", WeightedSet(np.zeros((2, 2)), [1.0, 2.0]))
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines == ["point_id,timestamp,weight,center_id,j,b,p_x", "1,1,1.0,,,,", "2,2,2.0,,,,"]
