import numpy as np
import pytest

from conftest import random_weights
from jtvsp import io
from jtvsp.exceptions import InputError
from jtvsp.graph import Graph
from jtvsp.psd import Jpsd


def test_coords_round_trip(tmp_path):
    coords = np.random.default_rng(0).random((4, 2))
    io.write_coords(tmp_path / "c.csv", ["a", "b", "c", "d"], coords)
    ids, back = io.read_coords(tmp_path / "c.csv")
    assert ids == ["a", "b", "c", "d"]
    np.testing.assert_array_equal(back, coords)


def test_matrix_missing_cells(tmp_path):
    values = np.array([[1.0, np.nan], [2.5, -3.0]])
    io.write_matrix(tmp_path / "m.csv", ["x", "y"], values)
    assert (tmp_path / "m.csv").read_text().splitlines()[1] == "x,1.0,"
    ids, cols, back = io.read_matrix(tmp_path / "m.csv")
    assert ids == ["x", "y"] and cols == ["t0", "t1"]
    np.testing.assert_array_equal(np.isnan(back), np.isnan(values))
    assert back[1, 1] == -3.0


def test_graph_round_trip(tmp_path):
    w = random_weights(5, seed=1, density=0.4)
    g = Graph(w, coords=np.arange(10.0).reshape(5, 2), ids=list("abcde"))
    io.write_graph(tmp_path / "g.csv", g)
    assert (tmp_path / "g.nodes.csv").exists()
    back = io.read_graph(tmp_path / "g.csv")
    np.testing.assert_array_equal(back.weights, w)
    np.testing.assert_array_equal(back.coords, g.coords)
    assert back.ids == g.ids


def test_jpsd_round_trip(tmp_path):
    j = Jpsd(np.random.default_rng(2).uniform(0, 1, (3, 8)), np.array([0.0, 0.5, 2.0]))
    io.write_jpsd(tmp_path / "j.csv", j)
    back = io.read_jpsd(tmp_path / "j.csv")
    np.testing.assert_array_equal(back.values, j.values)
    np.testing.assert_array_equal(back.eigenvalues, j.eigenvalues)


def test_results_format(tmp_path):
    rows = [{"method": "joint", "parameter": 0.3, "trial": 1, "metric": "snr_db", "value": 12.5}]
    io.write_results(tmp_path / "r.csv", rows)
    assert (tmp_path / "r.csv").read_text() == "method,parameter,trial,metric,value\njoint,0.3,1,snr_db,12.5\n"


@pytest.mark.parametrize("text", [
    "id,t0\n",
    "id,t0\na,1\na,2\n",
    "id,t0,t1\na,1\n",
    "id,t0\na,abc\n",
])
def test_malformed_matrices(tmp_path, text):
    (tmp_path / "m.csv").write_text(text)
    with pytest.raises(InputError):
        io.read_matrix(tmp_path / "m.csv")


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        io.read_coords(tmp_path / "none.csv")


def test_bad_edge(tmp_path):
    (tmp_path / "g.nodes.csv").write_text("index,id\n0,a\n1,b\n")
    (tmp_path / "g.csv").write_text("i,j,weight\n0,2,1.0\n")
    with pytest.raises(InputError):
        io.read_graph(tmp_path / "g.csv")
