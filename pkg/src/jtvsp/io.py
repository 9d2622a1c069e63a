"""CSV formats used by the command line tool.

* coordinates: ``id,x,y[,z]`` with a header, one station per row;
* matrices: ``id,<col>,<col>,...`` with one row per station; empty cells are
  missing values and load as NaN;
* graphs: an edge list ``i,j,weight`` (0-based vertex indices, ``i < j``) plus
  a node file ``<stem>.nodes.csv`` with ``index,id,x,y[,z]``;
* JPSDs: header ``lambda,<omega_0>,...,<omega_{M-1}>`` and one row per graph
  eigenvalue.
"""

import csv
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .graph import Graph
from .psd import Jpsd


def _rows(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise InputError(f"{path}: expected a header row and at least one data row")
    return rows[0], rows[1:]


def _float(cell, path, row, col):
    cell = cell.strip()
    if cell == "":
        return np.nan
    try:
        return float(cell)
    except ValueError:
        raise InputError(f"{path}: non-numeric cell {cell!r} at row {row}, column {col}") from None


def read_coords(path):
    """Return ``(ids, coords)``."""
    header, rows = _rows(path)
    if len(header) < 3 or header[0].strip().lower() != "id":
        raise InputError(f"{path}: header must be id,x,y[,z]")
    ids, coords = [], []
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
        ids.append(row[0].strip())
        coords.append([_float(c, path, r, j + 2) for j, c in enumerate(row[1:])])
    coords = np.array(coords)
    if np.isnan(coords).any():
        raise InputError(f"{path}: missing coordinates")
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate station ids")
    return ids, coords


def write_coords(path, ids, coords):
    coords = np.asarray(coords)
    names = ["x", "y", "z"][: coords.shape[1]]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *names])
        for i, c in zip(ids, coords):
            w.writerow([i, *(repr(float(v)) for v in c)])


def read_matrix(path):
    """Return ``(ids, columns, values)``; missing cells are NaN."""
    header, rows = _rows(path)
    ids, values = [], []
    for r, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
        ids.append(row[0].strip())
        values.append([_float(c, path, r, j + 2) for j, c in enumerate(row[1:])])
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate row ids")
    return ids, [h.strip() for h in header[1:]], np.array(values, dtype=float)


def write_matrix(path, ids, values, columns=None):
    values = np.asarray(values, dtype=float)
    if columns is None:
        columns = [f"t{t}" for t in range(values.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *columns])
        for i, row in zip(ids, values):
            w.writerow([i, *("" if np.isnan(v) else repr(float(v)) for v in row)])


def node_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".nodes.csv")


def write_graph(path, graph: Graph):
    ids = graph.ids or tuple(str(i) for i in range(graph.n_vertices))
    w = graph.weights
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["i", "j", "weight"])
        for i, j in zip(*np.nonzero(np.triu(w, 1))):
            out.writerow([int(i), int(j), repr(float(w[i, j]))])
    with open(node_path(path), "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        cols = [] if graph.coords is None else ["x", "y", "z"][: graph.coords.shape[1]]
        out.writerow(["index", "id", *cols])
        for k, name in enumerate(ids):
            extra = [] if graph.coords is None else [repr(float(v)) for v in graph.coords[k]]
            out.writerow([k, name, *extra])


def read_graph(path) -> Graph:
    npath = node_path(path)
    nheader, nrows = _rows(npath)
    if [h.strip() for h in nheader[:2]] != ["index", "id"]:
        raise InputError(f"{npath}: header must start with index,id")
    n = len(nrows)
    if [int(r[0]) for r in nrows] != list(range(n)):
        raise InputError(f"{npath}: indices must be 0..N-1 in order")
    ids = [r[1].strip() for r in nrows]
    coords = None
    if len(nheader) > 2:
        coords = np.array([[_float(c, npath, k + 2, 3) for c in r[2:]] for k, r in enumerate(nrows)])

    w = np.zeros((n, n))
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or [h.strip() for h in rows[0]] != ["i", "j", "weight"]:
        raise InputError(f"{path}: header must be i,j,weight")
    for r, row in enumerate(rows[1:], start=2):
        try:
            i, j, wt = int(row[0]), int(row[1]), float(row[2])
        except (ValueError, IndexError):
            raise InputError(f"{path}: malformed edge at row {r}") from None
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise InputError(f"{path}: invalid edge ({i}, {j}) at row {r}")
        w[i, j] = w[j, i] = wt
    return Graph(w, coords=coords, ids=ids)


def write_jpsd(path, jpsd: Jpsd):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", *(repr(float(f)) for f in jpsd.band_frequencies)])
        for lam, row in zip(jpsd.eigenvalues, jpsd.values):
            w.writerow([repr(float(lam)), *(repr(float(v)) for v in row)])


def read_jpsd(path, interpolation="linear_circular") -> Jpsd:
    header, rows = _rows(path)
    if header[0].strip() != "lambda":
        raise InputError(f"{path}: first header cell must be 'lambda'")
    data = np.array([[_float(c, path, r + 2, j + 1) for j, c in enumerate(row)]
                     for r, row in enumerate(rows)])
    if np.isnan(data).any():
        raise InputError(f"{path}: missing values")
    return Jpsd(data[:, 1:], data[:, 0], interpolation)


RESULT_FIELDS = ("method", "parameter", "trial", "metric", "value")


def write_results(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(row[k]) if isinstance(row[k], float) else row[k]) for k in RESULT_FIELDS})
