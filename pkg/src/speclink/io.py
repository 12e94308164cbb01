"""File formats: JSON for models/supports/coefficients/manifests, CSV for
time series, spectral samples and scores.

All writes are atomic (temp file + rename) and deterministic: JSON is
dumped with sorted keys, floats use shortest round-trip repr, so rerunning
a seeded command reproduces outputs byte for byte.  Index base is 0
everywhere.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .core import (
    ArgumentError,
    FrequencyGrid,
    MatrixPseudoPolynomial,
    SpectralDensitySamples,
    StructureError,
    Support,
)
from .estimation import TimeSeries
from .scoring import ScoreMatrix
from .simulate import GroundTruthModel

__all__ = [
    "atomic_write",
    "save_json",
    "load_json",
    "save_support",
    "load_support",
    "save_coeffs",
    "load_coeffs",
    "save_model",
    "load_model",
    "save_timeseries",
    "load_timeseries",
    "save_samples",
    "load_samples",
    "save_scores",
    "load_scores",
]


def atomic_write(path, text):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)  # mkstemp defaults to owner-only
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_json(path, obj):
    atomic_write(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _expect(obj, fmt):
    if obj.get("format") != fmt:
        raise ArgumentError("expected a %s file, found %r" % (fmt, obj.get("format")))
    if obj.get("index_base", 0) != 0:
        raise ArgumentError("only index_base 0 files are supported")


# -- supports ---------------------------------------------------------------


def save_support(path, support):
    save_json(
        path,
        {
            "format": "speclink-support",
            "version": 1,
            "index_base": 0,
            "m": support.m,
            "edges": sorted(map(list, support.edges)),
        },
    )


def load_support(path):
    obj = load_json(path)
    _expect(obj, "speclink-support")
    return Support(obj["m"], [tuple(e) for e in obj["edges"]])


# -- pseudo-polynomial coefficients -----------------------------------------


def save_coeffs(path, p):
    save_json(
        path,
        {
            "format": "speclink-coeffs",
            "version": 1,
            "index_base": 0,
            "m": p.m,
            "n": p.n,
            "coeffs": np.asarray(p.coeffs).tolist(),
        },
    )


def load_coeffs(path):
    obj = load_json(path)
    _expect(obj, "speclink-coeffs")
    coeffs = np.asarray(obj["coeffs"], dtype=float)
    if coeffs.shape != (obj["n"] + 1, obj["m"], obj["m"]):
        raise ArgumentError("coefficient array shape does not match m, n")
    return MatrixPseudoPolynomial(coeffs)


# -- ground-truth models -----------------------------------------------------


def save_model(path, model):
    save_json(
        path,
        {
            "format": "speclink-model",
            "version": 1,
            "index_base": 0,
            "kind": model.kind,
            "m": model.m,
            "n": model.n,
            "coeffs": np.asarray(model.coeffs).tolist(),
            "ma": np.asarray(model.ma).tolist(),
            "support": (
                sorted(map(list, model.support.edges))
                if model.support is not None
                else None
            ),
            "seed": model.seed,
        },
    )


def load_model(path):
    obj = load_json(path)
    _expect(obj, "speclink-model")
    support = None
    if obj["support"] is not None:
        support = Support(obj["m"], [tuple(e) for e in obj["support"]])
    return GroundTruthModel(
        kind=obj["kind"],
        coeffs=np.asarray(obj["coeffs"], dtype=float),
        ma=np.asarray(obj["ma"], dtype=float),
        support=support,
        seed=obj.get("seed"),
    )


# -- time series CSV ---------------------------------------------------------


def save_timeseries(path, y):
    lines = [",".join(repr(float(v)) for v in row) for row in y.samples]
    atomic_write(path, "\r\n".join(lines) + "\r\n")


def load_timeseries(path):
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return TimeSeries(data)


# -- spectral samples (CSV, or raw .npy for bulk runs) ------------------------


def save_samples_npy(path, samples):
    """Binary alternative: the (L, m, m) complex array, uniform-grid implied.

    Plain .npy has no timestamps, so reruns stay byte-identical.
    """
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.save(fh, np.ascontiguousarray(samples.values))
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_samples_npy(path):
    values = np.load(path)
    return SpectralDensitySamples(FrequencyGrid.default(values.shape[0]), values)


def save_samples(path, samples):
    rows = ["node_index,theta,i,j,re,im"]
    values = samples.values
    nodes = samples.grid.nodes
    m = samples.m
    for l in range(len(nodes)):
        for i in range(m):
            for j in range(m):
                v = values[l, i, j]
                rows.append(
                    "%d,%s,%d,%d,%s,%s"
                    % (l, repr(float(nodes[l])), i, j, repr(float(v.real)), repr(float(v.imag)))
                )
    atomic_write(path, "\r\n".join(rows) + "\r\n")


def load_samples(path):
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    L = int(raw[:, 0].max()) + 1
    m = int(raw[:, 2].max()) + 1
    if raw.shape[0] != L * m * m:
        raise ArgumentError("sample file is incomplete")
    grid = FrequencyGrid.default(L)
    if not np.allclose(np.unique(raw[:, 1]), grid.nodes, atol=1e-12):
        raise ArgumentError("sample thetas are not the uniform speclink grid")
    values = np.zeros((L, m, m), dtype=complex)
    li = raw[:, 0].astype(int)
    ii = raw[:, 2].astype(int)
    jj = raw[:, 3].astype(int)
    values[li, ii, jj] = raw[:, 4] + 1j * raw[:, 5]
    return SpectralDensitySamples(grid, values)


# -- score matrices ----------------------------------------------------------


def save_scores(path, G):
    rows = ["i,j,score,in_prior"]
    for i in range(G.m):
        for j in range(i + 1, G.m):
            if (i, j) in G.omega_sigma:
                rows.append("%d,%d,,1" % (i, j))
            else:
                rows.append("%d,%d,%s,0" % (i, j, repr(float(G.scores[(i, j)]))))
    atomic_write(path, "\r\n".join(rows) + "\r\n")


def load_scores(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines[0] != "i,j,score,in_prior":
        raise ArgumentError("not a speclink score file")
    scores = {}
    prior_edges = []
    m = 0
    for ln in lines[1:]:
        si, sj, ss, sp = ln.split(",")
        i, j = int(si), int(sj)
        m = max(m, j + 1)
        if sp == "1":
            prior_edges.append((i, j))
        else:
            scores[(i, j)] = float(ss)
    omega = Support(m, prior_edges)
    return ScoreMatrix(m=m, omega_sigma=omega, scores=scores)
