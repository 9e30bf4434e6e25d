"""Composite Gauss quadrature for x^r dx on (0, R], sampled functions,
L^p norms, distribution functions and CSV exchange."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_jacobi

from .errors import GridMismatchError, UsageError

GAUSS_ORDER = 8
UNIFORM = "uniform-cell"
GEOMETRIC = "geometric-cell"
SCHEMES = (UNIFORM, GEOMETRIC)
PHYSICAL = "physical"
SPECTRAL = "spectral"

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGrid:
    """Quadrature nodes and weights on (0, R] for the measure x^r dx.

    ``edges`` holds the cell boundaries; every cell carries GAUSS_ORDER nodes.
    """

    nodes: np.ndarray
    weights: np.ndarray
    r: float
    R: float
    scheme: str
    edges: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def n_cells(self) -> int:
        return self.edges.size - 1

    @property
    def cell_widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def total_measure(self) -> float:
        return self.R ** (self.r + 1) / (self.r + 1)

    def describe(self) -> dict:
        w = self.cell_widths
        return {
            "R": self.R,
            "r": self.r,
            "scheme": self.scheme,
            "cells": int(self.n_cells),
            "nodes": int(self.size),
            "smallest_cell": float(w.min()),
            "largest_cell": float(w.max()),
        }

    def same_as(self, other: "WeightedGrid") -> bool:
        return self is other or (
            self.size == other.size
            and self.r == other.r
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )


def grid_from_edges(edges, r: float, scheme: str = "custom") -> WeightedGrid:
    """Quadrature for x^r dx on the cells given by increasing ``edges``.

    Cells away from 0 use Gauss-Legendre with x^r folded into the weights.
    A cell starting at 0 uses Gauss-Jacobi with the weight x^r itself, so the
    rule stays exact on x^r * polynomial for non-integer r as well.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise UsageError("cell edges must be increasing and nonnegative")
    r = float(r)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    weights = half[:, None] * _GL_WEIGHTS[None, :] * nodes**r
    if edges[0] == 0.0:
        ju, jw = roots_jacobi(GAUSS_ORDER, 0.0, r)
        h = edges[1]
        nodes[0] = 0.5 * h * (1.0 + ju)
        weights[0] = (0.5 * h) ** (r + 1) * jw
    return WeightedGrid(
        nodes=_readonly(nodes.ravel()),
        weights=_readonly(weights.ravel()),
        r=r,
        R=float(edges[-1]),
        scheme=scheme,
        edges=_readonly(edges),
    )


def _geometric_widths(R: float, cells: int, ratio: float) -> np.ndarray:
    """Cell widths min(h0 q^j, H) with h0 = 1e-4 R, graded toward the origin.

    H is solved so the widths sum to R.  If even H = infinity cannot reach R
    (too few cells for the requested ratio) the ratio itself is raised."""
    h0 = 1e-4 * R
    j = np.arange(cells)
    graded = h0 * ratio**j
    if graded.sum() >= R:
        H = brentq(lambda H: np.minimum(graded, H).sum() - R, h0, R)
        return np.minimum(graded, H)
    # compare logarithms of the geometric sum so large q cannot overflow
    q = brentq(lambda q: math.log(h0) + cells * math.log(q) + math.log1p(-q ** (-cells)) - math.log(q - 1)
               - math.log(R), ratio, 1e3)
    return h0 * q**j


def build_grid(R: float, N: int, r: float, scheme: str = GEOMETRIC, ratio: float = 1.05) -> WeightedGrid:
    """Grid of N cells on (0, R] with GAUSS_ORDER nodes each.

    ``uniform-cell`` uses equal widths.  ``geometric-cell`` grades widths by
    ``ratio`` from a first cell of 1e-4 R until they reach a uniform cap.
    """
    if not (isinstance(N, (int, np.integer)) and N >= 8):
        raise UsageError(f"need at least 8 cells, got N={N!r}")
    R = float(R)
    if not (R > 0 and math.isfinite(R)):
        raise UsageError(f"truncation radius must be positive, got R={R!r}")
    if not (r > 0 and math.isfinite(r)):
        raise UsageError(f"weight exponent must be positive, got r={r!r}")
    if scheme == UNIFORM:
        edges = np.linspace(0.0, R, N + 1)
    elif scheme == GEOMETRIC:
        if not ratio > 1:
            raise UsageError("geometric ratio must exceed 1")
        widths = _geometric_widths(R, int(N), float(ratio))
        edges = np.concatenate([[0.0], np.cumsum(widths)])
        edges[-1] = R
    else:
        raise UsageError(f"unknown grid scheme {scheme!r}; expected one of {SCHEMES}")
    return grid_from_edges(edges, r, scheme)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: WeightedGrid
    values: np.ndarray
    side: str = PHYSICAL

    def __post_init__(self):
        vals = np.asarray(self.values)
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        if vals.shape != (self.grid.size,):
            raise UsageError(f"expected {self.grid.size} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise UsageError("sampled values must be finite")
        if self.side not in (PHYSICAL, SPECTRAL):
            raise UsageError(f"side must be physical or spectral, got {self.side!r}")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values, self.side)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar) -> "SampledFunction":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__


def _check_same(a: SampledFunction, b: SampledFunction):
    if a.side != b.side or not a.grid.same_as(b.grid):
        raise GridMismatchError("functions live on different grids")


def sample(grid: WeightedGrid, func, side: str = PHYSICAL) -> SampledFunction:
    return SampledFunction(grid, func(grid.nodes), side)


def integrate(f: SampledFunction):
    return np.dot(f.grid.weights, f.values)


def lp_norm(f: SampledFunction, p) -> float:
    if isinstance(p, str):
        if p.lower() not in ("inf", "infinity", "∞"):
            raise UsageError(f"unrecognized exponent {p!r}")
        p = math.inf
    p = float(p)
    if not p >= 1:
        raise UsageError(f"L^p norm needs p >= 1, got {p}")
    mag = np.abs(f.values)
    if math.isinf(p):
        return float(mag.max(initial=0.0))
    if p == 1:
        return float(np.dot(f.grid.weights, mag))
    if p == 2:
        return float(math.sqrt(np.dot(f.grid.weights, mag * mag)))
    peak = mag.max(initial=0.0)
    if peak == 0:
        return 0.0
    # scale first so large p cannot overflow
    return float(peak * np.dot(f.grid.weights, (mag / peak) ** p) ** (1.0 / p))


def distribution_mass(f: SampledFunction, lam: float) -> float:
    """mu({|f| > lam}) computed from node indicators."""
    if not lam > 0:
        raise UsageError(f"height must be positive, got {lam!r}")
    return float(f.grid.weights[np.abs(f.values) > lam].sum())


# ---------------------------------------------------------------------------
# CSV exchange


def to_csv_text(f: SampledFunction) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    label = "lambda" if f.side == SPECTRAL else "x"
    writer.writerow([label, "re", "im"])
    vals = np.asarray(f.values, dtype=complex)
    for x, v in zip(f.grid.nodes, vals):
        writer.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(f: SampledFunction, path: str):
    atomic_write_text(path, to_csv_text(f))


def parse_csv_text(text: str, grid: WeightedGrid, side: str = PHYSICAL, rtol: float = 1e-12) -> SampledFunction:
    """Read (node, re[, im]) rows; nodes must match ``grid`` exactly (to rtol)."""
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(c.strip() for c in row)]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    if len(rows) != grid.size:
        raise GridMismatchError(f"CSV has {len(rows)} rows but the grid has {grid.size} nodes")
    data = np.zeros((len(rows), 3))
    for i, row in enumerate(rows):
        if len(row) not in (2, 3):
            raise UsageError(f"CSV row {i + 1}: expected 2 or 3 columns, got {len(row)}")
        try:
            data[i, : len(row)] = [float(c) for c in row]
        except ValueError as exc:
            raise UsageError(f"CSV row {i + 1}: {exc}") from None
    if not np.allclose(data[:, 0], grid.nodes, rtol=rtol, atol=0.0):
        bad = int(np.argmax(np.abs(data[:, 0] - grid.nodes)))
        raise GridMismatchError(
            f"CSV node {bad + 1} = {data[bad, 0]!r} does not match grid node {grid.nodes[bad]!r}"
        )
    values = data[:, 1] + 1j * data[:, 2] if np.any(data[:, 2]) else data[:, 1]
    return SampledFunction(grid, values, side)


def read_csv(path: str, grid: WeightedGrid, side: str = PHYSICAL) -> SampledFunction:
    with open(path, encoding="utf-8") as fh:
        return parse_csv_text(fh.read(), grid, side)
