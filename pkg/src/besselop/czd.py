"""Calderon-Zygmund decomposition on the dyadic intervals of (0, R].

The dyadic system is [k 2^-m R, (k+1) 2^-m R) for m = 0 .. m_max, where the
finest level is the coarsest one whose intervals are at least as wide as
every grid cell.  Averages use the grid's own quadrature measure so that
the bad pieces have exactly zero quadrature mean.

Stopping time: an interval Q is selected when it is maximal with
avg_Q |f| > lam.  Its dyadic parent P was not selected, so
int_P |f| <= lam mu(P).  Selected intervals are grouped by parent: the bad
piece b_k collects (f - avg_Q f) 1_Q over the selected children Q of one
parent P, and I_k is P written as a centered interval.  This gives
||b_k||_1 <= 2 lam mu(I_k) and sum mu(I_k) <= 2^n ||f||_1 / lam, the
latter because a dyadic parent has at most 2^n times its child's measure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResolutionWarning, UsageError
from .grid import PHYSICAL, SampledFunction, WeightedGrid, lp_norm
from .measure import BesselSpace, Interval


@dataclass(frozen=True)
class CZPiece:
    """One bad piece: supported in ``interval`` (the parent P), nonzero on the
    selected children ``segments``."""

    interval: Interval
    segments: tuple
    values: SampledFunction
    measure: float
    l1_norm: float
    mean: complex
    parent_l1: float

    def l1_ratio(self, height: float) -> float:
        return self.l1_norm / (height * self.measure)


@dataclass(frozen=True)
class CZDecomposition:
    good: SampledFunction
    pieces: tuple
    height: float
    constants: dict

    def reassemble(self) -> SampledFunction:
        total = np.array(self.good.values, dtype=complex)
        for piece in self.pieces:
            total += piece.values.values
        if not np.iscomplexobj(self.good.values):
            total = total.real
        return self.good.with_values(total)

    def as_dict(self) -> dict:
        return {
            "height": self.height,
            "pieces": [
                {
                    "center": p.interval.center,
                    "radius": p.interval.radius,
                    "l1_ratio": p.l1_ratio(self.height),
                }
                for p in self.pieces
            ],
            "constants": dict(self.constants),
        }


def finest_level(grid: WeightedGrid) -> int:
    """Deepest dyadic level whose intervals are no narrower than any cell."""
    widest = float(grid.cell_widths.max())
    m = int(math.floor(math.log2(grid.R / widest) + 1e-9))
    return max(m, 0)


def overlap_count(intervals) -> int:
    """Largest number of the open segments (lo, hi) sharing a point."""
    events = []
    for lo, hi in intervals:
        events.append((lo, 1))
        events.append((hi, -1))
    # at a shared endpoint, close before opening: the segments are open
    events.sort(key=lambda e: (e[0], e[1]))
    depth = best = 0
    for _, step in events:
        depth += step
        best = max(best, depth)
    return best


def _dyadic_index(x: np.ndarray, R: float, m: int) -> np.ndarray:
    count = 1 << m
    return np.minimum((x * (count / R)).astype(np.int64), count - 1)


def decompose(space: BesselSpace, f: SampledFunction, height: float) -> CZDecomposition:
    """Split f = g + sum_k b_k at the given height.

    Raises DomainError when the average of |f| over all of (0, R] already
    exceeds the height: the truncated domain then has no unselected parent
    to control the pieces.  Warns when |f| exceeds the height at nodes that
    no selected interval covers, which means the dyadic levels stop before
    |f| <= height is resolved pointwise."""
    height = float(height)
    if not (height > 0 and math.isfinite(height)):
        raise UsageError(f"height must be positive, got {height!r}")
    if f.side != PHYSICAL:
        raise UsageError("decomposition acts on physical-side functions")
    if abs(f.grid.r - space.r) > 1e-12:
        raise UsageError("function grid and space disagree on r")
    grid = f.grid
    x, w = grid.nodes, grid.weights
    mag = np.abs(f.values)
    R = grid.R
    depth = finest_level(grid)

    total = float(np.dot(w, mag))
    root_avg = total / float(w.sum())
    if root_avg > height:
        raise DomainError(
            f"average of |f| over (0, R] is {root_avg:.6g}, above the height {height:.6g}; "
            "raise the height or enlarge R"
        )

    covered = np.zeros(x.size, dtype=bool)
    selected = []  # (level, index)
    for m in range(1, depth + 1):
        idx = _dyadic_index(x, R, m)
        count = 1 << m
        mass = np.bincount(idx, weights=w, minlength=count)
        integral = np.bincount(idx, weights=w * mag, minlength=count)
        taken = np.bincount(idx, weights=covered.astype(float), minlength=count) > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = np.where(mass > 0, integral / np.where(mass > 0, mass, 1.0), 0.0)
        hits = np.nonzero((avg > height) & ~taken & (mass > 0))[0]
        for k in hits:
            selected.append((m, int(k)))
        if hits.size:
            covered |= np.isin(idx, hits)

    vals = np.asarray(f.values)
    dtype = vals.dtype
    good = vals.copy()
    groups: dict[tuple[int, int], list[int]] = {}
    for m, k in selected:
        groups.setdefault((m - 1, k // 2), []).append(k)

    pieces = []
    for (pm, pk), kids in sorted(groups.items()):
        pw = R / (1 << pm)
        parent_lo, parent_hi = pk * pw, (pk + 1) * pw
        in_parent = _dyadic_index(x, R, pm) == pk
        b = np.zeros(x.size, dtype=dtype)
        segments = []
        child_idx = _dyadic_index(x, R, pm + 1)
        for k in sorted(kids):
            sel = child_idx == k
            avg = np.dot(w[sel], vals[sel]) / w[sel].sum()
            b[sel] = vals[sel] - avg
            good[sel] = avg
            segments.append((k * pw / 2, (k + 1) * pw / 2))
        piece_fn = SampledFunction(grid, b, PHYSICAL)
        pieces.append(CZPiece(
            interval=Interval(0.5 * (parent_lo + parent_hi), 0.5 * pw),
            segments=tuple(segments),
            values=piece_fn,
            measure=float(w[in_parent].sum()),
            l1_norm=float(np.dot(w, np.abs(b))),
            mean=complex(np.dot(w, b)),
            parent_l1=float(np.dot(w[in_parent], mag[in_parent])),
        ))

    good_fn = SampledFunction(grid, good, PHYSICAL)
    uncovered_excess = float(np.max(np.where(covered, 0.0, mag), initial=0.0)) / height
    if uncovered_excess > 1.0:
        warnings.warn(
            f"|f| reaches {uncovered_excess:.3g} times the height outside the selected intervals; "
            "the finest dyadic level does not resolve this height",
            ResolutionWarning,
            stacklevel=2,
        )
    constants = _constants(space, f, good_fn, pieces, height, total, depth, uncovered_excess)
    return CZDecomposition(good=good_fn, pieces=tuple(pieces), height=height, constants=constants)


def _constants(space, f, good, pieces, height, f_l1, depth, uncovered_excess) -> dict:
    good_l1 = lp_norm(good, 1)
    bad_l1 = sum(p.l1_norm for p in pieces)
    doubled = [(p.interval.center - 2 * p.interval.radius, p.interval.center + 2 * p.interval.radius)
               for p in pieces]
    # zero mean is checked relative to the mass of |f| on the piece's interval
    mean_defect = max((abs(p.mean) / p.parent_l1 for p in pieces if p.parent_l1 > 0), default=0.0)
    good_sup = float(np.abs(good.values).max(initial=0.0))
    return {
        "C_g": good_sup / height,
        "C_b": max((p.l1_ratio(height) for p in pieces), default=0.0),
        "C_o": overlap_count(doubled),
        "C_s": (sum(p.measure for p in pieces) * height / f_l1) if f_l1 > 0 else 0.0,
        "good_l1_ratio": good_l1 / f_l1 if f_l1 > 0 else 0.0,
        "bad_l1_total": bad_l1,
        "good_l2_squared": lp_norm(good, 2) ** 2,
        "good_l1": good_l1,
        "mean_defect": mean_defect,
        "pieces": len(pieces),
        "finest_level": depth,
        "uncovered_excess": uncovered_excess,
        "doubling_bound": 2.0 ** space.n,
    }
