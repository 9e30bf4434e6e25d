"""Generalized translation and convolution on the half-line.

tau^y f(x) averages f over the third side z of triangles with sides x, y.
Two parametrizations are implemented:

* angular: z = sqrt(x^2 + y^2 - 2xy cos t), weight c_t sin^{r-1} t dt on [0, pi];
* side length: density c(r) Delta(x,y,z)^{r-2} z / (xy)^{r-1} dz on
  [|x-y|, x+y], Delta the triangle area.

The angular form is the default.  The side-length form integrates its
endpoint singularities with Gauss-Jacobi rules and serves as a cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .bessel import constants
from .errors import GridMismatchError, TruncationWarning, UsageError
from .grid import GAUSS_ORDER, PHYSICAL, SampledFunction
from .measure import BesselSpace

THETA_FORM = "theta"
Z_FORM = "z"

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)


def triangle_area(x, y, z):
    """Heron's formula in the cancellation-free sorted form; 0 when the
    three lengths do not form a proper triangle."""
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    s = np.sort(np.stack([x, y, z]), axis=0)
    c, b, a = s[0], s[1], s[2]  # a >= b >= c
    p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    area = 0.25 * np.sqrt(np.maximum(p, 0.0))
    area = np.where(c - (a - b) > 0, area, 0.0)
    return float(area) if area.ndim == 0 else area


@lru_cache(maxsize=128)
def _jacobi_unit(alpha: float, beta: float):
    """Gauss-Jacobi rule for int_0^1 g(s) (1-s)^alpha s^beta ds."""
    u, w = roots_jacobi(GAUSS_ORDER, alpha, beta)
    scale = 0.5 ** (alpha + beta + 1.0)
    return 0.5 * (u + 1.0), w * scale


def _panel_rule(panels: int, left_exp: float, right_exp: float):
    """Rule on [0, 1] for g(s) s^left (1-s)^right with ``panels`` equal panels.

    End panels use Gauss-Jacobi for their singular factor; the opposite
    endpoint's factor is evaluated explicitly since it is smooth there."""
    h = 1.0 / panels
    nodes, weights = [], []
    for k in range(panels):
        a = k * h
        if panels == 1:
            s, w = _jacobi_unit(right_exp, left_exp)
            nodes.append(s)
            weights.append(w)
            continue
        if k == 0 and left_exp != 0.0:
            s, w = _jacobi_unit(0.0, left_exp)
            x = a + h * s
            nodes.append(x)
            weights.append(w * h ** (left_exp + 1.0) * (1.0 - x) ** right_exp)
        elif k == panels - 1 and right_exp != 0.0:
            s, w = _jacobi_unit(right_exp, 0.0)
            x = a + h * s
            nodes.append(x)
            weights.append(w * h ** (right_exp + 1.0) * x**left_exp)
        else:
            x = a + 0.5 * h * (_GL_NODES + 1.0)
            nodes.append(x)
            weights.append(0.5 * h * _GL_WEIGHTS * x**left_exp * (1.0 - x) ** right_exp)
    return np.concatenate(nodes), np.concatenate(weights)


@lru_cache(maxsize=256)
def _theta_rule(r: float, panels: int):
    """Nodes t in (0, pi) and weights for c_t sin^{r-1}(t) dt; they sum to 1."""
    e = r - 1.0
    s, w = _panel_rule(panels, e, e)
    t = math.pi * s
    # sin^{r-1} t = [pi s (1-s)]^{r-1} * (sin t / (pi s (1-s)))^{r-1}
    smooth = np.sin(t) / (math.pi * s * (1.0 - s))
    w = w * math.pi * math.pi**e * smooth**e * constants(r).theta_constant
    cos_t = np.cos(t)
    cos_t.setflags(write=False)
    w.setflags(write=False)
    return cos_t, w


class Interpolant:
    """Local cubic Lagrange interpolation of grid values.

    Queries beyond R return 0 and are counted as clipped."""

    def __init__(self, f: SampledFunction):
        if f.side != PHYSICAL:
            raise GridMismatchError("translation acts on physical-side functions")
        self.x = np.asarray(f.grid.nodes)
        self.v = np.asarray(f.values)
        self.R = f.grid.R
        if self.x.size < 4:
            raise UsageError("interpolation needs at least four nodes")

    def __call__(self, q: np.ndarray) -> np.ndarray:
        x, v = self.x, self.v
        i0 = np.clip(np.searchsorted(x, q) - 2, 0, x.size - 4)
        out = np.zeros(q.shape, dtype=v.dtype)
        for a in range(4):
            la = np.ones(q.shape)
            xa = x[i0 + a]
            for b in range(4):
                if b != a:
                    xb = x[i0 + b]
                    la = la * (q - xb) / (xa - xb)
            out = out + la * v[i0 + a]
        return np.where(q > self.R, 0.0, out)


@dataclass
class TranslationInfo:
    """Diagnostics of one translation: the largest W-mass that fell beyond R
    for any output point, that mass times |f| near R, and the largest
    number of quadrature panels used."""

    clipped_mass: float
    clipped_contribution: float
    max_panels: int


def _panels_needed(xs: np.ndarray, y: float, scale: float, minimum: int = 4) -> np.ndarray:
    # |dz/dt| <= min(x, y), so pi*min(x,y)/panels bounds the z-span per panel
    return minimum + np.ceil(math.pi * np.minimum(xs, y) / scale).astype(int)


def _bucket(panels: np.ndarray) -> np.ndarray:
    return 2 ** np.ceil(np.log2(np.maximum(panels, 1))).astype(int)


def _theta_translate(r, g, xs, y, panels, R):
    out = np.zeros(xs.shape, dtype=complex)
    clipped = 0.0
    buckets = _bucket(panels)
    for P in np.unique(buckets):
        sel = buckets == P
        cos_t, w = _theta_rule(r, int(P))
        xx = xs[sel][:, None]
        z = np.sqrt(np.maximum(xx * xx + y * y - 2.0 * xx * y * cos_t[None, :], 0.0))
        out[sel] = g(z) @ w
        if R is not None:
            clipped = max(clipped, float(((z > R) * w[None, :]).sum(axis=1).max(initial=0.0)))
    return out, clipped, int(buckets.max(initial=0))


def _z_translate(r, g, xs, y, panels, R):
    c = constants(r)
    beta = 0.5 * (r - 2.0)
    out = np.zeros(xs.shape, dtype=complex)
    clipped = 0.0
    buckets = _bucket(panels)
    coincide = np.abs(xs - y) <= 1e-14 * (xs + y)
    for P in np.unique(buckets):
        for same in (False, True):
            sel = (buckets == P) & (coincide == same)
            if not np.any(sel):
                continue
            xx = xs[sel][:, None]
            lo = np.abs(xx - y)
            hi = xx + y
            if same:
                # a = 0: Delta^{r-2} z = 4^{2-r} z^{r-1} [(b-z)(b+z)]^beta
                s, w = _panel_rule(int(P), r - 1.0, beta)
                z = hi * s[None, :]
                dens = (hi + z) ** beta
                jac = hi ** (r - 1.0 + beta + 1.0)
            else:
                s, w = _panel_rule(int(P), beta, beta)
                z = lo + (hi - lo) * s[None, :]
                dens = z * ((z + lo) * (hi + z)) ** beta
                jac = (hi - lo) ** (2.0 * beta + 1.0)
            weights = c.c_r * 4.0 ** (2.0 - r) * w[None, :] * dens * jac / (xx * y) ** (r - 1.0)
            out[sel] = (g(z) * weights).sum(axis=1)
            if R is not None:
                clipped = max(clipped, float(((z > R) * weights).sum(axis=1).max(initial=0.0)))
    return out, clipped, int(buckets.max(initial=0))


def translate(
    space: BesselSpace,
    f,
    y: float,
    x=None,
    method: str = THETA_FORM,
    panel_scale: float | None = None,
    return_info: bool = False,
):
    """tau^y f evaluated on the nodes of f's grid (or at ``x``).

    ``f`` is a SampledFunction (interpolated off-grid, zero beyond R) or a
    vectorized callable.  ``panel_scale`` is the z-span covered by one
    8-node quadrature panel; it defaults to the grid's finest cell width."""
    y = float(y)
    if not (y > 0 and math.isfinite(y)):
        raise UsageError(f"translation distance must be positive, got {y!r}")
    if method not in (THETA_FORM, Z_FORM):
        raise UsageError(f"unknown translation method {method!r}")
    sampled = isinstance(f, SampledFunction)
    if sampled:
        g = Interpolant(f)
        R = f.grid.R
        if x is None:
            x = f.grid.nodes
        if panel_scale is None:
            panel_scale = float(f.grid.cell_widths.min())
    else:
        if x is None:
            raise UsageError("evaluation points are required when translating a callable")
        g = f
        R = None
        if panel_scale is None:
            panel_scale = 0.05
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise UsageError("translation is evaluated at positive points only")
    panels = _panels_needed(xs, y, panel_scale)
    worker = _theta_translate if method == THETA_FORM else _z_translate
    vals, clipped, pmax = worker(space.r, g, xs, y, panels, R)
    if not np.any(vals.imag):
        vals = vals.real
    # what the clipped part could have contributed had f kept its edge size
    clipped_contribution = 0.0
    if sampled and clipped > 0:
        edge = np.abs(f.values[-GAUSS_ORDER:]).max()
        clipped_contribution = clipped * edge
        if clipped_contribution > 1e-12 * max(np.abs(f.values).max(), 1e-300):
            warnings.warn(
                f"translation by y={y:g} reaches beyond R={R:g}: clipped W-mass up to {clipped:.3e}, "
                f"possible lost contribution {clipped_contribution:.3e}",
                TruncationWarning,
                stacklevel=2,
            )
    info = TranslationInfo(clipped_mass=clipped, clipped_contribution=clipped_contribution, max_panels=pmax)
    if sampled and x is f.grid.nodes:
        result = SampledFunction(f.grid, vals, PHYSICAL)
    else:
        result = vals
    return (result, info) if return_info else result


def convolve(space: BesselSpace, f: SampledFunction, g: SampledFunction, allow_large: bool = False,
             panel_scale: float | None = None) -> SampledFunction:
    """(f * g)(x) = int tau^x f(y) g(y) dmu(y) on the common grid.

    Uses tau^x f(y) = tau^y f(x) and skips nodes where w g is negligible."""
    if not f.grid.same_as(g.grid) or f.side != PHYSICAL or g.side != PHYSICAL:
        raise GridMismatchError("convolution needs two physical-side functions on one grid")
    grid = f.grid
    if grid.size > 1024 and not allow_large:
        raise UsageError(
            f"convolution on {grid.size} nodes is O(N^2) translations; pass allow_large=True to proceed"
        )
    wg = grid.weights * g.values
    keep = np.abs(wg) > 1e-18 * np.abs(wg).max(initial=0.0)
    total = np.zeros(grid.size, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for j in np.nonzero(keep)[0]:
            col = translate(space, f, grid.nodes[j], panel_scale=panel_scale)
            total += wg[j] * col.values
    if not (np.iscomplexobj(f.values) or np.iscomplexobj(g.values)):
        total = total.real
    return SampledFunction(grid, total, PHYSICAL)
