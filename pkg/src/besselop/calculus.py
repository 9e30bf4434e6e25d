"""Spectral functional calculus of the Bessel operator.

An operator m(sqrt L) acts on the transform side by multiplication with
m(lambda).  This module provides the common symbols (heat, imaginary power,
the compactly supported mollifier's transform), the dyadic pieces used in the
off-diagonal kernel estimate, kernel columns, and the tail mass of the kernel
of L^{i alpha} (I - Phi(theta r_I sqrt L))^M away from a dilated interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .bessel import phi_lambda, phi_matrix
from .errors import ConstructionError, DomainError, EvaluationError, UsageError
from .grid import GAUSS_ORDER, PHYSICAL, SPECTRAL, SampledFunction
from .measure import BesselSpace, Interval, ball_volume
from .transform import TransformPlan
from .translation import translate

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)


# ---------------------------------------------------------------------------
# multipliers


@dataclass(frozen=True)
class Multiplier:
    symbol: Callable[[np.ndarray], np.ndarray]
    label: str
    note: str = ""
    bound: float | None = None
    support: tuple[float, float] | None = None

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        vals = np.asarray(self.symbol(lam))
        if vals.shape != lam.shape:
            vals = np.broadcast_to(vals, lam.shape).copy()
        if not np.all(np.isfinite(vals)):
            raise EvaluationError(f"symbol {self.label!r} is not finite on the spectral grid")
        return vals

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        bound = None if self.bound is None or other.bound is None else self.bound * other.bound
        return Multiplier(lambda lam: self.symbol(lam) * other.symbol(lam), f"({self.label})*({other.label})",
                          bound=bound)


def constant_multiplier(value: complex = 1.0) -> Multiplier:
    return Multiplier(lambda lam: np.full(np.shape(lam), value), f"const {value}", "constant", abs(value))


def heat_multiplier(t: float) -> Multiplier:
    if not t > 0:
        raise UsageError(f"heat time must be positive, got {t!r}")
    return Multiplier(lambda lam: np.exp(-t * lam * lam), f"exp(-{t:g} lam^2)", "entire, Gaussian decay", 1.0)


def imaginary_power_multiplier(alpha: float) -> Multiplier:
    alpha = float(alpha)
    return Multiplier(
        lambda lam: np.exp(2j * alpha * np.log(lam)),
        f"lam^(2i*{alpha:g})",
        "unimodular, oscillates without limit at lambda -> 0",
        1.0,
    )


def power_multiplier(power: float) -> Multiplier:
    return Multiplier(lambda lam: lam**power, f"lam^{power:g}", "polynomial growth")


def apply_multiplier(plan: TransformPlan, m: Multiplier, f: SampledFunction) -> SampledFunction:
    spectrum = plan.forward(f)
    return plan.inverse(spectrum.with_values(m(plan.spectral.nodes) * spectrum.values))


def heat(plan: TransformPlan, t: float, f: SampledFunction) -> SampledFunction:
    return apply_multiplier(plan, heat_multiplier(t), f)


def imaginary_power(plan: TransformPlan, alpha: float, f: SampledFunction) -> SampledFunction:
    return apply_multiplier(plan, imaginary_power_multiplier(alpha), f)


def oscillation_diagnostic(plan: TransformPlan, alpha: float, max_phase: float = 6.0) -> dict:
    """How well the spectral cells resolve lambda^{2i alpha}.

    The phase of lambda^{2i alpha} changes by 2 alpha ln(b/a) across a cell
    [a, b].  The cell touching 0 can never resolve it; its measure is
    reported instead."""
    edges = plan.spectral.edges
    lam_min = float(plan.spectral.nodes[0])
    phase = 2.0 * abs(alpha) * np.log(edges[2:] / edges[1:-1])
    worst = float(phase.max(initial=0.0))
    wavelength = math.inf if alpha == 0 or lam_min == 1.0 else 2 * math.pi / (2 * abs(alpha) * abs(math.log(lam_min)))
    first = edges[1] ** (plan.r + 1) / (plan.r + 1)
    return {
        "alpha": float(alpha),
        "smallest_node": lam_min,
        "wavelength_at_smallest_node": wavelength,
        "max_phase_per_cell": worst,
        "first_cell_measure": float(first),
        "adequate": worst <= max_phase,
    }


# ---------------------------------------------------------------------------
# mollifier


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _bump_rule(cells: int):
    edges = np.linspace(0.0, 1.0, cells + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
    w = (half[:, None] * _GL_WEIGHTS).ravel()
    return t, w


class MollifierTable:
    """Phi(xi) = (1/2pi) int phi(t) cos(t xi) dt for the even bump
    phi(t) = kappa exp(-1/(1-t^2)) on (-1, 1) with int phi = 2 pi.

    Values on [0, xi_max] come from a cubic spline through a dense table;
    larger |xi| are computed by direct quadrature."""

    BASE_CELLS = 400

    def __init__(self, xi_max: float = 64.0, step: float = 1.0 / 32, tol: float = 1e-8):
        if not xi_max >= 64:
            raise UsageError(f"mollifier table needs xi_max >= 64, got {xi_max!r}")
        self.xi_max = float(xi_max)
        t, w = _bump_rule(self.BASE_CELLS)
        half_integral = float(np.dot(w, _bump(t)))
        if not (half_integral > 0 and math.isfinite(half_integral)):
            raise ConstructionError("bump integral quadrature failed")
        self.kappa = math.pi / half_integral  # 2 * half_integral * kappa = 2 pi
        # 1 - Phi(xi) <= taylor_constant * xi^2, equality to leading order at 0
        self.taylor_constant = float(self.kappa / (2 * math.pi) * np.dot(w, t * t * _bump(t)))
        for _ in range(4):
            grid = np.arange(0.0, self.xi_max + step / 2, step)
            vals = self.direct(grid)
            spline = CubicSpline(grid, vals, bc_type=((1, 0.0), "not-a-knot"))
            mids = 0.5 * (grid[1:] + grid[:-1])
            err = float(np.abs(spline(mids) - self.direct(mids)).max())
            if err < tol:
                break
            step /= 2
        else:
            raise ConstructionError(f"mollifier interpolation error {err:.2e} above {tol:.0e}")
        self.step = step
        self.interpolation_error = err
        self._spline = spline
        self._grid = grid
        self._values = vals
        # 1 - Phi can exceed 1 where Phi dips below 0
        self.overshoot = float(max(0.0, -vals.min()))

    def direct(self, xi) -> np.ndarray:
        xi = np.abs(np.atleast_1d(np.asarray(xi, dtype=float)))
        cells = max(self.BASE_CELLS, int(math.ceil(xi.max(initial=0.0) / 3.0)))
        t, w = _bump_rule(cells)
        wb = w * _bump(t) * (self.kappa / math.pi)
        out = np.empty_like(xi)
        rows = max(1, (1 << 22) // t.size)
        for s in range(0, xi.size, rows):
            out[s:s + rows] = np.cos(np.outer(xi[s:s + rows], t)) @ wb
        return out

    def __call__(self, xi):
        xi_arr = np.abs(np.asarray(xi, dtype=float))
        flat = xi_arr.ravel()
        out = np.empty_like(flat)
        inside = flat <= self.xi_max
        out[inside] = self._spline(flat[inside])
        if np.any(~inside):
            out[~inside] = self.direct(flat[~inside])
        if xi_arr.ndim == 0:
            return float(out[0])
        return out.reshape(xi_arr.shape)

    def bump(self, t):
        return self.kappa * _bump(t)

    def describe(self) -> dict:
        return {
            "xi_max": self.xi_max,
            "kappa": self.kappa,
            "step": self.step,
            "interpolation_error": self.interpolation_error,
            "taylor_constant": self.taylor_constant,
            "overshoot": self.overshoot,
        }


def build_mollifier(xi_max: float = 64.0) -> MollifierTable:
    return MollifierTable(xi_max)


def mollifier_multiplier(table: MollifierTable, t: float) -> Multiplier:
    if not t > 0:
        raise UsageError(f"mollifier scale must be positive, got {t!r}")
    return Multiplier(lambda lam: table(t * lam), f"Phi({t:g} lam)", "transform of a compactly supported bump",
                      1.0)


# ---------------------------------------------------------------------------
# dyadic partition of unity


def smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1, 1.0, 0.0)
    mid = (t > 0) & (t < 1)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def plateau(x):
    """Smooth function equal to 1 on [1/2, 2], supported in [1/4, 4]."""
    x = np.asarray(x, dtype=float)
    rise = smoothstep((x - 0.25) / 0.25)
    fall = smoothstep((4.0 - x) / 2.0)
    return np.where(x <= 2.0, rise, fall)


def psi(x):
    """Dyadic bump with sum_l psi(2^-l x) = 1 for x > 0."""
    x = np.asarray(x, dtype=float)
    den = np.zeros_like(x)
    for k in range(-4, 5):
        den = den + plateau(x * 2.0**k)
    num = plateau(x)
    return np.where(num > 0, num / np.where(den > 0, den, 1.0), 0.0)


def partition_sum(x, ell_min: int, ell_max: int):
    x = np.asarray(x, dtype=float)
    return sum(psi(x * 2.0 ** (-ell)) for ell in range(ell_min, ell_max + 1))


# ---------------------------------------------------------------------------
# tail estimate configuration and dyadic symbols


@dataclass(frozen=True)
class TailEstimateConfig:
    alpha: float
    M: int
    s0: int
    n: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise UsageError(f"M must be a positive integer, got {self.M!r}")
        if int(self.s0) != self.s0 or self.s0 % 2 or self.s0 <= self.n / 2:
            raise UsageError(f"s0 must be an even integer above n/2 = {self.n / 2:g}, got {self.s0!r}")
        if not 2 * self.M > self.s0 - self.n / 2:
            raise UsageError(f"need 2M > s0 - n/2, got M={self.M}, s0={self.s0}, n={self.n:g}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "s0", int(self.s0))

    @property
    def sigma(self) -> float:
        return math.sqrt(1.0 + abs(self.alpha))

    @property
    def theta(self) -> float:
        return 1.0 / (4.0 * self.M * self.sigma)

    @property
    def decay_exponent(self) -> float:
        """s0 - n/2, the per-octave decay exponent of the dyadic pieces."""
        return self.s0 - self.n / 2

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "M": self.M, "s0": self.s0, "n": self.n,
                "theta": self.theta, "sigma": self.sigma}


def default_s0(n: float) -> int:
    s = 2
    while not s > n / 2 + 1:
        s += 2
    return s


def default_M(n: float, s0: int) -> int:
    M = 1
    while not 2 * M > s0 - n / 2 + 2:
        M += 1
    return M


def tail_config(alpha: float, space: BesselSpace, M: int | None = None, s0: int | None = None) -> TailEstimateConfig:
    n = space.n
    if s0 is None:
        s0 = default_s0(n)
    if M is None:
        M = default_M(n, s0)
    return TailEstimateConfig(float(alpha), M, s0, n)


def _damped_oscillation(cfg: TailEstimateConfig, r_I: float, table: MollifierTable, lam: np.ndarray) -> np.ndarray:
    damp = (1.0 - table.direct(cfg.theta * r_I * lam).reshape(np.shape(lam))) ** cfg.M
    if cfg.alpha == 0:
        return damp
    return damp * np.exp(2j * cfg.alpha * np.log(lam))


def dyadic_symbol(ell: int, cfg: TailEstimateConfig, r_I: float, table: MollifierTable) -> Multiplier:
    scale = 2.0 ** (-ell)
    bound = damping_bound(ell, cfg, r_I, table)

    def symbol(lam):
        lam = np.asarray(lam, dtype=float)
        out = np.zeros(lam.shape, dtype=complex if cfg.alpha else float)
        inside = (lam > 2.0 ** (ell - 2)) & (lam < 2.0 ** (ell + 2))
        lam_in = lam[inside]
        out[inside] = psi(lam_in * scale) * _damped_oscillation(cfg, r_I, table, lam_in)
        return out

    return Multiplier(symbol, f"F[l={ell}, alpha={cfg.alpha:g}, M={cfg.M}]", "smooth, compact support",
                      bound, (2.0 ** (ell - 2), 2.0 ** (ell + 2)))


def damping_constant(cfg: TailEstimateConfig, table: MollifierTable) -> float:
    """C with sup|F_l| <= C (2^l theta r_I)^{2M}: on the support lambda < 2^{l+2},
    1 - Phi(xi) <= taylor_constant xi^2 gives C = (16 taylor_constant)^M."""
    return (16.0 * table.taylor_constant) ** cfg.M


def damping_bound(ell: int, cfg: TailEstimateConfig, r_I: float, table: MollifierTable) -> float:
    ceiling = (1.0 + table.overshoot) ** cfg.M
    return min(ceiling, damping_constant(cfg, table) * (2.0**ell * cfg.theta * r_I) ** (2 * cfg.M))


def tail_symbol(cfg: TailEstimateConfig, r_I: float, table: MollifierTable, cutoff: float | None = None) -> Multiplier:
    """lambda^{2i alpha} (1 - Phi(theta r_I lambda))^M, optionally times the
    heat factor exp(-(lambda/cutoff)^2)."""

    def symbol(lam):
        vals = _damped_oscillation(cfg, r_I, table, np.asarray(lam, dtype=float))
        if cutoff is not None:
            vals = vals * np.exp(-(lam / cutoff) ** 2)
        return vals

    label = f"lam^(2i*{cfg.alpha:g}) (1-Phi)^{cfg.M}" + ("" if cutoff is None else f" exp(-(lam/{cutoff:g})^2)")
    return Multiplier(symbol, label, "bounded", (1.0 + table.overshoot) ** cfg.M)


# ---------------------------------------------------------------------------
# kernels


KERNEL_TRANSLATE = "translate"
KERNEL_SPECTRAL = "spectral"


def symbol_inverse(plan: TransformPlan, m: Multiplier) -> SampledFunction:
    """The function whose transform is m, i.e. the kernel profile k with
    K(x, y) = tau^y k(x)."""
    return plan.inverse(SampledFunction(plan.spectral, m(plan.spectral.nodes), SPECTRAL))


def kernel_column(plan: TransformPlan, m: Multiplier, y: float, method: str = KERNEL_TRANSLATE,
                  panel_scale: float | None = None) -> SampledFunction:
    """x -> K_{m(sqrt L)}(x, y) on the physical grid.

    ``translate`` computes tau^y applied to the inverse transform of m;
    ``spectral`` sums a(r)^-2 m(lam) phi_lam(x) phi_lam(y) lam^r over the
    spectral grid directly and is used as an independent check."""
    y = float(y)
    if not (0 < y <= plan.physical.R):
        raise UsageError(f"column point y={y!r} outside (0, R]")
    if method == KERNEL_TRANSLATE:
        profile = symbol_inverse(plan, m)
        return translate(plan.space, profile, y, panel_scale=panel_scale)
    if method == KERNEL_SPECTRAL:
        lam = plan.spectral.nodes
        vals = plan.inverse_values(m(lam) * phi_lambda(plan.space, lam, y), plan.physical.nodes)
        return SampledFunction(plan.physical, vals, PHYSICAL)
    raise UsageError(f"unknown kernel method {method!r}")


def gaussian_bound_fit(plan: TransformPlan, times, ys, noise: float = 1e-10,
                       c_grid=None) -> dict:
    """Fit |p_t(x,y)| <= C mu(I_sqrt(t)(x))^-1 exp(-|x-y|^2/(c t)).

    One exponent c is shared by all t (picked from ``c_grid`` to make the
    per-t constants C_t as uniform as possible); points where the kernel is
    below ``noise`` times its peak are excluded from the fit."""
    if c_grid is None:
        c_grid = np.geomspace(4.0, 64.0, 49)
    x = plan.physical.nodes
    samples = []
    for t in times:
        cols = []
        for y in ys:
            col = np.abs(kernel_column(plan, heat_multiplier(t), y).values)
            keep = col > noise * col.max()
            vol = np.array([ball_volume(plan.space, Interval(xi, math.sqrt(t))) for xi in x[keep]])
            cols.append((np.log(col[keep] * vol), (x[keep] - y) ** 2 / t))
        samples.append((t, np.concatenate([c[0] for c in cols]), np.concatenate([c[1] for c in cols])))
    best = None
    for c in c_grid:
        consts = [float(np.exp((logpv + d2 / c).max())) for _, logpv, d2 in samples]
        spread = max(consts) / min(consts)
        if best is None or spread < best[0]:
            best = (spread, float(c), consts)
    spread, c, consts = best
    return {"c": c, "C": dict(zip([float(t) for t in times], consts)), "stability": spread}


@dataclass
class TailMass:
    """Off-diagonal kernel mass and its dyadic breakdown.

    ``mass`` is the largest tail mass over the sampled column points y.
    ``per_ell``: tail mass of each dyadic piece's kernel column (max over y).
    ``majorant``: int_{z > delta} |k_l(z)| dmu(z) for the radial profile k_l
    on the plan's grids; by the contraction property of tau^y it bounds the
    piece's tail mass (delta is the distance from y to the tail region).
    ``regime``: the same majorant for the first octaves with
    2^l theta r_I > 1, computed on grids dedicated to each octave."""

    mass: float
    mass_by_y: dict
    per_ell: dict
    majorant: dict
    regime: dict
    regime_floor: float
    delta: float
    cutoff: float
    ell_range: tuple
    tail_measure: float
    rounding_scale: float
    config: dict = field(default_factory=dict)

    @property
    def majorant_sum(self) -> float:
        return float(sum(self.majorant.values()))

    @property
    def regime_start(self) -> int:
        return regime_start(self.config["theta"], self.config["r_I"])

    def decay_ratios(self) -> dict:
        """Ratios P_{l+1}/P_l over consecutive regime octaves whose values are
        both above the rounding floor."""
        ells = sorted(self.regime)
        out = {}
        for a, b in zip(ells, ells[1:]):
            if self.regime[a] > self.regime_floor and self.regime[b] > self.regime_floor:
                out[b] = self.regime[b] / self.regime[a]
        return out

    def as_dict(self) -> dict:
        return {
            "mass": self.mass,
            "mass_by_y": {repr(k): v for k, v in self.mass_by_y.items()},
            "majorant_sum": self.majorant_sum,
            "per_ell": {str(k): v for k, v in self.per_ell.items()},
            "majorant": {str(k): v for k, v in self.majorant.items()},
            "regime": {str(k): v for k, v in self.regime.items()},
            "regime_floor": self.regime_floor,
            "regime_start": self.regime_start,
            "decay_ratios": {str(k): v for k, v in self.decay_ratios().items()},
            "delta": self.delta,
            "cutoff": self.cutoff,
            "ell_range": list(self.ell_range),
            "tail_measure": self.tail_measure,
            "rounding_scale": self.rounding_scale,
            "config": self.config,
        }


def default_ell_range(plan: TransformPlan) -> tuple[int, int]:
    lo = int(math.floor(math.log2(4.0 / plan.physical.R)))
    hi = int(math.floor(math.log2(plan.spectral.R / 4.0)))
    return lo, hi


def regime_start(theta: float, r_I: float) -> int:
    """Smallest l with 2^l theta r_I > 1."""
    ell = int(math.floor(-math.log2(theta * r_I))) + 1
    while 2.0**ell * theta * r_I <= 1:
        ell += 1
    return ell


def dyadic_majorant(space: BesselSpace, ell: int, cfg: TailEstimateConfig, r_I: float, delta: float,
                    table: MollifierTable, width: float = 256.0, phase: float = 4.0) -> tuple[float, float]:
    """int over (delta, delta + width 2^-l) of |k_l(z)| dmu(z), where k_l is
    the inverse transform of the l-th dyadic symbol.

    Both grids are built for this octave alone: the band [2^{l-2}, 2^{l+2}]
    and a z-range of ``width`` wavelengths.  Returns the value and a
    floating point floor for it."""
    from .bessel import constants
    from .grid import grid_from_edges

    lo_b, hi_b = 2.0 ** (ell - 2), 2.0 ** (ell + 2)
    z_hi = delta + width * 2.0 ** (-ell)
    band_cells = max(8, int(math.ceil((hi_b - lo_b) * z_hi / phase)))
    z_cells = max(8, int(math.ceil((z_hi - delta) * hi_b / phase)))
    band = grid_from_edges(np.linspace(lo_b, hi_b, band_cells + 1), space.r)
    zs = grid_from_edges(np.linspace(delta, z_hi, z_cells + 1), space.r)
    lam = band.nodes
    coef = constants(space.r).a_r ** -2 * band.weights * psi(lam * 2.0 ** (-ell)) \
        * _damped_oscillation(cfg, r_I, table, lam)
    total = 0.0
    rows = max(1, (1 << 22) // lam.size)
    for s in range(0, zs.size, rows):
        blk = phi_matrix(space, zs.nodes[s:s + rows], lam)
        total += float(zs.weights[s:s + rows] @ np.abs(blk @ coef))
    floor = float(np.finfo(float).eps * np.abs(coef).sum() * zs.weights.sum() / math.sqrt(lam.size))
    return total, floor


def kernel_tail_mass(
    plan: TransformPlan,
    cfg: TailEstimateConfig,
    interval: Interval,
    y,
    table: MollifierTable,
    cutoff: float | None = None,
    ell_range: tuple[int, int] | None = None,
    regime_octaves: int = 3,
    block: int = 1 << 22,
) -> TailMass:
    """int over X minus 4 sigma I of |K(x, y)| dmu(x) for the operator
    L^{i alpha} (I - Phi(theta r_I sqrt L))^M, plus dyadic diagnostics.

    ``y`` may be one point of I or several; the reported mass is the largest.
    The full symbol is not integrable in lambda, so the total uses the
    product-form kernel of the symbol times exp(-(lambda/cutoff)^2);
    ``cutoff`` defaults to Lambda/7 so the spectral truncation sits where
    that factor is e^{-49}.  The dyadic pieces are compactly supported and
    need no cutoff."""
    space = plan.space
    if abs(cfg.n - space.n) > 1e-12:
        raise UsageError("tail configuration and plan disagree on the dimension")
    ys = [float(v) for v in np.atleast_1d(y)]
    for yv in ys:
        if not interval.contains(yv):
            raise UsageError(f"y={yv!r} is not in the interval {interval}")
    r_I = interval.radius
    reach = 4.0 * cfg.sigma * r_I
    lo_edge, hi_edge = interval.center - reach, interval.center + reach
    phys = plan.physical
    if hi_edge >= phys.R:
        raise DomainError(f"4 sigma I reaches {hi_edge:g}, beyond the physical grid R={phys.R:g}")
    if phys.cell_widths.max() > cfg.sigma * r_I:
        raise DomainError("physical cells are wider than sigma r_I; the tail region is not resolved")
    if cutoff is None:
        cutoff = plan.spectral.R / 7.0
    if ell_range is None:
        ell_range = default_ell_range(plan)
    ells = list(range(ell_range[0], ell_range[1] + 1))

    lam = plan.spectral.nodes
    c0 = plan.inverse_constant * plan.spectral.weights
    base = _damped_oscillation(cfg, r_I, table, lam)
    phi_y = np.stack([phi_lambda(space, lam, yv) for yv in ys], axis=1)  # (S, ny)
    full = (c0 * base * np.exp(-(lam / cutoff) ** 2))[:, None] * phi_y
    bands = []
    for ell in ells:
        sel = np.nonzero((lam > 2.0 ** (ell - 2)) & (lam < 2.0 ** (ell + 2)))[0]
        radial = c0[sel] * base[sel] * psi(lam[sel] * 2.0 ** (-ell))
        bands.append((ell, sel, radial, radial[:, None] * phi_y[sel]))

    x = phys.nodes
    w = phys.weights
    # distance from the sampled points y to the tail region
    delta = min(min(yv - lo_edge if lo_edge > 0 else math.inf, hi_edge - yv) for yv in ys)
    tail = (x < lo_edge) | (x > hi_edge)
    far = x > delta
    use = np.nonzero(tail | far)[0]
    mass = np.zeros(len(ys))
    per_ell = {ell: np.zeros(len(ys)) for ell in ells}
    major = {ell: 0.0 for ell in ells}
    rows = max(1, block // lam.size)
    for s in range(0, use.size, rows):
        idx = use[s:s + rows]
        block_phi = phi_matrix(space, x[idx], lam)
        wt = w[idx] * tail[idx]
        wf = w[idx] * far[idx]
        mass += wt @ np.abs(block_phi @ full)
        for ell, sel, radial, column in bands:
            sub = block_phi[:, sel]
            per_ell[ell] += wt @ np.abs(sub @ column)
            major[ell] += float(wf @ np.abs(sub @ radial))
    tail_measure = float(w[tail].sum())
    # floating point noise in a kernel value is about eps times the sum of
    # the magnitudes of its terms, shrunk by the usual random-walk factor
    rounding = float(np.finfo(float).eps * np.abs(full).sum(axis=0).max() * tail_measure / math.sqrt(lam.size))

    start = regime_start(cfg.theta, r_I)
    regime, floors = {}, []
    for ell in range(start, start + regime_octaves):
        value, floor = dyadic_majorant(space, ell, cfg, r_I, delta, table)
        regime[ell] = value
        floors.append(floor)
    config = cfg.as_dict()
    config.update({"r_I": r_I, "center": interval.center})
    return TailMass(
        mass=float(mass.max()),
        mass_by_y={yv: float(m) for yv, m in zip(ys, mass)},
        per_ell={ell: float(v.max()) for ell, v in per_ell.items()},
        majorant=major,
        regime=regime,
        regime_floor=float(max(floors)) if floors else 0.0,
        delta=float(delta),
        cutoff=float(cutoff),
        ell_range=(ells[0], ells[-1]),
        tail_measure=tail_measure,
        rounding_scale=rounding,
        config=config,
    )
