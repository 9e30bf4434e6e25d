"""Alpha sweeps that probe the growth of L^{i alpha} on L^p, weak L^1 and the
off-diagonal kernel tail.

A finite family of inputs only gives lower bounds for operator norms, so
every report is read one-sidedly: the measured growth must not exceed the
theoretical exponent, and the normalized values must stay within a bounded
band across alpha.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import (
    MollifierTable,
    TailEstimateConfig,
    dyadic_symbol,
    imaginary_power_multiplier,
    kernel_tail_mass,
    oscillation_diagnostic,
    regime_start,
    tail_config,
)
from .errors import OutOfScopeError, UsageError
from .grid import PHYSICAL, SampledFunction, WeightedGrid, atomic_write_text, distribution_mass, lp_norm
from .measure import Interval, measure_of_segment
from .transform import TransformPlan, spectral_tail_fraction

SCHEMA_VERSION = 1
THREADS_ENV = "BESSELOP_THREADS"
DEFAULT_ALPHAS = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
SPIKE_CELLS = 4
# where the tail sweep samples y inside I, in units of r_I from the center
TAIL_Y_OFFSETS = (-0.9, -0.45, 0.0, 0.45, 0.9)


# ---------------------------------------------------------------------------
# test functions


def _smooth_bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True)
class FamilyMember:
    label: str
    kind: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)


def gaussian(s: float = 1.0) -> FamilyMember:
    if not s > 0:
        raise UsageError(f"gaussian width must be positive, got {s!r}")
    return FamilyMember(f"gaussian:{s:g}", "gaussian", lambda x: np.exp(-0.5 * (x / s) ** 2))


def bump(c: float, w: float) -> FamilyMember:
    if not w > 0:
        raise UsageError(f"bump width must be positive, got {w!r}")
    return FamilyMember(f"bump:{c:g},{w:g}", "bump", lambda x: _smooth_bump((x - c) / w))


def indicator(a: float, b: float) -> FamilyMember:
    if not b > a:
        raise UsageError(f"indicator needs a < b, got ({a!r}, {b!r})")
    return FamilyMember(f"indicator:{a:g},{b:g}", "indicator", lambda x: ((x > a) & (x < b)).astype(float))


def near_spike(grid: WeightedGrid, c: float, cells: int = SPIKE_CELLS) -> FamilyMember:
    """Smooth bump centered at c spanning ``cells`` grid cells, scaled to
    unit L^1 norm on the grid."""
    k = int(np.clip(np.searchsorted(grid.edges, c) - 1, 0, grid.n_cells - 1))
    half = 0.5 * cells * float(grid.cell_widths[k])
    if c - half <= 0:
        raise UsageError(f"spike at {c:g} with half-width {half:g} would touch the origin")
    shape = _smooth_bump((grid.nodes - c) / half)
    scale = 1.0 / float(np.dot(grid.weights, shape))
    return FamilyMember(f"spike:{c:g}", "spike", lambda x: scale * _smooth_bump((x - c) / half))


@dataclass(frozen=True)
class TestFamily:
    members: tuple

    __test__ = False  # not a pytest class despite the name

    def sample(self, grid: WeightedGrid) -> list:
        out = []
        for m in self.members:
            f = SampledFunction(grid, m.func(grid.nodes), PHYSICAL)
            if not np.any(f.values):
                raise UsageError(f"family member {m.label} vanishes on the grid")
            out.append((m.label, f))
        return out

    def labels(self) -> list:
        return [m.label for m in self.members]


def default_family(grid: WeightedGrid, spike_centers=(0.5, 1.0, 2.0)) -> TestFamily:
    members = [gaussian(s) for s in (0.25, 0.5, 1.0, 2.0)]
    members += [bump(c, w) for c in (1.0, 2.0, 4.0) for w in (0.25, 1.0)]
    members += [indicator(a, b) for a, b in ((0.0, 1.0), (1.0, 2.0), (0.5, 4.0))]
    members += [near_spike(grid, c) for c in spike_centers]
    return TestFamily(tuple(members))


def parse_function(text: str, grid: WeightedGrid) -> SampledFunction:
    """Built-in vocabulary: gaussian[:s], bump:c,w, indicator:a,b, spike:c."""
    name, _, args = text.partition(":")
    try:
        params = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise UsageError(f"bad parameters in function {text!r}") from None
    expected = {"gaussian": (0, 1), "bump": (2,), "indicator": (2,), "spike": (1,)}
    if name not in expected:
        raise UsageError(f"unknown function {name!r}; expected one of {sorted(expected)}")
    if len(params) not in expected[name]:
        raise UsageError(f"function {name!r} takes {expected[name]} parameters, got {len(params)}")
    if name == "gaussian":
        member = gaussian(*params)
    elif name == "bump":
        member = bump(*params)
    elif name == "indicator":
        member = indicator(*params)
    else:
        member = near_spike(grid, params[0])
    return SampledFunction(grid, member.func(grid.nodes), PHYSICAL)


# ---------------------------------------------------------------------------
# exponents and fits


def theory_exponent(n: float, p) -> float:
    """n |1/p - 1/2|, the L^p growth exponent; p = 1 gives n/2."""
    return n * abs(1.0 / float(p) - 0.5)


def comparison_exponent(n: float, p, epsilon: float) -> float:
    """The exponent obtained from general multiplier theorems, which carries
    an extra epsilon."""
    return theory_exponent(n, p) + epsilon


def fit_exponent(pairs) -> float:
    """Least-squares slope of ln(value) against ln(1 + alpha)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise UsageError(f"need at least 3 (alpha, value) pairs, got {len(pairs)}")
    a = np.array([float(p[0]) for p in pairs])
    v = np.array([float(p[1]) for p in pairs])
    if np.any(a <= 0) or np.unique(a).size != a.size:
        raise UsageError("alphas must be positive and distinct")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise UsageError("values must be positive and finite")
    X = np.log1p(a)
    Y = np.log(v)
    Xc = X - X.mean()
    return float(np.dot(Xc, Y - Y.mean()) / np.dot(Xc, Xc))


def _stability(values) -> float:
    values = [v for v in values if v > 0]
    if not values:
        return math.nan
    return max(values) / min(values)


# ---------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    kind: str
    r: float
    n: float
    p: object
    alphas: list
    values: list
    theory_exponent: float
    normalized: list = field(default_factory=list)
    fitted_slope: float = math.nan
    stability: float = math.nan
    runtimes_ms: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.normalized = [v / (1.0 + a) ** self.theory_exponent for a, v in zip(self.alphas, self.values)]
        positive = [(a, v) for a, v in zip(self.alphas, self.values) if a > 0 and v > 0]
        self.fitted_slope = fit_exponent(positive) if len(positive) >= 3 else math.nan
        self.stability = _stability([nv for a, nv in zip(self.alphas, self.normalized) if a > 0])

    def exponent_check(self) -> bool:
        """The theory exponent recomputed from (r, p) matches the stored one."""
        return self.theory_exponent == theory_exponent(self.r + 1.0, 1 if self.p == "weak" else self.p)

    def as_dict(self, include_runtimes: bool = True) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "kind": self.kind,
            "r": self.r,
            "n": self.n,
            "p": self.p,
            "alphas": list(self.alphas),
            "values": list(self.values),
            "normalized": list(self.normalized),
            "theory_exponent": self.theory_exponent,
            "fitted_slope": self.fitted_slope,
            "stability": self.stability,
            "grid": self.grid,
            "diagnostics": self.diagnostics,
            "config": self.config,
        }
        if include_runtimes:
            out["runtimes_ms"] = list(self.runtimes_ms)
        return out

    def to_json(self, include_runtimes: bool = True) -> str:
        return json.dumps(_jsonable(self.as_dict(include_runtimes)), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["alpha", "value", "normalized", "theory_exponent", "fitted_slope", "runtime_ms"])
        runtimes = self.runtimes_ms or [math.nan] * len(self.alphas)
        for a, v, nv, t in zip(self.alphas, self.values, self.normalized, runtimes):
            writer.writerow([repr(a), repr(v), repr(nv), repr(self.theory_exponent), repr(self.fitted_slope),
                             repr(t)])
        return buf.getvalue()

    def write(self, path: str, fmt: str = "json"):
        if fmt == "json":
            atomic_write_text(path, self.to_json())
        elif fmt == "csv":
            atomic_write_text(path, self.to_csv())
        else:
            raise UsageError(f"unknown report format {fmt!r}")


def _jsonable(obj):
    """Plain JSON types; non-finite floats become strings so the output
    stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _sweep(alphas, task):
    """Run task(alpha) for every alpha, concurrently if the thread count
    allows; results keep the order of ``alphas``."""

    def timed(alpha):
        start = time.perf_counter()
        result = task(alpha)
        return result, 1000.0 * (time.perf_counter() - start)

    threads = min(thread_count(), len(alphas))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(timed, alphas))
    return [timed(a) for a in alphas]


def _check_alphas(alphas) -> list:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise UsageError("alpha list is empty")
    if any(a < 0 or not math.isfinite(a) for a in alphas):
        raise UsageError("alphas must be finite and nonnegative")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise UsageError("alphas must be strictly increasing")
    return alphas


# ---------------------------------------------------------------------------
# sweeps


def norm_growth(plan: TransformPlan, p, alphas, family: TestFamily, epsilon: float = 0.1) -> ExperimentReport:
    """R(alpha) = max over the family of ||L^{i alpha} f||_p / ||f||_p."""
    p = float(p)
    if not (1 < p < math.inf):
        raise OutOfScopeError(f"norm growth needs 1 < p < inf, got p={p!r}; use the weak-type sweep at p = 1")
    if not epsilon > 0:
        raise UsageError("epsilon must be positive")
    alphas = _check_alphas(alphas)
    members = family.sample(plan.physical)
    spectra = [(label, plan.forward(f), lp_norm(f, p)) for label, f in members]
    lam = plan.spectral.nodes

    def task(alpha):
        symbol = imaginary_power_multiplier(alpha)(lam)
        best, best_label = -math.inf, None
        for label, spectrum, norm in spectra:
            out = plan.inverse(spectrum.with_values(symbol * spectrum.values))
            ratio = lp_norm(out, p) / norm
            if ratio > best:
                best, best_label = ratio, label
        return best, best_label

    results = _sweep(alphas, task)
    n = plan.space.n
    tails = {label: spectral_tail_fraction(plan, f) for label, f in members}
    return ExperimentReport(
        kind="norm-growth",
        r=plan.r,
        n=n,
        p=p,
        alphas=alphas,
        values=[res[0] for res, _ in results],
        theory_exponent=theory_exponent(n, p),
        runtimes_ms=[t for _, t in results],
        grid=plan.describe(),
        diagnostics={
            "best_member": [res[1] for res, _ in results],
            "comparison_exponent": comparison_exponent(n, p, epsilon),
            "epsilon": epsilon,
            "resolution": [oscillation_diagnostic(plan, a) for a in alphas],
            "spectral_tail": tails,
            "family": family.labels(),
        },
        config={"p": p, "alphas": alphas, "epsilon": epsilon},
    )


def height_scale(space, f: SampledFunction) -> float:
    """||f||_1 / mu((0, 2 c)) with c the |f|-weighted center of f: the
    average of f over the ball that reaches from the origin past f."""
    w = f.grid.weights * np.abs(f.values)
    mass = float(w.sum())
    if mass == 0:
        raise UsageError("height scale is undefined for the zero function")
    c = float(np.dot(w, f.grid.nodes)) / mass
    return mass / measure_of_segment(space, 0.0, 2.0 * c)


def default_heights(scale: float, count: int = 32) -> list:
    return list(np.geomspace(1e-3, 10.0, count) * scale)


def weak_type_sweep(plan: TransformPlan, alphas, heights, f: SampledFunction) -> ExperimentReport:
    """W(alpha) = max over heights of h mu({|L^{i alpha} f| > h})."""
    if heights is None:
        heights = default_heights(height_scale(plan.space, f))
    heights = [float(h) for h in heights]
    if not heights:
        raise UsageError("height list is empty")
    if any(not h > 0 for h in heights):
        raise UsageError("heights must be positive")
    norm = lp_norm(f, 1)
    if abs(norm - 1.0) > 1e-6:
        raise UsageError(f"weak-type input must have unit L^1 norm, got {norm:.9g}")
    alphas = _check_alphas(alphas)
    spectrum = plan.forward(f)
    lam = plan.spectral.nodes

    def task(alpha):
        out = plan.inverse(spectrum.with_values(imaginary_power_multiplier(alpha)(lam) * spectrum.values))
        levels = [h * distribution_mass(out, h) for h in heights]
        k = int(np.argmax(levels))
        return levels[k], heights[k], levels

    results = _sweep(alphas, task)
    n = plan.space.n
    return ExperimentReport(
        kind="weak-type",
        r=plan.r,
        n=n,
        p="weak",
        alphas=alphas,
        values=[res[0] for res, _ in results],
        theory_exponent=theory_exponent(n, 1),
        runtimes_ms=[t for _, t in results],
        grid=plan.describe(),
        diagnostics={
            "argmax_height": [res[1] for res, _ in results],
            "envelope": [res[2] for res, _ in results],
            "envelope_bounded": all(np.all(np.isfinite(res[2])) for res, _ in results),
            "resolution": [oscillation_diagnostic(plan, a) for a in alphas],
            "spectral_tail": spectral_tail_fraction(plan, f),
        },
        config={"alphas": alphas, "heights": heights},
    )


def tail_y_samples(interval: Interval, offsets=TAIL_Y_OFFSETS) -> list:
    return [interval.center + o * interval.radius for o in offsets]


def decay_consistency(ratios: dict, exponent: float, factor: float = 2.0) -> bool | None:
    """Whether every resolvable ratio P_{l+1}/P_l lies within ``factor`` of
    2^-exponent; None when no ratio is resolvable."""
    if not ratios:
        return None
    target = 2.0 ** (-exponent)
    return all(target / factor <= q <= target * factor for q in ratios.values())


def damping_monotonicity(cfg: TailEstimateConfig, r_I: float, table: MollifierTable, ells,
                         samples: int = 512) -> dict:
    """sup |F_l| with M and with M + 1 on each octave below the damping regime."""
    bigger = TailEstimateConfig(cfg.alpha, cfg.M + 1, cfg.s0, cfg.n)
    out = {}
    for ell in ells:
        lam = np.linspace(2.0 ** (ell - 2), 2.0 ** (ell + 2), samples)
        a = float(np.abs(dyadic_symbol(ell, cfg, r_I, table)(lam)).max())
        b = float(np.abs(dyadic_symbol(ell, bigger, r_I, table)(lam)).max())
        out[ell] = {"M": a, "M+1": b, "monotone": b <= a}
    return out


def tail_scaling(plan: TransformPlan, alphas, interval: Interval, table: MollifierTable,
                 M: int | None = None, s0: int | None = None, offsets=TAIL_Y_OFFSETS,
                 regime_octaves: int = 3) -> ExperimentReport:
    """T(alpha): the largest tail mass over y sampled in I, per alpha, with
    the tail configuration regenerated for each alpha."""
    alphas = _check_alphas(alphas)
    ys = tail_y_samples(interval, offsets)

    def task(alpha):
        cfg = tail_config(alpha, plan.space, M=M, s0=s0)
        return cfg, kernel_tail_mass(plan, cfg, interval, ys, table, regime_octaves=regime_octaves)

    results = _sweep(alphas, task)
    n = plan.space.n
    per_alpha = []
    for (cfg, tm), _ in results:
        ratios = tm.decay_ratios()
        small = [ell for ell in tm.per_ell if ell < regime_start(cfg.theta, interval.radius)]
        per_alpha.append({
            "alpha": cfg.alpha,
            "tail": tm.as_dict(),
            "decay_target": 2.0 ** (-cfg.decay_exponent),
            "decay_consistent": decay_consistency(ratios, cfg.decay_exponent),
            "damping_monotone": all(v["monotone"] for v in
                                    damping_monotonicity(cfg, interval.radius, table, small[-4:]).values()),
        })
    return ExperimentReport(
        kind="tail-scaling",
        r=plan.r,
        n=n,
        p="weak",
        alphas=alphas,
        values=[tm.mass for (_, tm), _ in results],
        theory_exponent=theory_exponent(n, 1),
        runtimes_ms=[t for _, t in results],
        grid=plan.describe(),
        diagnostics={"per_alpha": per_alpha, "y_samples": ys},
        config={"alphas": alphas, "interval": [interval.center, interval.radius], "M": M, "s0": s0,
                "offsets": list(offsets), "regime_octaves": regime_octaves},
    )
