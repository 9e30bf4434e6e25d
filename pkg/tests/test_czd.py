import json
import warnings

import numpy as np
import pytest

from besselop.czd import decompose, overlap_count
from besselop.errors import DomainError, ResolutionWarning, UsageError
from besselop.grid import GEOMETRIC, UNIFORM, SampledFunction, build_grid, lp_norm
from besselop.measure import BesselSpace


def _indicator_case():
    grid = build_grid(8, 512, 1, UNIFORM)
    return BesselSpace(1), SampledFunction(grid, (grid.nodes < 1).astype(float))


def test_indicator_example():
    space, f = _indicator_case()
    cz = decompose(space, f, 0.25)
    assert cz.constants["C_s"] <= 8
    assert sum(p.measure for p in cz.pieces) <= cz.constants["C_s"] * 2.0


def test_large_height_selects_nothing():
    space, f = _indicator_case()
    cz = decompose(space, f, 1.5)
    assert cz.pieces == ()
    assert np.array_equal(cz.good.values, f.values)


def test_reassembly_is_exact():
    space, f = _indicator_case()
    cz = decompose(space, f, 0.25)
    assert np.abs(cz.reassemble().values - f.values).max() < 1e-10


def test_pieces_vanish_outside_their_interval_and_have_zero_mean():
    space, f = _indicator_case()
    cz = decompose(space, f, 0.25)
    x = f.grid.nodes
    for p in cz.pieces:
        lo, hi = p.interval.center - p.interval.radius, p.interval.center + p.interval.radius
        outside = (x < lo) | (x >= hi)
        assert not np.any(p.values.values[outside])
        assert abs(p.mean) <= 1e-8 * max(p.parent_l1, 1e-300)


def _random_function(grid, rng):
    x = grid.nodes
    vals = np.zeros(x.size)
    for _ in range(rng.integers(1, 5)):
        kind = rng.integers(3)
        c, w, a = rng.uniform(0.2, grid.R * 0.8), rng.uniform(0.05, 1.0), rng.uniform(0.2, 5)
        if kind == 0:
            vals += a * np.exp(-((x - c) / w) ** 2)
        elif kind == 1:
            vals += a * ((x > c) & (x < c + w))
        else:
            vals += a / (1 + ((x - c) / (0.02 * w)) ** 2)
    return SampledFunction(grid, vals * rng.choice([-1.0, 1.0], size=x.size) ** (rng.integers(2)))


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_conditions_on_random_inputs(r):
    space = BesselSpace(r)
    rng = np.random.default_rng(11)
    grid = build_grid(8, 256, r, UNIFORM)
    n = space.n
    for _ in range(25):
        f = _random_function(grid, rng)
        top = np.abs(f.values).max()
        base = lp_norm(f, 1) / grid.weights.sum()
        for height in np.geomspace(max(top * 1e-3, base * 1.01), top, 4):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ResolutionWarning)
                cz = decompose(space, f, height)
            c = cz.constants
            assert np.abs(cz.reassemble().values - f.values).max() < 1e-10
            assert c["C_b"] <= 2
            assert c["C_o"] <= 4
            assert c["C_s"] <= 2 ** (n + 2)
            if c["uncovered_excess"] <= 1:
                assert c["C_g"] <= 2 ** (n + 1)
            assert c["good_l1"] <= lp_norm(f, 1) + c["bad_l1_total"] + 1e-12
            assert c["good_l2_squared"] <= c["C_g"] * height * c["good_l1"] * (1 + 1e-12)


def test_height_below_global_average():
    space, f = _indicator_case()
    with pytest.raises(DomainError):
        decompose(space, f, 0.01)


def test_nonpositive_height():
    space, f = _indicator_case()
    with pytest.raises(UsageError):
        decompose(space, f, 0.0)


def test_unresolved_spike_warns():
    grid = build_grid(8, 16, 1, GEOMETRIC)
    vals = np.zeros(grid.size)
    vals[0] = 1e3
    with pytest.warns(ResolutionWarning):
        decompose(BesselSpace(1), SampledFunction(grid, vals), 1.0)


def test_as_dict_is_json_ready():
    space, f = _indicator_case()
    d = decompose(space, f, 0.25).as_dict()
    text = json.dumps(d)
    assert set(json.loads(text)["pieces"][0]) == {"center", "radius", "l1_ratio"}


def test_overlap_count():
    assert overlap_count([(0, 1), (1, 2)]) == 1
    assert overlap_count([(0, 2), (1, 3), (1.5, 4)]) == 3
    assert overlap_count([]) == 0
