import math

import numpy as np
import pytest

from besselop.errors import GridMismatchError, UsageError
from besselop.grid import (
    GEOMETRIC,
    SCHEMES,
    UNIFORM,
    SampledFunction,
    build_grid,
    distribution_mass,
    integrate,
    lp_norm,
    parse_csv_text,
    read_csv,
    to_csv_text,
    write_csv,
)


def test_uniform_r1_total_measure():
    g = build_grid(10, 256, 1, UNIFORM)
    assert g.weights.sum() == pytest.approx(50.0, rel=1e-10)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_r2_total_measure_any_scheme(scheme):
    g = build_grid(10, 256, 2, scheme)
    assert g.weights.sum() == pytest.approx(1000.0 / 3.0, rel=1e-10)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_small_grid_has_requested_cells(scheme):
    g = build_grid(1, 8, 1, scheme)
    assert g.n_cells == 8 and g.size == 64
    assert np.all(np.diff(g.nodes) > 0) and np.all(g.weights > 0)


def test_geometric_smallest_cell():
    for N in (8, 64, 512):
        g = build_grid(3.0, N, 2, GEOMETRIC)
        assert g.cell_widths.min() <= 3.0e-4 * (1 + 1e-12)
        assert g.edges[-1] == 3.0


@pytest.mark.parametrize("kwargs", [dict(R=1, N=7, r=1), dict(R=0, N=8, r=1), dict(R=1, N=8, r=-1),
                                    dict(R=1, N=8, r=1, scheme="chebyshev")])
def test_build_grid_rejects(kwargs):
    with pytest.raises(UsageError):
        build_grid(**kwargs)


def test_integrate_zero_and_gaussian():
    g = build_grid(10, 256, 1, UNIFORM)
    assert integrate(SampledFunction(g, np.zeros(g.size))) == 0
    gauss = SampledFunction(g, np.exp(-0.5 * g.nodes**2))
    assert integrate(gauss) == pytest.approx(1.0, abs=1e-8)


def test_indicator_integral_and_norm():
    g = build_grid(8, 256, 1, UNIFORM)
    ind = SampledFunction(g, (g.nodes < 1).astype(float))
    assert integrate(ind) == pytest.approx(0.5, abs=1e-12)
    assert lp_norm(ind, 1) == pytest.approx(0.5, abs=1e-12)
    assert distribution_mass(ind, 0.5) == pytest.approx(0.5, abs=1e-12)


def test_gaussian_l2_norm():
    g = build_grid(10, 256, 1, UNIFORM)
    gauss = SampledFunction(g, np.exp(-0.5 * g.nodes**2))
    assert lp_norm(gauss, 2) == pytest.approx(math.sqrt(0.5), abs=1e-6)
    assert lp_norm(gauss, math.inf) == pytest.approx(1.0, abs=1e-3)
    assert lp_norm(gauss, "inf") == lp_norm(gauss, math.inf)


def test_zero_function_norms():
    g = build_grid(4, 16, 2, UNIFORM)
    z = SampledFunction(g, np.zeros(g.size))
    for p in (1, 1.5, 2, 7, math.inf):
        assert lp_norm(z, p) == 0.0


def test_lp_rejects_small_p():
    g = build_grid(4, 16, 2, UNIFORM)
    with pytest.raises(UsageError):
        lp_norm(SampledFunction(g, np.ones(g.size)), 0.5)


def test_distribution_mass_monotone_and_chebyshev():
    rng = np.random.default_rng(3)
    g = build_grid(6, 64, 1.5, GEOMETRIC)
    f = SampledFunction(g, rng.standard_normal(g.size) * np.exp(-g.nodes))
    heights = np.geomspace(1e-3, 5, 40)
    masses = [distribution_mass(f, h) for h in heights]
    assert all(a >= b for a, b in zip(masses, masses[1:]))
    assert all(h * m <= lp_norm(f, 1) for h, m in zip(heights, masses))
    assert distribution_mass(f, np.abs(f.values).max() * 1.01) == 0.0
    with pytest.raises(UsageError):
        distribution_mass(f, 0.0)


def test_refinement_changes_gaussian_integral_little():
    a = build_grid(10, 256, 1, UNIFORM)
    b = build_grid(10, 512, 1, UNIFORM)
    ia = integrate(SampledFunction(a, np.exp(-0.5 * a.nodes**2)))
    ib = integrate(SampledFunction(b, np.exp(-0.5 * b.nodes**2)))
    assert abs(ia - ib) < 1e-8


@pytest.mark.parametrize("r", [1.0, 2.0, 0.5, 2.7])
@pytest.mark.parametrize("scheme", SCHEMES)
def test_monomial_exactness(r, scheme):
    R = 3.0
    g = build_grid(R, 32, r, scheme)
    for k in range(0, 9):
        exact = R ** (k + r + 1) / (k + r + 1)
        assert integrate(SampledFunction(g, g.nodes**k)) == pytest.approx(exact, rel=1e-12)


def test_sampled_function_rejects_wrong_length_and_nonfinite():
    g = build_grid(1, 8, 1, UNIFORM)
    with pytest.raises(UsageError):
        SampledFunction(g, np.zeros(g.size - 1))
    bad = np.zeros(g.size)
    bad[3] = np.nan
    with pytest.raises(UsageError):
        SampledFunction(g, bad)


def test_csv_round_trip(tmp_path):
    g = build_grid(2, 8, 1, GEOMETRIC)
    f = SampledFunction(g, np.exp(-g.nodes) + 1j * g.nodes)
    path = tmp_path / "f.csv"
    write_csv(f, str(path))
    text = path.read_text()
    assert text.startswith("x,re,im\n") and "\r" not in text
    back = read_csv(str(path), g)
    assert np.array_equal(back.values, f.values)


def test_csv_real_two_columns():
    g = build_grid(1, 8, 1, UNIFORM)
    text = "".join(f"{float(x)!r},{float(v)!r}\n" for x, v in zip(g.nodes, g.nodes**2))
    f = parse_csv_text(text, g)
    assert not np.iscomplexobj(f.values)
    assert np.array_equal(f.values, g.nodes**2)


def test_csv_node_mismatch():
    g = build_grid(1, 8, 1, UNIFORM)
    other = build_grid(1, 8, 1, GEOMETRIC)
    text = to_csv_text(SampledFunction(other, np.ones(other.size)))
    with pytest.raises(GridMismatchError):
        parse_csv_text(text, g)
    with pytest.raises(GridMismatchError):
        parse_csv_text("x,re\n0.5,1\n", g)
