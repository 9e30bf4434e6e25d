import math

import numpy as np
import pytest

from besselop.bessel import phi_lambda
from besselop.errors import GridMismatchError, TruncationWarning, UsageError
from besselop.grid import UNIFORM, SampledFunction, build_grid, lp_norm
from besselop.measure import BesselSpace
from besselop.transform import build_plan
from besselop.translation import THETA_FORM, Z_FORM, convolve, translate, triangle_area


def test_triangle_area_examples():
    assert triangle_area(3, 4, 5) == pytest.approx(6.0, abs=1e-14)
    assert triangle_area(1, 2, 3) == 0.0
    assert triangle_area(2, 2, 2) == pytest.approx(math.sqrt(3), abs=1e-14)
    assert triangle_area(1, 1, 5) == 0.0


def test_triangle_area_is_symmetric():
    assert triangle_area(4, 5, 3) == triangle_area(3, 4, 5) == triangle_area(5, 3, 4)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.0, 4.5])
def test_constant_is_fixed(r):
    x = np.linspace(0.05, 6, 40)
    for y in (0.1, 1.0, 3.7):
        out = translate(BesselSpace(r), lambda z: np.ones_like(z), y, x=x)
        assert np.abs(out - 1).max() < 1e-8


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.0])
def test_square_gains_y_squared(r):
    x = np.linspace(0.05, 6, 40)
    for y in (0.3, 2.0):
        out = translate(BesselSpace(r), lambda z: z * z, y, x=x)
        assert np.abs(out - (x * x + y * y)).max() < 1e-6


@pytest.mark.parametrize("r", [1.0, 2.0, 3.0])
def test_theta_and_z_forms_agree(r):
    x = np.concatenate([np.linspace(0.05, 5, 50), [1.3]])
    f = lambda z: np.exp(-0.5 * z * z) * (1 + z)
    for y in (0.2, 1.3, 3.0):
        a = translate(BesselSpace(r), f, y, x=x, method=THETA_FORM)
        b = translate(BesselSpace(r), f, y, x=x, method=Z_FORM)
        assert np.abs(a - b).max() < 1e-6


def test_small_shift_converges_quadratically():
    space = BesselSpace(2)
    x = np.linspace(0.5, 4, 30)
    f = lambda z: np.exp(-0.5 * z * z)
    d1 = np.abs(translate(space, f, 0.1, x=x) - f(x)).max()
    d2 = np.abs(translate(space, f, 0.01, x=x) - f(x)).max()
    assert 70 < d1 / d2 < 130


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_contraction_on_random_inputs(r):
    space = BesselSpace(r)
    grid = build_grid(24, 256, r, UNIFORM)
    x = grid.nodes
    rng = np.random.default_rng(7)
    for _ in range(10):
        c, w, y = rng.uniform(0.5, 4), rng.uniform(0.3, 1.5), rng.uniform(0.1, 5)
        f = SampledFunction(grid, rng.uniform(-1, 1) * np.exp(-((x - c) / w) ** 2) + np.exp(-x * x))
        tf = translate(space, f, y)
        for p in (1, 2, math.inf):
            assert lp_norm(tf, p) <= (1 + 1e-4) * lp_norm(f, p)


def test_support_of_translate():
    space = BesselSpace(2)
    x = np.linspace(0.05, 8, 400)
    f = lambda z: np.where(z < 1, (1 - z * z) ** 3, 0.0)
    y = 2.5
    out = translate(space, f, y, x=x)
    outside = np.abs(x - y) > 1 + 1e-9
    assert np.abs(out[outside]).max() < 1e-8


def test_translation_multiplies_transform_by_eigenfunction():
    plan = build_plan(2, 16, 2048, 16, 1024)
    f = SampledFunction(plan.physical, np.exp(-0.5 * plan.physical.nodes**2))
    y = 1.5
    tf = translate(plan.space, f, y)
    lam = plan.spectral.nodes
    lhs = plan.forward(tf).values
    rhs = phi_lambda(plan.space, 1.0, y * lam) * plan.forward(f).values
    assert np.abs(lhs - rhs).max() < 1e-4


def test_truncation_warning_reports_clipped_mass():
    grid = build_grid(4, 64, 1, UNIFORM)
    f = SampledFunction(grid, np.ones(grid.size))
    with pytest.warns(TruncationWarning):
        _, info = translate(BesselSpace(1), f, 3.0, return_info=True)
    assert info.clipped_mass > 0


def test_translate_rejects():
    space = BesselSpace(1)
    with pytest.raises(UsageError):
        translate(space, np.exp, 0.0, x=[1.0])
    with pytest.raises(UsageError):
        translate(space, np.exp, 1.0)
    with pytest.raises(UsageError):
        translate(space, np.exp, 1.0, x=[1.0], method="polar")


@pytest.fixture(scope="module")
def conv_plan():
    return build_plan(1, 8, 256, 32, 1024)


def test_gaussian_convolution_closed_form(conv_plan):
    x = conv_plan.physical.nodes
    g = SampledFunction(conv_plan.physical, np.exp(-0.5 * x * x))
    out = convolve(conv_plan.space, g, g)
    assert np.abs(out.values - 0.5 * np.exp(-0.25 * x * x)).max() < 1e-5


def test_convolution_commutes_and_multiplies_transforms(conv_plan):
    x = conv_plan.physical.nodes
    f = SampledFunction(conv_plan.physical, np.exp(-0.5 * x * x))
    g = SampledFunction(conv_plan.physical, np.exp(-((x - 1.5) ** 2)))
    fg, gf = convolve(conv_plan.space, f, g), convolve(conv_plan.space, g, f)
    assert np.abs(fg.values - gf.values).max() < 1e-6
    lhs = conv_plan.forward(fg).values
    rhs = conv_plan.forward(f).values * conv_plan.forward(g).values
    assert np.abs(lhs - rhs).max() < 1e-4


def test_convolution_size_guard():
    grid = build_grid(8, 256, 1, UNIFORM)
    f = SampledFunction(grid, np.exp(-grid.nodes))
    with pytest.raises(UsageError):
        convolve(BesselSpace(1), f, f)


def test_convolution_grid_mismatch():
    a, b = build_grid(8, 16, 1, UNIFORM), build_grid(8, 32, 1, UNIFORM)
    with pytest.raises(GridMismatchError):
        convolve(BesselSpace(1), SampledFunction(a, np.ones(a.size)), SampledFunction(b, np.ones(b.size)))
