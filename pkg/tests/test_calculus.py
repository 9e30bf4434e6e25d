import math
import warnings

import numpy as np
import pytest

from besselop import calculus
from besselop.calculus import (
    KERNEL_SPECTRAL,
    MollifierTable,
    TailEstimateConfig,
    apply_multiplier,
    build_mollifier,
    constant_multiplier,
    damping_bound,
    damping_constant,
    default_M,
    default_s0,
    dyadic_symbol,
    heat,
    heat_multiplier,
    imaginary_power,
    imaginary_power_multiplier,
    kernel_column,
    mollifier_multiplier,
    oscillation_diagnostic,
    partition_sum,
    power_multiplier,
    psi,
    tail_config,
)
from besselop.errors import EvaluationError, TruncationWarning, UsageError
from besselop.grid import SampledFunction, integrate, lp_norm
from besselop.measure import BesselSpace
from besselop.transform import build_plan


@pytest.fixture(scope="module")
def plan():
    return build_plan(1, 16, 2048, 32)


@pytest.fixture(scope="module")
def gauss(plan):
    x = plan.physical.nodes
    return SampledFunction(plan.physical, np.exp(-0.5 * x * x))


@pytest.fixture(scope="module")
def table():
    return build_mollifier()


@pytest.fixture(scope="module")
def small_plan():
    return build_plan(2, 8, 1024, 64, 1024)


def test_identity_symbol(plan, gauss):
    out = apply_multiplier(plan, constant_multiplier(1.0), gauss)
    assert lp_norm(out - gauss, 2) / lp_norm(gauss, 2) < 1e-5


def test_heat_is_the_heat_symbol(plan, gauss):
    a = heat(plan, 0.3, gauss)
    b = apply_multiplier(plan, heat_multiplier(0.3), gauss)
    assert np.array_equal(a.values, b.values)


def test_lambda_squared_is_the_operator(plan, gauss):
    x = plan.physical.nodes
    lf = apply_multiplier(plan, power_multiplier(2.0), gauss)
    # -f'' - f'/x for f = exp(-x^2/2)
    assert np.abs(lf.values - (2 - x * x) * gauss.values).max() < 1e-4


@pytest.mark.parametrize("t", [0.05, 0.5, 2.0])
def test_heat_closed_form(plan, gauss, t):
    x = plan.physical.nodes
    exact = np.exp(-x * x / (2 * (1 + 2 * t))) / (1 + 2 * t)
    assert np.abs(heat(plan, t, gauss).values - exact).max() < 1e-6


def test_heat_mass_and_semigroup(plan, gauss):
    assert integrate(heat(plan, 0.5, gauss)) == pytest.approx(integrate(gauss), abs=1e-6)
    lhs = heat(plan, 0.2, heat(plan, 0.3, gauss)).values
    assert np.abs(lhs - heat(plan, 0.5, gauss).values).max() < 1e-8


def test_heat_rejects_nonpositive_time(plan, gauss):
    with pytest.raises(UsageError):
        heat(plan, 0.0, gauss)


def test_heat_positivity(plan):
    x = plan.physical.nodes
    f = SampledFunction(plan.physical, ((x > 1) & (x < 2)).astype(float) + np.exp(-x))
    assert heat(plan, 0.1, f).values.min() >= -1e-8


def test_symbol_algebra(plan, gauss, table):
    for m1, m2 in ((heat_multiplier(0.1), mollifier_multiplier(table, 0.5)),
                   (power_multiplier(2.0), heat_multiplier(0.2))):
        nested = apply_multiplier(plan, m1, apply_multiplier(plan, m2, gauss))
        product = apply_multiplier(plan, m1 * m2, gauss)
        assert np.abs(nested.values - product.values).max() < 1e-8


def test_nonfinite_symbol_rejected(plan, gauss):
    with pytest.raises(EvaluationError), np.errstate(over="ignore"):
        apply_multiplier(plan, power_multiplier(-400.0), gauss)


def test_imaginary_power_zero_is_identity(plan, gauss):
    out = imaginary_power(plan, 0.0, gauss)
    assert lp_norm(out - gauss, 2) / lp_norm(gauss, 2) < 1e-5


def test_imaginary_power_never_gains_l2_mass(plan, gauss):
    # unitary on the half-line; on (0, R] mass can only leave
    for alpha in (1.0, 4.0, 16.0):
        assert lp_norm(imaginary_power(plan, alpha, gauss), 2) <= lp_norm(gauss, 2) * (1 + 1e-8)


def test_imaginary_power_dilation_covariance(plan):
    x = plan.physical.nodes
    alpha, c = 1.0, 2.0
    f = SampledFunction(plan.physical, np.exp(-0.5 * x * x))
    fc = SampledFunction(plan.physical, np.exp(-0.5 * (c * x) ** 2))
    lhs = imaginary_power(plan, alpha, fc).values
    spectrum = plan.forward(f)
    lam = plan.spectral.nodes
    inner = spectrum.values * imaginary_power_multiplier(alpha)(lam)
    pts = x[x <= 4.0]
    rhs = c ** (2j * alpha) * plan.inverse_values(inner, c * pts)
    assert np.abs(lhs[: pts.size] - rhs).max() < 1e-5


def test_oscillation_diagnostic(plan):
    d = oscillation_diagnostic(plan, 4.0)
    assert d["smallest_node"] == plan.spectral.nodes[0]
    assert d["wavelength_at_smallest_node"] > 0
    assert oscillation_diagnostic(plan, 1e6)["adequate"] is False


def test_mollifier_basics(table):
    assert table(0.0) == pytest.approx(1.0, abs=1e-10)
    xi = np.linspace(0, 60, 97)
    assert np.array_equal(table(-xi), table(xi))
    assert table.interpolation_error < 1e-8
    small = np.array([1e-3, 3e-3, 1e-2])
    ratio = (1 - table.direct(small)) / small**2
    assert ratio.max() / ratio.min() - 1 < 0.01
    assert ratio[0] == pytest.approx(table.taylor_constant, rel=1e-4)


def test_mollifier_integral_normalization(table):
    t = np.linspace(-1, 1, 200001)
    assert np.trapezoid(table.bump(t), t) == pytest.approx(2 * math.pi, rel=1e-8)


def test_mollifier_beyond_table(table):
    xi = np.array([70.0, 100.0])
    assert np.allclose(table(xi), table.direct(xi), rtol=0, atol=1e-15)


def test_mollifier_range_guard():
    with pytest.raises(UsageError):
        MollifierTable(10.0)


def test_partition_of_unity():
    lam = np.geomspace(2.0**-6, 2.0**6, 1001)
    assert np.abs(partition_sum(lam, -10, 10) - 1).max() < 1e-10
    assert np.all(psi(np.array([0.2, 4.01, 10.0])) == 0)


def test_default_tail_parameters():
    for n in (1.5, 2.0, 3.0, 4.0, 5.5):
        s0 = default_s0(n)
        M = default_M(n, s0)
        assert s0 % 2 == 0 and s0 > n / 2 + 1
        assert 2 * M > s0 - n / 2 + 2
    cfg = tail_config(3.0, BesselSpace(2))
    assert cfg.sigma == 2.0
    assert cfg.theta == 1.0 / (4 * cfg.M * 2.0)
    assert cfg.sigma / cfg.theta == pytest.approx(4 * cfg.M * 4.0, rel=1e-15)


def test_tail_config_validation():
    with pytest.raises(UsageError):
        TailEstimateConfig(1.0, 1, 3, 3.0)
    with pytest.raises(UsageError):
        TailEstimateConfig(1.0, 1, 6, 3.0)
    with pytest.raises(UsageError):
        TailEstimateConfig(1.0, 0, 2, 3.0)


def test_dyadic_symbol_properties(table):
    space = BesselSpace(2)
    cfg0 = tail_config(0.0, space)
    lam = np.linspace(0.01, 64.0, 4000)
    real = dyadic_symbol(2, cfg0, 0.05, table)(lam)
    assert not np.iscomplexobj(real)
    cfg = tail_config(4.0, space)
    for ell in range(-2, 8):
        vals = dyadic_symbol(ell, cfg, 0.05, table)(lam)
        outside = (lam <= 2.0 ** (ell - 2)) | (lam >= 2.0 ** (ell + 2))
        assert not np.any(vals[outside])
        assert np.abs(vals).max() <= damping_bound(ell, cfg, 0.05, table) * (1 + 1e-12)
    assert damping_constant(cfg, table) > 0


def test_heat_column_mass_and_symmetry(small_plan):
    x = small_plan.physical.nodes
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        i, j = np.searchsorted(x, 1.0), np.searchsorted(x, 1.5)
        ci = kernel_column(small_plan, heat_multiplier(0.1), x[i])
        cj = kernel_column(small_plan, heat_multiplier(0.1), x[j])
    assert integrate(ci) == pytest.approx(1.0, abs=1e-4)
    assert ci.values[j] == pytest.approx(cj.values[i], abs=1e-5)


def test_translate_and_spectral_columns_agree(small_plan):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        a = kernel_column(small_plan, heat_multiplier(0.1), 1.0)
    b = kernel_column(small_plan, heat_multiplier(0.1), 1.0, method=KERNEL_SPECTRAL)
    assert np.abs(a.values - b.values).max() < 1e-6


def test_finite_propagation_unit_scale(table):
    plan = build_plan(2, 3, 1024, 512, 4096)
    for y in (0.5, 1.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            col = np.abs(kernel_column(plan, mollifier_multiplier(table, 1.0), y).values)
        far = np.abs(plan.physical.nodes - y) > 1.1
        assert col[far].max() < 1e-6 * col.max()


def test_column_point_outside_grid(small_plan):
    with pytest.raises(UsageError):
        kernel_column(small_plan, heat_multiplier(0.1), 9.0)


def test_unknown_column_method(small_plan):
    with pytest.raises(UsageError):
        kernel_column(small_plan, heat_multiplier(0.1), 1.0, method="direct")


def test_tail_mass_alpha_zero_is_finite(table):
    plan = build_plan(2, 3, 2048, 512, 4096, cache=False)
    from besselop.measure import Interval

    cfg = tail_config(0.0, plan.space)
    tm = calculus.kernel_tail_mass(plan, cfg, Interval(1.0, 0.05), [1.0], table, regime_octaves=1)
    assert math.isfinite(tm.mass) and tm.mass >= 0
    assert tm.ell_range == calculus.default_ell_range(plan)
    assert set(tm.as_dict()) >= {"mass", "per_ell", "regime", "decay_ratios"}
