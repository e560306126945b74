import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from jlps.core import CHEBYSHEV, FiniteSequence, JacobiParams
from jlps.multipliers import (
    MultiplierSymbol,
    SymbolError,
    apply_multiplier,
    gk_multiplier_bound_check,
    imaginary_power,
    laplace_multiplier_heatpath,
    laplace_symbol,
    laplace_type,
    marcinkiewicz_check,
    multiplier_with_doubling,
    named_density,
    tabulated,
)
from jlps.quadrature import spectral_model


def _random_seq(rng, support, complex_=False):
    v = rng.standard_normal(support + 1)
    if complex_:
        v = v + 1j * rng.standard_normal(support + 1)
    return FiniteSequence(v)


def test_one_is_identity(params, rng):
    model = spectral_model(params, 64)
    f = _random_seq(rng, 20)
    out = apply_multiplier(model, named_density("one"), f)
    assert_allclose(out.entries[:21], f.entries, atol=1e-13)
    assert np.max(np.abs(out.entries[21:])) < 1e-13


@pytest.mark.parametrize("x, expected", [(1.0, 0.5), (0.25, 0.2), (2.0, 2 / 3)])
def test_exp_density_symbol(x, expected):
    # x * int exp(-x t) exp(-t) dt = x / (1 + x)
    assert laplace_symbol(lambda t: np.exp(-t), x) == pytest.approx(expected, rel=1e-12)


def test_step_density_symbol():
    xs = np.array([0.01, 0.3, 1.0, 1.9])
    got = laplace_symbol(lambda t: (t < 2.0).astype(float), xs, breaks=(2.0,))
    assert_allclose(got, 1 - np.exp(-2.0 * xs), rtol=1e-11)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 3.0])
def test_imaginary_power_density_reproduces_symbol(gamma):
    sym = imaginary_power(gamma)
    xs = np.array([0.05, 0.5, 1.0, 1.7])
    assert_allclose(laplace_symbol(sym.a, xs, tol=1e-11), xs ** (1j * gamma), atol=1e-9)


def test_laplace_symbol_rejects_nonpositive():
    with pytest.raises(ValueError):
        laplace_symbol(lambda t: np.ones_like(t), 0.0)


def test_numeric_laplace_type_matches_closed_form():
    numeric = laplace_type(lambda t: np.exp(-t), 1.0)
    xs = np.linspace(0.05, 1.95, 7)
    assert_allclose(numeric(xs), named_density("exp")(xs), rtol=1e-11)


def test_exp_multiplier_contracts(params, rng):
    # |x / (1 + x)| <= 2/3 on (0, 2)
    model = spectral_model(params, 96)
    for _ in range(5):
        f = _random_seq(rng, 30)
        out = apply_multiplier(model, named_density("exp"), f)
        assert out.norm() <= 2 / 3 * f.norm() + 1e-12


@pytest.mark.parametrize("name", ["one", "exp", "step"])
def test_two_paths_agree(params, rng, name):
    model = spectral_model(params, 96)
    sym = named_density(name, t0=1.0)
    f = _random_seq(rng, 24)
    direct = apply_multiplier(model, sym, f)
    heat = laplace_multiplier_heatpath(model, sym.a, f, breaks=sym.breaks)
    assert np.max(np.abs(direct.entries - heat.entries)) < 1e-8


@pytest.mark.parametrize("gamma", [0.5, 1.0, 3.0])
def test_imaginary_power_isometry(params, rng, gamma):
    model = spectral_model(params, 96)
    f = _random_seq(rng, 32)
    out = apply_multiplier(model, imaginary_power(gamma), f)
    assert abs(out.norm() - f.norm()) / f.norm() < 1e-10


@given(st.floats(-4, 4), st.integers(0, 2**32 - 1))
def test_imaginary_powers_compose(gamma, seed):
    rng = np.random.default_rng(seed)
    model = spectral_model(JacobiParams(0.0, 0.0), 64)
    f = _random_seq(rng, 16)
    once = apply_multiplier(model, imaginary_power(gamma), f)
    twice = apply_multiplier(model, imaginary_power(-gamma), FiniteSequence(once.entries))
    assert_allclose(twice.entries[:17], f.entries, atol=1e-11)


def test_composition_of_symbols(rng):
    model = spectral_model(CHEBYSHEV, 80)
    m1, m2 = named_density("exp"), imaginary_power(1.5)
    prod = MultiplierSymbol("product", lambda x: m1(x) * m2(x))
    f = _random_seq(rng, 20)
    inner = apply_multiplier(model, m2, f)
    lhs = apply_multiplier(model, m1, FiniteSequence(inner.entries))
    rhs = apply_multiplier(model, prod, f)
    assert_allclose(lhs.entries, rhs.entries, atol=1e-12)


def test_multiplier_linear(rng):
    model = spectral_model(JacobiParams(0.7, 2.3), 64)
    sym = named_density("step", t0=0.5)
    f, g = _random_seq(rng, 10), _random_seq(rng, 15)
    a, b = 1.7, -0.3
    comb = FiniteSequence(a * f.padded(16) + b * g.padded(16))
    lhs = apply_multiplier(model, sym, comb).entries
    rhs = a * apply_multiplier(model, sym, f).entries + b * apply_multiplier(model, sym, g).entries
    assert_allclose(lhs, rhs, atol=1e-13)


def test_support_must_fit_model():
    model = spectral_model(CHEBYSHEV, 8)
    with pytest.raises(ValueError):
        apply_multiplier(model, named_density("one"), FiniteSequence.unit(8))


def test_nonfinite_symbol_rejected():
    model = spectral_model(CHEBYSHEV, 16)
    bad = MultiplierSymbol("bad", lambda x: np.where(x > 1, np.nan, 1.0))
    with pytest.raises(SymbolError):
        apply_multiplier(model, bad, FiniteSequence.unit(0))


def test_raising_symbol_rejected():
    def boom(x):
        raise RuntimeError("no")

    with pytest.raises(SymbolError):
        apply_multiplier(spectral_model(CHEBYSHEV, 16), MultiplierSymbol("bad", boom), FiniteSequence.unit(0))


def test_unknown_density():
    with pytest.raises(SymbolError):
        named_density("gaussian")


def test_tabulated_interpolates():
    xs = np.linspace(0, 2, 41)
    sym = tabulated(xs, xs ** 2 + 1j * xs)
    assert sym(1.0) == pytest.approx(1.0 + 1.0j)
    real = tabulated(xs, np.cos(xs))
    assert real(0.5) == pytest.approx(math.cos(0.5))


def test_doubling_stable_for_smooth_symbol(rng):
    f = _random_seq(rng, 12)
    out, stable = multiplier_with_doubling(JacobiParams(0.0, 0.0), named_density("exp"), f, 64)
    assert stable
    assert len(out) == 64


def test_bound_check_scale_invariant(rng):
    model = spectral_model(JacobiParams(0.0, 0.0), 96)
    ens = [_random_seq(rng, 16) for _ in range(6)]
    sym = imaginary_power(1.0)
    r1 = gk_multiplier_bound_check(model, sym, ens)
    r2 = gk_multiplier_bound_check(model, sym, [FiniteSequence(7.5 * f.entries) for f in ens])
    assert r1.finite and r1.skipped == 0
    assert r2.R == pytest.approx(r1.R, rel=1e-10)
    assert r1.R >= r1.R_half


def test_bound_check_empty_ensemble():
    with pytest.raises(ValueError):
        gk_multiplier_bound_check(spectral_model(CHEBYSHEV, 16), named_density("one"), [])


def test_bound_check_flags_zero_denominator(monkeypatch):
    import jlps.multipliers as mod

    monkeypatch.setattr(mod, "gk_all", lambda model, f, k: np.zeros(4) if k == 2 else np.ones(4))
    with pytest.raises(ArithmeticError):
        gk_multiplier_bound_check(spectral_model(CHEBYSHEV, 16), named_density("one"), [FiniteSequence.unit(0)])


@pytest.mark.parametrize("gamma", [0.5, 1.0, 3.0])
def test_marcinkiewicz_imaginary_power(gamma):
    # x^k d^k/dx^k x^(i g) = (i g)(i g - 1)...(i g - k + 1) x^(i g)
    rep = marcinkiewicz_check(imaginary_power(gamma), kmax=4)
    for k in range(1, 5):
        expected = math.prod(abs(1j * gamma - j) for j in range(k))
        assert rep.constants[k] == pytest.approx(expected, rel=1e-6)


def test_marcinkiewicz_exp_first_order():
    # x M'(x) = x / (1 + x)^2 peaks at 1/4 when x = 1
    rep = marcinkiewicz_check(named_density("exp"), kmax=1, points=401)
    assert rep.constants[1] == pytest.approx(0.25, rel=1e-5)


def test_marcinkiewicz_order_range():
    with pytest.raises(ValueError):
        marcinkiewicz_check(named_density("exp"), kmax=5)
