import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy.special import ive

from jlps.bessel import (
    bessel_i_scaled,
    chebyshev_heat_kernel,
    chebyshev_heat_kernel_dt,
    heat_deriv_recurrence,
)
from jlps.core import CHEBYSHEV, FiniteSequence, JacobiParams
from jlps.quadrature import spectral_model
from jlps.semigroups import (
    HeatKernelQuery,
    apply_semigroup,
    dump_kernel_grid,
    heat_kernel,
    poisson_kernel,
    poisson_kernel_matrix,
)


def test_bessel_at_zero():
    tab = bessel_i_scaled(0.0, 5)
    assert tab[0] == 1.0
    assert np.all(tab.values[1:] == 0.0)


def _i_series(n, t, terms=40):
    return math.fsum((t / 2) ** (2 * k + n) / (math.factorial(k) * math.factorial(k + n)) for k in range(terms))


def test_bessel_known_value():
    tab = bessel_i_scaled(1.0, 3)
    assert tab[0] == pytest.approx(math.exp(-1) * _i_series(0, 1.0), abs=1e-15)
    assert tab[0] == pytest.approx(0.46575960759, abs=1e-11)
    assert tab[2] * math.e == pytest.approx(0.1357476698, abs=1e-10)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0, 50.0])
def test_bessel_normalisation(t):
    v = bessel_i_scaled(t, 400).values
    assert v[0] + 2 * math.fsum(v[1:]) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(1e-3, 2000.0), st.integers(0, 300))
def test_bessel_against_scipy(t, N):
    v = bessel_i_scaled(t, N).values
    ref = ive(np.arange(N + 1), t)
    mask = ref > 1e-290
    assert_allclose(v[mask], ref[mask], rtol=1e-11)


def test_bessel_rejects_bad_input():
    with pytest.raises(ValueError):
        bessel_i_scaled(-1.0, 3)
    with pytest.raises(ValueError):
        bessel_i_scaled(1.0, -1)


def test_chebyshev_kernel_values():
    assert chebyshev_heat_kernel(1.0, 0, 0) == pytest.approx(0.46575960759, abs=1e-11)
    # e^-1 (I_2(1) + I_0(1)) = e^-1 (0.1357476698 + 1.2660658778)
    assert chebyshev_heat_kernel(1.0, 1, 1) == pytest.approx(math.exp(-1) * (_i_series(2, 1.0) + _i_series(0, 1.0)), abs=1e-15)
    assert chebyshev_heat_kernel(1.0, 1, 1) == pytest.approx(0.5156983845, abs=1e-10)
    assert chebyshev_heat_kernel(1.0, 0, 3) == pytest.approx(math.sqrt(2) * ive(3, 1.0), abs=1e-15)
    assert chebyshev_heat_kernel(2.0, 3, 7) == chebyshev_heat_kernel(2.0, 7, 3)


def test_heat_kernel_query_validation():
    with pytest.raises(ValueError):
        HeatKernelQuery(CHEBYSHEV, -1.0, 0, 0)
    with pytest.raises(ValueError):
        HeatKernelQuery(CHEBYSHEV, 1.0, 0, 0, k=-1)


def test_heat_kernel_identity_at_zero(params):
    m = spectral_model(params, 64)
    assert heat_kernel(m, HeatKernelQuery(params, 0.0, 3, 3)) == pytest.approx(1.0, abs=1e-13)
    assert heat_kernel(m, HeatKernelQuery(params, 0.0, 3, 4)) == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(IndexError):
        heat_kernel(m, HeatKernelQuery(params, 1.0, 64, 0))


def test_heat_kernel_chebyshev_example():
    m = spectral_model(CHEBYSHEV, 64)
    assert heat_kernel(m, HeatKernelQuery(CHEBYSHEV, 1.0, 1, 1)) == pytest.approx(ive(0, 1.0) + ive(2, 1.0), abs=1e-14)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0, 50.0])
def test_oracle_grid(t):
    N = 64
    m = spectral_model(CHEBYSHEV, 144)
    tab = bessel_i_scaled(t, 2 * N)
    closed = np.array([[chebyshev_heat_kernel(t, i, j, tab) for j in range(N + 1)] for i in range(N + 1)])
    assert np.max(np.abs(m.heat_matrix(t, N + 1) - closed)) < 1e-10


def test_derivative_recurrence_small_t_sign():
    tab = bessel_i_scaled(0.2, 4)
    assert heat_deriv_recurrence(tab, 0) < 0
    with pytest.raises(IndexError):
        heat_deriv_recurrence(tab, 4)


def test_derivative_recurrence_finite_difference():
    h = 1e-4
    tab = bessel_i_scaled(1.0, 3)
    fd = (bessel_i_scaled(1 + h, 3)[1] - bessel_i_scaled(1 - h, 3)[1]) / (2 * h)
    assert heat_deriv_recurrence(tab, 1) == pytest.approx(0.5 * (tab[2] - 2 * tab[1] + tab[0]), abs=1e-16)
    assert abs(heat_deriv_recurrence(tab, 1) - fd) < 1e-7


@pytest.mark.parametrize("mn", [(0, 0), (0, 5), (3, 3), (2, 9)])
def test_derivative_matches_model(mn):
    m = spectral_model(CHEBYSHEV, 96)
    i, j = mn
    for t in (0.5, 3.0):
        model = heat_kernel(m, HeatKernelQuery(CHEBYSHEV, t, i, j, k=1))
        assert abs(model - chebyshev_heat_kernel_dt(t, i, j)) < 1e-10


@pytest.mark.parametrize("ts", [(0.5, 1.0), (1.0, 2.0), (3.0, 7.0)])
def test_semigroup_law(params, ts):
    t, s = ts
    m = spectral_model(params, 80)
    assert np.max(np.abs(m.heat_matrix(t) @ m.heat_matrix(s) - m.heat_matrix(t + s))) < 1e-10


def test_apply_semigroup_properties(params, rng):
    m = spectral_model(params, 80)
    f = FiniteSequence(rng.standard_normal(20))
    assert_allclose(apply_semigroup(m, f, 0.0).entries[:20], f.entries, atol=1e-13)
    w = apply_semigroup(m, f, 1.5)
    assert w.norm() <= f.norm()
    assert_allclose(apply_semigroup(m, w, 2.0).entries, apply_semigroup(m, f, 3.5).entries, atol=1e-10)
    with pytest.raises(ValueError):
        apply_semigroup(m, f, -1.0)
    with pytest.raises(ValueError):
        apply_semigroup(m, f, 1.0, kind="wave")


def test_poisson_basics():
    m = spectral_model(CHEBYSHEV, 80)
    assert poisson_kernel(m, 0.0, 2, 2) == pytest.approx(1.0, abs=1e-13)
    assert poisson_kernel(m, 0.0, 2, 3) == pytest.approx(0.0, abs=1e-13)
    d = poisson_kernel(m, 1.0, 0, 0, "direct")
    s = poisson_kernel(m, 1.0, 0, 0, "subordination")
    assert abs(d - s) < 1e-8
    diag = [poisson_kernel(m, t, 4, 4) for t in (0.1, 0.5, 1.0, 2.0, 5.0)]
    assert all(b < a for a, b in zip(diag[:-1], diag[1:]))
    with pytest.raises(ValueError):
        poisson_kernel(m, 1.0, 0, 0, "bogus")


@pytest.mark.parametrize("t", [0.5, 1.0, 5.0])
def test_subordination_grid(params, t):
    m = spectral_model(params, 80)
    a = poisson_kernel_matrix(m, t, 33, "direct")
    b = poisson_kernel_matrix(m, t, 33, "subordination")
    assert np.max(np.abs(a - b)) < 1e-8


def test_dump_kernel_grid(tmp_path):
    path = tmp_path / "k.csv"
    dump_kernel_grid([(1.0, 0, 0, 0.5, "bessel")], path)
    assert path.read_text().splitlines()[0] == "t,m,n,value,path"
