import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decohere.errors import DivergentIntegral, InvalidTarget, InvalidWeight
from decohere.formfactor import SpectralWeight
from decohere.scattering import (
    Density,
    ScatteringChannel,
    box_weight,
    scattering_rate,
    small_norm_family,
)


def rate(F, n):
    return scattering_rate(ScatteringChannel(F, n))


def test_box_rate_closed_form():
    F = box_weight(2.0, 0.5, 1.0)
    assert rate(F, Density.constant(3.0)) == pytest.approx(math.pi * 4.0 * 0.5 * 3.0, rel=1e-12)


def test_thermal_rate_matches_direct_quadrature():
    from scipy.integrate import quad

    F = SpectralWeight.flat(1.0, 2.0, 0.5)
    expect = math.pi * quad(lambda w: 1.0 / math.expm1(w / 0.7), 0.5, 2.0)[0]
    assert rate(F, Density.thermal(0.7)) == pytest.approx(expect, rel=1e-10)


def test_thermal_rate_with_power_law_to_origin():
    from scipy.integrate import quad

    # F^2 n = w / expm1(w) for kappa = 1.5 and T = 1: bounded at the origin
    F = SpectralWeight.power_law(1.0, 1.5, 1.0)
    ref = quad(lambda w: w / math.expm1(w) if w else 1.0, 0.0, 1.0, epsabs=0, epsrel=1e-12)[0]
    assert rate(F, Density.thermal(1.0)) == pytest.approx(math.pi * ref, rel=1e-10)


def test_divergent_rate():
    # F^2 n ~ w^-2 near 0
    with pytest.raises(DivergentIntegral):
        rate(SpectralWeight.power_law(1.0, 0.5, 1.0), Density.thermal(1.0))


def test_zero_formfactor_gives_zero_rate():
    assert rate(SpectralWeight.flat(0.0, 1.0), Density.constant(1.0)) == 0.0


def test_tabulated_rate():
    w = np.linspace(0, 1, 5)
    F = SpectralWeight.tabulated(w, np.full(5, 2.0))
    assert rate(F, Density.constant(0.5)) == pytest.approx(math.pi * 4 * 0.5, rel=1e-12)


def test_channel_needs_finite_norm():
    with pytest.raises(InvalidWeight):
        ScatteringChannel(SpectralWeight.inverse_square(1.0, 1.0, 0.0), Density.constant(1.0))


def test_density_validation():
    with pytest.raises(InvalidWeight):
        Density.constant(-1.0)
    with pytest.raises(InvalidWeight):
        Density.thermal(0.0)


def test_family_example():
    fam = small_norm_family(0.01, [1e-1, 1e-2, 1e-3, 1e-4], 1.0, Density.constant(1.0))
    for m in fam:
        assert m.rate == pytest.approx(0.01, rel=1e-10)
        assert m.norm_sq == pytest.approx(math.sqrt(0.01 * m.width / math.pi), rel=1e-10)
    assert fam[1].norm_sq == pytest.approx(5.6419e-3, rel=1e-4)


@pytest.mark.parametrize(
    "widths, omega0, n",
    [
        ([1e-2, 1e-1], 1.0, Density.constant(1.0)),
        ([1e-1, 0.0], 1.0, Density.constant(1.0)),
        ([1e-1], 1.0, Density.constant(0.0)),
        ([4.0], 1.0, Density.constant(1.0)),
    ],
)
def test_family_validation(widths, omega0, n):
    with pytest.raises(InvalidTarget):
        small_norm_family(0.01, widths, omega0, n)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(0.01, 10), H=st.floats(0.1, 5), w=st.floats(0.01, 1))
def test_rate_scales_as_fourth_power_of_f(c, H, w):
    n = Density.thermal(2.0)
    F = box_weight(H, w, 1.0)
    # scaling f by c scales F = |f|^2 by c^2
    assert rate(F.scaled(c**2), n) == pytest.approx(c**4 * rate(F, n), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(n1=st.floats(0.0, 5), dn=st.floats(0.0, 5), w=st.floats(0.01, 1))
def test_rate_monotone_in_density(n1, dn, w):
    F = box_weight(1.0, w, 1.0)
    assert rate(F, Density.constant(n1 + dn)) >= rate(F, Density.constant(n1)) * (1 - 1e-12)


@settings(max_examples=40, deadline=None)
@given(c1=st.floats(1.0, 5), c2=st.floats(1.0, 5), w=st.floats(0.01, 1))
def test_box_rate_translation_invariant_for_flat_density(c1, c2, w):
    n = Density.constant(0.7)
    assert rate(box_weight(1.3, w, c1), n) == pytest.approx(rate(box_weight(1.3, w, c2), n), rel=1e-10)
