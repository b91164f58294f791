import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decohere.errors import DivergentIntegral, InvalidWeight, NonPositiveFrequency
from decohere.formfactor import (
    Kind,
    SpectralWeight,
    classify,
    moment,
    spectral_density_thermal,
    spectral_density_vacuum,
)


def closed_form_moment(J, p):
    """int_lo^hi A w^(e+p) dw for the analytic kinds."""
    e = J.ir_exponent + p
    lo, hi = J.omega_min, J.omega_c
    if e == -1:
        return J.amplitude * math.log(hi / lo)
    return J.amplitude * (hi ** (e + 1) - lo ** (e + 1)) / (e + 1)


def test_flat_moments():
    J = SpectralWeight.flat(1.0, 1.0)
    assert moment(J, 1) == pytest.approx(0.5, rel=1e-10)
    assert moment(J, 0) == pytest.approx(1.0, rel=1e-10)


def test_power_law_norm_has_integrable_singularity():
    J = SpectralWeight.power_law(1.0, 0.5, 1.0)
    assert moment(J, 0) == pytest.approx(2.0, rel=1e-10)


def test_ohmic_without_cutoff_diverges():
    with pytest.raises(DivergentIntegral):
        moment(SpectralWeight.ohmic(1.0, 1.0, 0.0), 0)
    # the dressing energy is still finite
    assert moment(SpectralWeight.ohmic(1.0, 1.0, 0.0), 1) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize(
    "J",
    [
        SpectralWeight.power_law(0.7, 0.3, 4.0),
        SpectralWeight.power_law(2.0, 1.7, 3.0, 0.2),
        SpectralWeight.ohmic(1.3, 10.0, 1e-4),
        SpectralWeight.inverse_square(0.01, 10.0, 1e-6),
        SpectralWeight.flat(3.0, 5.0, 1.0),
    ],
    ids=lambda J: J.kind.value,
)
@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_moment_matches_closed_form(J, p):
    assert moment(J, p) == pytest.approx(closed_form_moment(J, p), rel=1e-10)


def test_tabulated_moments_are_exact_for_linear_table():
    # PCHIP reproduces linear data exactly, so int w^p (2 + 3w) dw on [0, 2]
    w = np.linspace(0.0, 2.0, 9)
    J = SpectralWeight.tabulated(w, 2 + 3 * w)
    assert moment(J, 0) == pytest.approx(4 + 6, rel=1e-10)
    assert moment(J, 1) == pytest.approx(4 + 8, rel=1e-10)


@pytest.mark.parametrize(
    "omega, values",
    [([0.0, 1.0, 1.0], [1, 1, 1]), ([0.0, 2.0, 1.0], [1, 1, 1]), ([0.0, 1.0], [1, -1]), ([0.0], [1])],
)
def test_malformed_tables_rejected(omega, values):
    with pytest.raises(InvalidWeight):
        SpectralWeight.tabulated(omega, values)


def test_csv_table_roundtrip(tmp_path):
    path = tmp_path / "j.csv"
    path.write_text("# sampled weight\nomega,J\n0,1\n0.5,1\n1,1\n")
    J = SpectralWeight.from_csv(path)
    assert J.kind is Kind.TABULATED
    assert moment(J, 0) == pytest.approx(1.0, rel=1e-12)


def test_csv_malformed_row(tmp_path):
    path = tmp_path / "j.csv"
    path.write_text("0,1\n0.5,x\n")
    with pytest.raises(InvalidWeight):
        SpectralWeight.from_csv(path)


def test_invalid_parameters():
    with pytest.raises(InvalidWeight):
        SpectralWeight.power_law(1.0, 0.0)
    with pytest.raises(InvalidWeight):
        SpectralWeight.flat(1.0, omega_c=1.0, omega_min=2.0)
    with pytest.raises(InvalidWeight):
        SpectralWeight.flat(-1.0)


def test_weight_is_zero_outside_support():
    J = SpectralWeight.power_law(1.0, 0.5, 2.0, 0.5)
    assert J(0.25) == 0.0
    assert J(3.0) == 0.0
    assert J(1.0) == pytest.approx(1.0)


def test_classify_examples():
    assert classify(SpectralWeight.power_law(1.0, 0.5, 1.0)).label == "Stable"
    sing = classify(SpectralWeight.inverse_square(1.0, 1.0, 0.0))
    assert sing.label == "VanHoveSingular"
    assert sing.norm_sq == math.inf and sing.dressing_energy == math.inf
    flat = classify(SpectralWeight.flat(2.5, 3.0))
    assert flat.label == "Stable"
    assert flat.norm_sq == pytest.approx(7.5, rel=1e-12)
    ohm = classify(SpectralWeight.ohmic(1.0, 1.0, 0.0))
    assert ohm.label == "VanHoveSingular" and ohm.norm_sq == math.inf
    assert ohm.dressing_energy == pytest.approx(1.0)


def test_inverse_square_norm_grows_without_bound():
    cutoffs = 10.0 ** -np.arange(1, 9)
    norms = [moment(SpectralWeight.inverse_square(1.0, 1.0, c), 0) for c in cutoffs]
    assert np.all(np.diff(norms) > 0)
    assert norms[-1] > 1e7


def test_vacuum_spectral_density():
    c = 0.3
    J = SpectralWeight.inverse_square(c, 10.0, 1e-3)
    for w in (0.01, 1.0, 9.0):
        assert spectral_density_vacuum(J, w) == pytest.approx(2 * math.pi * c, rel=1e-14)
    assert spectral_density_vacuum(J, 11.0) == 0.0
    assert spectral_density_vacuum(SpectralWeight.flat(1.0, 1.0), 0.5) == pytest.approx(math.pi / 2)
    # a singular power law at w = 0 gives 0, not nan
    assert spectral_density_vacuum(SpectralWeight.power_law(1.0, 0.5), 0.0) == 0.0


def test_vacuum_density_recovers_weight_on_grid():
    J = SpectralWeight.tabulated([0.0, 0.5, 1.0, 2.0], [0.0, 1.0, 0.5, 0.2])
    w = np.linspace(0.1, 2.0, 23)
    np.testing.assert_allclose(spectral_density_vacuum(J, w) / (2 * np.pi * w**2), J(w), rtol=1e-14)


def test_thermal_spectral_density():
    J = SpectralWeight.ohmic(1.0, 10.0, 1e-3)
    val = spectral_density_thermal(J, 0.01, 10.0)
    assert val.value == pytest.approx(20 * math.pi, rel=1e-12)
    assert val.valid
    assert not spectral_density_thermal(J, 10.0, 10.0).valid
    flat = SpectralWeight.flat(2.0, 1.0)
    small = [spectral_density_thermal(flat, w, 1.0).value for w in (1e-2, 1e-4, 1e-6)]
    np.testing.assert_allclose(small, [2 * math.pi * 2.0 * w * 1.0 for w in (1e-2, 1e-4, 1e-6)])
    with pytest.raises(NonPositiveFrequency):
        spectral_density_thermal(J, 0.0, 1.0)


weights = st.one_of(
    st.builds(SpectralWeight.flat, st.floats(0.1, 5), st.floats(0.5, 5)),
    st.builds(SpectralWeight.power_law, st.floats(0.1, 5), st.floats(0.1, 3), st.floats(0.5, 5)),
    st.builds(SpectralWeight.ohmic, st.floats(0.1, 5), st.floats(1.0, 5), st.floats(1e-4, 0.5)),
    st.builds(SpectralWeight.inverse_square, st.floats(0.1, 5), st.floats(1.0, 5), st.floats(1e-4, 0.5)),
)


@settings(max_examples=60, deadline=None)
@given(J=weights, c=st.floats(0.01, 100), p=st.integers(0, 3))
def test_moment_linear_in_amplitude(J, c, p):
    assert moment(J.scaled(c), p) == pytest.approx(c * moment(J, p), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(J=weights, p=st.integers(1, 4))
def test_moment_support_bound(J, p):
    assert moment(J, p) <= J.omega_c * moment(J, p - 1) * (1 + 1e-10)
