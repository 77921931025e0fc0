import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from hflab.errors import ConfigurationError
from hflab.tunneling import TunnelingInput, bare_density, eta, exchange_density, report, sweep, tau

energies = st.floats(min_value=0.05, max_value=20.0)
fields = st.floats(min_value=0.05, max_value=5.0)


def test_input_validation():
    with pytest.raises(ConfigurationError):
        TunnelingInput(0.5, 5.0, 1.0)
    with pytest.raises(ConfigurationError):
        TunnelingInput(5.0, 0.5, 0.0)
    with pytest.raises(ConfigurationError):
        TunnelingInput(5.0, 0.5, 1.0, n=1, n_i=2)
    with pytest.raises(ConfigurationError):
        eta(TunnelingInput(5.0, 0.5, 1.0), form="exact")


def test_exponential_dominates():
    inp = TunnelingInput(5.0, 0.5, 1.0)
    assert eta(inp) == pytest.approx(2 * np.sqrt(10.0) * 5.0 / np.log(10.0))
    assert tau(inp) == pytest.approx(-10.0 / np.log(10.0))


def test_zero_coupling():
    inp = TunnelingInput(5.0, 0.5, 1.0, C_n=0.0)
    assert eta(inp) == float("-inf") and tau(inp) == float("-inf")
    assert not exchange_density(inp).deep_regime


@settings(max_examples=100, deadline=None)
@given(energies, energies, fields, st.integers(min_value=1, max_value=8))
def test_n_o_squared_scaling(a, b, E, N_o):
    assume(a > b * 1.01)
    base = TunnelingInput(a, b, E)
    scaled = TunnelingInput(a, b, E, N_o=N_o)
    assert eta(scaled) - eta(base) == pytest.approx(2 * np.log10(N_o), abs=1e-9)
    assert tau(scaled) - tau(base) == pytest.approx(2 * np.log10(N_o), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(energies, energies, fields, fields)
def test_enhancement_grows_as_field_weakens(a, b, E1, E2):
    assume(a > b * 1.01 and E1 < E2)
    assert eta(TunnelingInput(a, b, E1)) >= eta(TunnelingInput(a, b, E2))


@settings(max_examples=50, deadline=None)
@given(energies, fields)
def test_bare_density_finite(I, E):
    assert np.isfinite(bare_density(I, 1, E))


def test_report_and_sweep():
    r = report(TunnelingInput(5.0, 0.5, 1.0))
    assert r.deep_regime and r.intensity_w_cm2 > 3e16
    rows = sweep(5.0, 0.5, [0.5, 1.0, 2.0])
    assert len(rows) == 3 and rows[0][7] > rows[2][7]
