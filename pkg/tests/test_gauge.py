import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import scf
from hflab import gauge, hydrogenic
from hflab.errors import DomainError
from hflab.grid import build_grid
from hflab.scf.operators import RadialOperators

D_1S_2P = 128 * np.sqrt(6) / 243


@pytest.fixture(scope="module")
def hydrogen_states():
    g = build_grid()
    ops = RadialOperators(g)
    E0, P0 = ops.channel(0, -1.0 / g.points).lowest(1, 1.0)
    E1, P1 = ops.channel(1, -1.0 / g.points).lowest(1, 1.0)
    return g, gauge.State(1, 0, E0[0], P0[:, 0]), gauge.State(2, 1, E1[0], P1[:, 0])


def test_hydrogen_1s_2p_both_forms(hydrogen_states):
    g, i, f = hydrogen_states
    pair = gauge.dipole_pair(i, f, f.energy - i.energy, g)
    assert float(pair.d_length) == pytest.approx(D_1S_2P, rel=1e-5)
    assert pair.relative_discrepancy < 1e-5


def test_length_form_exact_for_analytic_orbitals():
    g = build_grid()
    a = gauge.State(1, 0, -0.5, hydrogenic.radial_P(1, 0, 1.0, g.points))
    b = gauge.State(2, 1, -0.125, hydrogenic.radial_P(2, 1, 1.0, g.points))
    assert float(gauge.dipole_length(a, b, g)) == pytest.approx(D_1S_2P, rel=1e-12)
    fd = gauge.dipole_velocity(a, b, 0.375, g, method="finite-difference")
    assert float(fd) == pytest.approx(D_1S_2P, rel=1e-8)


def test_selection_rule_and_domain(hydrogen_states):
    g, i, f = hydrogen_states
    same = gauge.dipole_length(i, i, g)
    assert not same.allowed and float(same) == 0.0
    with pytest.raises(DomainError):
        gauge.dipole_velocity(i, f, 0.0, g)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=6))
def test_angular_factor_sum(l):
    # the two branches l -> l +- 1 share the full dipole strength
    s = gauge.angular_factor(l, l + 1) ** 2 + (gauge.angular_factor(l, l - 1) ** 2 if l > 0 else 0.0)
    assert s == pytest.approx(1.0)


def test_hydrogen_sum_rule():
    H = scf("H", "hf")
    for form in gauge.FORMS:
        rep = gauge.oscillator_sum(H, form, 20.0)
        assert rep.partial_sum == pytest.approx(1.0, abs=2e-3)
        assert rep.partial(1.0) < rep.partial(20.0)


def test_local_scheme_forms_agree(he_hartree):
    L = gauge.oscillator_sum(he_hartree, "length", 50.0).partial_sum
    V = gauge.oscillator_sum(he_hartree, "velocity", 50.0).partial_sum
    assert abs(L - V) < 1e-4 * L


def test_exchange_breaks_gauge_equivalence(he_hf):
    L = gauge.oscillator_sum(he_hf, "length", 50.0)
    V = gauge.oscillator_sum(he_hf, "velocity", 50.0)
    assert L.partial_sum > V.partial_sum
    assert L.to_csv().splitlines()[0] == "omega,f,transition"
    assert json.loads(L.to_json())["form"] == "length"
