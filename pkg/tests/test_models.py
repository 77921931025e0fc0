import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hflab import models as M
from hflab.errors import DomainError, InstabilityError

nl = st.tuples(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=4)).filter(
    lambda t: t[1] < t[0])


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.5, max_value=40.0), nl, st.floats(min_value=0.0, max_value=50.0))
def test_normal_solution_satisfies_system(Z, nl_, alpha):
    n, l = nl_
    sol = M.coulomb_normal(Z, n, l, alpha)
    assert M.coulomb_residual(sol) < 1e-12
    E = M.coulomb_closed_form_energy(Z, n, l, alpha)
    assert abs(sol.E_total - E) <= 1e-12 * abs(E)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.5, max_value=40.0), nl)
def test_singular_family_energy_degenerate(Z, nl_):
    n, l = nl_
    fam = M.coulomb_family(Z, n, l, 100)
    E = np.array([f.E_total for f in fam])
    assert np.ptp(E) <= 1e-12 * abs(E[0])
    assert max(M.coulomb_residual(f) for f in fam) < 1e-12


def test_singular_couplings_only_at_n_squared():
    assert M.singular_couplings(2, 1, 10.0) == pytest.approx([4.0])
    assert M.coulomb_determinant(3, 2, 9.0) == 0.0


def test_zero_coupling_limit():
    sol = M.coulomb_normal(5.0, 2, 1, 0.0)
    assert sol.Z_eff_1 == 5.0 and sol.E_total == -25.0 * 6 / 8


def test_coulomb_domain():
    with pytest.raises(DomainError):
        M.coulomb_normal(1.0, 1, 1, 1.0)
    with pytest.raises(DomainError):
        M.coulomb_singular_family(1.0, 2, 0, 2.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.1, max_value=10.0), st.floats(min_value=-0.9, max_value=10.0))
def test_oscillator_normal(omega, bt):
    s = M.oscillator_normal(omega, bt)
    assert s.system_residual() < 1e-12


def test_oscillator_family_and_limits():
    fam = M.oscillator_solutions(2.0, 1.0, 100)
    assert len(fam) == 101
    assert max(s.constraint_residual() for s in fam[1:]) < 1e-12
    assert max(s.system_residual() for s in fam) < 1e-12
    assert M.oscillator_normal(2.0, 0.0).omega_eff_1 == 2.0
    with pytest.raises(InstabilityError):
        M.oscillator_normal(1.0, -1.0)
    with pytest.raises(DomainError):
        M.oscillator_family_member(1.0, 1.5)


def test_inverse_r_oracles():
    for Z in (1.0, 3.0):
        assert M.inverse_r_element(2, 1, 1, 0, Z) == pytest.approx(16 * Z / (27 * np.sqrt(6)), rel=1e-12)
        for n, l in ((1, 0), (4, 2), (7, 3)):
            assert M.inverse_r_element(n, l, n, l, Z) == pytest.approx(Z / n ** 2, rel=1e-12)
    # discrete partial sums stay above the complete-spectrum value -1/2
    terms = [M.inverse_r_element(j, 0, 1, 0) ** 2 / (-0.5 + 0.5 / j ** 2) for j in range(2, 40)]
    assert all(t < 0 for t in terms) and -0.5 < sum(terms) < 0.0


def test_rpa_instability_reports():
    r = M.rpa_instability(1.0, 2, 1)
    assert r.unstable and r.drift < 0.02
    assert r.alpha_complete == 8.0 and r.alpha_critical > r.alpha_complete
    assert not M.rpa_instability(1.0, 1, 0, interpretation="as-printed").unstable
    with pytest.raises(DomainError):
        M.rpa_chi(1.0, 1, 0, 5, "other")


def test_csv_headers():
    assert M.coulomb_family_csv(M.coulomb_family(2.0, 1, 0, 3)).splitlines()[0] == "param,Z1,Z2,E_total"
    assert M.oscillator_family_csv(M.oscillator_solutions(1.0, 1.0, 3)).splitlines()[0] == "param,w1,w2"
