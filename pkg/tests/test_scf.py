import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import scf
from hflab.errors import ConfigurationError, ConvergenceError, DomainError, SpectrumError
from hflab.grid import build_grid
from hflab.scf.atoms import AtomSpec, builtin_atom, parse_shells
from hflab.scf.io import orbital_csv, result_from_json, result_to_json
from hflab.scf.solver import SCFOptions, channel_operator, solve, total_energy

HE_HF_LIMIT = -2.8616800


@pytest.fixture(scope="module")
def small_grid():
    return build_grid(1e-6, 40.0, 400)


@pytest.mark.parametrize("scheme", ["hf", "hartree-no-self-action"])
def test_hydrogen_exact(default_grid, scheme):
    res = solve(builtin_atom("H"), default_grid, scheme)
    assert abs(res.orbital("1s").energy + 0.5) < 1e-5
    assert abs(res.total_energy + 0.5) < 1e-5


def test_hydrogen_hartree_self_action(default_grid):
    # the electron screens itself completely and the level is lost
    with pytest.raises(SpectrumError):
        solve(builtin_atom("H"), default_grid, "hartree")


def test_helium_energies(he_hf, he_hartree):
    assert abs(he_hf.total_energy - HE_HF_LIMIT) < 1e-4
    assert he_hf.virial_ratio < 1e-4
    assert he_hartree.total_energy > he_hf.total_energy
    assert abs(total_energy(he_hf) - he_hf.total_energy) < 1e-7


def test_single_shell_nsa_equals_hf(small_grid):
    a = solve(builtin_atom("He"), small_grid, "hf")
    b = solve(builtin_atom("He"), small_grid, "hartree-no-self-action")
    assert abs(a.total_energy - b.total_energy) < 1e-8
    assert np.max(np.abs(a.orbital("1s").radial - b.orbital("1s").radial)) < 1e-5


def test_orbitals_orthonormal(he_hf):
    res = scf("Be", "hf", 800)
    w = res.grid.weights
    s = [o for o in res.orbitals if o.l == 0]
    S = np.array([[np.dot(w, a.radial * b.radial) for b in s] for a in s])
    assert np.allclose(S, np.eye(len(s)), atol=1e-8)


def test_unknown_scheme(small_grid):
    with pytest.raises(ConfigurationError):
        solve(builtin_atom("He"), small_grid, "lda")


def test_convergence_error_carries_trace(small_grid):
    with pytest.raises(ConvergenceError) as err:
        solve(builtin_atom("Be"), small_grid, "hf", SCFOptions(max_iterations=3))
    assert len(err.value.energy_trace) == 3
    res = solve(builtin_atom("Be"), small_grid, "hf", SCFOptions(max_iterations=3), raise_on_failure=False)
    assert not res.converged


def test_missing_bound_state(small_grid):
    atom = AtomSpec(1, parse_shells("1s2"))
    with pytest.raises((SpectrumError, ConvergenceError)):
        solve(atom, small_grid, "hartree", SCFOptions(max_iterations=50))


def test_options_validation():
    with pytest.raises(ConfigurationError):
        SCFOptions(mixing=0.0)
    with pytest.raises(ConfigurationError):
        SCFOptions(max_iterations=0)


def test_json_roundtrip(he_hf):
    back = result_from_json(result_to_json(he_hf, include_radial=True))
    assert back.total_energy == he_hf.total_energy
    assert np.array_equal(back.orbital("1s").radial, he_hf.orbital("1s").radial)
    assert np.allclose(back.grid.points, he_hf.grid.points, rtol=1e-14)
    with pytest.raises(ConfigurationError):
        result_from_json(result_to_json(he_hf))


def test_orbital_csv(he_hf):
    lines = orbital_csv(he_hf, "1s").splitlines()
    assert lines[0] == "r,P" and len(lines) == he_hf.grid.point_count + 1
    with pytest.raises(DomainError):
        orbital_csv(he_hf, "2s")


def test_channel_operator_reproduces_orbital_energy(he_hf):
    op = channel_operator(he_hf, 0)
    E, _ = op.lowest(1, 2.0)
    assert abs(E[0] - he_hf.orbital("1s").energy) < 1e-6


@settings(max_examples=5, deadline=None)
@given(st.integers(min_value=1, max_value=8))
def test_hydrogenic_ion_energy(Z):
    g = build_grid(1e-6, 40.0 / Z, 800)
    res = solve(AtomSpec(Z, parse_shells("1s1")), g, "hf")
    assert abs(res.total_energy / (-0.5 * Z * Z) - 1.0) < 1e-4


def test_helium_exchange_self_term_equals_f0(he_hf):
    from scipy.integrate import cumulative_trapezoid
    from scipy.interpolate import CubicSpline

    from hflab.scf.solver import apply_exchange, build_exchange_kernel

    o = he_hf.orbital("1s")
    g = he_hf.grid
    kx = float(np.dot(g.weights, o.radial * apply_exchange(build_exchange_kernel(he_hf.orbitals, g), o)))
    # F0 = 2 ∫ P(r)² / r ∫_0^r P(r')² dr' dr on a fine uniform mesh, independent of the grid quadrature
    r = np.linspace(1e-6, 30.0, 200001)
    rho = CubicSpline(np.log(g.points), o.radial)(np.log(r)) ** 2
    inner = cumulative_trapezoid(rho, r, initial=0.0)
    f0 = 2.0 * np.trapezoid(rho * inner / r, r)
    assert kx == pytest.approx(f0, rel=1e-8)
