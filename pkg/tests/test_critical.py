from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsos.critical import (
    CriticalError,
    VectorModelParams,
    boundary_flag,
    finite_difference_ground_energy,
    lattice_cos_sum,
    locate_hcr,
    solve_vector_model,
    sos_vector_bound,
    tfim3d_sos,
    tfim_meanfield_sos,
    variational_vector_energy,
)
from qsos.models import tfim_lattice, tfim_meanfield
from qsos.sos import lattice_translations, lower_bound, spin_flip


def test_single_site_fixed_point():
    sol = solve_vector_model(VectorModelParams(V=0.5))
    # x = sqrt(kappa) solves 2 x^3 + 2 x = 1; the oracle is the cubic's real root
    roots = np.roots([2.0, 0.0, 2.0, -1.0])
    x = float(roots[np.abs(roots.imag) < 1e-12].real[0])
    assert sol.kappa == pytest.approx(x * x, abs=1e-12)
    assert sol.residual <= 1e-10


def test_large_v_saturates():
    assert solve_vector_model(VectorModelParams(V=1e4)).s == pytest.approx(1.0, abs=1e-3)


def test_small_v_limit_is_free_particle():
    for V in (1e-6, 1e-9):
        p = VectorModelParams(V=V)
        sos = solve_vector_model(p).energy_bound
        var = variational_vector_energy(p)[1]
        assert 0 < sos < var < 4 * V ** (1 / 3)


@pytest.mark.parametrize("V", [0.1, 0.5, 1.0, 2.0, 5.0])
def test_single_site_ordering(V):
    p = VectorModelParams(V=V)
    sos = solve_vector_model(p).energy_bound
    fd = finite_difference_ground_energy(V)
    var = variational_vector_energy(p)[1]
    assert sos <= fd <= var


def test_finite_difference_oracle_converged():
    # doubling the grid density leaves the ground energy unchanged
    assert finite_difference_ground_energy(0.5, 4001, 6.0) == pytest.approx(finite_difference_ground_energy(0.5), abs=1e-5)


@settings(max_examples=20, deadline=None)
@given(J=st.floats(0.05, 2.0), V=st.floats(0.05, 5.0))
def test_sos_below_variational(J, V):
    p = VectorModelParams(d=1, L=8, J=J, V=V)
    sol = solve_vector_model(p)
    assert sol.energy_bound <= variational_vector_energy(p)[1] + 1e-10
    # the fixed point maximizes the tangent bound over s
    for ds in (-1e-3, 1e-3):
        assert sos_vector_bound(p, sol.s + ds) <= sol.energy_bound + 1e-10


def test_vector_params_validation():
    with pytest.raises(CriticalError):
        VectorModelParams(V=0.0)
    with pytest.raises(CriticalError):
        VectorModelParams(L=0)


@pytest.mark.parametrize("h", [0.3, 0.7, 1.5, 2.0])
def test_meanfield_closed_form_matches_sdp(h):
    lam = lower_bound(tfim_meanfield(6, h), 1)[0]
    assert tfim_meanfield_sos(6, h).lam == pytest.approx(lam, abs=1e-5)


def test_meanfield_asymptotics():
    n = 400
    assert tfim_meanfield_sos(n, 2.0).lam / n == pytest.approx(-2.0, abs=2 / n)
    assert tfim_meanfield_sos(n, 0.5).lam / n == pytest.approx(-0.625, abs=2 / n)
    assert tfim_meanfield_sos(n, 1.0).lam / n == pytest.approx(-1.0, abs=2 / n)


@pytest.mark.parametrize("L,dim", [(2, 3), (3, 2), (4, 1)])
def test_lattice_closed_form_matches_sdp(L, dim):
    n = L**dim
    for h in (0.5, 2.0):
        sol = tfim3d_sos(L, h, dim)
        lam = lower_bound(tfim_lattice(L, 2 * h, dim), 1, symmetry=[spin_flip()] + lattice_translations(L, dim))[0]
        assert sol.energy_density == pytest.approx(lam / n, abs=1e-6)


def test_lattice_cos_sum():
    S = lattice_cos_sum(4, 2)
    assert S.size == 16 and S.max() == pytest.approx(2.0) and S.min() == pytest.approx(-2.0)


def test_paramagnetic_side():
    hcr = locate_hcr(32)
    sols = [tfim3d_sos(32, hcr + dh) for dh in (0.05, 0.1, 0.2, 0.4, 0.8)]
    m2 = [s.m2 for s in sols]
    assert all(x > 0 for x in m2)
    assert all(a < b for a, b in zip(m2, m2[1:]))
    big = [tfim3d_sos(8, h) for h in (50.0, 100.0, 200.0)]
    assert all(a.m2 < b.m2 for a, b in zip(big, big[1:]))
    for s in big:
        assert s.b == pytest.approx(math.sqrt(s.h), rel=0.15)


def test_finite_size_stability():
    hcr = locate_hcr(32)
    for dh in (0.1, 0.3):
        a = tfim3d_sos(32, hcr + dh)
        b = tfim3d_sos(64, hcr + dh)
        assert math.sqrt(a.m2) == pytest.approx(math.sqrt(b.m2), rel=0.01)


def test_hcr_bracketing():
    hcr = locate_hcr(16)
    assert boundary_flag(16, hcr - 1e-6)
    assert not boundary_flag(16, hcr + 1e-6)
    with pytest.raises(CriticalError):
        locate_hcr(16, lo=hcr + 0.1, hi=hcr + 1)
