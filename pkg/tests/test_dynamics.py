import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellpvi.dynamics import (PVI_READINGS, FlowSpec, casimir_quantity, ci_energy, conserved_report, elliptic_to_rational,
                             epvi_acceleration, integrate, kappa_limit_study, lax_trace_quantity, order_study,
                             pvi_crosscheck, pvi_nu_from_parameters, tau_from_t, zvg_energy)
from ellpvi.elliptic import DomainError, ModularPoint, dE2
from ellpvi.lax import build_top_lax

TAU = 0.2 + 1.0j
cplx = st.builds(complex, st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))


def test_axis_spin_is_fixed_point():
    spec = FlowSpec("ZVG", {"nu_prime": np.zeros(3)}, tau0=TAU)
    tr = integrate(spec, [1.0, 0, 0], 1.0, rtol=1e-12, atol=1e-14)
    assert np.abs(tr.final - [1, 0, 0]).max() < 1e-14


@settings(max_examples=8, deadline=None)
@given(st.lists(cplx, min_size=3, max_size=3), st.lists(cplx, min_size=3, max_size=3))
def test_gyrostat_conserves_casimir_and_energy(S0, nup):
    spec = FlowSpec("ZVG", {"nu_prime": nup}, tau0=TAU)
    tr = integrate(spec, S0, 1.0, rtol=1e-12, atol=1e-14)
    drift = conserved_report(tr, {"c": casimir_quantity, "H": zvg_energy(spec)})["drift"]
    assert drift["c"] < 1e-10
    assert drift["H"] < 1e-8


def test_nonautonomous_gyrostat_keeps_casimir():
    spec = FlowSpec("NAZVG", {"nu_prime": [0.3, 0.1j, -0.2]}, tau0=TAU, direction=0.05 + 0.03j, kappa=1.0)
    tr = integrate(spec, [0.5, 0.3 + 0.2j, -0.4], 1.0, rtol=1e-12, atol=1e-14)
    rep = conserved_report(tr, {"c": casimir_quantity})
    assert not rep["autonomous"]
    assert rep["drift"]["c"] < 1e-10


def test_ci_energy_and_top_isospectrality():
    spec = FlowSpec("CI", {"nu": [0.3, 0.2, 0.1j, 0.4]}, tau0=TAU)
    tr = integrate(spec, [0.23 + 0.31j, 0.1 - 0.2j], 1.0, rtol=1e-12, atol=1e-14)
    assert conserved_report(tr, {"H": ci_energy(spec)})["drift"]["H"] < 1e-8
    m = ModularPoint(TAU)
    spec = FlowSpec("ET", {"N": 3}, tau0=TAU)
    rng = np.random.default_rng(0)
    tr = integrate(spec, 0.3 * (rng.normal(size=8) + 1j * rng.normal(size=8)), 1.0, rtol=1e-12, atol=1e-14)
    q = lax_trace_quantity(lambda y: build_top_lax(y, m)[0], 0.31 + 0.27j)
    assert conserved_report(tr, {"q": q})["drift"]["q"] < 1e-8


def test_equal_couplings_collapse_to_doubled_argument():
    m = ModularPoint(0.2 + 1.1j)
    for u in (0.13 + 0.21j, -0.31 + 0.05j):
        # sum over the four half-period shifts is 4 d/du wp(2u) = 8 wp'(2u)
        assert abs(epvi_acceleration(u, [0.7] * 4, m) + 0.49 * 8 * dE2(2 * u, m)) < 1e-10 * abs(dE2(2 * u, m))


def test_painleve_crosscheck():
    a, b, g, d = 0.3, -0.2, 0.15, 0.1
    spec = FlowSpec("EPVI", {"nu": pvi_nu_from_parameters(a, b, g, d)}, tau0=0.1 + 1.0j, direction=0.05 + 0.03j)
    tr = integrate(spec, [0.23 + 0.31j, 0.1 - 0.2j], 1.0, rtol=1e-10, atol=1e-12)
    rep = pvi_crosscheck(tr, a, b, g, d)
    assert rep.max_residual < 1e-5
    assert rep.inversion_error < 1e-8
    assert set(rep.rows[0]) == {"tau", "u", "du_dtau", "X", "t", "pvi_residual"}


def test_other_dictionary_readings_fail():
    a, b, g, d = 0.3, -0.2, 0.15, 0.1
    worst = {}
    for reading in PVI_READINGS:
        spec = FlowSpec("EPVI", {"nu": pvi_nu_from_parameters(a, b, g, d, reading)}, tau0=0.1 + 1.0j,
                        direction=0.05 + 0.03j)
        tr = integrate(spec, [0.23 + 0.31j, 0.1 - 0.2j], 1.0, rtol=1e-10, atol=1e-12)
        worst[reading] = pvi_crosscheck(tr, a, b, g, d, reading=reading).max_residual
    assert worst["scaled"] < 1e-5
    assert worst["literal"] > 1e-2 and worst["squared"] > 1e-2


def test_tau_inversion_roundtrip():
    tau = 0.13 + 0.97j
    t = elliptic_to_rational(0.2 + 0.1j, ModularPoint(tau))[1]
    assert abs(tau_from_t(t, tau + 0.01) - tau) < 1e-10


def test_order_and_kappa_limit():
    spec = FlowSpec("ZVG", {"nu_prime": [0.3, 0.1j, -0.2]}, tau0=TAU)
    _, errs, slope = order_study(spec, [0.5, 0.3 + 0.2j, -0.4], 1.0)
    assert 4.5 < slope < 5.7 and errs[-1] < errs[0]
    _, kerrs = kappa_limit_study(np.array([0.5, 0.3 + 0.2j, -0.4]), [0.3, 0.1j, -0.2], TAU)
    assert kerrs[2] < kerrs[1] < kerrs[0] and kerrs[2] < 2e-3


def test_tau_path_floor_and_kind_validation():
    with pytest.raises(DomainError):
        FlowSpec("XYZ")
    with pytest.raises(DomainError):
        FlowSpec("NAZVG", {"nu_prime": np.zeros(3)}, kappa=0)
    spec = FlowSpec("NAZVG", {"nu_prime": np.zeros(3)}, tau0=0.5j, direction=-1j)
    with pytest.raises(DomainError):
        integrate(spec, [0.1, 0.2, 0.3], 1.0)


def test_records_are_reproducible():
    spec = FlowSpec("CI", {"nu": [0.3, 0.2, 0.1j, 0.4]}, tau0=TAU)
    a = integrate(spec, [0.23 + 0.31j, 0.1 - 0.2j], 0.5).records()
    b = integrate(spec, [0.23 + 0.31j, 0.1 - 0.2j], 0.5).records()
    assert a == b and len(a) > 2
