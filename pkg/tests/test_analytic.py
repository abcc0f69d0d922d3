import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fanodiss.analytic import (PROCESSES, LineshapeSpec, ProfileSpec, effective_eta,
                               emission_cross_section_analytic, excited_population_analytic,
                               excited_population_wideband, extinction_coefficient,
                               extract_parameters, fano_h, lorentzian, prefactor_constants,
                               profile_f, table1_row)
from fanodiss.model import SpecError, SystemSpec, reduced_parameters, spec_for_profile

qs = st.floats(-6, 6, allow_nan=False)
epss = st.floats(-50, 50, allow_nan=False)


def test_fano_h_zero_and_peak():
    assert fano_h(-2.0, 2.0) == 0
    assert fano_h(0.5, 2.0) == pytest.approx(5.0)  # 1 + q^2 at eps = 1/q
    assert fano_h(1e6, 3.0) == pytest.approx(1.0, rel=1e-5)


def test_profile_f_special_cases():
    eps = np.linspace(-5, 5, 11)
    assert np.allclose(profile_f(eps, 1.5, 0.0, 1), fano_h(eps, 1.5))
    assert np.allclose(profile_f(eps, 1.5, 0.4, 0), 0.4 * 2.5 / (eps**2 + 1))
    assert profile_f(0.0, 0.0, 1.0, 1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        profile_f(eps, 1.0, 0.1, 0.5)


@given(eps=epss, q=st.floats(-1, 6), eta=st.floats(0, 5))
def test_profile_nonnegative(eps, q, eta):
    assert profile_f(eps, q, eta, 1) >= 0


@given(eps=epss, q=qs)
def test_h_bounded_by_peak(eps, q):
    assert fano_h(eps, q) <= 1 + q * q + 1e-9


@given(eps=epss, q=st.floats(0, 6), eta=st.floats(0.01, 3))
def test_effective_eta_reproduces_wideband_form(eps, q, eta):
    spec = spec_for_profile(q, eta)
    rp = reduced_parameters(spec)
    wL = float(rp.omega_of(eps))
    B_abs = prefactor_constants(spec)[0]
    lhs = B_abs * profile_f(eps, q, effective_eta(q, eta), 1)
    assert lhs == pytest.approx(float(excited_population_wideband(spec, wL)), rel=1e-9)


def test_population_analytic_uses_printed_weight():
    spec = spec_for_profile(2.0, 0.5)
    rp = reduced_parameters(spec)
    eps = np.array([-3.0, 0.0, 1.0])
    B_abs = prefactor_constants(spec)[0]
    got = excited_population_analytic(spec, rp.omega_of(eps))
    assert np.allclose(got, B_abs * (fano_h(eps, 2.0) + 0.5 * 3.0 / (eps**2 + 1)))


def test_extinction_ignores_continuum_relaxation():
    a = spec_for_profile(1.0, 0.1)
    b = spec_for_profile(1.0, 2.0)
    w = np.linspace(15, 25, 7)
    assert np.allclose(extinction_coefficient(a, w), extinction_coefficient(b, w))
    rp = reduced_parameters(a)
    assert extinction_coefficient(a, rp.omega_of(-1.0)) == pytest.approx(0.0, abs=1e-15)
    # hbar omega_L factor
    assert extinction_coefficient(a, 2 * rp.omega_of(50.0)) > extinction_coefficient(a, rp.omega_of(50.0))


def test_prefactor_constants():
    spec = SystemSpec()
    B_abs, B_ray, B_ram = prefactor_constants(spec)
    s0, s1 = spec.sqrtn_mu_nu_c
    assert B_abs == pytest.approx(math.pi * s0**2 * spec.F**2 / (2 * sum(spec.Gamma_c_nu)))
    assert B_ray / B_abs == pytest.approx(math.pi * s0**2)
    assert B_ram / B_abs == pytest.approx(math.pi * s1**2)
    with pytest.raises(SpecError):
        prefactor_constants(spec.replace(Gamma_c_nu=(0.0, 0.0)))


@given(seed=st.integers(0, 10**6))
@settings(max_examples=40)
def test_extraction_round_trip(seed):
    rng = np.random.default_rng(seed)
    spec = SystemSpec(sqrtn_V=rng.uniform(0.1, 2), mu_nu_e=tuple(rng.uniform(0.1, 2, 2)),
                      sqrtn_mu_nu_c=tuple(rng.uniform(0.1, 2, 2)),
                      Gamma_c_nu=tuple(rng.uniform(0.01, 1, 2)), F=rng.uniform(1e-5, 1e-2))
    rp = reduced_parameters(spec)
    ram = table1_row("raman", spec)[0]
    got = extract_parameters(*prefactor_constants(spec), rp.gamma, rp.q, ram.eta_w, spec.F)
    want = (sum(spec.Gamma_c_nu), spec.sqrtn_V, spec.sqrtn_mu_nu_c[0], spec.mu_nu_e[0],
            spec.sqrtn_mu_nu_c[1], spec.mu_nu_e[1])
    assert np.allclose(got.astuple(), want, rtol=1e-10, atol=0)


def test_extraction_rejects_nonpositive():
    with pytest.raises(ValueError):
        extract_parameters(1, 1, 1, 1, -1, 1, 1)


@pytest.mark.parametrize("process", PROCESSES)
def test_table1_rows(process):
    spec = SystemSpec(gamma_e_nu=(0.2, 0.3))
    prof, line = table1_row(process, spec)
    rp = reduced_parameters(spec)
    assert isinstance(prof, ProfileSpec)
    if process == "populations":
        assert line is None and prof.B == prefactor_constants(spec)[0]
        return
    assert isinstance(line, LineshapeSpec)
    s = rp.gamma / (rp.gamma + 0.2)
    expected = {
        "rayleigh": (1, 20.0, spec.laser_delta, True),
        "raman": (1, 16.0, spec.Gamma_vib / 2, True),
        "fluor_discrete_0": (0, 20.0, rp.gamma + 0.2, False),
        "fluor_discrete_1": (0, 16.0, rp.gamma + 0.3 + spec.Gamma_vib / 2, False),
        "fluor_continuum_0": (1, 20.0, 1.0 + 0.4, True),
        "fluor_continuum_1": (1, 16.0, 1.0 + 0.5 + spec.Gamma_vib / 2, True),
    }[process]
    assert prof.alpha == expected[0]
    assert line.center(20.0) == pytest.approx(expected[1])
    assert line.half_width == pytest.approx(expected[2])
    assert line.follows_laser is expected[3]
    if process.startswith("fluor"):
        assert prof.eps_scale == pytest.approx(s)
        assert prof.q_eff == pytest.approx(rp.q * s)


def test_table1_weights():
    spec = SystemSpec(gamma_e_nu=(0.2, 0.0))
    rp = reduced_parameters(spec)
    s = rp.gamma / (rp.gamma + 0.2)
    ray = table1_row("rayleigh", spec)[0]
    ram = table1_row("raman", spec)[0]
    assert ray.eta_w == pytest.approx(1.0 / spec.sqrtn_mu_nu_c[0] ** 2 * rp.eta)
    assert ram.eta_w == pytest.approx(0.25 / spec.sqrtn_mu_nu_c[1] ** 2 * rp.eta)
    assert table1_row("fluor_discrete_0", spec)[0].eta_w == pytest.approx(s**2 * rp.eta)
    assert table1_row("fluor_continuum_0", spec)[0].eta_w == pytest.approx(
        0.04 / (rp.gamma + 0.2) ** 2 / (rp.q**2 + 1))
    # no pure dephasing: the continuum fluorescence weight vanishes
    assert table1_row("fluor_continuum_0", SystemSpec())[0].eta_w == 0


def test_table1_errors():
    with pytest.raises(ValueError):
        table1_row("phosphorescence", SystemSpec())
    one = SystemSpec(E_nu=(0.0,), mu_nu_e=(1.0,), sqrtn_mu_nu_c=(0.5,), Gamma_c_nu=(0.5,),
                     gamma_e_nu=(0.0,), gamma_k_nu=(0.0,))
    with pytest.raises(SpecError):
        table1_row("raman", one)


def test_profile_spec_validation():
    with pytest.raises(ValueError):
        ProfileSpec(2, 0.1, 1.0)
    with pytest.raises(ValueError):
        ProfileSpec(1, 0.1, 1.0, eps_scale=1.5)


def test_cross_section_integrates_to_profile():
    spec = SystemSpec()
    rp = reduced_parameters(spec)
    wL = float(rp.omega_of(0.7))
    ram = table1_row("raman", spec)[0]
    c = wL - spec.omega_vib
    w = spec.Gamma_vib / 2
    x = c + w * np.tan(np.linspace(-1, 1, 400001) * math.atan(2000))
    area = np.trapezoid(emission_cross_section_analytic("raman", spec, x, wL, prefactor=False), x)
    expect = ram.B * ram(0.7) * (1 - 2 / math.pi * math.atan(1 / 2000))
    assert area == pytest.approx(expect, rel=1e-6)
    with pytest.raises(ValueError):
        emission_cross_section_analytic("fluor_discrete_0", spec, 20.0, wL)
    with pytest.raises(ValueError):
        emission_cross_section_analytic("populations", spec, 20.0, wL)


def test_lorentzian_normalized():
    x = np.linspace(-2000, 2000, 400001)
    assert np.trapezoid(lorentzian(x, 0.3, 0.7), x) == pytest.approx(1.0, abs=1e-3)
