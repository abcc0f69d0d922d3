import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fanodiss.analytic import fano_h, profile_f
from fanodiss.fitting import (MODEL_KINDS, FitError, _jacobian, fit_profile, model_error_study,
                              model_values, synth_profile)
from fanodiss.spectra import SpectrumSeries

EPS = np.linspace(-10, 10, 401)


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_jacobian_matches_finite_differences(kind):
    p = np.array([1.3, 0.2, 0.9, 1.7, 0.3])[: 4 + (kind != "standard")]
    J = _jacobian(kind, p, EPS)
    num = np.empty_like(J)
    for i in range(p.size):
        dp = np.zeros_like(p); dp[i] = 1e-6 * max(1.0, abs(p[i]))
        num[:, i] = (model_values(kind, p + dp, EPS) - model_values(kind, p - dp, EPS)) / (2 * dp[i])
    assert np.allclose(J, num, rtol=1e-6, atol=1e-7)


def test_model_values_match_profiles():
    assert np.allclose(model_values("standard", [2, 0, 1, 1.5], EPS), 2 * fano_h(EPS, 1.5))
    assert np.allclose(model_values("full", [1, 0, 1, 1.5, 0.3], EPS), profile_f(EPS, 1.5, 0.3, 1))
    assert np.allclose(model_values("shifted", [1, 0, 1, 1.5, 0.3], EPS), fano_h(EPS, 1.5) + 0.3)
    with pytest.raises(ValueError):
        model_values("cubic", [1, 0, 1, 1], EPS)


@given(q=st.floats(-6, 6).filter(lambda q: abs(q) > 0.2), C=st.floats(0.1, 10),
       x0=st.floats(-2, 2), g=st.floats(0.5, 2))
@settings(max_examples=25, deadline=None)
def test_standard_fit_recovers_exact_profile(q, C, x0, g):
    x, y = synth_profile(dict(q=q, C=C, x0=x0, gamma=g), EPS)
    rep = fit_profile((x, y), "standard")
    assert rep.converged
    assert rep.q_eff == pytest.approx(q, rel=1e-6)
    assert rep.params["gamma"] == pytest.approx(g, rel=1e-6)


def test_full_fit_recovers_eta():
    x, y = synth_profile(dict(q=4.0, eta=0.5), EPS)
    rep = fit_profile((x, y), "full")
    assert rep.q_eff == pytest.approx(4.0, rel=1e-8)
    assert rep.params["eta"] == pytest.approx(0.5, rel=1e-8)
    assert rep.sse < 1e-20


def test_shifted_fit_absorbs_constant():
    x, y = synth_profile(dict(q=2.0), EPS)
    rep = fit_profile((x, y + 0.7), "shifted")
    assert rep.q_eff == pytest.approx(2.0, rel=1e-6)
    assert rep.params["C"] * rep.params["D"] == pytest.approx(0.7, rel=1e-6)


def test_fit_accepts_spectrum_series():
    x, y = synth_profile(dict(q=1.0), EPS)
    rep = fit_profile(SpectrumSeries("profile", x, y), "standard")
    assert rep.q_eff == pytest.approx(1.0, rel=1e-6)


def test_fit_sorts_input():
    x, y = synth_profile(dict(q=1.0), EPS)
    rep = fit_profile((x[::-1], y[::-1]), "standard")
    assert rep.q_eff == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("data, exc", [
    ((np.arange(5.0), np.arange(5.0)), FitError),
    ((EPS, np.ones_like(EPS)), FitError),
])
def test_fit_errors(data, exc):
    with pytest.raises(exc):
        fit_profile(data, "standard")
    with pytest.raises(ValueError):
        fit_profile((EPS, EPS), "cubic")


def test_synth_is_seeded():
    a = synth_profile(dict(q=1.0), EPS, 0.01, seed=7)[1]
    b = synth_profile(dict(q=1.0), EPS, 0.01, seed=7)[1]
    c = synth_profile(dict(q=1.0), EPS, 0.01, seed=8)[1]
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    with pytest.raises(ValueError):
        synth_profile(dict(q=1.0), EPS[::-1])


def test_error_study_small():
    rows = model_error_study(2.0, [0.0, 0.5, 1.0], EPS)
    assert rows[0].relerr_standard < 1e-8 and rows[0].relerr_shifted < 1e-8
    std = [r.relerr_standard for r in rows]
    assert std == sorted(std)
    assert rows[-1].qeff_standard > 2.0
    with pytest.raises(ValueError):
        model_error_study(-1.0, [0.0])


def _draw(rng, kind):
    p = dict(C=rng.uniform(0.5, 3), x0=rng.uniform(-1, 1), gamma=rng.uniform(0.5, 1.5),
             q=rng.choice([-1, 1]) * rng.uniform(0.3, 5))
    vec = [p["C"], p["x0"], p["gamma"], p["q"]]
    if kind == "shifted":
        vec.append(rng.uniform(0, 1))
    elif kind == "full":
        vec.append(rng.uniform(0.05, 1.5))
    return np.array(vec)


def test_self_consistency_random_draws():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(100):
        kind = MODEL_KINDS[i % 3]
        p = _draw(rng, kind)
        if kind == "full" and p[3] < 0:
            p[3] = -p[3]  # the Lorentzian weight eta*(q+1) needs q > -1 to stay identifiable
        rep = fit_profile((EPS, model_values(kind, p, EPS)), kind)
        worst = max(worst, np.max(np.abs(rep.as_vector() / p - 1)))
    assert worst < 1e-6


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_scale_equivariance(kind):
    p = np.array([1.2, 0.3, 0.8, 2.5, 0.4])[: 4 + (kind != "standard")]
    y = model_values(kind, p, EPS)
    a = fit_profile((EPS, y), kind).params
    b = fit_profile((EPS, 7.5 * y), kind).params
    assert b["C"] == pytest.approx(7.5 * a["C"], rel=1e-8)
    for k in a:
        if k != "C":
            assert b[k] == pytest.approx(a[k], rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_shift_equivariance(kind):
    p = np.array([1.2, 0.3, 0.8, 2.5, 0.4])[: 4 + (kind != "standard")]
    y = model_values(kind, p, EPS)
    a = fit_profile((EPS, y), kind).params
    b = fit_profile((EPS + 1.75, y), kind).params
    assert b["x0"] == pytest.approx(a["x0"] + 1.75, abs=1e-8)
    for k in a:
        if k != "x0":
            assert b[k] == pytest.approx(a[k], rel=1e-8, abs=1e-10)


def test_exact_fano_self_fit():
    x, y = synth_profile(dict(q=3.0), EPS)
    rep = fit_profile((x, y), "standard")
    assert rep.q_eff == pytest.approx(3.0, rel=1e-10) and rep.sse < 1e-18


def test_standard_fit_of_modified_profile_is_biased():
    x, y = synth_profile(dict(q=4.0, eta=1.0), EPS)
    assert abs(fit_profile((x, y), "standard").q_eff - 4.0) / 4.0 > 0.1
