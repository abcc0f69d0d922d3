import numpy as np
import pytest

from fanodiss.model import SystemSpec, discretize, spec_for_profile


@pytest.fixture
def small_model():
    return discretize(SystemSpec(), 20.0, 21)


@pytest.fixture
def profile_model():
    """Wideband-ish model with q=1, eta=0.25 on a modest grid."""
    spec = spec_for_profile(1.0, 0.25, F=1e-4)
    return discretize(spec, 20.0, 101)


def random_spec(rng, n_nu=2, dephasing=True):
    E_nu = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 5.0, n_nu - 1))])
    deph = (lambda n: tuple(rng.uniform(0, 0.3, n))) if dephasing else (lambda n: (0.0,) * n)
    return SystemSpec(
        E_nu=tuple(E_nu),
        E_e=float(rng.uniform(10, 30)),
        sqrtn_V=float(rng.uniform(0.2, 1.0)),
        mu_nu_e=tuple(rng.uniform(-1, 1, n_nu)),
        sqrtn_mu_nu_c=tuple(rng.uniform(-1, 1, n_nu)),
        Gamma_c_nu=tuple(rng.uniform(0, 1, n_nu)),
        Gamma_vib=float(rng.uniform(0, 0.1)),
        gamma_e_nu=deph(n_nu),
        gamma_k_nu=deph(n_nu),
        gamma_k_e=deph(1)[0],
        F=float(rng.uniform(1e-3, 0.5)),
    )


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if not VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(VERDICTS, key=lambda k: (int(str(k).rstrip("s")), str(k))):
        ok, detail = VERDICTS[key]
        label = f"criterion {key}" if not str(key).endswith("s") else f"supplement {key[:-1]}"
        tr.write_line(f"{label}: {'PASS' if ok else 'FAIL'} - {detail}")
