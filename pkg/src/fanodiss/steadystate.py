"""Stationary density matrices of the RWA Liouvillian."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .liouvillian import Superoperator, assemble_liouvillian, split_liouvillian
from .linalg import SingularSystemError, factorize, hub_mask
from .model import DiscretizedModel

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


class SteadyStateError(RuntimeError):
    pass


class DegenerateSteadyState(SteadyStateError):
    """The generator does not have a one-dimensional kernel."""


def trace_row(d: int, dtype=complex) -> sp.csr_matrix:
    diag = np.arange(d) * (d + 1)
    return sp.csr_matrix((np.ones(d, dtype=dtype), (np.zeros(d, dtype=int), diag)), shape=(1, d * d))


def _replace_row(M: sp.csr_matrix, row: int, new_row: sp.csr_matrix) -> sp.csr_matrix:
    parts = [M[:row], new_row, M[row + 1:]]
    return sp.vstack([p for p in parts if p.shape[0]], format="csc")


def _factorize(M, hubs=None):
    try:
        return factorize(M, hubs)
    except SingularSystemError as exc:
        raise DegenerateSteadyState(str(exc)) from exc


def solve_direct(A: Superoperator, check: bool = True) -> np.ndarray:
    """Kernel of A normalized to unit trace.

    The (0,0) population row is redundant under trace preservation; it is
    replaced by the trace functional and the resulting system solved by
    sparse LU.
    """
    d = A.d
    M = _replace_row(A.matrix, 0, trace_row(d))
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    x = _factorize(M, A.hubs()).solve(b)
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyState("non-finite steady-state solution")
    scale = spla.norm(A.matrix, np.inf)
    resid = np.abs(A.matrix @ x).max()
    if resid > 1e-10 * max(scale, 1.0):
        raise SteadyStateError(f"steady-state residual {resid:.3e} exceeds tolerance")
    rho = x.reshape(d, d)
    if check:
        check_physical(rho)
    return 0.5 * (rho + rho.conj().T)


def check_physical(rho: np.ndarray, hermitian_tol: float = HERMITIAN_TOL,
                   trace_tol: float = TRACE_TOL, psd_tol: float = PSD_TOL) -> None:
    herm = np.abs(rho - rho.conj().T).max()
    if herm > hermitian_tol:
        raise SteadyStateError(f"steady state not Hermitian (deviation {herm:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise SteadyStateError(f"steady state trace {tr} != 1")
    low = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if low < -psd_tol:
        raise SteadyStateError(f"steady state has negative eigenvalue {low:.3e}")


def kernel_dimension(A: Superoperator, rel_tol: float = 1e-9) -> int:
    """Numerical nullity from a dense SVD; small instances only."""
    if A.dim > 4000:
        raise ValueError("kernel_dimension is meant for dim <= 4000")
    s = np.linalg.svd(A.todense(), compute_uv=False)
    return int(np.sum(s <= rel_tol * s[0]))


def steady_state(model: DiscretizedModel, F: float | None = None, omega_L: float | None = None,
                 check: bool = True) -> np.ndarray:
    F = model.spec.F if F is None else F
    omega_L = model.spec.E_e if omega_L is None else omega_L
    return solve_direct(assemble_liouvillian(model, F, omega_L), check=check)


def excitation_count(model: DiscretizedModel) -> np.ndarray:
    """Number of excited indices in each vec pair (l, m): 0, 1 or 2."""
    exc = model.is_excited().astype(int)
    return (exc[:, None] + exc[None, :]).reshape(-1)


def solve_perturbative(model: DiscretizedModel, F: float, omega_L: float, orders: bool = False):
    """Steady state through second order in the field.

    rho1 lives on ground/excited coherences, rho2 on the ground-ground and
    excited-excited blocks (ground coherences included) with zero trace.
    """
    d = model.d
    A0, AF = split_liouvillian(model, F, omega_L)
    count = excitation_count(model)
    odd = np.flatnonzero(count == 1)
    even = np.flatnonzero(count != 1)

    rho0 = np.zeros((d, d), dtype=complex)
    rho0[0, 0] = 1.0
    A0m = A0.matrix

    src1 = -(AF.matrix @ rho0.reshape(-1))
    block1 = A0m[odd][:, odd]
    x1 = np.zeros(d * d, dtype=complex)
    x1[odd] = _factorize(block1).solve(src1[odd])

    src2 = -(AF.matrix @ x1)
    block2 = A0m[even][:, even].tocsr()
    # position of (0,0) inside the even block is 0; trace over block diagonal
    diag_pos = np.searchsorted(even, np.arange(d) * (d + 1))
    tr = sp.csr_matrix((np.ones(d, dtype=complex), (np.zeros(d, dtype=int), diag_pos)),
                       shape=(1, even.size))
    M = _replace_row(block2, 0, tr)
    rhs = src2[even].copy()
    rhs[0] = 0.0
    x2 = np.zeros(d * d, dtype=complex)
    x2[even] = _factorize(M, hub_mask(d, model.n_nu + 1)[even]).solve(rhs)

    rho1 = x1.reshape(d, d)
    rho2 = x2.reshape(d, d)
    rho2 = 0.5 * (rho2 + rho2.conj().T)
    if orders:
        return rho0, rho1, rho2
    return rho0 + rho1 + rho2


def excited_population(rho: np.ndarray, model: DiscretizedModel) -> float:
    """rho_ee + sum_k rho_kk."""
    sl = model.excited_slice
    return float(np.real(np.trace(rho[sl, sl])))


def linear_response_ratios(model: DiscretizedModel, omega_L: float, F_max: float,
                           n: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """N_excited / F^2 for ``n`` fields spread over one decade below ``F_max``."""
    Fs = F_max * np.logspace(-1.0, 0.0, n)
    ratios = np.array([excited_population(steady_state(model, F, omega_L), model) / F**2
                       for F in Fs])
    return Fs, ratios


def in_linear_response(model: DiscretizedModel, omega_L: float, F_max: float,
                       tol: float = 0.01) -> bool:
    """True when N_excited / F^2 varies by less than ``tol`` over the decade below F_max."""
    _, r = linear_response_ratios(model, omega_L, F_max)
    return bool(np.ptp(r) < tol * np.abs(r).max())
