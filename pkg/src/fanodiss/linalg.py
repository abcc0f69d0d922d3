"""Sparse factorizations specialised to Fano-model superoperators.

Vec pairs (k, k') with both indices in the continuum couple only to pairs
that carry a ground or discrete index, so that block of any generator (and of
z - A) is diagonal. Eliminating it exactly leaves a dense Schur complement on
the remaining "hub" pairs, which LAPACK factorizes far faster than SuperLU
handles the full system.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularSystemError(RuntimeError):
    pass


# below this size the plain sparse LU is already fast
_SCHUR_MIN_DIM = 4000


def hub_mask(d: int, n_hub: int) -> np.ndarray:
    """True for vec pairs (l, m) with l < n_hub or m < n_hub."""
    l, m = np.divmod(np.arange(d * d), d)
    return (l < n_hub) | (m < n_hub)


class SchurFactor:
    def __init__(self, M: sp.csr_matrix, hubs: np.ndarray):
        M = sp.csr_matrix(M)
        self.h = np.flatnonzero(hubs)
        self.n = np.flatnonzero(~hubs)
        Mh, Mn = M[self.h], M[self.n]
        Ann = Mn[:, self.n]
        Ann.eliminate_zeros()
        D = Ann.diagonal()
        if Ann.nnz > np.count_nonzero(D):
            raise ValueError("non-hub block is not diagonal")
        if np.any(D == 0):
            raise SingularSystemError("zero pivot in the continuum-continuum block")
        self.D = D
        self.Ahn = Mh[:, self.n].tocsr()
        self.Anh = Mn[:, self.h].tocsr()
        S = Mh[:, self.h].toarray()
        S -= (self.Ahn @ sp.diags(1.0 / D) @ self.Anh).toarray()
        lu, piv = sla.lu_factor(S, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if pivots.min() <= 1e-14 * max(pivots.max(), 1e-300):
            raise SingularSystemError("Schur complement is numerically singular")
        self._lu = (lu, piv)
        self.shape = M.shape

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=complex)
        col = b.ndim == 1
        if col:
            b = b[:, None]
        bn = b[self.n]
        Dinv = (1.0 / self.D)[:, None]
        xh = sla.lu_solve(self._lu, b[self.h] - self.Ahn @ (bn * Dinv), check_finite=False)
        x = np.empty_like(b)
        x[self.h] = xh
        x[self.n] = (bn - self.Anh @ xh) * Dinv
        return x[:, 0] if col else x

    def solve_hubs(self, bh: np.ndarray) -> np.ndarray:
        """Hub components of the solution for a right-hand side supported on hubs."""
        return sla.lu_solve(self._lu, np.asarray(bh, dtype=complex), check_finite=False)


class SparseFactor:
    def __init__(self, M):
        try:
            self._lu = spla.splu(sp.csc_matrix(M), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:  # "Factor is exactly singular"
            raise SingularSystemError(str(exc)) from exc
        self.shape = M.shape

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=complex)
        return self._lu.solve(b)


def factorize(M, hubs: np.ndarray | None = None):
    """LU factorization with a ``solve`` method accepting 1-D or 2-D right-hand sides."""
    if hubs is not None and M.shape[0] >= _SCHUR_MIN_DIM and hubs.sum() < M.shape[0]:
        try:
            return SchurFactor(M, hubs)
        except ValueError:
            pass
    return SparseFactor(M)
