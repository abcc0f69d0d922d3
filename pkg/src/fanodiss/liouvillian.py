"""RWA Liouvillian of the dissipative Fano model on vectorized density matrices.

Vec convention: rho[l, m] -> index l*d + m (numpy C order), so that the map
rho -> L @ rho @ R becomes kron(L, R.T).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import hub_mask
from .model import DiscretizedModel


@dataclass(frozen=True, eq=False)
class Superoperator:
    matrix: sp.csr_matrix
    d: int
    # ground + discrete states; pairs of two continuum states form a diagonal block
    n_hub: int = 0

    @property
    def dim(self) -> int:
        return self.d * self.d

    def index(self, l: int, m: int) -> int:
        return l * self.d + m

    def pair(self, i: int) -> tuple[int, int]:
        return divmod(int(i), self.d)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Act on a d x d matrix and return the d x d result."""
        return (self.matrix @ np.asarray(rho).reshape(-1)).reshape(self.d, self.d)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator((self.matrix + other.matrix).tocsr(), self.d,
                             max(self.n_hub, other.n_hub))

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator((self.matrix - other.matrix).tocsr(), self.d,
                             max(self.n_hub, other.n_hub))

    def hubs(self) -> np.ndarray | None:
        return hub_mask(self.d, self.n_hub) if self.n_hub else None

    def todense(self) -> np.ndarray:
        return self.matrix.toarray()


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1)


def unvec(x: np.ndarray, d: int | None = None) -> np.ndarray:
    x = np.asarray(x)
    if d is None:
        d = int(round(np.sqrt(x.size)))
    return x.reshape(d, d)


def _csr(rows, cols, vals, n) -> sp.csr_matrix:
    m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def field_coupling(model: DiscretizedModel, F: float) -> sp.csr_matrix:
    """Hermitian RWA field term: (F/2) mu between each ground level and e, k."""
    n = model.n_nu
    d = model.d
    rows, cols, vals = [], [], []
    exc = np.arange(n, d)
    for nu in range(n):
        amp = 0.5 * F * model.mu[nu]
        keep = amp != 0
        rows += [np.full(keep.sum(), nu), exc[keep]]
        cols += [exc[keep], np.full(keep.sum(), nu)]
        vals += [amp[keep], np.conj(amp[keep])]
    if not rows:
        return sp.csr_matrix((d, d), dtype=complex)
    return _csr(np.concatenate(rows), np.concatenate(cols),
                np.concatenate(vals).astype(complex), d)


def build_rwa_hamiltonian(model: DiscretizedModel, F: float, omega_L: float) -> sp.csr_matrix:
    """d x d rotating-frame Hamiltonian with counter-rotating terms dropped."""
    n, d = model.n_nu, model.d
    diag = model.energies.astype(complex)
    diag[n:] -= omega_L
    e = model.e_index
    ks = np.arange(n + 1, d)
    rows = np.concatenate([np.arange(d), np.full(ks.size, e), ks])
    cols = np.concatenate([np.arange(d), ks, np.full(ks.size, e)])
    vals = np.concatenate([diag, np.full(2 * ks.size, model.v, dtype=complex)])
    H = _csr(rows, cols, vals, d)
    if F != 0:
        H = (H + field_coupling(model, F)).tocsr()
    return H


def hamiltonian_superop(H: sp.spmatrix) -> Superoperator:
    """-i [H, .] in the vec convention."""
    d = H.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    M = -1j * (sp.kron(H, eye, format="csr") - sp.kron(eye, H.T, format="csr"))
    M = M.tocsr()
    M.sum_duplicates()
    M.sort_indices()
    return Superoperator(M, d)


def _decay_superop(d: int, decay: np.ndarray, transfers) -> Superoperator:
    """Lindblad terms for jumps |target><source| with nonnegative rates.

    ``decay[l]`` is the total outgoing rate of state l; ``transfers`` yields
    (source, target, rate) triples.
    """
    decay = np.asarray(decay, dtype=float)
    diag = -0.5 * (decay[:, None] + decay[None, :]).reshape(-1)
    idx = np.arange(d * d)
    keep = diag != 0
    rows, cols, vals = [idx[keep]], [idx[keep]], [diag[keep]]
    for src, dst, rate in transfers:
        if rate < 0:
            raise ValueError("Lindblad rates must be nonnegative")
        if rate == 0:
            continue
        src = np.atleast_1d(src)
        rows.append(np.full(src.size, dst * d + dst))
        cols.append(src * d + src)
        vals.append(np.full(src.size, float(rate)))
    M = _csr(np.concatenate(rows), np.concatenate(cols),
             np.concatenate(vals).astype(complex), d * d)
    return Superoperator(M, d)


def build_dissipator_continuum(model: DiscretizedModel) -> Superoperator:
    """Every continuum state decays to every nu at the per-state rate Gamma_c_nu."""
    rates = np.asarray(model.spec.Gamma_c_nu, dtype=float)
    if np.any(rates < 0):
        raise ValueError("Lindblad rates must be nonnegative")
    decay = np.zeros(model.d)
    decay[model.k_slice] = rates.sum()
    ks = np.arange(model.d)[model.k_slice]
    return _decay_superop(model.d, decay, ((ks, nu, g) for nu, g in enumerate(rates)))


def build_dissipator_vib(model: DiscretizedModel) -> Superoperator:
    """Relaxation nu -> 0 at rate Gamma_vib for every nu != 0."""
    rate = float(model.spec.Gamma_vib)
    if rate < 0:
        raise ValueError("Lindblad rates must be nonnegative")
    decay = np.zeros(model.d)
    decay[1:model.n_nu] = rate
    return _decay_superop(model.d, decay, ((nu, 0, rate) for nu in range(1, model.n_nu)))


def dephasing_rates(model: DiscretizedModel) -> np.ndarray:
    """Symmetric d x d table of pure dephasing rates gamma_lm."""
    s, n, d = model.spec, model.n_nu, model.d
    g = np.zeros((d, d))
    e, ks = model.e_index, model.k_slice
    g[e, :n] = s.gamma_e_nu
    g[ks, :n] = np.asarray(s.gamma_k_nu)[None, :]
    g[ks, e] = s.gamma_k_e
    return g + g.T


def build_dephasing(model: DiscretizedModel) -> Superoperator:
    g = dephasing_rates(model)
    if np.any(g < 0):
        raise ValueError("dephasing rates must be nonnegative")
    diag = -g.reshape(-1).astype(complex)
    M = sp.diags(diag, format="csr")
    M.eliminate_zeros()
    return Superoperator(M, model.d)


def build_dissipator(model: DiscretizedModel) -> Superoperator:
    return build_dissipator_continuum(model) + build_dissipator_vib(model) + build_dephasing(model)


def assemble_liouvillian(model: DiscretizedModel, F: float, omega_L: float) -> Superoperator:
    """Full time-independent generator: -i[H_RWA, .] plus all dissipators."""
    H = build_rwa_hamiltonian(model, F, omega_L)
    A = hamiltonian_superop(H) + build_dissipator(model)
    return Superoperator(A.matrix, A.d, model.n_nu + 1)


def split_liouvillian(model: DiscretizedModel, F: float, omega_L: float):
    """Return (A0, AF): field-free generator and the part linear in F."""
    A0 = assemble_liouvillian(model, 0.0, omega_L)
    AF = hamiltonian_superop(field_coupling(model, F))
    return A0, Superoperator(AF.matrix, AF.d, model.n_nu + 1)
