"""Projected many-body Hamiltonian over a sampled determinant subspace.

The Hamiltonian splits by spin:

    H = H_same^alpha + H_same^beta + sum_pqrs (pq|rs) E^alpha_pq E^beta_rs

Same-spin blocks act on one spin-string index of the CI matrix psi[U x U],
and their matrix elements between in-space strings follow the Slater-Condon
rules directly (a matrix element between two members of the space is exact
regardless of where intermediate excitations would land, so no operator
factorization is used for same-spin double excitations).

The opposite-spin channel couples only through single excitations and number
operators, all of which stay inside U x U, so it is evaluated exactly from
in-space single-excitation tables T_pq[i, j] = <u_i| a+_p a_q |u_j> via

    sigma += sum_pq,rs (pq|rs) T_pq psi T_rs^T

contracted in three steps (beta half-transform, ERI coupling, alpha gather)
with beta-side chunking to bound memory.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
import scipy.sparse as sp

from ..active_space import ActiveHamiltonian
from .strings import SubspaceBasis

_CHUNK_BUDGET_DOUBLES = 16_000_000  # per intermediate array in the cross channel


def _single_sign(word: int, hole: int, particle: int) -> int:
    """Fermionic sign of a+_particle a_hole |word> (hole occupied, particle
    empty in word \\ {hole})."""
    below_hole = (word & ((1 << hole) - 1)).bit_count()
    stripped = word & ~(1 << hole)
    below_particle = (stripped & ((1 << particle) - 1)).bit_count()
    return -1 if (below_hole + below_particle) & 1 else 1


class ExcitationTables:
    """Sparse in-space tables of <u_i| a+_p a_q |u_j> over one string list.

    Carries three views of the same entry list (rows, cols, pairs, signs):
    a stacked CSR for the beta half-transform, a gather CSR for the alpha
    side, and the raw arrays (used by RDMs and dense assembly). Also owns the
    same-spin Slater-Condon structure reused across one-body rebuilds.
    """

    def __init__(self, basis: SubspaceBasis):
        self.basis = basis
        n_orb = basis.n_orb
        self.n_pairs = n_orb * n_orb
        strings = [int(w) for w in basis.strings]
        index = basis.index

        rows, cols, pairs, signs = [], [], [], []
        for j, w in enumerate(strings):
            occ = [p for p in range(n_orb) if (w >> p) & 1]
            vir = [p for p in range(n_orb) if not (w >> p) & 1]
            for q in occ:
                rows.append(j)
                cols.append(j)
                pairs.append(q * n_orb + q)
                signs.append(1)
                stripped = w & ~(1 << q)
                for p in vir:
                    i = index.get(stripped | (1 << p))
                    if i is not None:
                        rows.append(i)
                        cols.append(j)
                        pairs.append(p * n_orb + q)
                        signs.append(_single_sign(w, q, p))
        self.rows = np.array(rows, dtype=np.int64)
        self.cols = np.array(cols, dtype=np.int64)
        self.pairs = np.array(pairs, dtype=np.int64)
        self.signs = np.array(signs, dtype=np.float64)

        n = basis.n_strings
        # beta half-transform: row (i * n_pairs + k), col j
        self.stack = sp.csr_matrix(
            (self.signs, (self.rows * self.n_pairs + self.pairs, self.cols)),
            shape=(n * self.n_pairs, n),
        )
        # alpha gather: row i, col (k * n + j)
        self.gather = sp.csr_matrix(
            (self.signs, (self.rows, self.pairs * n + self.cols)),
            shape=(n, self.n_pairs * n),
        )
        self.occ_mat = basis.occupation_matrix()
        self._same_2e_key: int | None = None
        self._same_2e: tuple | None = None

    # ---------------------------------------------------------------- same spin
    def _build_same_2e(self, eri: np.ndarray):
        """Two-electron same-spin structure: doubles, the 2e part of singles,
        and the 2e diagonal — all independent of the one-body matrix."""
        basis = self.basis
        n_orb = basis.n_orb
        strings = [int(w) for w in basis.strings]
        index = basis.index

        s_rows, s_cols, s_holes, s_parts, s_signs, s_data2e = [], [], [], [], [], []
        d_rows, d_cols, d_data = [], [], []
        diag2e = np.zeros(basis.n_strings)
        for j, w in enumerate(strings):
            occ = [p for p in range(n_orb) if (w >> p) & 1]
            vir = [p for p in range(n_orb) if not (w >> p) & 1]
            occ_arr = np.array(occ, dtype=np.intp)
            if len(occ):
                coul = eri[np.ix_(occ_arr, occ_arr, occ_arr, occ_arr)]
                diag2e[j] = 0.5 * (
                    np.einsum("ppqq->", coul) - np.einsum("pqqp->", coul)
                )
            for i_h in occ:
                stripped = w & ~(1 << i_h)
                spectators = occ_arr[occ_arr != i_h]
                for a in vir:
                    r = index.get(stripped | (1 << a))
                    if r is None:
                        continue
                    sgn = _single_sign(w, i_h, a)
                    val2e = float(
                        eri[a, i_h, spectators, spectators].sum()
                        - eri[a, spectators, spectators, i_h].sum()
                    )
                    s_rows.append(r)
                    s_cols.append(j)
                    s_holes.append(i_h)
                    s_parts.append(a)
                    s_signs.append(sgn)
                    s_data2e.append(sgn * val2e)
            for i_h, j_h in combinations(occ, 2):
                stripped = w & ~(1 << i_h) & ~(1 << j_h)
                for a, b in combinations(vir, 2):
                    r = index.get(stripped | (1 << a) | (1 << b))
                    if r is None:
                        continue
                    s1 = _single_sign(w, i_h, a)
                    mid = (w & ~(1 << i_h)) | (1 << a)
                    s2 = _single_sign(mid, j_h, b)
                    d_rows.append(r)
                    d_cols.append(j)
                    d_data.append(s1 * s2 * (eri[a, i_h, b, j_h] - eri[a, j_h, b, i_h]))

        n = basis.n_strings
        fixed = sp.csr_matrix(
            (
                np.concatenate([s_data2e, d_data, diag2e]),
                (
                    np.concatenate([s_rows, d_rows, np.arange(n)]),
                    np.concatenate([s_cols, d_cols, np.arange(n)]),
                ),
            ),
            shape=(n, n),
        )
        self._same_2e = (
            fixed,
            np.array(s_rows, dtype=np.int64),
            np.array(s_cols, dtype=np.int64),
            np.array(s_parts, dtype=np.int64),
            np.array(s_holes, dtype=np.int64),
            np.array(s_signs, dtype=np.float64),
        )
        self._same_2e_key = id(eri)

    def same_spin_matrix(self, h_eff: np.ndarray, eri: np.ndarray) -> sp.csr_matrix:
        """CSR matrix of <u_r| H_same |u_c> (one- plus two-electron parts)."""
        if self._same_2e is None or self._same_2e_key != id(eri):
            self._build_same_2e(eri)
        fixed, s_rows, s_cols, s_parts, s_holes, s_signs = self._same_2e
        n = self.basis.n_strings
        one_body = sp.csr_matrix(
            (
                np.concatenate(
                    [s_signs * h_eff[s_parts, s_holes], self.occ_mat @ h_eff.diagonal()]
                ),
                (
                    np.concatenate([s_rows, np.arange(n)]),
                    np.concatenate([s_cols, np.arange(n)]),
                ),
            ),
            shape=(n, n),
        )
        return (fixed + one_body).tocsr()

    def dense_pair_tensor(self) -> np.ndarray:
        """T[k, i, j] = <u_i| E_k |u_j> as a dense array (small spaces only)."""
        n = self.basis.n_strings
        t = np.zeros((self.n_pairs, n, n))
        t[self.pairs, self.rows, self.cols] += self.signs
        return t


class ProjectedHamiltonian:
    """Matrix-free H restricted to a SubspaceBasis, for one ActiveHamiltonian."""

    def __init__(
        self,
        active: ActiveHamiltonian,
        basis: SubspaceBasis,
        tables: ExcitationTables | None = None,
    ):
        if tables is not None and tables.basis is not basis:
            raise ValueError("excitation tables built for a different subspace")
        self.active = active
        self.basis = basis
        self.tables = tables if tables is not None else ExcitationTables(basis)
        self.n_strings = basis.n_strings
        self.d = basis.d
        self.e_frozen = active.e_frozen
        self.h_same = self.tables.same_spin_matrix(active.h_eff, active.eri)
        n_orb = basis.n_orb
        self.v2 = np.ascontiguousarray(active.eri.reshape(n_orb**2, n_orb**2))
        occ = self.tables.occ_mat
        vd = np.einsum("pprr->pr", active.eri)
        self._diag = (
            self.h_same.diagonal()[:, None]
            + self.h_same.diagonal()[None, :]
            + occ @ vd @ occ.T
        ).ravel()
        per_chunk = max(1, self.tables.n_pairs * self.n_strings)
        self._chunk = max(1, min(self.n_strings, _CHUNK_BUDGET_DOUBLES // per_chunk))

    def diagonal(self) -> np.ndarray:
        """Electronic diagonal (frozen-core constant not included)."""
        return self._diag

    def matvec(self, x: np.ndarray) -> np.ndarray:
        n = self.n_strings
        psi = x.reshape(n, n)
        sigma = self.h_same @ psi
        sigma += (self.h_same @ psi.T).T
        n_pairs = self.tables.n_pairs
        stack, gather = self.tables.stack, self.tables.gather
        psi_t = np.ascontiguousarray(psi.T)
        for j0 in range(0, n, self._chunk):
            j1 = min(j0 + self._chunk, n)
            half = stack[j0 * n_pairs : j1 * n_pairs] @ psi_t
            half = half.reshape(j1 - j0, n_pairs, n)
            coupled = np.matmul(self.v2, half)
            sigma[:, j0:j1] += gather @ np.ascontiguousarray(
                coupled.transpose(1, 2, 0)
            ).reshape(n_pairs * n, j1 - j0)
        return sigma.ravel()

    def to_dense(self) -> np.ndarray:
        """Explicit d x d matrix (electronic part); small subspaces only."""
        n = self.n_strings
        hs = self.h_same.toarray()
        eye = np.eye(n)
        dense = np.kron(hs, eye) + np.kron(eye, hs)
        t = self.tables.dense_pair_tensor()
        cross = np.einsum("kl,kac,lbd->abcd", self.v2, t, t, optimize=True)
        return dense + cross.reshape(self.d, self.d)

    def one_rdm_spin(self, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Spin-resolved one-particle RDMs (gamma_alpha, gamma_beta)."""
        n = self.n_strings
        n_orb = self.basis.n_orb
        m = psi.reshape(n, n)
        t = self.tables
        pa = m @ m.T
        pb = m.T @ m
        ga = np.bincount(
            t.pairs, weights=t.signs * pa[t.rows, t.cols], minlength=t.n_pairs
        ).reshape(n_orb, n_orb)
        gb = np.bincount(
            t.pairs, weights=t.signs * pb[t.rows, t.cols], minlength=t.n_pairs
        ).reshape(n_orb, n_orb)
        return ga, gb

    def one_rdm(self, psi: np.ndarray) -> np.ndarray:
        """Spin-summed one-particle RDM; trace = N_alpha + N_beta."""
        ga, gb = self.one_rdm_spin(psi)
        return ga + gb


def occupation_numbers(
    psi: np.ndarray, ham: ProjectedHamiltonian
) -> tuple[np.ndarray, np.ndarray]:
    """Per-orbital spin occupations <n_p_sigma> of a subspace CI vector."""
    ga, gb = ham.one_rdm_spin(psi)
    return ga.diagonal().copy(), gb.diagonal().copy()
