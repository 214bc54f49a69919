"""Independent brute-force references used by the test-suite.

Nothing here imports the Pauli algebra or the Slater-Condon code: operators
are built directly from occupation-number bit manipulations.
"""

import itertools

import numpy as np


def creation_matrix(p: int, n: int) -> np.ndarray:
    """a+_p on 2^n Fock space (0-based p); bit p of the index is orbital p, sign from lower bits."""
    dim = 1 << n
    m = np.zeros((dim, dim))
    for det in range(dim):
        if det >> p & 1:
            continue
        sign = (-1) ** bin(det & ((1 << p) - 1)).count("1")
        m[det | 1 << p, det] = sign
    return m


def dense_chem_eri(sp) -> np.ndarray:
    """Full (pq|rs) array from a SpatialIntegrals dict, applying the 8 symmetry images by hand."""
    n = sp.n_orb
    out = np.zeros((n, n, n, n))
    for (p, q, r, s), v in sp.eri.items():
        for a, b, c, d in {(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                           (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)}:
            out[a, b, c, d] = v
    return out


def spin_tensors(sp):
    """Interleaved spin-orbital h and physicist <pq|rs> arrays."""
    n = sp.n_orb
    chem = dense_chem_eri(sp)
    h = np.zeros((2 * n, 2 * n))
    g = np.zeros((2 * n,) * 4)
    for P, Q in itertools.product(range(2 * n), repeat=2):
        if P % 2 == Q % 2:
            h[P, Q] = sp.h_core[P // 2, Q // 2]
    for P, Q, R, S in itertools.product(range(2 * n), repeat=4):
        if P % 2 == R % 2 and Q % 2 == S % 2:
            g[P, Q, R, S] = chem[P // 2, R // 2, Q // 2, S // 2]
    return h, g


def fock_hamiltonian(sp) -> np.ndarray:
    """sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r on the full Fock space."""
    h, g = spin_tensors(sp)
    n = h.shape[0]
    cre = [creation_matrix(p, n) for p in range(n)]
    ann = [c.T for c in cre]
    H = np.zeros((1 << n, 1 << n))
    for p, q in itertools.product(range(n), repeat=2):
        if h[p, q]:
            H += h[p, q] * cre[p] @ ann[q]
    for p, q, r, s in itertools.product(range(n), repeat=4):
        if g[p, q, r, s]:
            H += 0.5 * g[p, q, r, s] * cre[p] @ cre[q] @ ann[s] @ ann[r]
    return H


def sector_indices(n: int, n_alpha: int, n_beta: int) -> np.ndarray:
    """Sorted Fock indices with the given alpha (even bits) and beta (odd bits) counts."""
    keep = []
    for det in range(1 << n):
        na = sum(det >> p & 1 for p in range(0, n, 2))
        nb = sum(det >> p & 1 for p in range(1, n, 2))
        if (na, nb) == (n_alpha, n_beta):
            keep.append(det)
    return np.array(keep)


PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def word_matrix(word: str) -> np.ndarray:
    """Kronecker product with qubit 1 on the least significant bit (rightmost factor)."""
    out = np.eye(1)
    for ch in word:
        out = np.kron(PAULI[ch], out)
    return out
