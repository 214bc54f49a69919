"""Determinant bases and second-quantized Hamiltonians in a fixed (N_alpha, N_beta) sector.

Determinants are occupation words: bit j set means spin orbital j (0-based) is
occupied.  The same integer doubles as the computational-basis index of the
Jordan-Wigner qubit register, so sector matrices and qubit matrices share an
index convention.  Fermionic phases follow the creation order
``a+_{p1} a+_{p2} ... |vac>`` with p1 < p2 < ..., i.e. an operator acting on
orbital p picks up (-1) for every occupied orbital below p.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .integrals_io import ALPHA, IntegralSet

__all__ = [
    "Sector",
    "DeterminantBasis",
    "InitKind",
    "EigensolverError",
    "InfeasibleSectorError",
    "enumerate_basis",
    "build_final_hamiltonian",
    "build_initial_hamiltonian",
    "hf_determinant",
    "hf_energy",
    "fock_diagonal",
    "ground_state",
    "squared_overlap",
    "spin_squared",
    "occupied",
    "to_coo_text",
]

log = logging.getLogger(__name__)

DENSE_LIMIT = 512


class InfeasibleSectorError(ValueError):
    """Requested electron numbers do not fit into the spin orbitals."""


class EigensolverError(RuntimeError):
    """Iterative eigensolver failed; ``residual`` holds the worst residual norm."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual norm {residual:.3e})")
        self.residual = residual


def occupied(det: int) -> list[int]:
    """Indices of set bits, ascending."""
    out = []
    j = 0
    while det:
        if det & 1:
            out.append(j)
        det >>= 1
        j += 1
    return out


def _parity_below(det: int, p: int) -> int:
    return -1 if bin(det & ((1 << p) - 1)).count("1") & 1 else 1


def _annihilate(det: int, p: int) -> tuple[int, int]:
    if not det >> p & 1:
        return 0, 0
    return _parity_below(det, p), det ^ (1 << p)


def _create(det: int, p: int) -> tuple[int, int]:
    if det >> p & 1:
        return 0, 0
    return _parity_below(det, p), det | (1 << p)


@dataclass(frozen=True)
class Sector:
    """Spin-orbital count and electron numbers per spin.

    ``spin_of`` tags each spin orbital alpha (0) or beta (1); by default the
    interleaved convention (even indices alpha).
    """

    n_so: int
    n_alpha: int
    n_beta: int
    spin_of: tuple = ()

    def __post_init__(self):
        spin = tuple(self.spin_of) if self.spin_of else tuple(p % 2 for p in range(self.n_so))
        if len(spin) != self.n_so:
            raise ValueError("spin_of length must equal n_so")
        object.__setattr__(self, "spin_of", spin)
        n_a = spin.count(ALPHA)
        n_b = self.n_so - n_a
        if not (0 <= self.n_alpha <= n_a and 0 <= self.n_beta <= n_b):
            raise InfeasibleSectorError(
                f"infeasible sector: ({self.n_alpha}, {self.n_beta}) electrons in "
                f"{n_a} alpha / {n_b} beta spin orbitals"
            )

    @classmethod
    def for_integrals(cls, ints: IntegralSet, n_alpha: int, n_beta: int) -> "Sector":
        return cls(ints.n_so, n_alpha, n_beta, ints.spin_of)

    @property
    def alpha_orbitals(self) -> list[int]:
        return [p for p, s in enumerate(self.spin_of) if s == ALPHA]

    @property
    def beta_orbitals(self) -> list[int]:
        return [p for p, s in enumerate(self.spin_of) if s != ALPHA]


@dataclass(frozen=True, eq=False)
class DeterminantBasis:
    sector: Sector
    dets: np.ndarray
    index_of: dict = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.dets)

    @property
    def dim(self) -> int:
        return len(self.dets)


def enumerate_basis(sector: Sector) -> DeterminantBasis:
    """All determinants of the sector, sorted by integer value of the bit word."""
    words = []
    for occ_a in combinations(sector.alpha_orbitals, sector.n_alpha):
        wa = sum(1 << p for p in occ_a)
        for occ_b in combinations(sector.beta_orbitals, sector.n_beta):
            words.append(wa | sum(1 << p for p in occ_b))
    dets = np.array(sorted(words), dtype=np.int64)
    expected = comb(len(sector.alpha_orbitals), sector.n_alpha) * comb(
        len(sector.beta_orbitals), sector.n_beta
    )
    assert len(dets) == expected
    dets.setflags(write=False)
    return DeterminantBasis(sector, dets, {int(d): i for i, d in enumerate(dets)})


def hf_determinant(basis: DeterminantBasis) -> int:
    """Index of the aufbau determinant (lowest orbitals of each spin filled)."""
    sec = basis.sector
    word = sum(1 << p for p in sec.alpha_orbitals[: sec.n_alpha])
    word |= sum(1 << p for p in sec.beta_orbitals[: sec.n_beta])
    return basis.index_of[word]


def hf_energy(ints: IntegralSet, det: int) -> float:
    """Mean-field energy of a single determinant (core energy excluded)."""
    occ = occupied(int(det))
    if occ and occ[-1] >= ints.n_so:
        raise ValueError("determinant has orbitals beyond n_so")
    g = ints.g_tensor
    e = sum(ints.h[i, i] for i in occ)
    for i in occ:
        for j in occ:
            e += 0.5 * (g[i, j, i, j] - g[i, j, j, i])
    return float(e)


def fock_diagonal(ints: IntegralSet, ref_det: int) -> np.ndarray:
    """f_pp = h_pp + sum_{i in ref} (<pi|pi> - <pi|ip>) for every spin orbital p."""
    occ = occupied(int(ref_det))
    g = ints.g_tensor
    f = np.array(np.diag(ints.h), dtype=float)
    for p in range(ints.n_so):
        f[p] += sum(g[p, i, p, i] - g[p, i, i, p] for i in occ)
    return f


def build_final_hamiltonian(ints: IntegralSet, basis: DeterminantBasis, include_core: bool = False) -> sps.csr_matrix:
    """Sector matrix of the electronic Hamiltonian by Slater-Condon rules.

    Diagonal, single- and double-excitation elements are generated from each
    determinant; phases come from applying the excitation operators in order.
    """
    sec = basis.sector
    if ints.n_so != sec.n_so:
        raise ValueError(f"integrals have {ints.n_so} spin orbitals, basis has {sec.n_so}")
    h = ints.h
    g = ints.g_tensor
    n = ints.n_so
    rows, cols, vals = [], [], []
    index_of = basis.index_of
    for col, det in enumerate(basis.dets):
        det = int(det)
        occ = occupied(det)
        virt = [a for a in range(n) if not det >> a & 1]

        diag = sum(h[i, i] for i in occ)
        for x, i in enumerate(occ):
            for j in occ[x + 1:]:
                diag += g[i, j, i, j] - g[i, j, j, i]
        if include_core:
            diag += ints.e_core
        rows.append(col), cols.append(col), vals.append(diag)

        for i in occ:
            for a in virt:
                if sec.spin_of[i] != sec.spin_of[a]:
                    continue
                val = h[a, i] + sum(g[a, k, i, k] - g[a, k, k, i] for k in occ if k != i)
                if val == 0.0:
                    continue
                s1, d1 = _annihilate(det, i)
                s2, d2 = _create(d1, a)
                rows.append(index_of[d2]), cols.append(col), vals.append(s1 * s2 * val)

        for x, i in enumerate(occ):
            for j in occ[x + 1:]:
                for y, a in enumerate(virt):
                    for b in virt[y + 1:]:
                        val = g[a, b, i, j] - g[a, b, j, i]
                        if val == 0.0:
                            continue
                        # a+_a a+_b a_j a_i |det>
                        s1, d = _annihilate(det, i)
                        s2, d = _annihilate(d, j)
                        s3, d = _create(d, b)
                        s4, d = _create(d, a)
                        target = index_of.get(d)
                        if target is None:  # spin-forbidden, cannot carry weight
                            continue
                        rows.append(target), cols.append(col), vals.append(s1 * s2 * s3 * s4 * val)
    dim = basis.dim
    mat = sps.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    mat.eliminate_zeros()
    return mat


@dataclass(frozen=True)
class InitKind:
    """Choice of initial Hamiltonian.

    variant: ``"ag"`` (single HF diagonal entry), ``"mp"`` (sum of Fock
    operators), ``"localx"`` (qubit-space transverse field) or ``"cas"``.
    For ``"cas"``, ``active`` lists spin-orbital indices and ``gamma`` the
    penalty on determinants outside the active space (default E_HF + 10 E_h).
    """

    variant: str
    active: tuple = ()
    gamma: float | None = None

    def __post_init__(self):
        if self.variant not in ("ag", "mp", "localx", "cas"):
            raise ValueError(f"unknown initial Hamiltonian {self.variant!r}")
        if self.variant == "cas":
            if not self.active:
                raise ValueError("CAS initial Hamiltonian needs a non-empty active list")
            if self.gamma is not None and self.gamma <= 0:
                raise ValueError("CAS penalty gamma must be positive")

    @classmethod
    def parse(cls, text: str) -> "InitKind":
        """Parse ``ag``, ``mp``, ``localx`` or ``cas:1,2`` (1-based spatial orbitals, interleaved)."""
        text = text.strip().lower()
        if text.startswith("cas"):
            _, _, orbs = text.partition(":")
            if not orbs:
                raise ValueError("cas init needs orbitals, e.g. cas:1,2")
            spatial = [int(o) - 1 for o in orbs.split(",") if o]
            if any(p < 0 for p in spatial):
                raise ValueError("CAS orbital indices are 1-based")
            active = tuple(sorted({2 * p + s for p in spatial for s in (0, 1)}))
            return cls("cas", active)
        return cls(text)

    def label(self) -> str:
        if self.variant == "cas":
            spatial = sorted({p // 2 + 1 for p in self.active})
            return "cas:" + ",".join(map(str, spatial))
        return self.variant


def _cas_projector_mask(basis: DeterminantBasis, active: Sequence[int]) -> np.ndarray:
    n = basis.sector.n_so
    if any(not 0 <= p < n for p in active):
        raise ValueError(f"CAS active orbitals {tuple(active)} not within 0..{n - 1}")
    act = sum(1 << p for p in active)
    inactive = ((1 << n) - 1) & ~act
    hf_word = int(basis.dets[hf_determinant(basis)])
    return (basis.dets & inactive) == (hf_word & inactive)


def build_initial_hamiltonian(kind: InitKind | str, ints: IntegralSet, basis: DeterminantBasis,
                              h_final: sps.spmatrix | None = None) -> sps.csr_matrix:
    """Initial Hamiltonian on the determinant basis (AG, MP or CAS).

    ``h_final`` is only used by the CAS variant and is assembled if omitted.
    """
    if isinstance(kind, str):
        kind = InitKind.parse(kind)
    dim = basis.dim
    k = hf_determinant(basis)
    hf_word = int(basis.dets[k])
    if kind.variant == "ag":
        diag = np.zeros(dim)
        diag[k] = hf_energy(ints, hf_word)
        return sps.csr_matrix(sps.diags(diag))
    if kind.variant == "mp":
        f = fock_diagonal(ints, hf_word)
        diag = np.array([sum(f[p] for p in occupied(int(d))) for d in basis.dets])
        return sps.csr_matrix(sps.diags(diag))
    if kind.variant == "cas":
        inside = _cas_projector_mask(basis, kind.active).astype(float)
        gamma = kind.gamma if kind.gamma is not None else hf_energy(ints, hf_word) + 10.0
        if h_final is None:
            h_final = build_final_hamiltonian(ints, basis)
        proj = sps.diags(inside)
        return sps.csr_matrix(proj @ h_final @ proj + gamma * sps.diags(1.0 - inside))
    raise ValueError("the local-X initial Hamiltonian lives in qubit space; use qubit.local_x_hamiltonian")


def spin_squared(basis: DeterminantBasis) -> sps.csr_matrix:
    """S^2 = S_z^2 + S_z + S_- S_+ on the determinant basis.

    Assumes spin orbitals come in (alpha, beta) pairs sharing a spatial orbital,
    in the order given by the sector's ``spin_of`` tags.
    """
    sec = basis.sector
    alphas, betas = sec.alpha_orbitals, sec.beta_orbitals
    if len(alphas) != len(betas):
        raise ValueError("S^2 needs equal numbers of alpha and beta spin orbitals")
    sz = 0.5 * (sec.n_alpha - sec.n_beta)
    rows, cols, vals = [], [], []
    for col, det in enumerate(basis.dets):
        det = int(det)
        diag = sz * sz + sz
        # S_- S_+ = sum_{pq} b+_p a_p a+_q b_q
        for q_a, q_b in zip(alphas, betas):
            s1, d1 = _annihilate(det, q_b)
            if not s1:
                continue
            s2, d2 = _create(d1, q_a)
            if not s2:
                continue
            for p_a, p_b in zip(alphas, betas):
                s3, d3 = _annihilate(d2, p_a)
                if not s3:
                    continue
                s4, d4 = _create(d3, p_b)
                if not s4:
                    continue
                sign = s1 * s2 * s3 * s4
                if d4 == det:
                    diag += sign
                else:
                    rows.append(basis.index_of[d4]), cols.append(col), vals.append(float(sign))
        rows.append(col), cols.append(col), vals.append(diag)
    return sps.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


# --------------------------------------------------------------------------- eigen / overlaps

def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        top = v[np.argmax(np.abs(v))]
        vecs[:, j] = v * (abs(top) / top) if np.iscomplexobj(vecs) else v * np.sign(top)
    return vecs


def ground_state(H, k: int = 1, tol: float = 1e-10) -> list[tuple[float, np.ndarray]]:
    """The k lowest eigenpairs, ascending, unit-norm, largest component positive.

    Dense diagonalization up to 512 rows; ARPACK Lanczos (``eigsh``) above.
    """
    dim = H.shape[0]
    if not 1 <= k <= dim:
        raise ValueError(f"need 1 <= k <= dim, got k={k}, dim={dim}")
    if dim <= DENSE_LIMIT or k >= dim - 1:
        dense = H.toarray() if sps.issparse(H) else np.asarray(H)
        w, v = np.linalg.eigh(dense)
        w, v = w[:k], v[:, :k].copy()
    else:
        try:
            w, v = eigsh(sps.csr_matrix(H), k=k, which="SA", tol=tol)
        except ArpackNoConvergence as exc:
            res = np.nan
            if exc.eigenvectors is not None and len(exc.eigenvalues):
                r = H @ exc.eigenvectors - exc.eigenvectors * exc.eigenvalues
                res = float(np.max(np.linalg.norm(r, axis=0)))
            raise EigensolverError("Lanczos eigensolver did not converge", res) from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        res = np.linalg.norm(H @ v - v * w, axis=0).max()
        if res > max(1e3 * tol, 1e-7):
            raise EigensolverError("Lanczos residual above tolerance", float(res))
    v = _fix_phase(v)
    return [(float(w[i]), v[:, i]) for i in range(k)]


def squared_overlap(a: np.ndarray, b: np.ndarray, atol: float = 1e-12) -> float:
    """|<a|b>|^2 for unit vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    for name, v in (("a", a), ("b", b)):
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > atol:
            raise ValueError(f"state {name} is not normalized (norm {nrm:.15f})")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def to_coo_text(H) -> str:
    """Coordinate-format dump ``i j value`` (0-based) for debugging."""
    coo = sps.coo_matrix(H)
    return "".join(f"{i} {j} {v:.16e}\n" for i, j, v in zip(coo.row, coo.col, coo.data))
