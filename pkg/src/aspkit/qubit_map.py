"""Pauli-string algebra and the Jordan-Wigner mapping.

Words are strings over ``IXYZ`` with qubit 1 leftmost.  In matrix form qubit q
is bit (q-1) of the computational-basis index, so a determinant bit word from
:mod:`aspkit.fermion_core` is directly a qubit-register index.  |1> means occupied
and a+_n = Z_1 ... Z_{n-1} sigma^-_n with sigma^- = (X - iY)/2.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sps

from .fermion_core import DeterminantBasis, Sector, enumerate_basis, fock_diagonal, hf_determinant
from .integrals_io import IntegralSet

__all__ = [
    "PauliSum",
    "ImaginaryResidueError",
    "jw_creation",
    "jw_annihilation",
    "jw_number",
    "jw_map",
    "jw_one_body_diagonal",
    "local_x_hamiltonian",
    "pauli_to_matrix",
    "sector_block",
    "DENSE_QUBIT_CAP",
    "CoefficientSet",
    "appendix_coefficients",
    "appendix_hamiltonian",
    "appendix_discrepancy",
    "APPENDIX_WORDS",
]

PRUNE_TOL = 1e-14
IMAG_TOL = 1e-12
DENSE_QUBIT_CAP = 14
JW_QUBIT_LIMIT = 16

# single-qubit products: (a, b) -> (phase, a*b)
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}
_WORD = re.compile(r"^[IXYZ]+$")


class ImaginaryResidueError(ArithmeticError):
    """A Hamiltonian expansion left an imaginary coefficient above tolerance."""


@lru_cache(maxsize=1 << 16)
def _mul_words(a: str, b: str) -> tuple[complex, str]:
    phase = 1
    out = []
    for x, y in zip(a, b):
        ph, z = _PRODUCT[x, y]
        phase *= ph
        out.append(z)
    return phase, "".join(out)


class PauliSum:
    """Linear combination of Pauli words on ``n_qubits`` qubits.

    Terms are canonical: unique words, coefficients with modulus below 1e-14
    dropped.  Instances are treated as immutable; arithmetic returns new sums.
    """

    __slots__ = ("n_qubits", "_terms")

    def __init__(self, n_qubits: int, terms: Mapping[str, complex] | Iterable[tuple[str, complex]] = ()):
        self.n_qubits = int(n_qubits)
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[str, complex] = {}
        for word, c in items:
            if len(word) != self.n_qubits or not _WORD.match(word):
                raise ValueError(f"invalid Pauli word {word!r} for {self.n_qubits} qubits")
            acc[word] = acc.get(word, 0) + c
        self._terms = {w: c for w, c in acc.items() if abs(c) >= PRUNE_TOL}

    # construction helpers
    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {"I" * n_qubits: coeff})

    @classmethod
    def single(cls, n_qubits: int, ops: Mapping[int, str], coeff: complex = 1.0) -> "PauliSum":
        """Product of single-qubit letters; ``ops`` maps 1-based qubit -> letter."""
        word = ["I"] * n_qubits
        for q, letter in ops.items():
            if not 1 <= q <= n_qubits:
                raise IndexError(f"qubit {q} out of range 1..{n_qubits}")
            word[q - 1] = letter
        return cls(n_qubits, {"".join(word): coeff})

    # mapping protocol
    @property
    def terms(self) -> dict[str, complex]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items()))

    def coeff(self, word: str) -> complex:
        return self._terms.get(word, 0.0)

    # arithmetic
    def _check(self, other: "PauliSum"):
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"qubit count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(self.n_qubits, other)
        self._check(other)
        return PauliSum(self.n_qubits, list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other if isinstance(other, PauliSum) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PauliSum(self.n_qubits, {w: c * other for w, c in self._terms.items()})
        if isinstance(other, PauliSum):
            return self @ other
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        self._check(other)
        acc: dict[str, complex] = {}
        for wa, ca in self._terms.items():
            for wb, cb in other._terms.items():
                ph, w = _mul_words(wa, wb)
                acc[w] = acc.get(w, 0) + ph * ca * cb
        return PauliSum(self.n_qubits, acc)

    def dagger(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {w: np.conj(c) for w, c in self._terms.items()})

    def real(self, tol: float = IMAG_TOL) -> "PauliSum":
        """Drop imaginary parts, raising if any exceeds ``tol``."""
        worst = max((abs(complex(c).imag) for c in self._terms.values()), default=0.0)
        if worst > tol:
            raise ImaginaryResidueError(f"imaginary residue {worst:.3e} exceeds {tol:.0e}")
        return PauliSum(self.n_qubits, {w: float(complex(c).real) for w, c in self._terms.items()})

    def is_hermitian(self, tol: float = IMAG_TOL) -> bool:
        return all(abs(complex(c).imag) <= tol for c in self._terms.values())

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        self._check(other)
        words = set(self._terms) | set(other._terms)
        return all(abs(self.coeff(w) - other.coeff(w)) <= atol for w in words)

    def locality(self, word: str) -> int:
        return sum(ch != "I" for ch in word)

    def max_locality(self) -> int:
        return max((self.locality(w) for w in self._terms), default=0)

    def extend(self, n_qubits: int) -> "PauliSum":
        """Embed into a larger register (new qubits appended as identities)."""
        if n_qubits < self.n_qubits:
            raise ValueError("cannot shrink a register")
        pad = "I" * (n_qubits - self.n_qubits)
        return PauliSum(n_qubits, {w + pad: c for w, c in self._terms.items()})

    # text format
    def to_text(self) -> str:
        """One ``coefficient WORD`` line per term, real coefficients only."""
        lines = []
        for w, c in self:
            c = complex(c)
            if abs(c.imag) > IMAG_TOL:
                raise ImaginaryResidueError(f"term {w} has complex coefficient {c}")
            lines.append(f"{c.real:+.16e} {w}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliSum":
        terms = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                c, w = line.split()
                terms.append((w, float(c)))
            except ValueError:
                raise ValueError(f"line {lineno}: expected 'coefficient WORD', got {line!r}") from None
        if n_qubits is None:
            if not terms:
                raise ValueError("empty Pauli text; pass n_qubits")
            n_qubits = len(terms[0][0])
        return cls(n_qubits, terms)

    def __repr__(self) -> str:
        body = " + ".join(f"({complex(c):.6g}) {w}" for w, c in list(self)[:6])
        more = "" if len(self) <= 6 else f" + ... [{len(self)} terms]"
        return f"PauliSum({self.n_qubits}: {body}{more})"

    def __eq__(self, other):
        return isinstance(other, PauliSum) and other.n_qubits == self.n_qubits and other._terms == self._terms

    __hash__ = None

    # matrices
    def to_sparse(self) -> sps.csr_matrix:
        return pauli_to_sparse(self)

    def to_matrix(self) -> np.ndarray:
        return pauli_to_matrix(self)


# --------------------------------------------------------------------------- Jordan-Wigner

def _check_orbital(p: int, n: int):
    if not 1 <= p <= n:
        raise IndexError(f"spin orbital {p} out of range 1..{n}")


def jw_creation(p: int, n: int) -> PauliSum:
    """a+_p (1-based p) = Z_1 ... Z_{p-1} (X_p - i Y_p)/2."""
    _check_orbital(p, n)
    prefix = "Z" * (p - 1)
    suffix = "I" * (n - p)
    return PauliSum(n, {prefix + "X" + suffix: 0.5, prefix + "Y" + suffix: -0.5j})


def jw_annihilation(p: int, n: int) -> PauliSum:
    """a_p (1-based p) = Z_1 ... Z_{p-1} (X_p + i Y_p)/2."""
    _check_orbital(p, n)
    prefix = "Z" * (p - 1)
    suffix = "I" * (n - p)
    return PauliSum(n, {prefix + "X" + suffix: 0.5, prefix + "Y" + suffix: 0.5j})


def jw_number(p: int, n: int) -> PauliSum:
    """n_p = (I - Z_p)/2."""
    return PauliSum.identity(n, 0.5) + PauliSum.single(n, {p: "Z"}, -0.5)


def jw_one_body_diagonal(diag: Iterable[float]) -> PauliSum:
    """sum_p d_p a+_p a_p for a diagonal one-body operator (e.g. sum of Fock operators)."""
    diag = list(diag)
    n = len(diag)
    out = PauliSum(n)
    for p, d in enumerate(diag, 1):
        if d:
            out = out + jw_number(p, n) * d
    return out


def jw_map(ints: IntegralSet, include_core: bool = False, max_qubits: int = JW_QUBIT_LIMIT) -> PauliSum:
    """Jordan-Wigner image of sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r."""
    n = ints.n_so
    if n > max_qubits:
        raise ValueError(f"{n} spin orbitals exceed the Jordan-Wigner limit of {max_qubits}")
    cre = [jw_creation(p, n) for p in range(1, n + 1)]
    ann = [jw_annihilation(p, n) for p in range(1, n + 1)]
    acc: dict[str, complex] = {}

    def add(op: PauliSum, scale: float):
        for w, c in op._terms.items():
            acc[w] = acc.get(w, 0) + scale * c

    for p in range(n):
        for q in range(n):
            if ints.h[p, q] != 0.0:
                add(cre[p] @ ann[q], ints.h[p, q])
    # 1/2 sum_{pqrs} <pq|rs> a+_p a+_q a_s a_r collapses onto p<q, r<s with the
    # antisymmetrized integral <pq|rs> - <pq|sr>
    g = ints.g_tensor
    anti = g - g.transpose(0, 1, 3, 2)
    pairs = [(p, q) for p in range(n) for q in range(p + 1, n)]
    cre_pair = {pq: cre[pq[0]] @ cre[pq[1]] for pq in pairs}
    ann_pair = {rs: ann[rs[1]] @ ann[rs[0]] for rs in pairs}
    for p, q in pairs:
        for r, s in pairs:
            if anti[p, q, r, s] != 0.0:
                add(cre_pair[p, q] @ ann_pair[r, s], anti[p, q, r, s])
    if include_core and ints.e_core:
        acc["I" * n] = acc.get("I" * n, 0) + ints.e_core
    return PauliSum(n, acc).real()


def local_x_hamiltonian(n: int) -> PauliSum:
    """sum_i (I - X_i)/2: transverse-field initial Hamiltonian."""
    out = PauliSum.identity(n, 0.5 * n)
    for q in range(1, n + 1):
        out = out + PauliSum.single(n, {q: "X"}, -0.5)
    return out


# --------------------------------------------------------------------------- matrices

def _word_masks(word: str) -> tuple[int, int, int]:
    flip = phase_mask = n_y = 0
    for q, ch in enumerate(word):
        if ch in "XY":
            flip |= 1 << q
        if ch in "YZ":
            phase_mask |= 1 << q
        n_y += ch == "Y"
    return flip, phase_mask, n_y


def _parity_table(n: int) -> np.ndarray:
    """Bit parity of every index 0 .. 2^n - 1."""
    idx = np.arange(1 << n, dtype=np.int64)
    parity = np.zeros(1 << n, dtype=np.int8)
    for b in range(n):
        parity ^= ((idx >> b) & 1).astype(np.int8)
    return parity


def pauli_to_sparse(h: PauliSum) -> sps.csr_matrix:
    """Sparse matrix of a PauliSum (qubit q = bit q-1 of the index)."""
    n = h.n_qubits
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    parity = _parity_table(n)
    rows, cols, vals = [], [], []
    complex_needed = False
    for word, c in h._terms.items():
        flip, pmask, n_y = _word_masks(word)
        # Y|b> = i(-1)^b |1-b>, Z|b> = (-1)^b |b>
        sign = 1 - 2 * parity[idx & pmask].astype(np.int64)
        coeff = c * (1j ** n_y)
        if abs(complex(coeff).imag) > 0:
            complex_needed = True
        rows.append(idx ^ flip)
        cols.append(idx)
        vals.append(coeff * sign)
    if not rows:
        return sps.csr_matrix((dim, dim))
    data = np.concatenate(vals)
    if not complex_needed:
        data = data.real
    mat = sps.csr_matrix((data, (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def pauli_to_matrix(h: PauliSum, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    """Dense matrix of a PauliSum; refuses registers above ``cap`` qubits."""
    if h.n_qubits > cap:
        raise ValueError(f"{h.n_qubits} qubits exceed the dense cap of {cap}")
    return pauli_to_sparse(h).toarray()


def sector_block(h_matrix, sector: Sector | DeterminantBasis) -> np.ndarray:
    """Restrict a 2^n matrix to the determinants of a sector, in basis order."""
    basis = sector if isinstance(sector, DeterminantBasis) else enumerate_basis(sector)
    dim = 1 << basis.sector.n_so
    if h_matrix.shape != (dim, dim):
        raise ValueError(f"matrix shape {h_matrix.shape} does not match 2^{basis.sector.n_so}")
    idx = np.asarray(basis.dets)
    sub = h_matrix[idx][:, idx]
    return sub.toarray() if sps.issparse(sub) else np.asarray(sub)


# --------------------------------------------------------------------------- closed-form 4-qubit model

# Pauli words carried by c1..c9 (qubit 1 leftmost).
APPENDIX_WORDS: tuple[tuple[str, ...], ...] = (
    ("IIII",),
    ("ZIII", "IZII"),
    ("IIZI", "IIIZ"),
    ("ZZII",),
    ("ZIZI", "IZIZ"),
    ("ZIIZ", "IZZI"),
    ("IIZZ",),
    ("YYXX", "XXYY"),
    ("XYYX", "YXXY"),
)


@dataclass(frozen=True)
class CoefficientSet:
    """Affine coefficients c_i(s) = a_i + b_i s of the two-orbital model Hamiltonian.

    Attributes:
        intercept: the nine values c_i(0).
        slope: the nine values c_i(1) - c_i(0).
        variant: ``"derived"`` (consistent with the Jordan-Wigner expansion of
            the Moller-Plesset path) or ``"printed"`` (an alternative closed form with different c2, c3).
    """

    intercept: tuple[float, ...]
    slope: tuple[float, ...]
    variant: str = "derived"

    def __call__(self, s: float) -> np.ndarray:
        return np.asarray(self.intercept) + s * np.asarray(self.slope)


def _model_integrals(ints: IntegralSet) -> dict[str, float]:
    if ints.n_so != 4:
        raise ValueError(f"the closed-form model needs 4 spin orbitals, got {ints.n_so}")

    def h4(p, q, r, s):  # h_pqrs = <pq|sr>, 1-based
        return ints.g_value(p - 1, q - 1, s - 1, r - 1)

    return {
        "h11": float(ints.h[0, 0]),
        "h33": float(ints.h[2, 2]),
        "J12": h4(1, 2, 2, 1),
        "J34": h4(3, 4, 4, 3),
        "K": h4(1, 3, 3, 1),
        "X": h4(1, 3, 1, 3),
    }


def appendix_coefficients(ints: IntegralSet, variant: str = "derived") -> CoefficientSet:
    """Coefficients c1..c9 of the closed-form two-orbital ASP Hamiltonian.

    The path runs from the Moller-Plesset initial Hamiltonian (s=0) to the
    full Hamiltonian (s=1) for a HOMO/LUMO pair in interleaved spin-orbital
    order (1,2 = HOMO alpha/beta, 3,4 = LUMO alpha/beta).  The ``"printed"``
    variant keeps an alternative set of expressions whose single-Z
    coefficients c2 and c3 disagree with the Jordan-Wigner expansion for
    s < 1; ``"derived"`` is the corrected set and is used by default.

    Raises:
        ValueError: for a register other than 4 spin orbitals or an unknown variant.
    """
    m = _model_integrals(ints)
    h11, h33, J12, J34, K, X = (m[k] for k in ("h11", "h33", "J12", "J34", "K", "X"))
    if variant == "derived":
        c0 = (h11 + h33 + J12 + 2 * K - X, -h11 / 2 - J12 / 2, -h33 / 2 - K + X / 2,
              0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        c1 = (h11 + h33 + J12 / 4 + J34 / 4 + K - X / 2,
              -h11 / 2 - J12 / 4 - K / 2 + X / 4,
              -h33 / 2 - K / 2 + X / 4 - J34 / 4,
              J12 / 4, (K - X) / 4, K / 4, J34 / 4, -X / 4, X / 4)
    elif variant == "printed":
        c0 = (h11 + h33 + J12 + 2 * K - X, -h11 / 2 + 2 * K - X, -h33 / 2 + 2 * K - X,
              0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        c1 = (h11 + h33 + J12 / 4 + J34 / 4 + K - X / 2,
              -h11 / 2 - K / 2 + X / 4 - J12 / 4,
              -h33 / 2 - K / 2 + X / 4 - J34 / 4,
              J12 / 4, (K - X) / 4, K / 4, J34 / 4, -X / 4, X / 4)
    else:
        raise ValueError(f"unknown coefficient variant {variant!r}")
    return CoefficientSet(tuple(c0), tuple(b - a for a, b in zip(c0, c1)), variant)


def appendix_hamiltonian(ints: IntegralSet, s: float, variant: str = "derived",
                         restrict_c9: bool = False) -> PauliSum:
    """The 15-term PauliSum c1 I + c2 (Z1+Z2) + ... + c9 (XYYX + YXXY) at path parameter s.

    ``restrict_c9`` sets c9 to zero (keeps only the YYXX/XXYY pair of
    4-qubit terms).
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    c = appendix_coefficients(ints, variant)(s)
    if restrict_c9:
        c[8] = 0.0
    terms: dict[str, float] = {}
    for ci, words in zip(c, APPENDIX_WORDS):
        for w in words:
            terms[w] = float(ci)
    return PauliSum(4, terms)


def appendix_discrepancy(ints: IntegralSet, s: float) -> dict[str, float]:
    """Per-coefficient difference printed - derived at s, plus the oracle residual.

    The key ``"oracle"`` holds the largest coefficient difference between the
    derived closed form and the Jordan-Wigner image of
    (1-s) H_MP + s H_final built term by term.
    """
    printed = appendix_coefficients(ints, "printed")(s)
    derived = appendix_coefficients(ints, "derived")(s)
    out = {f"c{i + 1}": float(p - d) for i, (p, d) in enumerate(zip(printed, derived))}
    basis = enumerate_basis(Sector.for_integrals(ints, 1, 1))
    hf = int(basis.dets[hf_determinant(basis)])
    path = jw_one_body_diagonal(fock_diagonal(ints, hf)) * (1 - s) + jw_map(ints) * s
    diff = path - appendix_hamiltonian(ints, s)
    out["oracle"] = max((abs(c) for c in diff.terms.values()), default=0.0)
    return out
