"""Perturbative gadgets: lowering k-local Pauli terms to 2-local Hamiltonians.

Each k-local target term c * sigma^1 ... sigma^k gets its own block of k
ancilla qubits.  The block Hamiltonian is

    scale * [ sum_{I<J} (I - Z_I Z_J)/2  +  lam * sum_j u_j X_{J} sigma^j ],

whose degenerate ground space (the block's |0...0>, |1...1> pair) is split
at k-th order in ``lam`` by an effective term proportional to the product of
the couplings times sigma^1 ... sigma^k.  ``scale`` is chosen so the effective
term equals the target term to leading order.

Register layout: computational qubits 1..n_comp first, then one block of k
ancillas per term in term order.  Ancilla j of a block couples to the j-th
non-identity qubit of its term (ascending qubit index).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
import scipy.sparse as sps

from .qubit_map import DENSE_QUBIT_CAP, PauliSum, pauli_to_sparse

__all__ = [
    "TargetTerm",
    "GadgetSpec",
    "GadgetRangeError",
    "extract_klocal",
    "build_gadget",
    "gadget_parts",
    "gadget_spec",
    "spectral_error",
    "ancilla_initial_state",
    "cat_state",
    "block_parity_isometry",
    "lambda_max",
]

COUPLING_MODES = ("distributed", "literal")


class GadgetRangeError(ValueError):
    """Perturbation strength outside the admissible interval."""


@dataclass(frozen=True)
class TargetTerm:
    """A k-local Pauli product c * sigma^{q1} ... sigma^{qk} (k >= 3).

    Attributes:
        coeff: real coefficient c_s.
        ops: ((qubit, letter), ...) with 1-based distinct qubits, ascending.
    """

    coeff: float
    ops: tuple[tuple[int, str], ...]

    def __post_init__(self):
        qubits = [q for q, _ in self.ops]
        if len(self.ops) < 3:
            raise ValueError("target terms must be at least 3-local")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"target qubits must be distinct, got {qubits}")
        if any(letter not in "XYZ" for _, letter in self.ops):
            raise ValueError("target letters must be X, Y or Z")
        object.__setattr__(self, "ops", tuple(sorted(self.ops)))

    @property
    def k(self) -> int:
        return len(self.ops)

    def word(self, n_qubits: int) -> str:
        w = ["I"] * n_qubits
        for q, letter in self.ops:
            w[q - 1] = letter
        return "".join(w)

    def as_paulisum(self, n_qubits: int) -> PauliSum:
        return PauliSum(n_qubits, {self.word(n_qubits): self.coeff})


def extract_klocal(h: PauliSum) -> tuple[PauliSum, list[TargetTerm]]:
    """Split a Hermitian PauliSum into its <=2-local part and its k-local terms.

    Targets are returned in ascending word order so block layouts are
    deterministic.
    """
    two_local = {}
    targets = []
    for word, c in h:
        if h.locality(word) <= 2:
            two_local[word] = c
        else:
            if abs(complex(c).imag) > 1e-12:
                raise ValueError(f"term {word} has a complex coefficient {c}")
            ops = tuple((q + 1, ch) for q, ch in enumerate(word) if ch != "I")
            targets.append(TargetTerm(float(complex(c).real), ops))
    return PauliSum(h.n_qubits, two_local), targets


def lambda_max(k: int, r: int) -> float:
    """Upper bound on lam for r terms of locality k: (k-1) / (4 k r).

    Gives (k-1)/(4k) for one term and 3/64 for four 4-local terms.
    """
    if r < 1:
        return math.inf
    return (k - 1) / (4 * k * r)


@dataclass(frozen=True)
class GadgetSpec:
    """Layout and parameters of a gadgetized Hamiltonian.

    Attributes:
        terms: the target terms, one ancilla block each.
        lam: perturbation strength.
        n_comp: computational qubit count.
        coupling: ``"distributed"`` spreads |c|^(1/k) over every coupling of a
            block with the sign on the first one; ``"literal"`` puts the whole
            coefficient on the first coupling and unit weight on the rest.
    """

    terms: tuple[TargetTerm, ...]
    lam: float
    n_comp: int
    coupling: str = "distributed"
    check_range: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.coupling not in COUPLING_MODES:
            raise ValueError(f"coupling must be one of {COUPLING_MODES}")
        ks = {t.k for t in self.terms}
        if len(ks) > 1:
            raise ValueError(f"mixed term localities {sorted(ks)} are not supported")
        for t in self.terms:
            if max(q for q, _ in t.ops) > self.n_comp:
                raise ValueError(f"term {t} acts outside the {self.n_comp}-qubit register")
        if self.check_range and self.terms and not 0 < self.lam < self.lambda_max:
            raise GadgetRangeError(
                f"lambda={self.lam} violates 0 < lambda < (k-1)/(4 k r) = {self.lambda_max:.6g} "
                f"for r={self.r} terms of locality k={self.k}")
        if self.lam <= 0:
            raise GadgetRangeError(f"lambda must be positive, got {self.lam}")

    @property
    def r(self) -> int:
        return len(self.terms)

    @property
    def k(self) -> int:
        return self.terms[0].k if self.terms else 4

    @property
    def lambda_max(self) -> float:
        return lambda_max(self.k, self.r)

    @property
    def n_qubits(self) -> int:
        return self.n_comp + self.k * self.r

    @property
    def k_s(self) -> float:
        """Conventional overall factor -(k-1)!/(k lam^k); -6/(4 lam^4) for k=4."""
        return -math.factorial(self.k - 1) / (self.k * self.lam ** self.k)

    @property
    def scale(self) -> float:
        """Positive factor actually applied, |k_s|, keeping the cat manifold lowest."""
        return abs(self.k_s)

    def ancilla_indices(self, block: int) -> tuple[int, ...]:
        start = self.n_comp + self.k * block + 1
        return tuple(range(start, start + self.k))

    def couplings(self, term: TargetTerm) -> np.ndarray:
        """Per-ancilla weights u_j with -(-lam)^k * k/(k-1)! * scale * prod(u) = c."""
        k, c = term.k, term.coeff
        sign = -((-1) ** k)  # sign of prod(u) that yields +c at k-th order
        if self.coupling == "literal":
            u = np.ones(k)
            u[0] = sign * c
            return u
        u = np.full(k, abs(c) ** (1.0 / k))
        u[0] *= sign * (1.0 if c >= 0 else -1.0)
        return u

    def sidecar(self) -> dict:
        return {
            "lambda": self.lam,
            "k_s": self.k_s,
            "scale_applied": self.scale,
            "n_comp": self.n_comp,
            "n_qubits": self.n_qubits,
            "coupling": self.coupling,
            "blocks": [
                {"term": t.word(self.n_comp), "coeff": t.coeff, "ancilla_indices": list(self.ancilla_indices(b))}
                for b, t in enumerate(self.terms)
            ],
            "lambda_max": self.lambda_max,
        }

    def sidecar_json(self) -> str:
        return json.dumps(self.sidecar(), indent=2)


def gadget_spec(targets: Sequence[TargetTerm], lam: float, n_comp: int | None = None,
                coupling: str = "distributed") -> GadgetSpec:
    if n_comp is None:
        n_comp = max((q for t in targets for q, _ in t.ops), default=0)
    return GadgetSpec(tuple(targets), lam, n_comp, coupling)


def gadget_parts(spec: GadgetSpec) -> tuple[PauliSum, list[tuple[int, int, PauliSum]]]:
    """Decompose a gadget into its constant ancilla part and unit coupling operators.

    Returns:
        ``(anc, couplings)`` where ``anc`` is scale * sum of block penalties and
        each coupling entry ``(block, j, op)`` holds op = scale * lam * X_a sigma^j,
        to be multiplied by the weight u_j of that block.
    """
    n = spec.n_qubits
    acc: dict[str, float] = {}
    couplings = []
    for b, term in enumerate(spec.terms):
        anc = spec.ancilla_indices(b)
        acc["I" * n] = acc.get("I" * n, 0.0) + spec.scale * 0.5 * math.comb(term.k, 2)
        for i, j in combinations(anc, 2):
            (word,) = PauliSum.single(n, {i: "Z", j: "Z"}).terms
            acc[word] = acc.get(word, 0.0) - 0.5 * spec.scale
        for j, ((q, letter), a) in enumerate(zip(term.ops, anc)):
            couplings.append((b, j, PauliSum.single(n, {a: "X", q: letter}, spec.scale * spec.lam)))
    return PauliSum(n, acc), couplings


def build_gadget(targets: Sequence[TargetTerm] | GadgetSpec, lam: float | None = None,
                 n_comp: int | None = None, coupling: str = "distributed") -> PauliSum:
    """2-local gadget Hamiltonian on the extended register.

    Args:
        targets: target terms, or a prepared :class:`GadgetSpec`.
        lam: perturbation strength; must satisfy 0 < lam < (k-1)/(4 k r).
        n_comp: computational register size (defaults to the largest target qubit).
        coupling: ``"distributed"`` (default) or ``"literal"``.

    Returns:
        PauliSum on n_comp + k r qubits.  Empty targets give an empty sum on
        the computational register.

    Raises:
        GadgetRangeError: lam outside the admissible interval.
    """
    spec = targets if isinstance(targets, GadgetSpec) else gadget_spec(targets, lam, n_comp, coupling)
    out, couplings = gadget_parts(spec)
    weights = [spec.couplings(t) for t in spec.terms]
    for b, j, op in couplings:
        out = out + op * float(weights[b][j])
    return out


# --------------------------------------------------------------------------- states / subspaces

def cat_state(k: int = 4) -> np.ndarray:
    """(|0...0> + |1...1>)/sqrt(2) on k qubits."""
    v = np.zeros(1 << k)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return v


def ancilla_initial_state(r: int, k: int = 4) -> np.ndarray:
    """Tensor power of r block cat states (block 1 on the lowest bits)."""
    if r < 1:
        raise ValueError("need at least one ancilla block")
    out = np.ones(1)
    for _ in range(r):
        out = np.kron(cat_state(k), out)
    return out


def block_parity_isometry(spec: GadgetSpec) -> sps.csr_matrix:
    """Isometry onto the joint +1 eigenspace of every block's X...X operator.

    Columns are (1/sqrt(2^r)) sum_g |b xor g> over the orbit of the block flip
    group, one per orbit, ordered by smallest member.
    """
    n = spec.n_qubits
    dim = 1 << n
    masks = [sum(1 << (a - 1) for a in spec.ancilla_indices(b)) for b in range(spec.r)]
    group = np.zeros(1, dtype=np.int64)
    for m in masks:
        group = np.concatenate([group, group ^ m])
    idx = np.arange(dim, dtype=np.int64)
    orbit_min = np.min(idx[:, None] ^ group[None, :], axis=1)
    reps = np.flatnonzero(orbit_min == idx)
    col_of = np.empty(dim, dtype=np.int64)
    col_of[reps] = np.arange(len(reps))
    cols = col_of[orbit_min]
    val = 1 / math.sqrt(len(group))
    return sps.csr_matrix((np.full(dim, val), (idx, cols)), shape=(dim, len(reps)))


def _low_levels(h: np.ndarray, n_low: int) -> np.ndarray:
    """n_low lowest eigenvalues, refined by a Rayleigh-Ritz step on the dense eigenvectors.

    The refinement recomputes the projected matrix from H @ V, which is
    accurate to rounding in the (small) entries the low states actually
    touch rather than to eps * ||H||.
    """
    w, v = np.linalg.eigh(h)
    v = v[:, :n_low]
    q, _ = np.linalg.qr(v)
    proj = q.conj().T @ (h @ q)
    return np.linalg.eigvalsh(0.5 * (proj + proj.conj().T))


def spectral_error(gadget: PauliSum | GadgetSpec, two_local: PauliSum, target: PauliSum,
                   n_low: int | None = None, spec: GadgetSpec | None = None) -> float:
    """Largest deviation between the low gadget spectrum and the target spectrum.

    The gadget side is ``two_local (x) I_anc + gadget`` restricted to the +1
    eigenspace of every block's X...X operator; its ``n_low`` lowest levels
    are shifted by the uniform offset of the pure gadget (the same gadget
    without the 2-local part) and compared with the target's ``n_low`` lowest
    levels.  The offset is the mean of the pure gadget's low levels minus the
    mean spectrum of ``target - two_local``.

    Args:
        gadget: gadget PauliSum or the spec that builds it.
        two_local: 2-local part on the computational register.
        target: full target Hamiltonian on the computational register.
        n_low: number of levels compared; defaults to 2**n_comp.
        spec: layout, required when ``gadget`` is a bare PauliSum with ancillas.

    Returns:
        epsilon in the units of the coefficients.
    """
    if isinstance(gadget, GadgetSpec):
        spec = gadget
        gadget = build_gadget(spec)
    n_comp = target.n_qubits
    if two_local.n_qubits != n_comp:
        raise ValueError("two_local and target must share the computational register")
    if n_low is None:
        n_low = 1 << n_comp
    target_levels = np.linalg.eigvalsh(target.to_matrix())[:n_low]
    if spec is None or spec.r == 0:
        if gadget.n_qubits != n_comp:
            raise ValueError("a gadget with ancillas needs its GadgetSpec")
        levels = np.linalg.eigvalsh((two_local + gadget).to_matrix())[:n_low] if len(gadget) else \
            np.linalg.eigvalsh(two_local.to_matrix())[:n_low]
        return float(np.max(np.abs(levels - target_levels)))
    if spec.n_qubits > DENSE_QUBIT_CAP:
        raise ValueError(f"{spec.n_qubits} qubits exceed the dense cap of {DENSE_QUBIT_CAP}")
    iso = block_parity_isometry(spec)
    g_mat = pauli_to_sparse(gadget)
    full = two_local.extend(spec.n_qubits)
    pure = (iso.T @ g_mat @ iso).toarray()
    both = pure + (iso.T @ pauli_to_sparse(full) @ iso).toarray()
    pure_levels = _low_levels(pure, n_low)
    rest_levels = np.linalg.eigvalsh((target - two_local).to_matrix())[:n_low]
    offset = pure_levels.mean() - rest_levels.mean()
    levels = _low_levels(both, n_low) - offset
    return float(np.max(np.abs(levels - target_levels)))
