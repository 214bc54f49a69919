"""Electron-integral containers, FCIDUMP I/O and built-in CAS(2,2) datasets.

Files use 1-based orbital indices; everything in memory is 0-based.  Two-electron
integrals are stored sparsely under a canonical key of the real 8-fold
permutational symmetry, so any symmetry image resolves to the same entry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np

__all__ = [
    "FcidumpError",
    "SpatialIntegrals",
    "IntegralSet",
    "chem_key",
    "parse_fcidump",
    "read_fcidump",
    "write_fcidump",
    "spatial_to_spin",
    "builtin_dataset",
    "BUILTIN_NAMES",
]

ALPHA, BETA = 0, 1


class FcidumpError(ValueError):
    """Malformed FCIDUMP input; carries the offending 1-based line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def chem_key(p: int, q: int, r: int, s: int) -> tuple[int, int, int, int]:
    """Canonical representative of (pq|rs) under the real 8-fold symmetry."""
    a = (p, q) if p >= q else (q, p)
    b = (r, s) if r >= s else (s, r)
    return a + b if a >= b else b + a


def _symmetric_images(p, q, r, s):
    return {
        (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
        (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
    }


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpatialIntegrals:
    """Spatial-orbital integrals in chemist notation, as read from an FCIDUMP.

    Attributes:
        n_orb: number of spatial orbitals.
        n_elec: number of electrons.
        h_core: one-electron integrals, shape (n_orb, n_orb).
        eri: sparse (pq|rs) keyed by :func:`chem_key` (0-based).
        e_core: scalar core + nuclear repulsion energy.
        ms2: 2*S_z declared by the file.
        orbital_energies: optional per-orbital energies (stored, unused).
    """

    n_orb: int
    n_elec: int
    h_core: np.ndarray
    eri: dict = field(default_factory=dict)
    e_core: float = 0.0
    ms2: int = 0
    orbital_energies: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_orb < 1:
            raise ValueError("n_orb must be >= 1")
        if self.n_elec < 0:
            raise ValueError("n_elec must be >= 0")
        h = _frozen(self.h_core)
        if h.shape != (self.n_orb, self.n_orb):
            raise ValueError(f"h_core shape {h.shape} does not match n_orb={self.n_orb}")
        if not np.array_equal(h, h.T):
            raise ValueError("h_core is not symmetric")
        object.__setattr__(self, "h_core", h)
        eri = {}
        for key, val in self.eri.items():
            ck = chem_key(*key)
            if ck in eri and eri[ck] != val:
                raise ValueError(f"inconsistent symmetry images for (pq|rs) {key}")
            eri[ck] = float(val)
        object.__setattr__(self, "eri", eri)

    def eri_value(self, p: int, q: int, r: int, s: int) -> float:
        """(pq|rs) for 0-based spatial indices; absent entries are zero."""
        return self.eri.get(chem_key(p, q, r, s), 0.0)


@dataclass(frozen=True, eq=False)
class IntegralSet:
    """Spin-orbital integrals: h_pq and physicist-notation <pq|rs>.

    ``g`` is keyed by the chemist canonical key of the equivalent (pr|qs), so
    every real-orbital symmetry image of <pq|rs> shares one entry.  Use
    :meth:`g_value` to query.
    """

    n_so: int
    h: np.ndarray
    g: dict
    e_core: float = 0.0
    spin_of: tuple = ()
    n_elec: int | None = None
    ms2: int = 0

    def __post_init__(self):
        h = _frozen(self.h)
        if h.shape != (self.n_so, self.n_so):
            raise ValueError(f"h shape {h.shape} does not match n_so={self.n_so}")
        object.__setattr__(self, "h", h)
        spin = tuple(self.spin_of) if self.spin_of else tuple(p % 2 for p in range(self.n_so))
        if len(spin) != self.n_so:
            raise ValueError("spin_of length must equal n_so")
        object.__setattr__(self, "spin_of", spin)

    def g_value(self, p: int, q: int, r: int, s: int) -> float:
        """<pq|rs> for 0-based spin-orbital indices."""
        return self.g.get(chem_key(p, r, q, s), 0.0)

    @cached_property
    def g_tensor(self) -> np.ndarray:
        """Dense <pq|rs> array, built on demand for matrix assembly."""
        n = self.n_so
        t = np.zeros((n, n, n, n))
        for (p, r, q, s), val in self.g.items():
            # key is chemist (pr|qs) -> physicist <pq|rs>
            for a, b, c, d in _symmetric_images(p, r, q, s):
                t[a, c, b, d] = val
        t.setflags(write=False)
        return t

    @property
    def alpha_orbitals(self) -> list[int]:
        return [p for p in range(self.n_so) if self.spin_of[p] == ALPHA]

    @property
    def beta_orbitals(self) -> list[int]:
        return [p for p in range(self.n_so) if self.spin_of[p] == BETA]


# --------------------------------------------------------------------------- parsing

_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_header(text: str, lineno: int) -> dict:
    body = re.sub(r"&FCI|&END|/", " ", text, flags=re.I)
    marks = list(_HEADER_KEY.finditer(body))
    out = {}
    for m, nxt in zip(marks, marks[1:] + [None]):
        value = body[m.end(): nxt.start() if nxt else len(body)]
        out[m.group(1).upper()] = value.strip().strip(",").strip()
    for need in ("NORB", "NELEC"):
        if need not in out:
            raise FcidumpError(f"header is missing {need}", lineno)
    return out


def _header_int(header: dict, key: str, lineno: int, default: int | None = None) -> int:
    if key not in header:
        return default
    try:
        return int(header[key])
    except ValueError:
        raise FcidumpError(f"header field {key}={header[key]!r} is not an integer", lineno) from None


def _looks_like_record(line: str) -> bool:
    fields = line.split()
    if len(fields) != 5:
        return False
    try:
        float(fields[0].replace("D", "E").replace("d", "e"))
    except ValueError:
        return False
    return True


def parse_fcidump(text: str | Iterable[str]) -> SpatialIntegrals:
    """Parse FCIDUMP text into :class:`SpatialIntegrals`.

    Records are ``value p q r s`` with 1-based indices.  ``p q 0 0`` is a
    one-electron integral, ``p 0 0 0`` an orbital energy and ``0 0 0 0`` the core
    energy.  Any other pattern containing zeros is rejected.

    Raises:
        FcidumpError: malformed header, bad index, or non-numeric value.
    """
    lines = text.splitlines() if isinstance(text, str) else [ln.rstrip("\n") for ln in text]

    # header runs to the first &END or '/' line, or up to the first numeric record
    header_lines: list[str] = []
    header_start = None
    start = len(lines)
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            continue
        if header_start is None:
            header_start = i + 1
        elif _looks_like_record(stripped):
            start = i
            break
        header_lines.append(stripped)
        if re.search(r"&END|/\s*$", stripped, re.I):
            start = i + 1
            break
    if header_start is None:
        raise FcidumpError("empty input", 1)
    header = _parse_header(" ".join(header_lines), header_start)
    n_orb = _header_int(header, "NORB", header_start)
    n_elec = _header_int(header, "NELEC", header_start)
    ms2 = _header_int(header, "MS2", header_start, default=0)
    if n_orb < 1:
        raise FcidumpError(f"NORB must be positive, got {n_orb}", header_start)

    h_core = np.zeros((n_orb, n_orb))
    eri: dict = {}
    orbital_energies: dict = {}
    e_core = 0.0
    for i in range(start, len(lines)):
        lineno = i + 1
        fields = lines[i].split()
        if not fields:
            continue
        if len(fields) != 5:
            raise FcidumpError(f"expected 5 fields 'value p q r s', got {len(fields)}", lineno)
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
        except ValueError:
            raise FcidumpError(f"non-numeric integral value {fields[0]!r}", lineno) from None
        try:
            p, q, r, s = (int(x) for x in fields[1:])
        except ValueError:
            raise FcidumpError("orbital indices must be integers", lineno) from None
        for idx in (p, q, r, s):
            if not 0 <= idx <= n_orb:
                raise FcidumpError(f"orbital index {idx} out of range [0, {n_orb}]", lineno)
        if p and q and r and s:
            key = chem_key(p - 1, q - 1, r - 1, s - 1)
            eri[key] = value
        elif p and q and not r and not s:
            h_core[p - 1, q - 1] = h_core[q - 1, p - 1] = value
        elif p and not q and not r and not s:
            orbital_energies[p - 1] = value
        elif not (p or q or r or s):
            e_core = value
        else:
            raise FcidumpError(f"invalid index pattern {p} {q} {r} {s}", lineno)
    return SpatialIntegrals(
        n_orb=n_orb, n_elec=n_elec, h_core=h_core, eri=eri, e_core=e_core,
        ms2=ms2, orbital_energies=orbital_energies,
    )


def read_fcidump(path) -> SpatialIntegrals:
    with open(path) as fh:
        return parse_fcidump(fh.read())


def write_fcidump(sp: SpatialIntegrals, out: TextIO | None = None) -> str:
    """Serialize to FCIDUMP text (17 significant digits, exact round trip)."""
    rows = [f" &FCI NORB={sp.n_orb},NELEC={sp.n_elec},MS2={sp.ms2},", "  ORBSYM=" + "1," * sp.n_orb,
            "  ISYM=1,", " &END"]
    fmt = "{:24.16e} {:4d} {:4d} {:4d} {:4d}"
    for (p, q, r, s), val in sorted(sp.eri.items()):
        rows.append(fmt.format(val, p + 1, q + 1, r + 1, s + 1))
    for p in range(sp.n_orb):
        for q in range(p + 1):
            if sp.h_core[p, q] != 0.0:
                rows.append(fmt.format(sp.h_core[p, q], p + 1, q + 1, 0, 0))
    for p, val in sorted(sp.orbital_energies.items()):
        rows.append(fmt.format(val, p + 1, 0, 0, 0))
    rows.append(fmt.format(sp.e_core, 0, 0, 0, 0))
    text = "\n".join(rows) + "\n"
    if out is not None:
        out.write(text)
    return text


# --------------------------------------------------------------------------- spin expansion

def spatial_to_spin(sp: SpatialIntegrals, ordering: str = "interleave") -> IntegralSet:
    """Expand spatial integrals to spin orbitals.

    ``interleave`` maps spatial orbital p to spin orbitals (2p alpha, 2p+1 beta);
    ``block`` puts all alpha orbitals first.  <p q|r s> = (p r|q s) with spin
    deltas applied, so spin-forbidden entries are never stored.
    """
    n = sp.n_orb
    if ordering == "interleave":
        so = lambda p, sigma: 2 * p + sigma  # noqa: E731
        spin_of = tuple(p % 2 for p in range(2 * n))
    elif ordering == "block":
        so = lambda p, sigma: p + sigma * n  # noqa: E731
        spin_of = tuple(0 if p < n else 1 for p in range(2 * n))
    else:
        raise ValueError(f"unknown spin ordering {ordering!r}")

    h = np.zeros((2 * n, 2 * n))
    for sigma in (ALPHA, BETA):
        for p in range(n):
            for q in range(n):
                h[so(p, sigma), so(q, sigma)] = sp.h_core[p, q]

    g: dict = {}
    for (p, q, r, s), val in sp.eri.items():
        if val == 0.0:
            continue
        for a, b, c, d in _symmetric_images(p, q, r, s):
            # (ab|cd) spatial -> (a s1 b s1 | c s2 d s2)
            for s1 in (ALPHA, BETA):
                for s2 in (ALPHA, BETA):
                    g[chem_key(so(a, s1), so(b, s1), so(c, s2), so(d, s2))] = val
    return IntegralSet(n_so=2 * n, h=h, g=g, e_core=sp.e_core, spin_of=spin_of, n_elec=sp.n_elec, ms2=sp.ms2)


# --------------------------------------------------------------------------- built-ins

# HOMO/LUMO CAS(2,2) values in E_h (CH2 at r/r0 = 1, 160 deg; H2 at r = 1.401 a0).
_TABLE = {
    "ch2_cas22": dict(h11=-0.853007, h33=-0.841410, j_hh=0.530171, j_ll=0.529723,
                      j_hl=0.481270, k_hl=0.032834),
    "h2_minimal": dict(h11=-1.252477, h33=-0.475934, j_hh=0.674493, j_ll=0.697397,
                       j_hl=0.663472, k_hl=0.181287),
}
BUILTIN_NAMES = tuple(_TABLE)


def builtin_spatial(name: str) -> SpatialIntegrals:
    try:
        t = _TABLE[name]
    except KeyError:
        raise KeyError(f"unknown built-in dataset {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    eri = {
        (0, 0, 0, 0): t["j_hh"],
        (1, 1, 1, 1): t["j_ll"],
        (0, 0, 1, 1): t["j_hl"],
        (0, 1, 0, 1): t["k_hl"],
    }
    return SpatialIntegrals(n_orb=2, n_elec=2, h_core=np.diag([t["h11"], t["h33"]]), eri=eri)


def builtin_dataset(name: str) -> IntegralSet:
    """Spin-orbital integrals for ``ch2_cas22`` or ``h2_minimal``.

    Spin orbitals 0,1 are the HOMO alpha/beta pair and 2,3 the LUMO pair.  The core
    and nuclear terms are shifted out (``e_core = 0``).
    """
    return spatial_to_spin(builtin_spatial(name), ordering="interleave")
