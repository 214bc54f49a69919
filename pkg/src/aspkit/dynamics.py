"""Adiabatic state preparation: schedules, propagation, gaps and minimal times.

The path Hamiltonian is a weighted sum H(s) = sum_k f_k(s) M_k.  The linear
path uses f = (1-s, s) on (H_init, H_final).  Time stepping uses the midpoint
exponential

    psi(t + dt) = exp(-i H(s((t + dt/2)/T)) dt) psi(t).

Propagation, eigensolves and overlaps run inside the subspace that the
initial state can reach: the union of connected components (of the combined
sparsity pattern of every M_k) that intersect the support of psi0.  Because
every H(s) is block diagonal over those components, this is exact, and it
drops symmetry sectors the dynamics never visits (for example a triplet
level lying below a singlet initial state).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import expm_multiply

from .fermion_core import DENSE_LIMIT, ground_state

__all__ = [
    "Schedule",
    "HamiltonianPath",
    "AspProblem",
    "AspTrace",
    "GapProfile",
    "NormDriftError",
    "NotReachableError",
    "interpolate",
    "expm_apply",
    "reachable_isometry",
    "evolve",
    "evolve_converged",
    "gap_profile",
    "sufficient_time",
    "find_min_time",
    "ground_projector",
    "molecular_problem",
    "gadget_path",
    "evolve_gadget_asp",
    "run_manifest",
]

log = logging.getLogger(__name__)

NORM_ABORT = 1e-8
DEGENERACY_TOL = 1e-10


class NormDriftError(RuntimeError):
    """State norm drifted beyond tolerance during propagation."""


class NotReachableError(RuntimeError):
    """Target overlap not reached below the time cap."""


# --------------------------------------------------------------------------- schedules

@dataclass(frozen=True)
class Schedule:
    """Map from elapsed fraction tau = t/T to path parameter s.

    Attributes:
        kind: ``"linear"``, ``"power"`` (s = tau**p) or ``"tabulated"``
            (piecewise-linear through ``table``).
        p: exponent for ``"power"``.
        table: ((tau, s), ...) for ``"tabulated"``, strictly increasing in tau,
            non-decreasing in s, starting at (0, 0) and ending at (1, 1).
    """

    kind: str = "linear"
    p: float = 1.0
    table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "power":
            if not self.p > 0:
                raise ValueError(f"power schedule needs p > 0, got {self.p}")
        elif self.kind == "tabulated":
            tab = tuple((float(a), float(b)) for a, b in self.table)
            object.__setattr__(self, "table", tab)
            taus = np.array([a for a, _ in tab])
            ss = np.array([b for _, b in tab])
            if len(tab) < 2 or np.any(np.diff(taus) <= 0):
                raise ValueError("tabulated schedule needs >= 2 points, strictly increasing in tau")
            if np.any(np.diff(ss) < 0):
                raise ValueError("tabulated schedule must be non-decreasing in s")
            if tab[0] != (0.0, 0.0) or tab[-1] != (1.0, 1.0):
                raise ValueError("tabulated schedule must run from (0, 0) to (1, 1)")
        elif self.kind != "linear":
            raise ValueError(f"unknown schedule {self.kind!r}")

    @classmethod
    def linear(cls) -> "Schedule":
        return cls("linear")

    @classmethod
    def power(cls, p: float) -> "Schedule":
        return cls("power", p=float(p))

    @classmethod
    def tabulated(cls, points: Sequence[tuple[float, float]]) -> "Schedule":
        return cls("tabulated", table=tuple(points))

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """``linear`` or ``power:P``."""
        text = text.strip().lower()
        if text == "linear":
            return cls.linear()
        if text.startswith("power:"):
            return cls.power(float(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse schedule {text!r}; use linear or power:P")

    def label(self) -> str:
        if self.kind == "power":
            return f"power:{self.p:g}"
        if self.kind == "tabulated":
            return "tabulated:" + ";".join(f"{a:g},{b:g}" for a, b in self.table)
        return "linear"

    def inverse(self, s):
        """tau(s) for linear and power schedules; None for tabulated ones."""
        s = np.clip(s, 0.0, 1.0)
        if self.kind == "linear":
            return s
        if self.kind == "power":
            return s ** (1.0 / self.p)
        return None

    def __call__(self, tau):
        tau = np.clip(tau, 0.0, 1.0)
        if self.kind == "linear":
            return tau
        if self.kind == "power":
            return tau ** self.p
        taus, ss = zip(*self.table)
        return np.interp(tau, taus, ss)


# --------------------------------------------------------------------------- operators

def _as_operator(h):
    if hasattr(h, "to_sparse"):  # PauliSum
        return h.to_sparse()
    return h


def interpolate(h_init, h_final, s: float):
    """(1 - s) h_init + s h_final."""
    a, b = _as_operator(h_init), _as_operator(h_final)
    if a.shape != b.shape:
        raise ValueError(f"operator spaces differ: {a.shape} vs {b.shape}")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    return (1.0 - s) * a + s * b


def expm_apply(h, dt: float, v: np.ndarray) -> np.ndarray:
    """exp(-i h dt) v for Hermitian h.

    Dense eigendecomposition up to 512 rows (exact up to rounding); above
    that, scipy's truncated-Taylor ``expm_multiply`` on the sparse matrix.
    """
    v = np.asarray(v, dtype=complex)
    if h.shape[0] <= DENSE_LIMIT:
        dense = h.toarray() if sps.issparse(h) else np.asarray(h)
        w, u = np.linalg.eigh(dense)
        return u @ (np.exp(-1j * w * dt) * (u.conj().T @ v))
    out = expm_multiply(-1j * dt * sps.csr_matrix(h), v)
    if not np.all(np.isfinite(out)):
        raise ArithmeticError("matrix exponential produced non-finite values")
    return out


@dataclass
class HamiltonianPath:
    """H(s) = sum_k f_k(s) M_k with optional analytic derivatives df_k/ds.

    Attributes:
        mats: operator matrices (dense or sparse), all the same shape.
        fns: weight functions of s.
        dfns: derivative functions (central differences if omitted).
    """

    mats: list
    fns: list[Callable[[float], float]]
    dfns: list[Callable[[float], float]] | None = None

    def __post_init__(self):
        self.mats = [_as_operator(m) for m in self.mats]
        shapes = {m.shape for m in self.mats}
        if len(shapes) != 1:
            raise ValueError(f"path operators have different shapes {shapes}")
        if len(self.fns) != len(self.mats):
            raise ValueError("need one weight function per operator")

    @classmethod
    def linear(cls, h_init, h_final) -> "HamiltonianPath":
        return cls([h_init, h_final], [lambda s: 1.0 - s, lambda s: s], [lambda s: -1.0, lambda s: 1.0])

    @property
    def dim(self) -> int:
        return self.mats[0].shape[0]

    def at(self, s: float):
        out = self.fns[0](s) * self.mats[0]
        for f, m in zip(self.fns[1:], self.mats[1:]):
            out = out + f(s) * m
        return out

    def derivative(self, s: float, delta: float = 1e-6):
        if self.dfns is not None:
            weights = [df(s) for df in self.dfns]
        else:
            lo, hi = max(0.0, s - delta), min(1.0, s + delta)
            weights = [(f(hi) - f(lo)) / (hi - lo) for f in self.fns]
        out = weights[0] * self.mats[0]
        for w, m in zip(weights[1:], self.mats[1:]):
            out = out + w * m
        return out

    def restrict(self, iso) -> "HamiltonianPath":
        """Project every operator onto the column space of an isometry (dense result)."""
        iso = sps.csr_matrix(iso)
        mats = []
        for m in self.mats:
            sub = iso.conj().T @ (m @ iso)
            mats.append(sub.toarray() if sps.issparse(sub) else np.asarray(sub))
        return HamiltonianPath(mats, list(self.fns), None if self.dfns is None else list(self.dfns))


def reachable_isometry(mats: Sequence, psi0: np.ndarray, tol: float = 0.0) -> sps.csr_matrix:
    """Selector onto the connected components that the state can reach.

    Args:
        mats: operators whose combined sparsity pattern defines the graph.
        psi0: initial state; components touching its support are kept.
        tol: entries with modulus <= tol are treated as structural zeros.

    Returns:
        dim x d sparse isometry whose columns are basis vectors, ascending.
    """
    dim = mats[0].shape[0]
    pattern = sps.csr_matrix((dim, dim))
    for m in mats:
        a = abs(sps.csr_matrix(m))
        if tol:
            a.data[a.data <= tol] = 0
            a.eliminate_zeros()
        pattern = pattern + a
    _, labels = connected_components(pattern, directed=False)
    support = np.flatnonzero(np.abs(psi0) > 0)
    keep = np.flatnonzero(np.isin(labels, np.unique(labels[support])))
    return sps.csr_matrix((np.ones(len(keep)), (keep, np.arange(len(keep)))), shape=(dim, len(keep)))


def _eigh(h) -> tuple[np.ndarray, np.ndarray]:
    dense = h.toarray() if sps.issparse(h) else np.asarray(h)
    return np.linalg.eigh(dense)


def ground_projector(h, tol: float = DEGENERACY_TOL) -> tuple[float, np.ndarray]:
    """Lowest eigenvalue and an orthonormal basis of its (possibly degenerate) eigenspace."""
    if h.shape[0] > DENSE_LIMIT:
        pairs = ground_state(h, k=2)
        if pairs[1][0] - pairs[0][0] > tol:
            return pairs[0][0], pairs[0][1][:, None]
        w, v = _eigh(h)
    else:
        w, v = _eigh(h)
    deg = int(np.sum(w - w[0] <= tol))
    return float(w[0]), v[:, :deg]


def _projected_weight(basis: np.ndarray, psi: np.ndarray) -> float:
    return float(min(1.0, np.linalg.norm(basis.conj().T @ psi) ** 2))


# --------------------------------------------------------------------------- problems and traces

@dataclass
class AspProblem:
    """Everything needed to run one adiabatic state preparation.

    Attributes:
        h_init, h_final: endpoint operators (sparse/dense matrices or PauliSums).
        total_time: T in hbar/E_h.
        schedule: tau -> s map.
        psi0: initial state; ground state of h_init when omitted.
        target: final-overlap reference, a state vector or an orthonormal
            column basis (projector onto a degenerate space).  Defaults to the
            ground space of h_final inside the reachable subspace.
        dt: largest time step.
        ds: largest change of s per step (steps are refined where the
            schedule moves fast, e.g. near tau = 0 for small powers).
        stride: sample every ``stride`` steps (plus both endpoints).
        path: explicit path overriding the linear interpolation.
        restrict: propagate inside the reachable subspace (exact; see module notes).
        symmetry: optional isometry applied before the reachability analysis.
        final_overlap: optional callable psi_full -> float replacing the target overlap.
    """

    h_init: object
    h_final: object
    total_time: float
    schedule: Schedule = field(default_factory=Schedule.linear)
    psi0: np.ndarray | None = None
    target: np.ndarray | None = None
    dt: float = 0.1
    ds: float = 0.01
    stride: int = 50
    path: HamiltonianPath | None = None
    restrict: bool = True
    symmetry: object | None = None
    final_overlap: Callable[[np.ndarray], float] | None = None

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError(f"total time must be positive, got {self.total_time}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if not 0 < self.ds <= 1:
            raise ValueError(f"s step must lie in (0, 1], got {self.ds}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.path is None:
            self.path = HamiltonianPath.linear(self.h_init, self.h_final)

    def with_time(self, total_time: float, dt: float | None = None, ds: float | None = None) -> "AspProblem":
        return replace(self, total_time=total_time, dt=self.dt if dt is None else dt,
                       ds=self.ds if ds is None else ds)

    def time_grid(self) -> np.ndarray:
        """Step boundaries: every step is at most ``dt`` long and moves s by at most ``ds``."""
        T = float(self.total_time)
        n = max(1, math.ceil(T / self.dt - 1e-9))
        grid = np.linspace(0.0, T, n + 1)
        inv = self.schedule.inverse(np.linspace(0.0, 1.0, math.ceil(1.0 / self.ds - 1e-9) + 1))
        if inv is not None:
            grid = np.union1d(grid, T * inv)
        else:
            taus, ss = zip(*self.schedule.table)
            grid = np.union1d(grid, T * np.asarray(taus))
            # split each tabulated segment finely enough for the s bound
            extra = []
            for (a0, b0), (a1, b1) in zip(self.schedule.table, self.schedule.table[1:]):
                m = max(1, math.ceil((b1 - b0) / self.ds - 1e-9))
                extra.append(T * np.linspace(a0, a1, m + 1))
            grid = np.union1d(grid, np.concatenate(extra))
        grid = grid[np.concatenate(([True], np.diff(grid) > 0))]
        grid[-1] = T
        return grid

    def manifest(self) -> dict:
        """JSON-serializable record of the scalar run parameters."""
        return {
            "total_time": self.total_time,
            "schedule": self.schedule.label(),
            "dt": self.dt,
            "ds": self.ds,
            "stride": self.stride,
            "restrict": self.restrict,
            "dim": self.path.dim,
        }


@dataclass
class _Prepared:
    path: HamiltonianPath          # restricted, dense
    embed: sps.csr_matrix          # full <- reduced isometry
    psi0: np.ndarray               # reduced
    target: np.ndarray | None      # reduced orthonormal columns
    final_overlap: Callable | None


def _prepare(p: AspProblem) -> _Prepared:
    path = p.path
    full_dim = path.dim
    psi0 = p.psi0
    if psi0 is None:
        psi0 = ground_state(_as_operator(p.h_init))[0][1]
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (full_dim,):
        raise ValueError(f"initial state has shape {psi0.shape}, expected ({full_dim},)")
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state is not normalized")
    embed = sps.identity(full_dim, format="csr")
    if p.symmetry is not None:
        embed = sps.csr_matrix(p.symmetry)
    if p.restrict:
        sym_path = path.restrict(embed) if p.symmetry is not None else path
        red0 = embed.conj().T @ psi0
        sel = reachable_isometry(sym_path.mats, red0)
        embed = sps.csr_matrix(embed @ sel)
    reduced = path.restrict(embed) if (p.restrict or p.symmetry is not None) else path
    psi_r = embed.conj().T @ psi0
    if abs(np.linalg.norm(psi_r) - 1) > 1e-10:
        raise ValueError("initial state is not contained in the symmetry subspace")
    target = None
    if p.final_overlap is None:
        if p.target is None:
            _, target = ground_projector(reduced.at(1.0))
        else:
            t = np.asarray(p.target, dtype=complex)
            t = t[:, None] if t.ndim == 1 else t
            target = embed.conj().T @ t
            if np.linalg.norm(target) < 1e-12:
                log.warning("target has no weight in the reachable subspace")
    return _Prepared(reduced, embed, psi_r, target, p.final_overlap)


@dataclass
class AspTrace:
    """Sampled time series of one run.

    Columns: t, s, norm, energy <H(s)>, ov_instant (weight on the
    instantaneous ground space), ov_final (weight on the target).
    """

    t: np.ndarray
    s: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    ov_instant: np.ndarray
    ov_final: np.ndarray
    final_state: np.ndarray
    dt: float
    n_steps: int
    extra: dict = field(default_factory=dict)

    COLUMNS = ("t", "s", "norm", "energy", "ov_instant", "ov_final")

    @property
    def final_overlap(self) -> float:
        return float(self.ov_final[-1])

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))

    def to_csv(self, out=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if out is not None:
            out.write(text)
        return text


def evolve(p: AspProblem) -> AspTrace:
    """Midpoint-rule propagation of one problem at its fixed ``dt``.

    The step is shortened so that an integer number of steps spans T.

    Raises:
        NormDriftError: norm deviates from 1 by more than 1e-8.
    """
    prep = _prepare(p)
    return _evolve_prepared(p, prep)


def _evolve_prepared(p: AspProblem, prep: _Prepared) -> AspTrace:
    T = float(p.total_time)
    grid = p.time_grid()
    n_steps = len(grid) - 1
    path = prep.path
    psi = prep.psi0.copy()
    rows = []

    def sample(t: float):
        s = float(p.schedule(t / T))
        h = path.at(s)
        nrm = float(np.linalg.norm(psi))
        energy = float(np.real(np.vdot(psi, h @ psi))) / nrm ** 2
        _, ground = ground_projector(h)
        ov_i = _projected_weight(ground, psi)
        if prep.final_overlap is not None:
            ov_f = float(prep.final_overlap(prep.embed @ psi))
        else:
            ov_f = _projected_weight(prep.target, psi)
        rows.append((t, s, nrm, energy, ov_i, ov_f))

    sample(0.0)
    for step in range(1, n_steps + 1):
        t0, t1 = grid[step - 1], grid[step]
        s_mid = float(p.schedule(0.5 * (t0 + t1) / T))
        psi = expm_apply(path.at(s_mid), t1 - t0, psi)
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > NORM_ABORT:
            raise NormDriftError(f"norm drift {drift:.3e} at step {step}")
        if step % p.stride == 0 or step == n_steps:
            sample(float(t1))
    cols = np.array(rows).T
    return AspTrace(*cols, final_state=np.asarray(prep.embed @ psi), dt=p.dt, n_steps=n_steps,
                    extra={"ds": p.ds})


def evolve_converged(p: AspProblem, tol: float = 1e-4, max_halvings: int = 10) -> AspTrace:
    """Evolve, halving dt and ds until the final overlap changes by less than ``tol``.

    The returned trace is the finest run; ``extra['dt_history']`` lists the
    (dt, final overlap) pairs tried.
    """
    prep = _prepare(p)
    prev = _evolve_prepared(p, prep)
    history = [(prev.dt, prev.final_overlap)]
    dt, ds = p.dt, p.ds
    for _ in range(max_halvings):
        dt, ds = dt / 2, ds / 2
        cur = _evolve_prepared(p.with_time(p.total_time, dt, ds), prep)
        history.append((cur.dt, cur.final_overlap))
        if abs(cur.final_overlap - prev.final_overlap) < tol:
            cur.extra["dt_history"] = history
            return cur
        prev = cur
    raise RuntimeError(f"time step did not converge after {max_halvings} halvings: {history}")


# --------------------------------------------------------------------------- gaps

@dataclass
class GapProfile:
    """Two lowest levels and the adiabatic matrix element along s."""

    s: np.ndarray
    e0: np.ndarray
    e1: np.ndarray
    m: np.ndarray
    degenerate: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.e1 - self.e0

    @property
    def g_min(self) -> float:
        return float(np.min(self.gap))

    @property
    def argmin(self) -> int:
        return int(np.argmin(self.gap))

    @property
    def s_min(self) -> float:
        return float(self.s[self.argmin])

    @property
    def eps(self) -> float:
        return float(np.max(self.m))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("s", "E0", "E1", "gap", "m"))
        for row in zip(self.s, self.e0, self.e1, self.gap, self.m):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def gap_profile(h_init, h_final, grid: Sequence[float], psi0: np.ndarray | None = None,
                path: HamiltonianPath | None = None, symmetry=None) -> GapProfile:
    """Ground/first-excited levels and |<1|dH/ds|0>| on a grid of s values.

    Args:
        h_init, h_final: endpoint operators (ignored if ``path`` is given).
        grid: s values in [0, 1], at least two.
        psi0: if given, levels are taken inside the subspace reachable from it.
        path: explicit path; dH/ds comes from its derivative.
        symmetry: optional isometry applied before the reachability analysis.

    Grid points where the gap falls below 1e-12 are flagged in
    ``degenerate`` and trigger a warning; m(s) is then basis dependent.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2 or np.any(grid < 0) or np.any(grid > 1):
        raise ValueError("grid needs at least two points within [0, 1]")
    if path is None:
        path = HamiltonianPath.linear(h_init, h_final)
    embed = None
    if symmetry is not None:
        embed = sps.csr_matrix(symmetry)
        path = path.restrict(embed)
    if psi0 is not None:
        v = np.asarray(psi0) if embed is None else embed.conj().T @ np.asarray(psi0)
        path = path.restrict(reachable_isometry(path.mats, v))
    if path.dim < 2:
        raise ValueError("gap profile needs at least a 2-dimensional space")
    e0, e1, m, deg = [], [], [], []
    for s in grid:
        w, v = _eigh(path.at(float(s)))
        d = path.derivative(float(s))
        e0.append(w[0])
        e1.append(w[1])
        m.append(abs(np.vdot(v[:, 1], d @ v[:, 0])))
        deg.append(w[1] - w[0] < 1e-12)
    deg = np.array(deg)
    if deg.any():
        warnings.warn(f"degenerate ground state at s = {grid[deg].tolist()}", RuntimeWarning, stacklevel=2)
    return GapProfile(grid, np.array(e0), np.array(e1), np.array(m), deg)


def sufficient_time(profile: GapProfile) -> float:
    """eps / g_min**2, the scale of the adiabatic sufficient-time condition."""
    if profile.g_min <= 1e-12:
        raise ZeroDivisionError("minimum gap is zero; no finite adiabatic time scale")
    return profile.eps / profile.g_min ** 2


# --------------------------------------------------------------------------- minimal time

def find_min_time(p: AspProblem, target: float = 0.99, t0: float = 1.0, cap: float = 1e7,
                  rel: float = 0.05, tol: float = 1e-4) -> tuple[float, list[tuple[float, float]]]:
    """Smallest T (to a relative bracket ``rel``) whose final overlap reaches ``target``.

    Doubles T from ``t0`` until success, then bisects the last bracket.
    Every evaluation uses :func:`evolve_converged` with tolerance ``tol``.

    Returns:
        (T*, [(T, final overlap), ...] for every evaluation).

    Raises:
        NotReachableError: no success up to ``cap``.
    """
    if not 0 < target < 1:
        raise ValueError("target overlap must lie in (0, 1)")
    evaluations: list[tuple[float, float]] = []

    def ok(T: float) -> bool:
        ov = evolve_converged(p.with_time(T), tol=tol).final_overlap
        evaluations.append((T, ov))
        return ov >= target

    T = t0
    if ok(T):
        return T, evaluations
    while True:
        lo, T = T, 2 * T
        if T > cap:
            raise NotReachableError(f"not adiabatically reachable at cap T={cap:g}")
        if ok(T):
            hi = T
            break
    while (hi - lo) / hi > rel:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi, evaluations


def run_manifest(p: AspProblem, **extra) -> str:
    from . import __version__
    data = {"code_version": __version__, **p.manifest(), **extra}
    return json.dumps(data, indent=2, sort_keys=True)


# --------------------------------------------------------------------------- problem builders

def molecular_problem(ints, init="mp", n_alpha: int | None = None, n_beta: int | None = None,
                      total_time: float = 1.0, schedule: Schedule | None = None, **kwargs) -> AspProblem:
    """ASP problem for an integral set with one of the initial Hamiltonians.

    Determinant-space inits (``ag``, ``mp``, ``cas:...``) run in the
    (n_alpha, n_beta) sector.  The initial state is the ground state of
    H_init inside the subspace reachable from the HF determinant, and the
    target is the ground space of H_final in that same subspace, so the
    spin symmetry of the HF state is carried through.  ``localx`` runs in
    the full qubit space from the uniform superposition, with the target
    being the full-space ground space of the mapped final Hamiltonian.
    """
    from .fermion_core import (InitKind, Sector, build_final_hamiltonian, build_initial_hamiltonian,
                               enumerate_basis, hf_determinant)
    from .qubit_map import jw_map, local_x_hamiltonian

    kind = InitKind.parse(init) if isinstance(init, str) else init
    schedule = schedule or Schedule.linear()
    if kind.variant == "localx":
        h_final = jw_map(ints).to_sparse()
        h_init = local_x_hamiltonian(ints.n_so).to_sparse()
        dim = h_final.shape[0]
        psi0 = np.full(dim, 1 / math.sqrt(dim))
        _, target = ground_projector(h_final)
        return AspProblem(h_init, h_final, total_time, schedule, psi0=psi0, target=target, **kwargs)
    if n_alpha is None or n_beta is None:
        n_alpha, n_beta = _default_electrons(ints)
    basis = enumerate_basis(Sector.for_integrals(ints, n_alpha, n_beta))
    h_final = build_final_hamiltonian(ints, basis)
    h_init = build_initial_hamiltonian(kind, ints, basis, h_final)
    hf = np.zeros(basis.dim)
    hf[hf_determinant(basis)] = 1.0
    sel = reachable_isometry([h_init, h_final], hf)
    sub = (sel.T @ h_init @ sel).toarray()
    _, vecs = ground_projector(sub)
    if vecs.shape[1] > 1:
        # degenerate initial ground space: start from the HF component within it
        v = vecs @ (vecs.conj().T @ (sel.T @ hf))
        v = v / np.linalg.norm(v)
    else:
        v = vecs[:, 0]
    psi0 = np.asarray(sel @ v).ravel()
    return AspProblem(h_init, h_final, total_time, schedule, psi0=psi0, **kwargs)


def _default_electrons(ints) -> tuple[int, int]:
    n = getattr(ints, "n_elec", None)
    if n is None:
        raise ValueError("electron count unknown; pass n_alpha and n_beta")
    ms2 = getattr(ints, "ms2", 0)
    return (n + ms2) // 2, (n - ms2) // 2


def gadget_path(ints, lam: float, restrict_c9: bool = True, coupling: str = "distributed",
                variant: str = "derived", four_local: bool = True):
    """Path H(s) for the gadgetized closed-form model.

    H(s) = (1-s) A0 + s A1 + sum_blocks [ H_anc + sum_j u_j(s) C_j ], where
    A0/A1 are the 2-local parts at s=0/1, H_anc the block penalties and C_j
    the unit couplings with weights u_j(s) computed from the interpolated
    4-local coefficient.  ``four_local=False`` keeps the ancilla register
    but zeroes every coupling (inert ancillas).

    Returns:
        (HamiltonianPath on the full register, GadgetSpec, two-local PauliSums (A0, A1)).
    """
    from dataclasses import replace as dc_replace

    from .gadgets import extract_klocal, gadget_parts, gadget_spec
    from .qubit_map import appendix_hamiltonian

    h0 = appendix_hamiltonian(ints, 0.0, variant, restrict_c9)
    h1 = appendix_hamiltonian(ints, 1.0, variant, restrict_c9)
    a0, _ = extract_klocal(h0)
    a1, targets = extract_klocal(h1)
    spec = gadget_spec(targets, lam, h1.n_qubits, coupling)
    n = spec.n_qubits
    anc, couplings = gadget_parts(spec)
    mats = [a0.extend(n), a1.extend(n), anc]
    fns = [lambda s: 1.0 - s, lambda s: s, lambda s: 1.0]
    c_start = [h0.coeff(t.word(h1.n_qubits)).real for t in spec.terms]

    def weight(b: int, j: int):
        term = spec.terms[b]
        c0, c1 = c_start[b], term.coeff

        def f(s):
            if not four_local:
                return 0.0
            return float(spec.couplings(dc_replace(term, coeff=c0 + s * (c1 - c0)))[j])
        return f

    for b, j, op in couplings:
        mats.append(op)
        fns.append(weight(b, j))
    return HamiltonianPath(mats, fns), spec, (a0, a1)


def evolve_gadget_asp(ints, lam: float = 0.01, restrict_c9: bool = True, total_time: float = 500.0,
                      dt: float = 0.1, stride: int = 50, coupling: str = "distributed",
                      four_local: bool = True, converge: bool = False, tol: float = 1e-4,
                      max_qubits: int = 16) -> AspTrace:
    """ASP on the gadgetized register, starting from HF (x) cat states.

    Runs in the joint +1 eigenspace of every block's X...X operator and,
    within it, in the components reachable from the initial state.  The
    ``ov_final`` column is the squared overlap of the reduced computational
    state (partial trace over ancillas) with the target: the ground state
    of the closed-form model at s=1 (with the same c9 restriction) inside
    the subspace reachable from HF.  ``extra`` also carries the full-register
    overlap with target (x) cat states and the gadget layout.
    """
    from .gadgets import ancilla_initial_state, block_parity_isometry, extract_klocal
    from .qubit_map import appendix_hamiltonian

    h_end = appendix_hamiltonian(ints, 1.0, restrict_c9=restrict_c9)
    n = h_end.n_qubits + sum(t.k for t in extract_klocal(h_end)[1])
    if n > max_qubits:
        raise ValueError(f"{n}-qubit register exceeds the evolution cap of {max_qubits} qubits")
    path, spec, _ = gadget_path(ints, lam, restrict_c9, coupling, four_local=four_local)
    nc = spec.n_comp
    # computational target
    h_target = h_end.to_sparse()
    hf_index = 0b0011  # spin orbitals 1 and 2 occupied
    comp0 = np.zeros(1 << nc)
    comp0[hf_index] = 1.0
    sel = reachable_isometry([h_target], comp0)
    _, tv = ground_projector((sel.T @ h_target @ sel).toarray())
    target = np.asarray(sel @ tv[:, 0]).ravel()
    anc0 = ancilla_initial_state(spec.r)
    psi0 = np.kron(anc0, comp0)
    full_target = np.kron(anc0, target)

    def reduced_overlap(psi: np.ndarray) -> float:
        m = psi.reshape(-1, 1 << nc)
        return float(np.linalg.norm(m @ target.conj()) ** 2)

    prob = AspProblem(None, None, total_time, psi0=psi0, dt=dt, stride=stride, path=path,
                      symmetry=block_parity_isometry(spec), final_overlap=reduced_overlap)
    trace = evolve_converged(prob, tol=tol) if converge else evolve(prob)
    trace.extra.update({
        "full_register_overlap": float(abs(np.vdot(full_target, trace.final_state)) ** 2),
        "gadget": spec.sidecar(),
    })
    return trace
