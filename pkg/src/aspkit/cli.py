"""Command-line front end.

Subcommands: spectrum, evolve, gap-profile, min-time, gadgetize, sweep.
Every command writes its numeric output as CSV plus a ``manifest.json``
holding the full configuration, and ``--config manifest.json`` replays a
run with identical output.

Exit codes: 0 success, 1 run failure, 2 missing input file, 3 infeasible
electron sector.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (Schedule, evolve, evolve_converged, evolve_gadget_asp, find_min_time, gap_profile,
                       molecular_problem, sufficient_time)
from .fermion_core import (InfeasibleSectorError, InitKind, Sector, build_final_hamiltonian,
                           enumerate_basis, hf_determinant, hf_energy)
from .gadgets import build_gadget, extract_klocal, gadget_spec, spectral_error
from .integrals_io import builtin_dataset, read_fcidump, spatial_to_spin
from .qubit_map import appendix_hamiltonian

log = logging.getLogger("aspkit")

EXIT_FAILURE = 1
EXIT_MISSING_FILE = 2
EXIT_INFEASIBLE_SECTOR = 3

# options recorded in manifests; everything else is derived from them
CONFIG_KEYS = ("dataset", "fcidump", "sector", "init", "schedule", "time", "target_overlap", "lam",
               "restrict_c9", "coefficients", "coupling", "dt", "stride", "points", "s", "axis", "values",
               "converge")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--dataset", default="ch2_cas22", help="built-in integral set (ch2_cas22, h2_minimal)")
    p.add_argument("--fcidump", default=None, help="FCIDUMP file; overrides --dataset")
    p.add_argument("--sector", default=None, help="electron numbers Na,Nb (default from the integrals)")
    p.add_argument("--init", default="mp", help="ag | mp | localx | cas:ORBS (1-based spatial orbitals)")
    p.add_argument("--schedule", default="linear", help="linear | power:P")
    p.add_argument("--time", type=float, default=None, help="total time T in hbar/E_h")
    p.add_argument("--target-overlap", type=float, default=0.99)
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="gadget perturbation strength")
    p.add_argument("--restrict-c9", action="store_true", help="drop the XYYX/YXXY pair of 4-qubit terms")
    p.add_argument("--coefficients", default="derived", choices=("derived", "printed"),
                   help="closed-form model coefficients")
    p.add_argument("--coupling", default="distributed", choices=("distributed", "literal"))
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--stride", type=int, default=50)
    p.add_argument("--converge", action="store_true", help="halve dt until the final overlap is stable")
    p.add_argument("--out", default="aspkit_out", help="output directory")
    p.add_argument("--config", default=None, help="replay the configuration stored in a manifest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aspkit", description="Adiabatic state preparation toolkit")
    parser.add_argument("--version", action="version", version=f"aspkit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("spectrum", "sector eigenvalues and HF data"),
        ("evolve", "one ASP run (gadget mode with --lambda)"),
        ("gap-profile", "gap and adiabatic matrix element along s"),
        ("min-time", "smallest T reaching the target overlap"),
        ("gadgetize", "2-local gadget Hamiltonian of the closed-form model"),
        ("sweep", "T ladder, lambda grid or init comparison"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name == "gap-profile":
            p.add_argument("--points", type=int, default=101)
        if name == "gadgetize":
            p.add_argument("--s", type=float, default=1.0, help="path parameter of the gadgetized model")
        if name == "sweep":
            p.add_argument("--axis", required=True, choices=("T-ladder", "lambda-grid", "init-comparison"))
            p.add_argument("--values", default=None,
                           help="comma-separated sweep values (times, lambdas or init kinds)")
    return parser


# --------------------------------------------------------------------------- helpers

def _load_integrals(args):
    if args.fcidump:
        path = Path(args.fcidump)
        if not path.is_file():
            raise FileNotFoundError(f"file not found: {path}")
        return spatial_to_spin(read_fcidump(path))
    return builtin_dataset(args.dataset)


def _sector(args, ints) -> tuple[int, int]:
    if args.sector:
        na, nb = (int(x) for x in args.sector.split(","))
    else:
        na, nb = (ints.n_elec + ints.ms2) // 2, (ints.n_elec - ints.ms2) // 2
    Sector.for_integrals(ints, na, nb)  # validates
    return na, nb


def _problem(args, ints, total_time=None):
    na, nb = _sector(args, ints)
    return molecular_problem(ints, args.init, na, nb, total_time or args.time or 1.0,
                             Schedule.parse(args.schedule), dt=args.dt, stride=args.stride)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(args, out: Path, **results):
    config = {k: getattr(args, k) for k in CONFIG_KEYS if hasattr(args, k)}
    data = {"command": args.command, "code_version": __version__, "config": config, "results": results}
    (out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_rows(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


# --------------------------------------------------------------------------- commands

def cmd_spectrum(args) -> int:
    ints = _load_integrals(args)
    na, nb = _sector(args, ints)
    basis = enumerate_basis(Sector.for_integrals(ints, na, nb))
    h = build_final_hamiltonian(ints, basis).toarray()
    w, v = np.linalg.eigh(h)
    k = hf_determinant(basis)
    weights = np.abs(v[k, :]) ** 2
    out = _out_dir(args)
    _write_rows(out / "spectrum.csv", ("level", "energy", "hf_weight"),
                [(i, float(e), float(x)) for i, (e, x) in enumerate(zip(w, weights))])
    e_hf = hf_energy(ints, int(basis.dets[k]))
    gap = float(w[1] - w[0]) if len(w) > 1 else float("nan")
    # levels sharing the HF determinant's symmetry block
    prob = molecular_problem(ints, "mp", na, nb)
    from .dynamics import _prepare
    prep = _prepare(prob)
    wb = np.linalg.eigvalsh(prep.path.at(1.0))
    hf_block_overlap = float(np.linalg.norm(prep.target.conj().T @ prep.psi0) ** 2)
    print(f"E0={w[0]:.10f} E1={w[1] if len(w) > 1 else float('nan'):.10f} gap={gap:.10f} "
          f"hf_overlap={weights[0]:.10f} E_HF={e_hf:.10f}")
    print(f"hf_block_E0={wb[0]:.10f} hf_block_overlap={hf_block_overlap:.10f}")
    _write_manifest(args, out, E0=float(w[0]), gap=gap, E_HF=e_hf, hf_overlap=float(weights[0]),
                    hf_block_E0=float(wb[0]), hf_block_overlap=hf_block_overlap)
    return 0


def cmd_evolve(args) -> int:
    ints = _load_integrals(args)
    if args.time is None:
        raise ValueError("evolve needs --time")
    out = _out_dir(args)
    if args.lam is not None:
        trace = evolve_gadget_asp(ints, args.lam, args.restrict_c9, args.time, dt=args.dt, stride=args.stride,
                                  coupling=args.coupling, converge=args.converge)
        (out / "gadget.json").write_text(json.dumps(trace.extra["gadget"], indent=2) + "\n")
        extra = {"full_register_overlap": trace.extra["full_register_overlap"]}
    else:
        prob = _problem(args, ints)
        trace = evolve_converged(prob) if args.converge else evolve(prob)
        extra = {}
    (out / "trace.csv").write_text(trace.to_csv())
    _write_manifest(args, out, final_overlap=trace.final_overlap, max_norm_drift=trace.max_norm_drift,
                    n_steps=trace.n_steps, **extra)
    print(f"final_overlap={trace.final_overlap:.10f}")
    return 0


def cmd_gap_profile(args) -> int:
    ints = _load_integrals(args)
    prob = _problem(args, ints)
    grid = np.linspace(0.0, 1.0, args.points)
    prof = gap_profile(None, None, grid, psi0=prob.psi0, path=prob.path)
    out = _out_dir(args)
    (out / "gap.csv").write_text(prof.to_csv())
    t_suff = sufficient_time(prof) if prof.g_min > 1e-12 else float("inf")
    print(f"g_min={prof.g_min:.10f} s_min={prof.s_min:.4f} eps={prof.eps:.10f} sufficient_time={t_suff:.6g}")
    _write_manifest(args, out, g_min=prof.g_min, s_min=prof.s_min, eps=prof.eps, sufficient_time=t_suff)
    return 0


def cmd_min_time(args) -> int:
    ints = _load_integrals(args)
    prob = _problem(args, ints)
    t_star, evals = find_min_time(prob, args.target_overlap)
    out = _out_dir(args)
    _write_rows(out / "min_time.csv", ("T", "final_overlap"), evals)
    print(f"T_star={t_star:.6g}")
    _write_manifest(args, out, T_star=t_star)
    return 0


def cmd_gadgetize(args) -> int:
    ints = _load_integrals(args)
    lam = 0.01 if args.lam is None else args.lam
    h = appendix_hamiltonian(ints, args.s, args.coefficients, args.restrict_c9)
    two_local, targets = extract_klocal(h)
    spec = gadget_spec(targets, lam, h.n_qubits, args.coupling)
    gad = build_gadget(spec)
    out = _out_dir(args)
    full = gad + two_local.extend(spec.n_qubits) if spec.r else two_local
    (out / "gadget_hamiltonian.txt").write_text(full.to_text())
    (out / "gadget.json").write_text(spec.sidecar_json() + "\n")
    results = {"n_qubits": spec.n_qubits, "k_s": spec.k_s}
    line = f"n_qubits={spec.n_qubits} k_s={spec.k_s:.6g} lambda_max={spec.lambda_max:.6g}"
    if spec.n_qubits <= 14:
        eps = spectral_error(spec, two_local, h)
        results["spectral_error"] = eps
        line += f" spectral_error={eps:.6e}"
    print(line)
    _write_manifest(args, out, **results)
    return 0


def cmd_sweep(args) -> int:
    ints = _load_integrals(args)
    out = _out_dir(args)
    rows, failed = [], 0
    if args.axis == "T-ladder":
        values = [float(x) for x in (args.values or "125,250,500,1000").split(",")]
        header = ("T", "final_overlap", "error")
        for T in values:
            try:
                if args.lam is not None:
                    tr = evolve_gadget_asp(ints, args.lam, args.restrict_c9, T, dt=args.dt, stride=args.stride,
                                           coupling=args.coupling, converge=args.converge)
                else:
                    prob = _problem(args, ints, T)
                    tr = evolve_converged(prob) if args.converge else evolve(prob)
                rows.append((T, tr.final_overlap, ""))
            except Exception as exc:  # recorded per row
                failed += 1
                rows.append((T, float("nan"), str(exc)))
    elif args.axis == "lambda-grid":
        values = [float(x) for x in args.values.split(",")] if args.values else \
            list(np.geomspace(0.004, 0.045, 8))
        header = ("lambda", "epsilon", "error")
        s = 1.0
        h = appendix_hamiltonian(ints, s, args.coefficients, args.restrict_c9)
        two_local, targets = extract_klocal(h)
        for lam in values:
            try:
                spec = gadget_spec(targets, lam, h.n_qubits, args.coupling)
                rows.append((float(lam), spectral_error(spec, two_local, h), ""))
            except Exception as exc:
                failed += 1
                rows.append((float(lam), float("nan"), str(exc)))
    else:
        values = (args.values or "ag,mp").split(",")
        header = ("init", "T_star", "error")
        for init in values:
            try:
                InitKind.parse(init)
                args_init = argparse.Namespace(**{**vars(args), "init": init})
                prob = _problem(args_init, ints)
                rows.append((init, find_min_time(prob, args.target_overlap)[0], ""))
            except Exception as exc:
                failed += 1
                rows.append((init, float("nan"), str(exc)))
    _write_rows(out / "sweep.csv", header, rows)
    _write_manifest(args, out, rows=len(rows), failed=failed)
    for r in rows:
        print(",".join(str(x) for x in r[:2]) + (f"  ERROR: {r[2]}" if r[2] else ""))
    return EXIT_FAILURE if failed else 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "gap-profile": cmd_gap_profile,
    "min-time": cmd_min_time,
    "gadgetize": cmd_gadgetize,
    "sweep": cmd_sweep,
}


def _apply_config(args, parser) -> None:
    """Fill options not given on the command line from a manifest's config block."""
    path = Path(args.config)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    data = json.loads(path.read_text())
    config = data.get("config", data)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    for key, value in config.items():
        if hasattr(args, key) and getattr(args, key) == sub.get_default(key):
            setattr(args, key, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.config:
            _apply_config(args, parser)
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}" if "file not found" in str(exc) else f"error: file not found: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except InfeasibleSectorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE_SECTOR
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
