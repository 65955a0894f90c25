"""Command-line entry point: validate, sample, verify, percolation, ergraph,
experiment.  Every run that writes files also writes a manifest (resolved
parameters, seed, version, argv, output paths) sufficient to reproduce the
outputs byte for byte."""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .configfile import params_to_ini, resolve_params
from .coupling import decompose_clusters
from .estimators import (
    ObservableAccumulator,
    identity_test,
    phase_transition_experiment,
    record,
    run_chains,
)
from .lattice import er_connectivity, er_connectivity_mc, theta_estimate
from .mcmc import Schedule
from .model import validate_assumptions
from .oracle import verify_corpus
from .sampling import RngStream

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _default_workers():
    try:
        return max(1, int(os.environ.get("CONTPOTTS_WORKERS", "1")))
    except ValueError:
        return 1


def _float_list(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _int_list(text):
    return [int(t) for t in text.replace(",", " ").split()]


def _parse_grid(text):
    """Comma list "0.1,0.2" or range "lo:hi:n" (n evenly spaced points)."""
    if ":" in text:
        lo, hi, n = text.split(":")
        return [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
    return _float_list(text)


def _add_params_args(p):
    p.add_argument("--preset", choices=["wr"], help="named parameter preset")
    p.add_argument("--config", help="model config file (key = value sections)")
    p.add_argument("--z", type=float, help="activity override")
    p.add_argument("--alpha", help="colour proportions override, e.g. 0.5,0.5")


def _resolve(args):
    overrides = {}
    if getattr(args, "z", None) is not None:
        overrides["activity"] = args.z
    if getattr(args, "alpha", None) is not None:
        overrides["alpha"] = np.array(_float_list(args.alpha))
    preset = args.preset
    if preset is None and args.config is None:
        preset = "wr"
    return resolve_params(preset=preset, config_path=args.config, **overrides)


def _write_manifest(prefix, command, args_ns, params, outputs, seed):
    manifest = {
        "command": command,
        "argv": args_ns._argv,
        "version": __version__,
        "seed": seed,
        "params_ini": params_to_ini(params) if params is not None else None,
        "options": {k: v for k, v in vars(args_ns).items()
                    if not k.startswith("_") and k != "func"
                    and isinstance(v, (int, float, str, bool, type(None)))},
        "outputs": sorted(outputs),
    }
    path = f"{prefix}_manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args):
    params = _resolve(args)
    report = validate_assumptions(params)
    print(report)
    print(f"delta = {params.delta!r}, nstar = {params.nstar}")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_sample(args):
    params = _resolve(args)
    sched = Schedule(sweeps=args.sweeps, burn_in=args.burn_in,
                     readout_every=args.readout_every,
                     bd_steps_per_sweep=args.bd_steps
                     if args.bd_steps is not None
                     else max(20, int(params.activity
                                      * params.box(args.box_cells).volume)))
    acc, readouts = run_chains(params, args.box_cells, sched, args.seed,
                               args.chains, wired_color=args.wired_color,
                               workers=_default_workers(), keep_readouts=True)
    box = params.box(args.box_cells)
    outputs = []

    jsonl_path = f"{args.out}_readouts.jsonl"
    with open(jsonl_path, "w") as fh:
        for ro in readouts:
            dec = decompose_clusters(ro.n, ro.edges)
            sizes = dec.finite_sizes()
            hist = {}
            for s in sizes:
                hist[str(int(s))] = hist.get(str(int(s)), 0) + 1
            cells_wired = np.zeros(box.n_cells, dtype=int)
            mask = dec.infinite_mask()
            if mask.any():
                flat = box.flat_cell_indices(box.cell_indices(ro.points[mask]))
                np.add.at(cells_wired, flat, 1)
            rec = {
                "chain": ro.chain,
                "sweep": ro.sweep,
                "n": int(ro.n),
                "wired_cluster_size": dec.infinite_size,
                "cluster_size_hist": hist,
                "cells_wired": cells_wired.tolist(),
            }
            json.dump(rec, fh, sort_keys=True)
            fh.write("\n")
    outputs.append(jsonl_path)

    cells_path = f"{args.out}_cells.csv"
    mean_counts = acc.mean_counts()
    mean_wired = acc.mean_wired()
    cells = box.all_cells()
    with open(cells_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell"] + [f"j{k+1}" for k in range(box.d)]
                   + [f"mean_n_color{c}" for c in range(1, params.q + 1)]
                   + ["mean_wired", "interior"])
        for flat in range(box.n_cells):
            row = [flat] + [int(v) for v in cells[flat]]
            row += [repr(float(mean_counts[flat, c])) for c in range(params.q)]
            row += [repr(float(mean_wired[flat])), int(acc.interior[flat])]
            w.writerow(row)
    outputs.append(cells_path)

    outputs.append(_write_manifest(args.out, "sample", args, params, outputs,
                                   args.seed))
    print(f"wrote {', '.join(sorted(outputs))}")
    print(f"samples={acc.count}, mean points="
          f"{acc.sum_counts.sum() / max(acc.count, 1):.2f}")
    return EXIT_OK


def cmd_verify(args):
    rows, ok = verify_corpus(tol=args.tol)
    lines = []
    for row in rows:
        for rep in row["reports"]:
            lines.append((row["name"], rep.name, rep.max_rel_error, rep.passed))
        if row["identity_skipped"]:
            lines.append((row["name"], "imbalance=connectivity", float("nan"),
                          "skipped (no tied colour)"))
    namew = max(len(r[0]) for r in lines)
    for name, check, err, status in lines:
        s = status if isinstance(status, str) else ("pass" if status else "FAIL")
        e = "" if err != err else f"{err:.3e}"
        print(f"{name:<{namew}s}  {check:<34s} {e:>10s}  {s}")
    print(f"{len(rows)} instances: {'all identities hold' if ok else 'FAILURES'}")
    if args.out:
        path = f"{args.out}_verify.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["instance", "check", "max_rel_error", "passed"])
            for name, check, err, status in lines:
                w.writerow([name, check, repr(err),
                            status if isinstance(status, str) else int(status)])
        _write_manifest(args.out, "verify", args, None, [path], None)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_percolation(args):
    rng = RngStream(args.seed)
    rows = []
    for i, p in enumerate(_parse_grid(args.p_grid)):
        est, stderr = theta_estimate(args.d, args.L, p, args.runs,
                                     rng.substream(i))
        rows.append((p, est, stderr))
        print(f"p={p:.4f} theta_hat={est:.4f} stderr={stderr:.4f}")
    outputs = []
    if args.out:
        path = f"{args.out}_theta.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "theta_hat", "stderr"])
            for p, est, se in rows:
                w.writerow([repr(p), repr(est), repr(se)])
        outputs.append(path)
        _write_manifest(args.out, "percolation", args, None, outputs, args.seed)
    return EXIT_OK


def cmd_ergraph(args):
    rng = RngStream(args.seed)
    rows = []
    for n in _int_list(args.n):
        for j, p in enumerate(_parse_grid(args.p)):
            exact = er_connectivity(n, p, "exact") if n <= 7 else float("nan")
            bound = er_connectivity(n, p, "bound")
            mc, se = er_connectivity_mc(n, p, args.runs, rng.substream(n, j))
            rows.append((n, p, exact, bound, mc, se))
            print(f"n={n} p={p:.3f} exact={exact:.6f} bound={bound:.6f} "
                  f"mc={mc:.6f} (+-{se:.6f})")
    if args.out:
        path = f"{args.out}_ergraph.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "p", "exact", "bound", "mc", "mc_stderr"])
            for row in rows:
                w.writerow([row[0]] + [repr(v) for v in row[1:]])
        _write_manifest(args.out, "ergraph", args, None, [path], args.seed)
    return EXIT_OK


def cmd_experiment(args):
    params = _resolve(args)
    report = phase_transition_experiment(
        params,
        box_sizes=_int_list(args.box_cells),
        z_values=_parse_grid(args.z_grid),
        chains=args.chains,
        seed=args.seed,
        workers=_default_workers(),
        readouts_per_chain=args.readouts_per_chain,
        burn_in=args.burn_in,
    )
    print(report)
    outputs = []
    if args.out:
        csv_path = f"{args.out}_experiment.csv"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["box_cells", "z", "wired_color", "cell",
                        "observable", "mean", "stderr", "tau_int"])
            for r in report.rows:
                w.writerow([r.box_cells, repr(r.z), r.wired_color, "interior",
                            "imbalance", repr(r.mean), repr(r.stderr),
                            repr(r.tau)])
                for flat in range(len(r.cell_means)):
                    w.writerow([r.box_cells, repr(r.z), r.wired_color, flat,
                                "imbalance", repr(float(r.cell_means[flat])),
                                repr(float(r.cell_stderr[flat])), ""])
        outputs.append(csv_path)
        json_path = f"{args.out}_summary.json"
        with open(json_path, "w") as fh:
            json.dump({
                "maximal_colors": report.maximal_colors,
                "rows": [{
                    "box_cells": r.box_cells, "z": r.z,
                    "wired_color": r.wired_color, "mean": r.mean,
                    "stderr": r.stderr, "lcb99": r.lcb99, "tau": r.tau,
                    "n_samples": r.n_samples,
                } for r in report.rows],
                "verdicts": {repr(z): v for z, v in report.verdicts.items()},
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(json_path)
        outputs.append(_write_manifest(args.out, "experiment", args, params,
                                       outputs, args.seed))
        print(f"wrote {', '.join(sorted(outputs))}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="contpotts",
        description="continuum q-colour Potts / random-cluster toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the model assumptions")
    _add_params_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample", help="run chains and dump readout statistics")
    _add_params_args(p)
    p.add_argument("--box-cells", type=int, default=9)
    p.add_argument("--sweeps", type=int, default=400)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--readout-every", type=int, default=2)
    p.add_argument("--bd-steps", type=int, default=None)
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--wired-color", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="run the enumeration identity corpus")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("percolation", help="site-bond percolation scan")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--L", type=int, default=32)
    p.add_argument("--p-grid", default="0.1:1.0:10")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_percolation)

    p = sub.add_parser("ergraph", help="random-graph connectivity tables")
    p.add_argument("--n", default="2,3,4,5,6,7")
    p.add_argument("--p", default="0.3,0.5,0.9")
    p.add_argument("--runs", type=int, default=20000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ergraph)

    p = sub.add_parser("experiment", help="wired-colour symmetry-breaking scan")
    _add_params_args(p)
    p.add_argument("--box-cells", default="9,15")
    p.add_argument("--z-grid", default="0.05,2.0,8.0")
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--readouts-per-chain", type=int, default=200)
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_experiment)

    return ap


def main(argv=None):
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    args._argv = argv
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
