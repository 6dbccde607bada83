"""Command line interface.

Subcommands: ``generate``, ``unmix-joint``, ``unmix-separate``, ``evaluate``
and ``compare``. Exit status is 0 on success, 2 on usage errors and 1 on
runtime errors.
"""

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io as hio
from .baseline import separate_unmix
from .errors import UnmixError
from .metrics import evaluate
from .model import Dims, NoiseSpec, default_geometry, generate_ntf1, generate_synthetic
from .objective import Hyperparams, tune_hyperparameters
from .solver import SolverConfig, joint_unmix

log = logging.getLogger("dynunmix")


def _lambda_list(text):
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected a number or a comma separated list")
    return values[0] if len(values) == 1 else tuple(values)


def _add_scene_args(p):
    p.add_argument("--k", type=int, default=10, help="number of frames")
    p.add_argument("--l", type=int, default=129, help="number of channels")
    p.add_argument("--width", type=int, default=50)
    p.add_argument("--height", type=int, default=50)
    p.add_argument("--p", type=int, default=3, help="number of sources")
    p.add_argument("--sigma-e", type=float, default=0.05)
    p.add_argument("--sigma-v", type=float, default=0.05)
    p.add_argument("--b", type=float, default=0.01)
    p.add_argument("--change-density", type=float, default=0.05)
    p.add_argument("--amplitude", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ntf1", action="store_true", help="no spectral distortion")
    p.add_argument("--s0", help="reference spectra CSV (L rows, P columns); synthetic if omitted")


def _add_solver_args(p):
    p.add_argument("--lambda-s", type=_lambda_list, default=None,
                   help="scalar or comma separated per-source weights")
    p.add_argument("--lambda-a", type=float, default=None)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--eps-s", type=float, default=Hyperparams.eps_S)
    p.add_argument("--eps-a", type=float, default=Hyperparams.eps_A)
    p.add_argument("--max-outer", type=int, default=Hyperparams.max_outer)
    p.add_argument("--max-inner", type=int, default=Hyperparams.max_inner)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--backend", choices=("compiled", "python"), default=None)


def _hyperparams(args, noise=None):
    lam_s, lam_a = args.lambda_s, args.lambda_a
    if noise is not None and (lam_s is None or lam_a is None):
        tuned_s, tuned_a = tune_hyperparameters(noise.sigma_e, noise.sigma_v, noise.b)
        lam_s = tuned_s if lam_s is None else lam_s
        lam_a = tuned_a if lam_a is None else lam_a
    return Hyperparams(
        lambda_S=Hyperparams.lambda_S if lam_s is None else lam_s,
        lambda_A=Hyperparams.lambda_A if lam_a is None else lam_a,
        rho=args.rho, eps_S=args.eps_s, eps_A=args.eps_a,
        max_outer=args.max_outer, max_inner=args.max_inner)


def _scene(args):
    dims = Dims(args.k, args.l, args.width * args.height, args.p)
    geometry = default_geometry(args.width, args.height, args.p)
    noise = NoiseSpec(args.sigma_e, args.sigma_v, args.b, args.change_density, args.seed)
    gen = generate_ntf1 if args.ntf1 else generate_synthetic
    S0 = hio.read_csv(args.s0) if args.s0 else None
    return dims, noise, gen(dims, geometry, noise, spectra_source=S0, amplitude=args.amplitude)


def _scene_config(args, dims, noise):
    return {"K": dims.K, "L": dims.L, "N": dims.N, "P": dims.P, "width": args.width,
            "height": args.height, "sigma_e": noise.sigma_e, "sigma_v": noise.sigma_v,
            "b": noise.b, "change_density": noise.change_density,
            "amplitude": args.amplitude, "seed": noise.seed, "ntf1": bool(args.ntf1),
            "s0": args.s0}


def _write_outputs(out_dir, result, X, config, width=None, height=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hio.write_result_dir(out, result.S, result.A, result.psi, N=X.N, L=X.L)
    for k in range(result.S.shape[0]):
        hio.write_csv(out / f"spectra_{k + 1:03d}.csv", result.S[k])
    hio.write_csv(out / "trace.csv", np.asarray(result.objective_trace)[:, None]
                  if result.objective_trace else np.zeros((0, 1)))
    if width and height:
        hio.export_abundance_pgm(result.A[-1], width, height, str(out / "abundance_last_"))
    summary = {
        "config": config,
        "outer_iterations": result.outer_iterations,
        "converged": result.converged,
        "residual_S": result.residual_S,
        "residual_A": result.residual_A,
        "objective_final": result.objective_trace[-1] if result.objective_trace else None,
    }
    if result.permutations is not None:
        summary["permutations"] = [list(p) for p in result.permutations.frames]
    hio.write_json(out / "result.json", summary)


def cmd_generate(args):
    dims, noise, (X, truth) = _scene(args)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    hio.write_sequence(args.out, X)
    if args.truth_dir:
        hio.write_truth_dir(args.truth_dir, truth)
        hio.write_json(Path(args.truth_dir) / "config.json", _scene_config(args, dims, noise))
    return 0


def cmd_unmix_joint(args):
    X = hio.read_sequence(args.input)
    S0 = hio.read_csv(args.s0)
    h = _hyperparams(args)
    if args.init == "default":
        init = "default"
    else:
        truth = hio.read_truth_dir(args.init)
        init = (truth.S, truth.A, truth.psi)
    cfg = SolverConfig(h=h, init=init, n_threads=args.threads, backend=args.backend)
    result = joint_unmix(X, S0, cfg)
    config = {"method": "joint", "input": str(args.input), "s0": str(args.s0),
              "init": args.init, "threads": args.threads, "hyperparams": h.to_dict()}
    _write_outputs(args.out_dir, result, X, config, args.width, args.height)
    return 0


def cmd_unmix_separate(args):
    X = hio.read_sequence(args.input)
    S_ref = hio.read_csv(args.s_ref)
    result = separate_unmix(X, args.p, S_ref, args.seed, backend=args.backend)
    config = {"method": "separate", "input": str(args.input), "s_ref": str(args.s_ref),
              "P": args.p, "seed": args.seed}
    _write_outputs(args.out_dir, result, X, config, args.width, args.height)
    return 0


def cmd_evaluate(args):
    S, A, psi = hio.read_result_dir(args.est_dir)
    truth = hio.read_truth_dir(args.truth_dir)
    report = evaluate(S, A, psi, truth).to_dict()
    config = {"est_dir": str(args.est_dir), "truth_dir": str(args.truth_dir)}
    for name, key in (("estimate", args.est_dir), ("scene", args.truth_dir)):
        for fname in ("result.json", "config.json"):
            path = Path(key) / fname
            if path.exists():
                config[name] = json.loads(path.read_text())
    report["config"] = config
    hio.write_json(args.report, report)
    print(f"e_S={report['e_S']:.6g} e_A={report['e_A']:.6g} e_psi={report['e_psi']:.6g}")
    return 0


COMPARE_FIELDS = ["trial", "seed", "joint_e_S", "joint_e_A", "joint_e_psi", "joint_seconds",
                  "joint_outer_iterations", "separate_e_S", "separate_e_A", "separate_e_psi",
                  "separate_seconds"]


def run_compare(args, progress=None):
    """Run both methods over ``args.trials`` seeds; returns the per-trial rows."""
    rows = []
    for t in range(args.trials):
        seed = args.seed + t
        dims = Dims(args.k, args.l, args.width * args.height, args.p)
        noise = NoiseSpec(args.sigma_e, args.sigma_v, args.b, args.change_density, seed)
        gen = generate_ntf1 if args.ntf1 else generate_synthetic
        S0 = hio.read_csv(args.s0) if args.s0 else None
        X, truth = gen(dims, default_geometry(args.width, args.height, args.p), noise,
                       spectra_source=S0, amplitude=args.amplitude)
        h = _hyperparams(args, noise)
        t0 = time.perf_counter()
        joint = joint_unmix(X, truth.S0, SolverConfig(h=h, n_threads=args.threads,
                                                      backend=args.backend))
        t1 = time.perf_counter()
        sep = separate_unmix(X, dims.P, truth.S0, seed, backend=args.backend)
        t2 = time.perf_counter()
        ej = evaluate(joint.S, joint.A, joint.psi, truth)
        es = evaluate(sep.S, sep.A, sep.psi, truth)
        row = {"trial": t + 1, "seed": seed, "joint_e_S": ej.e_S, "joint_e_A": ej.e_A,
               "joint_e_psi": ej.e_psi, "joint_seconds": t1 - t0,
               "joint_outer_iterations": joint.outer_iterations, "separate_e_S": es.e_S,
               "separate_e_A": es.e_A, "separate_e_psi": es.e_psi, "separate_seconds": t2 - t1,
               "_joint": joint}
        rows.append(row)
        if progress:
            progress(row)
    return rows


def write_compare_csv(path, rows):
    """Per-trial rows followed by ``mean`` and ``std`` (sample, ddof=1) rows."""
    numeric = COMPARE_FIELDS[2:]
    table = np.array([[r[f] for f in numeric] for r in rows], dtype=np.float64)
    mean = table.mean(axis=0)
    std = table.std(axis=0, ddof=1) if len(rows) > 1 else np.zeros_like(mean)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_FIELDS)
        for r in rows:
            w.writerow([r["trial"], r["seed"]] + [format(float(r[f]), ".17g") for f in numeric])
        w.writerow(["mean", ""] + [format(v, ".17g") for v in mean])
        w.writerow(["std", ""] + [format(v, ".17g") for v in std])
    return dict(zip(numeric, mean)), dict(zip(numeric, std))


def cmd_compare(args):
    def progress(row):
        print(f"trial {row['trial']:3d} seed {row['seed']}: "
              f"joint e_S={row['joint_e_S']:.4g} e_A={row['joint_e_A']:.4g} | "
              f"separate e_S={row['separate_e_S']:.4g} e_A={row['separate_e_A']:.4g}",
              flush=True)

    rows = run_compare(args, progress)
    mean, std = write_compare_csv(args.out, rows)
    print(f"mean joint e_S={mean['joint_e_S']:.4g} e_A={mean['joint_e_A']:.4g} "
          f"e_psi={mean['joint_e_psi']:.4g}; separate e_S={mean['separate_e_S']:.4g} "
          f"e_A={mean['separate_e_A']:.4g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="dynunmix", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a multitemporal scene")
    p.add_argument("--out", required=True, help="output HSTS1 sequence file")
    p.add_argument("--truth-dir", help="directory for the ground truth")
    _add_scene_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("unmix-joint", help="joint unmixing of all frames")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--s0", required=True, help="reference spectra CSV (L rows, P columns)")
    _add_solver_args(p)
    p.add_argument("--init", default="default", help="'default' or a truth directory")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--width", type=int, help="image width, to export abundance PGMs")
    p.add_argument("--height", type=int)
    p.set_defaults(func=cmd_unmix_joint)

    p = sub.add_parser("unmix-separate", help="frame-by-frame baseline")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s-ref", required=True, help="reference spectra CSV used for alignment")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--backend", choices=("compiled", "python"), default=None)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.set_defaults(func=cmd_unmix_separate)

    p = sub.add_parser("evaluate", help="scaled MSE of an estimate against ground truth")
    p.add_argument("--est-dir", required=True)
    p.add_argument("--truth-dir", required=True)
    p.add_argument("--report", required=True, help="output JSON report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="joint vs separate over several seeded trials")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--out", required=True, help="output CSV")
    _add_scene_args(p)
    _add_solver_args(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UnmixError, OSError, ValueError) as exc:
        print(f"dynunmix: error: {exc}", file=sys.stderr)
        return 1


cli_main = main
