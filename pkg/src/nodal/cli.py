"""Command-line surface: reproducible experiments from JSON configs.

Exit codes: 0 success, 2 condition/estimation failure, 64 usage error.
Every output embeds the config hash and seed; re-running a command with
the same config reproduces the primary result fields byte for byte.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import util
from .ensembles import (sample_stationary, sample_trigonometric,
                        sample_kostlan_chart, kernel_convergence_report,
                        torus_subwindow)
from .estimator import (det_scaling_test, double_scaling, estimate_nu,
                        total_count_kostlan)
from .ensembles import Trigonometric, Kostlan
from .fields import GridWindow, read_field, write_field, write_labels
from .spectral import (DegenerateMeasureError, check_rho1, check_rho2,
                       check_rho3, check_rho4, measure_from_config)
from .topology import (BallWindow, count_in_ball, count_in_window,
                       sandwich_check, sign_grid, stability_certificate,
                       zero_components)

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}")


def _require(cfg, key):
    if key not in cfg:
        raise UsageError(f"config is missing required key {key!r}")
    return cfg[key]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _emit(result, out_path):
    blob = util.canonical_json(_jsonable(result))
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(blob + "\n")
    else:
        print(blob)


def _with_provenance(cfg, payload, seed):
    return {"config_hash": util.config_hash(cfg), "seed": seed,
            "result": payload}


def cmd_check_spectrum(cfg, args):
    rho = measure_from_config(_require(cfg, "measure"))
    f4 = check_rho1(rho)
    atoms = check_rho2(rho)
    mm = check_rho3(rho)
    cert = check_rho4(rho,
                      max_radius=cfg.get("barrier_max_radius"),
                      grid_step=cfg.get("barrier_grid_step"))
    rho1_ok = bool(np.isfinite(f4))
    report = {
        "rho1": {"fourth_moment": f4, "passed": rho1_ok},
        "rho2": {"has_atoms": atoms.has_atoms,
                 "atoms": [a.tolist() for a in atoms.atoms],
                 "passed": not atoms.has_atoms},
        "rho3": {"moment_matrix": mm.entries.tolist(),
                 "min_eigenvalue": mm.min_eigenvalue, "passed": mm.passed},
        "rho4": cert.to_json(),
    }
    _emit(_with_provenance(cfg, report, cfg.get("seed", 0)), args.out)
    ok = rho1_ok and (not atoms.has_atoms) and mm.passed
    return EXIT_OK if ok else EXIT_FAIL


def _window_from_config(cfg, dim):
    if "origin" in cfg:
        return GridWindow.from_config(cfg)
    return GridWindow.box(cfg.get("center", np.zeros(dim)),
                          _require(cfg, "half_extent"),
                          _require(cfg, "spacing"))


def cmd_sample(cfg, args):
    ens = _require(cfg, "ensemble")
    seed = int(cfg.get("seed", 0))
    out = _require(cfg, "out")
    kind = _require(ens, "kind")
    sample_index = int(cfg.get("sample_index", 0))
    if kind == "stationary":
        rho = measure_from_config(_require(ens, "rho"))
        window = _window_from_config(_require(cfg, "window"), rho.dim)
        sample = sample_stationary(rho, window,
                                   n_modes=int(ens.get("n_modes", 4096)),
                                   seed=seed, sample_index=sample_index)
    elif kind == "trigonometric":
        sample = sample_trigonometric(int(_require(ens, "degree")),
                                      int(_require(ens, "dim")),
                                      grid_step=float(cfg.get("grid_step", 0.1)),
                                      seed=seed, sample_index=sample_index,
                                      scaled=bool(cfg.get("scaled", True)))
        if "window" in cfg:
            w = cfg["window"]
            sample = torus_subwindow(sample, w.get("center", [0.0] *
                                                  sample.window.dim),
                                     _require(w, "half_extent"))
    elif kind == "kostlan":
        window = _window_from_config(_require(cfg, "window"), 2)
        sample = sample_kostlan_chart(int(_require(ens, "degree")), window,
                                      seed=seed, sample_index=sample_index)
    else:
        raise UsageError(f"unknown ensemble kind {kind!r}")
    write_field(sample, out)
    info = {"out": out, "values": int(np.prod(sample.window.shape)),
            "bytes": 16 + 8 * int(np.prod(sample.window.shape))
            * (1 + sample.window.dim)}
    _emit(_with_provenance(cfg, info, seed), args.out)
    return EXIT_OK


def cmd_census(cfg, args):
    if "field" in cfg:
        sample = read_field(cfg["field"])
    else:
        raise UsageError("census config needs a 'field' file path")
    grid = sign_grid(sample, zero_tolerance=float(cfg.get("zero_tolerance",
                                                          0.0)))
    census = zero_components(grid)
    cert = stability_certificate(sample, alpha=cfg.get("alpha"),
                                 beta=cfg.get("beta"))
    counts = {}
    if "ball" in cfg:
        b = cfg["ball"]
        N, N_star = count_in_ball(census, np.asarray(b.get("center",
                                                           [0.0] * grid.dim)),
                                  float(_require(b, "r")))
        counts["ball"] = {"N": N, "N_star": N_star, "r": b["r"]}
    if "window_R" in cfg:
        S = BallWindow.unit(grid.dim)
        counts["window"] = {"R": cfg["window_R"],
                            "N_S": count_in_window(census, S,
                                                   float(cfg["window_R"]))}
    payload = {
        "n_components": census.n_components,
        "ambiguous_cells": census.ambiguous_cells,
        "mixed_cells": census.mixed_cell_count,
        "components": [{"cells": int(c.n_cells),
                        "bbox_lo": c.bbox_lo.tolist(),
                        "bbox_hi": c.bbox_hi.tolist(),
                        "touches_boundary": bool(c.touches_boundary)}
                       for c in census.components],
        "counts": counts,
        "certificate": {"alpha": cert.alpha, "beta": cert.beta,
                        "margin": cert.margin,
                        "grid_perturbation_bound":
                            cert.grid_perturbation_bound,
                        "certified": cert.certified},
        "certified": cert.certified,
    }
    if cfg.get("dump_labels"):
        shape = tuple(s - 1 for s in sample.window.shape)
        labels = np.zeros(shape)
        for i, comp in enumerate(census.components, start=1):
            labels[tuple(comp.cells.T)] = i
        write_labels(labels, sample.window, cfg["dump_labels"])
    _emit(_with_provenance(cfg, payload, cfg.get("seed", 0)), args.out)
    return EXIT_OK


def _write_csv(path, est):
    bracket = est.brackets[-1] if est.brackets else None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["R", "nu_hat", "stderr", "bracket_low",
                         "bracket_high", "certified_fraction"])
        for (R, estv, se) in est.R_trace:
            writer.writerow([R, estv, se,
                             bracket.bracket_low if bracket else "",
                             bracket.bracket_high if bracket else "",
                             est.certified_fraction])


def cmd_estimate_nu(cfg, args, workers):
    rho = measure_from_config(_require(cfg, "measure"))
    seed = int(cfg.get("seed", 0))
    est = estimate_nu(rho,
                      R_list=_require(cfg, "R_list"),
                      r_list=cfg.get("r_list", []),
                      n_samples=int(_require(cfg, "n_samples")),
                      seed=seed,
                      spacing=float(cfg.get("spacing", 0.1)),
                      n_modes=cfg.get("n_modes"),
                      pad=float(cfg.get("pad", 1.0)),
                      workers=workers)
    if cfg.get("csv"):
        _write_csv(cfg["csv"], est)
    _emit(_with_provenance(cfg, est.to_json(), seed), args.out)
    return EXIT_OK


def cmd_double_scaling(cfg, args):
    kind = _require(cfg, "ensemble_kind")
    dim = int(cfg.get("dim", 1))
    seed = int(cfg.get("seed", 0))
    proto = Trigonometric(2, dim) if kind == "trigonometric" \
        else Kostlan(2, dim)
    res = double_scaling(proto, np.asarray(cfg.get("x", [0.0] * dim), float),
                         _require(cfg, "R_list"), _require(cfg, "L_list"),
                         int(_require(cfg, "n_samples")), seed,
                         spacing=float(cfg.get("spacing", 0.1)),
                         budget=cfg.get("budget"))
    _emit(_with_provenance(cfg, res.to_json(), seed), args.out)
    return EXIT_OK


def cmd_kostlan_total(cfg, args):
    seed = int(cfg.get("seed", 0))
    res = total_count_kostlan(_require(cfg, "n_list"),
                              int(_require(cfg, "n_samples")), seed,
                              mesh_factor=float(cfg.get("mesh_factor", 4.0)))
    _emit(_with_provenance(cfg, res.to_json(), seed), args.out)
    return EXIT_OK


def cmd_det_scaling(cfg, args):
    rho = measure_from_config(_require(cfg, "measure"))
    seed = int(cfg.get("seed", 0))
    res = det_scaling_test(rho, np.asarray(_require(cfg, "matrix"), float),
                           float(_require(cfg, "R")),
                           int(_require(cfg, "n_samples")), seed,
                           spacing=float(cfg.get("spacing", 0.1)),
                           n_modes=int(cfg.get("n_modes", 2048)))
    _emit(_with_provenance(cfg, res.to_json(), seed), args.out)
    return EXIT_OK


def cmd_kernel_converge(cfg, args):
    rep = kernel_convergence_report(_require(cfg, "ensemble_kind"),
                                    int(cfg.get("dim", 2)),
                                    _require(cfg, "degrees"),
                                    probe_extent=float(cfg.get("probe_extent",
                                                               3.0)),
                                    step=float(cfg.get("step", 1.0)))
    payload = {"L_sequence": list(rep.L_sequence),
               "sup_errors": list(rep.sup_errors),
               "strictly_decreasing": rep.strictly_decreasing()}
    _emit(_with_provenance(cfg, payload, cfg.get("seed", 0)), args.out)
    return EXIT_OK


def cmd_sandwich_audit(cfg, args):
    seed = int(cfg.get("seed", 0))
    n_fields = int(cfg.get("n_fields", 20))
    degree = int(cfg.get("degree", 32))
    dim = int(cfg.get("dim", 2))
    R = float(cfg.get("R", 10.0))
    r_list = [float(r) for r in cfg.get("r_list", [1.0, 2.0])]
    spacing = float(cfg.get("spacing", 0.1))
    S = BallWindow.unit(dim)
    rows = []
    violations = 0
    for s in range(n_fields):
        full = sample_trigonometric(degree, dim, grid_step=spacing,
                                    seed=seed, sample_index=s)
        sub = torus_subwindow(full, np.zeros(dim), R + max(r_list) + 1.0)
        census = zero_components(sign_grid(sub))
        for r in r_list:
            res = sandwich_check(census, S, R, r)
            rows.append({"sample": s, "r": r, "lhs": res.lhs,
                         "mid": res.mid, "rhs": res.rhs,
                         "holds": res.holds})
            violations += 0 if res.holds else 1
    payload = {"n_fields": n_fields, "violations": violations, "rows": rows}
    _emit(_with_provenance(cfg, payload, seed), args.out)
    return EXIT_OK if violations == 0 else EXIT_FAIL


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--workers", type=int, default=None,
                        help="sample-level parallelism "
                             "(default: NODAL_WORKERS or 1)")
    common.add_argument("--out", default=None,
                        help="write the result JSON here instead of stdout")
    parser = _Parser(prog="nodal",
                     description="Gaussian nodal-census experiments",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("check-spectrum", "sample", "census", "estimate-nu",
                 "double-scaling", "kostlan-total", "det-scaling",
                 "kernel-converge", "sandwich-audit"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--config", required=True)
    return parser


def main(argv=None):
    util.tune_allocator()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        workers = args.workers
        if workers is None:
            workers = int(os.environ.get("NODAL_WORKERS", "1"))
        cfg = _load_config(args.config)
        if args.command == "check-spectrum":
            return cmd_check_spectrum(cfg, args)
        if args.command == "sample":
            return cmd_sample(cfg, args)
        if args.command == "census":
            return cmd_census(cfg, args)
        if args.command == "estimate-nu":
            return cmd_estimate_nu(cfg, args, workers)
        if args.command == "double-scaling":
            return cmd_double_scaling(cfg, args)
        if args.command == "kostlan-total":
            return cmd_kostlan_total(cfg, args)
        if args.command == "det-scaling":
            return cmd_det_scaling(cfg, args)
        if args.command == "kernel-converge":
            return cmd_kernel_converge(cfg, args)
        if args.command == "sandwich-audit":
            return cmd_sandwich_audit(cfg, args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateMeasureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, KeyError) as exc:
        # bad parameter values in a config are usage errors
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
