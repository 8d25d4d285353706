"""Command-line front end.

Six subcommands: varnorm (variation norm of a CSV sequence), maxop (apply
the scale or maximal projection to a saved signal), tiles (decomposition
audit), expsum (entropy sweep), scaling (lower and upper N-sweeps), and
check (the full acceptance battery).  Every subcommand takes --config
(flat key=value file), --seed (overrides the config), --out (output
directory), and --format csv|json.

Config keys shared by the drivers: seed, p, r, eps, trials, sizes
(comma-separated), k_scales, tile_count, lambdas (comma-separated),
length_log2, samples_log2, weight_mode, bump, scale, experiment.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import acceptance, harness
from .grid import Signal, load_signal, lp_norm, save_signal
from .multipliers import (build_family, build_system, maximal_projection,
                          scale_projection)
from .variation import DEFAULT_ORDER, rvar_norm, rvar_seminorm


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--seed", type=int, help="override the config seed")
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="sweep output format")


def _settings(args) -> dict:
    cfg = harness.parse_config_file(args.config) if args.config else {}
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    os.makedirs(args.out, exist_ok=True)
    return cfg


def _out_path(args, name: str) -> str:
    return os.path.join(args.out, name)


def _load_sequence(path: str) -> np.ndarray:
    """Sequence CSV: either a single value column, re,im pairs, or the
    indexed signal layout."""
    with open(path) as fh:
        header = [col.strip() for col in fh.readline().split(",")]
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header == ["index", "re", "im"]:
        vals = np.zeros(len(rows), dtype=np.complex128)
        for idx_s, re_s, im_s in rows:
            vals[int(idx_s)] = complex(float(re_s), float(im_s))
        return vals
    if header == ["re", "im"]:
        return np.array([complex(float(a), float(b)) for a, b in rows])
    if len(header) == 1:
        return np.array([float(row[0]) for row in rows])
    raise ValueError(f"unrecognized sequence header: {header}")


def cmd_varnorm(args) -> int:
    cfg = _settings(args)
    r = float(cfg.get("r", DEFAULT_ORDER))
    seq = _load_sequence(args.sequence)
    result = {
        "r": r,
        "length": int(seq.shape[0]),
        "rvar_norm": rvar_norm(seq, r),
        "rvar_seminorm": rvar_seminorm(seq, r),
    }
    print(f"rvar_norm={result['rvar_norm']!r} rvar_seminorm={result['rvar_seminorm']!r}")
    if args.format == "json":
        harness.save_json(result, _out_path(args, "varnorm.json"))
    else:
        with open(_out_path(args, "varnorm.csv"), "w") as fh:
            fh.write("quantity,value\n")
            fh.write(f"rvar_norm,{result['rvar_norm']!r}\n")
            fh.write(f"rvar_seminorm,{result['rvar_seminorm']!r}\n")
    return 0


def cmd_maxop(args) -> int:
    cfg = _settings(args)
    if "lambdas" not in cfg:
        raise SystemExit("maxop needs a lambdas=... line in the config file")
    f = load_signal(args.signal)
    system = build_system(cfg["lambdas"], f.grid,
                          int(cfg.get("single_scale_cap_log2", 0)))
    fam = build_family(system, cfg.get("weight_mode", "ones"),
                       cfg.get("bump", "cos2"),
                       bool(cfg.get("strict_adapted", True)),
                       int(cfg["seed"]))
    scale = cfg.get("scale")
    if scale is not None:
        out = scale_projection(f, fam, int(scale))
        name = f"scale_{int(scale)}"
    else:
        out = Signal(f.grid, maximal_projection(f, fam).values.astype(np.complex128))
        name = "maximal"
    p = float(cfg.get("p", 2.0))
    ratio = lp_norm(out, p) / lp_norm(f, p) if lp_norm(f, p) > 0 else 0.0
    save_signal(out, _out_path(args, "maxop_output.csv"))
    harness.save_json({"operator": name, "p": p, "ratio": ratio,
                       "lambdas": list(system.lambdas)},
                      _out_path(args, "maxop.json"))
    print(f"{name} projection written, L^{p} ratio {ratio!r}")
    return 0


def cmd_tiles(args) -> int:
    cfg = _settings(args)
    audit = harness.run_decomposition_audit(
        tile_count=int(cfg.get("tile_count", 200)),
        lambdas=cfg.get("lambdas", harness.AUDIT_LAMBDAS),
        trials=int(cfg.get("trials", 50)),
        seed=int(cfg["seed"]),
        length_log2=int(cfg.get("length_log2", 11)),
        samples_log2=int(cfg.get("samples_log2", 14)))
    harness.save_json(audit, _out_path(args, "tiles_audit.json"))
    if args.format == "csv":
        with open(_out_path(args, "tiles_audit.csv"), "w") as fh:
            fh.write("set,num_tiles,num_strata,sigma0,worst_bessel\n")
            for i, row in enumerate(audit["sets"]):
                fh.write(f"{i},{row['num_tiles']},{row['num_strata']},"
                         f"{row['sigma0']!r},{row['worst_bessel']!r}\n")
    status = "ok" if audit["ok"] else f"{len(audit['problems'])} problems"
    print(f"decomposition audit over {audit['trials']} sets: {status}")
    return 0 if audit["ok"] else 1


def _write_report(report, args, stem: str) -> None:
    if args.format == "json":
        harness.save_json(report.to_dict(), _out_path(args, stem + ".json"))
    else:
        harness.save_report_csv(report, _out_path(args, stem + ".csv"))


def cmd_expsum(args) -> int:
    cfg = _settings(args)
    report = harness.run_entropy_scaling(
        r=float(cfg.get("r", DEFAULT_ORDER)),
        n_list=cfg.get("sizes", harness.ENTROPY_SIZES),
        k_scales=int(cfg.get("k_scales", 16)),
        trials=int(cfg.get("trials", 4)),
        seed=int(cfg["seed"]))
    _write_report(report, args, "expsum")
    print(f"entropy sweep slope {report.slope!r} "
          f"(bound {report.extras['slope_bound']!r})")
    return 0


def cmd_scaling(args) -> int:
    cfg = _settings(args)
    which = cfg.get("experiment", "both")
    seed = int(cfg["seed"])
    p = float(cfg.get("p", 1.5))
    r = float(cfg.get("r", DEFAULT_ORDER))
    if which in ("lower", "both"):
        rep = harness.run_lower_bound(
            p=p, n_list=cfg.get("sizes", harness.LOWER_SIZES),
            trials=int(cfg.get("trials", 32)), seed=seed)
        _write_report(rep, args, "lower_scaling")
        print(f"lower sweep slope {rep.slope!r}")
    if which in ("upper", "both"):
        rep = harness.run_upper_scaling(
            p=p, r=r, n_list=cfg.get("sizes", harness.UPPER_SIZES),
            trials=int(cfg.get("trials", 8)), seed=seed)
        _write_report(rep, args, "upper_scaling")
        print(f"upper sweep slope {rep.slope!r}")
    if which not in ("lower", "upper", "both"):
        raise SystemExit(f"unknown scaling experiment {which!r}")
    return 0


def cmd_check(args) -> int:
    cfg = _settings(args)
    summary = acceptance.run_all(int(cfg["seed"]))
    with open(_out_path(args, "summary.json"), "wb") as fh:
        fh.write(acceptance.summary_json_bytes(summary))
    for line in acceptance.summary_lines(summary):
        print(line)
    print("all criteria passed" if summary["all_pass"]
          else "some criteria FAILED")
    return 0 if summary["all_pass"] else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="maxmult",
        description="Variational multiplier experiments and audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_var = sub.add_parser("varnorm", help="variation norm of a CSV sequence")
    p_var.add_argument("sequence", help="CSV file with the sequence")
    _add_common(p_var)
    p_var.set_defaults(fn=cmd_varnorm)

    p_max = sub.add_parser("maxop", help="apply a multiplier projection to a signal")
    p_max.add_argument("signal", help="signal CSV (index,re,im with grid sidecar)")
    _add_common(p_max)
    p_max.set_defaults(fn=cmd_maxop)

    p_tiles = sub.add_parser("tiles", help="size-decomposition audit")
    _add_common(p_tiles)
    p_tiles.set_defaults(fn=cmd_tiles)

    p_exp = sub.add_parser("expsum", help="entropy scaling sweep")
    _add_common(p_exp)
    p_exp.set_defaults(fn=cmd_expsum)

    p_scale = sub.add_parser("scaling", help="lower/upper bound N-sweeps")
    _add_common(p_scale)
    p_scale.set_defaults(fn=cmd_scaling)

    p_check = sub.add_parser("check", help="run the acceptance criteria")
    _add_common(p_check)
    p_check.set_defaults(fn=cmd_check)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
