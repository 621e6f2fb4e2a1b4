"""Command-line interface.

Subcommands: ``verify`` runs the full check pipeline, ``model``,
``kernel`` and ``radii`` emit the corresponding artifact tables, and
``examples list`` prints the built-in families.  Exit codes: 0 when all
checks pass, 1 on any failure, 2 on configuration errors, 3 when the
only non-passes are inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

import numpy as np

from . import __version__
from .config import (
    BUILTIN_PARAMS,
    JobConfig,
    default_depths,
    build_system,
    load_config,
    parse_config,
    subspace_policy,
)
from .dynamics import analyze_orbits
from .errors import ConfigError, LaurentOpsError
from .kernel import kernel_blocks
from .model import estimate_radii, laurent_coefficients
from .operators import (
    build_composition,
    cauchy_dual,
    wandering_from_points,
    wandering_subspace,
)
from .verify import Report, emit, run_verify


def _load(args) -> JobConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.depth_override is not None:
        overrides["verify_depth"] = args.depth_override
    if overrides or args.seed is not None:
        raw = dict(cfg.raw)
        depths = dict(raw.get("depths", {}))
        depths.update(overrides)
        if overrides:
            raw["depths"] = depths
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = parse_config(json.dumps(raw))
    return cfg


def _write(data: bytes, out_path) -> None:
    if out_path:
        with open(out_path, "wb") as handle:
            handle.write(data)
    else:
        sys.stdout.write(data.decode())


def _context(cfg: JobConfig):
    spec = build_system(cfg)
    depths = default_depths(cfg, spec)
    orbits = analyze_orbits(spec)
    op = build_composition(spec)
    dual = cauchy_dual(op, spec)
    policy = subspace_policy(cfg)
    if policy == "cycle_vector":
        E = wandering_from_points(spec, [orbits.cycles[0][0]])
    elif policy == "origin_vector":
        E = wandering_from_points(spec, [0])
    else:
        E = wandering_subspace(spec, orbits)
        if E.dim == 0 and any(o.has_cycle for o in orbits.orbits):
            cyc = next(c for c in orbits.cycles if c)
            E = wandering_from_points(spec, [cyc[0]])
    return spec, depths, orbits, op, dual, E


def _artifact_report(cfg: JobConfig) -> Report:
    return Report(
        config=cfg.raw,
        provenance={"config_hash": cfg.config_hash, "version": __version__,
                    "seed": cfg.seed},
    )


def cmd_verify(args) -> int:
    cfg = _load(args)
    report = run_verify(cfg)
    _write(emit(report, args.format), args.out)
    return report.exit_code()


def cmd_model(args) -> int:
    cfg = _load(args)
    spec, depths, orbits, op, dual, E = _context(cfg)
    report = _artifact_report(cfg)
    orders = (depths["coeff_order"], depths["coeff_order"])
    table = []
    for j in range(E.dim):
        f = laurent_coefficients(op, dual, E, E.basis[:, j], orders)
        entries = []
        for k in range(-orders[0], orders[1] + 1):
            c = f.coefficient(k)
            if np.any(np.abs(c) > 1e-15):
                entries.append({"power": k,
                                "coords": [[float(v.real), float(v.imag)]
                                           for v in c],
                                "exact": f.is_exact(k)})
        table.append({"vector": f"basis[{j}]", "entries": entries})
    report.tables["coefficients"] = table
    report.record("model_coefficients", "pass",
                  orders=list(orders), vectors=E.dim)
    _write(emit(report, args.format), args.out)
    return 0


def cmd_kernel(args) -> int:
    cfg = _load(args)
    spec, depths, orbits, op, dual, E = _context(cfg)
    report = _artifact_report(cfg)
    blocks = kernel_blocks(op, dual, E, depths["kernel_order"], orbits=orbits)
    table = {}
    m1 = blocks.max_order + 1
    for name, arr, i0, j0 in (("A", blocks.A, 1, 1), ("B", blocks.B, 1, 0),
                              ("C", blocks.C, 0, 1), ("D", blocks.D, 0, 0)):
        rows = []
        for i in range(i0, m1):
            for j in range(j0, m1):
                mag = float(np.max(np.abs(arr[i, j])))
                if mag > 1e-15:
                    rows.append({"i": i, "j": j, "norm": mag,
                                 "exact": bool(blocks.exact[i, j])})
        table[name] = rows
    report.tables["blocks"] = table
    report.record("kernel_blocks", "pass", max_order=blocks.max_order,
                  band_k=blocks.band_k)
    _write(emit(report, args.format), args.out)
    return 0


def cmd_radii(args) -> int:
    cfg = _load(args)
    spec, depths, orbits, op, dual, E = _context(cfg)
    report = _artifact_report(cfg)
    radii = estimate_radii(op, dual, E, spec, orbits, depths["radii_depth"])
    report.tables["radii"] = [
        {"n": k + 1, "neg_norm": radii.neg_norms[k],
         "pos_norm": radii.pos_norms[k],
         "neg_root": radii.neg_roots[k], "pos_root": radii.pos_roots[k]}
        for k in range(len(radii.neg_norms))
    ]
    report.record("radii", "pass", r_minus=radii.r_minus,
                  r_plus=radii.r_plus,
                  annulus_nonempty=radii.annulus_nonempty)
    _write(emit(report, args.format), args.out)
    return 0


def cmd_examples(args) -> int:
    if args.action == "list":
        print("built-in system families:")
        for name in sorted(BUILTIN_PARAMS):
            params = ", ".join(sorted(BUILTIN_PARAMS[name]))
            print(f"  {name:<12} params: {params}")
        print("\nshipped configuration files:")
        pkg = resources.files("laurentops").joinpath("configs")
        for entry in sorted(p.name for p in pkg.iterdir()):
            print(f"  {entry}")
        return 0
    raise ConfigError(f"unknown examples action {args.action!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laurentops",
        description="two-sided analytic models of weighted composition "
                    "operators on finite windows",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("config", help="path to a JSON job configuration")
        p.add_argument("--format", choices=["json", "csv-tables",
                                            "text-summary"],
                       default="json")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--depth-override", type=int, default=None,
                       help="override the verification depth")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for randomized test vectors (recorded)")

    for name, fn in (("verify", cmd_verify), ("model", cmd_model),
                     ("kernel", cmd_kernel), ("radii", cmd_radii)):
        p = sub.add_parser(name)
        add_common(p)
        p.set_defaults(func=fn)

    pe = sub.add_parser("examples")
    pe.add_argument("action", choices=["list"])
    pe.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except LaurentOpsError as exc:
        failure = {
            "schema": 1,
            "status": "config-error" if isinstance(exc, ConfigError)
            else "error",
            "error": str(exc),
            "error_type": type(exc).__name__,
        }
        sys.stderr.write(json.dumps(failure, sort_keys=True, indent=1) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
