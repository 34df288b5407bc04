"""Command-line entry point and reproducible output bundles.

Subcommands: mehler, kernel, eigs, logcc, trace, bm, evolve, run. Outputs
are CSV (RFC-4180) plus JSON reports; every file written by a command is
checksummed into a manifest so a run can be verified byte for byte.

Exit codes: 0 all requested checks passed, 1 a check failed, 2 the
configuration or arguments did not validate.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, bm, evolution, geometry, mehler, spectral, trotter
from .grid import GridFunction, build_grid, gaussian_weights

try:
    import tomllib  # python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(Exception):
    pass


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class OutputBundle:
    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.stages: dict[str, float] = {}

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
        self.files.append(path)
        return path

    def write_json(self, name: str, payload) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.files.append(path)
        return path

    def finalize(self, config_echo: dict) -> Path:
        manifest = {
            "config": config_echo,
            "outputs": {p.name: _sha256(p) for p in self.files},
            "stages_seconds": self.stages,
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


def _parse_domain(text: str) -> geometry.ConvexDomain:
    """Domain from a compact spec: interval:a,b | box:x0,y0,x1,y1 | polygon:x0,y0;x1,y1;..."""
    try:
        kind, _, rest = text.partition(":")
        if kind == "interval":
            a, b = (float(v) for v in rest.split(","))
            return geometry.Interval(a, b)
        if kind == "box":
            x0, y0, x1, y1 = (float(v) for v in rest.split(","))
            return geometry.AxisBox((x0, y0), (x1, y1))
        if kind == "polygon":
            verts = tuple(tuple(float(c) for c in v.split(",")) for v in rest.split(";"))
            return geometry.ConvexPolygon(verts)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad domain spec {text!r}: {exc}") from None
    raise ConfigError(f"unknown domain kind in {text!r}")


def _domain_grid(domain, n: int):
    lo, hi = geometry.bounding_box(domain)
    return build_grid(geometry.domain_dim(domain), lo, hi, n)


def _report_dict(rep: analysis.LogConcavityReport) -> dict:
    return {
        "passed": rep.passed,
        "worst_violation": rep.worst_violation,
        "witness": _jsonable(rep.witness),
        "tolerance": rep.tolerance,
        "excluded_fraction": rep.excluded_fraction,
    }


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (tuple, list)):
        return [_jsonable(v) for v in obj]
    return obj


def cmd_mehler(args, bundle: OutputBundle) -> int:
    if args.batch:
        rows = []
        with open(args.batch, newline="") as fh:
            for row in csv.DictReader(fh):
                x, z, t = float(row["x"]), float(row["z"]), float(row["t"])
                rows.append(
                    (x, z, t,
                     mehler.mehler_lebesgue(x, z, t),
                     mehler.mehler_gauss(x, z, t),
                     mehler.kernels_relation_residual(x, z, t))
                )
        bundle.write_csv("mehler.csv", ["x", "z", "t", "p_lebesgue", "p_gauss", "residual"], rows)
        return EXIT_OK
    x, z, t = args.x, args.z, args.t
    print(f"p_lebesgue = {mehler.mehler_lebesgue(x, z, t):.12g}")
    print(f"p_gauss    = {mehler.mehler_gauss(x, z, t):.12g}")
    print(f"residual   = {mehler.kernels_relation_residual(x, z, t):.6g}")
    return EXIT_OK


def cmd_kernel(args, bundle: OutputBundle) -> int:
    domain = _parse_domain(args.domain)
    grid = _domain_grid(domain, args.grid_n)
    l_max = min(args.levels, trotter.max_usable_level(grid, args.t))
    if l_max < 1:
        raise ConfigError("grid too coarse for any dyadic level at this time")
    k, report = trotter.dyadic_converge(domain, grid, args.t, l_max, args.tol)
    weights = gaussian_weights(grid)
    rows = ([i] + list(k.matrix[i]) for i in range(grid.total))
    bundle.write_csv("kernel.csv", ["row"] + [f"c{j}" for j in range(grid.total)], rows)
    symmetric = bool(np.array_equal(k.matrix, k.matrix.T))
    nonneg = bool(np.all(k.matrix >= 0.0))
    joint = analysis.is_jointly_log_concave(k)
    meta = {
        "domain": args.domain,
        "t": args.t,
        "grid": {"dim": grid.dim, "lo": grid.lo, "hi": grid.hi, "n": grid.n_per_axis},
        "convergence": {"history": report.history, "converged": report.converged},
        "checks": {
            "symmetric": symmetric,
            "nonnegative": nonneg,
            "max_mass": max(trotter.mass(k, weights, i) for i in np.flatnonzero(k.mask)),
            "joint_log_concavity": _report_dict(joint),
        },
    }
    bundle.write_json("kernel_meta.json", _jsonable_tree(meta))
    # convergence history is reported as data; the dyadic tail decays too
    # slowly for a strict converged gate at practical levels
    ok = symmetric and nonneg and joint.passed
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_eigs(args, bundle: OutputBundle) -> int:
    domain = _parse_domain(args.domain)
    grid = _domain_grid(domain, args.grid_n)
    dec = spectral.solve_domain(domain, grid, args.modes)
    ratios = spectral.sup_norm_ratio(dec)
    residuals = [spectral.residual_check(dec, k) for k in range(min(3, dec.k_modes))]
    payload = {
        "domain": args.domain,
        "eigenvalues": list(dec.eigenvalues),
        "sup_norm_ratios": list(ratios),
        "residuals_first_modes": residuals,
    }
    bundle.write_json("eigs.json", _jsonable_tree(payload))
    if args.eigenfunctions:
        rows = []
        for i in range(grid.total):
            rows.append([*grid.points[i], *(dec.eigenfunctions[k, i] for k in range(dec.k_modes))])
        header = [f"x{d}" for d in range(grid.dim)] + [f"phi{k+1}" for k in range(dec.k_modes)]
        bundle.write_csv("eigenfunctions.csv", header, rows)
    return EXIT_OK


def cmd_logcc(args, bundle: OutputBundle) -> int:
    data = np.loadtxt(args.input, delimiter=",")
    tol = "auto" if args.tol == "auto" else float(args.tol)
    rep = analysis.is_log_concave(data, tol, spacing=args.spacing)
    bundle.write_json("logcc.json", _jsonable_tree(_report_dict(rep)))
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def cmd_trace(args, bundle: OutputBundle) -> int:
    domain = _parse_domain(args.domain)
    grid = _domain_grid(domain, args.grid_n)
    dec = spectral.solve_domain(domain, grid, args.modes)
    times = np.linspace(args.tmin, args.tmax, args.samples)
    curve = bm.spectral_trace_curve(dec, times)
    rows = [(t, z, float(np.log(z))) for t, z in zip(curve.times, curve.values)]
    bundle.write_csv("trace.csv", ["t", "Z", "logZ"], rows)
    return EXIT_OK


def cmd_bm(args, bundle: OutputBundle) -> int:
    om0 = _parse_domain(args.omega0)
    om1 = _parse_domain(args.omega1)
    s_list = [float(s) for s in args.s.split(",")]
    policy = bm.GridPolicy()
    trace_rep = bm.bm_trace_inequality(om0, om1, s_list, args.t, policy, method=args.method)
    eig_rep = bm.bm_eigenvalue_inequality(om0, om1, [s for s in s_list if 0.0 < s < 1.0], policy)
    payload = {
        "trace": [vars(r) for r in trace_rep.rows],
        "eigenvalue": [vars(r) for r in eig_rep.rows],
        "passed": trace_rep.passed and eig_rep.passed,
    }
    bundle.write_json("bm.json", _jsonable_tree(payload))
    bundle.write_csv(
        "bm.csv",
        ["s", "lhs", "rhs", "margin"],
        [(r.s, r.lhs, r.rhs, r.margin) for r in trace_rep.rows],
    )
    return EXIT_OK if payload["passed"] else EXIT_CHECK_FAILED


def cmd_evolve(args, bundle: OutputBundle) -> int:
    domain = _parse_domain(args.domain)
    grid = _domain_grid(domain, args.grid_n)
    times = [float(t) for t in args.times.split(",")]
    if args.u0.startswith("builtin:"):
        name = args.u0.split(":", 1)[1]
        family = dict(evolution.builtin_family(domain, grid))
        if name not in family:
            raise ConfigError(f"unknown builtin datum {name!r}; have {sorted(family)}")
        u0 = family[name]
    elif args.u0.startswith("file:"):
        values = np.loadtxt(args.u0.split(":", 1)[1], delimiter=",").reshape(-1)
        u0 = GridFunction(grid, values)
    else:
        raise ConfigError(f"u0 must be builtin:<name> or file:<csv>, got {args.u0!r}")
    result = evolution.evolve_dirichlet(domain, grid, u0, times, method=args.method)
    summary = []
    for t, state in zip(result.times, result.states):
        rep = analysis.is_log_concave(state)
        summary.append({"t": t, "log_concave": _report_dict(rep)})
        rows = [( *grid.points[i], state.values[i]) for i in range(grid.total)]
        header = [f"x{d}" for d in range(grid.dim)] + ["u"]
        bundle.write_csv(f"u_t{t:g}.csv", header, rows)
    bundle.write_json("evolve_summary.json", _jsonable_tree(summary))
    ok = all(entry["log_concave"]["passed"] for entry in summary)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _jsonable_tree(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable_tree(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable_tree(v) for v in obj.tolist()]
    return _jsonable(obj)


def emit_plot_data(result, kind: str, bundle: OutputBundle) -> Path:
    """Plot-ready long-format CSVs for inspection offline."""
    if kind == "trace":
        rows = [(t, z, float(np.log(z))) for t, z in zip(result.times, result.values)]
        return bundle.write_csv("plot_trace.csv", ["t", "Z", "logZ"], rows)
    if kind == "eigenfunction":
        dec = result
        rows = [
            (*dec.grid.points[i], dec.eigenfunctions[0, i],
             float(np.log(dec.eigenfunctions[0, i])) if dec.eigenfunctions[0, i] > 0 else "")
            for i in range(dec.grid.total)
        ]
        header = [f"x{d}" for d in range(dec.grid.dim)] + ["phi1", "log_phi1"]
        return bundle.write_csv("plot_eigenfunction.csv", header, rows)
    if kind == "bm":
        rows = [(r.s, r.lhs, r.rhs, r.margin) for r in result.rows]
        return bundle.write_csv("plot_bm.csv", ["s", "lhs", "rhs", "margin"], rows)
    raise ConfigError(f"unknown plot kind {kind!r}")


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    if p.suffix == ".json":
        return json.loads(p.read_text())
    with open(p, "rb") as fh:
        return tomllib.load(fh)


def cmd_run(args, bundle: OutputBundle) -> int:
    config = _load_config(args.config)
    stages = config.get("stages")
    if not isinstance(stages, list) or not stages:
        raise ConfigError("config must contain a non-empty 'stages' list")
    overall = EXIT_OK
    for i, stage in enumerate(stages):
        if "cmd" not in stage:
            raise ConfigError(f"stage {i} is missing 'cmd'")
        cmd = stage["cmd"]
        if cmd not in _STAGE_COMMANDS:
            raise ConfigError(f"stage {i} has unknown cmd {cmd!r}")
        argv = [cmd]
        for key, value in stage.items():
            if key == "cmd":
                continue
            flag = "--" + key.replace("_", "-")
            if isinstance(value, bool):
                if value:
                    argv.append(flag)
            else:
                argv.extend([flag, str(value)])
        argv.extend(["--out", str(bundle.out_dir / f"stage{i}_{cmd}")])
        start = time.perf_counter()
        status = main(argv)
        bundle.stages[f"stage{i}_{cmd}"] = time.perf_counter() - start
        if status == EXIT_CONFIG_ERROR:
            return EXIT_CONFIG_ERROR
        overall = max(overall, status)
    bundle.finalize(config)
    return overall


def _add_out(p):
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oulab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mehler", help="evaluate the whole-space kernels")
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--z", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--batch", help="CSV of x,z,t queries")
    _add_out(p)
    p.set_defaults(func=cmd_mehler)

    p = sub.add_parser("kernel", help="converged Trotter kernel matrix")
    p.add_argument("--domain", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--grid-n", type=int, default=201)
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-4)
    _add_out(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("eigs", help="Dirichlet eigensolve")
    p.add_argument("--domain", required=True)
    p.add_argument("--grid-n", type=int, default=401)
    p.add_argument("--modes", type=int, default=20)
    p.add_argument("--eigenfunctions", action="store_true")
    _add_out(p)
    p.set_defaults(func=cmd_eigs)

    p = sub.add_parser("logcc", help="log-concavity check of a CSV grid")
    p.add_argument("--input", required=True)
    p.add_argument("--tol", default="auto")
    p.add_argument("--spacing", type=float, default=1.0)
    _add_out(p)
    p.set_defaults(func=cmd_logcc)

    p = sub.add_parser("trace", help="sampled trace curve Z(t)")
    p.add_argument("--domain", required=True)
    p.add_argument("--tmin", type=float, default=0.5)
    p.add_argument("--tmax", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=6)
    p.add_argument("--grid-n", type=int, default=401)
    p.add_argument("--modes", type=int, default=40)
    _add_out(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("bm", help="Brunn-Minkowski inequality checks")
    p.add_argument("--omega0", required=True)
    p.add_argument("--omega1", required=True)
    p.add_argument("--s", default="0,0.25,0.5,0.75,1")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--method", choices=["spectral", "trotter"], default="spectral")
    _add_out(p)
    p.set_defaults(func=cmd_bm)

    p = sub.add_parser("evolve", help="Dirichlet flow of an initial datum")
    p.add_argument("--domain", required=True)
    p.add_argument("--u0", required=True, help="builtin:<name> or file:<csv>")
    p.add_argument("--times", default="0.05,0.2,1")
    p.add_argument("--method", choices=["spectral", "trotter"], default="spectral")
    p.add_argument("--grid-n", type=int, default=201)
    _add_out(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("run", help="execute a configured pipeline")
    p.add_argument("--config", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_run)
    return parser


_STAGE_COMMANDS = {"mehler", "kernel", "eigs", "logcc", "trace", "bm", "evolve"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG_ERROR if exc.code not in (0, None) else 0
    bundle = OutputBundle(Path(args.out))
    try:
        status = args.func(args, bundle)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.command != "run":
        bundle.finalize({k: _jsonable_tree(v) for k, v in vars(args).items() if k != "func"})
    return status


if __name__ == "__main__":
    sys.exit(main())
