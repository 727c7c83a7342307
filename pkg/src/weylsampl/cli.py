"""Command-line front end.

Precedence for every option: built-in default < JSON config file (--config)
< command-line flag. Config keys are option names with '-' or '_'; unknown
keys are rejected. Exit codes: 0 success, 1 invalid input, 2 numerical
failure.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__, accel
from .errors import InvalidInputError, NumericalFailure, WeylSamplError
from .kernels import heat_diagnostics, t_min
from .lattices import build_lattice
from .manifolds import Mesh, candidate_pool, make_manifold, quadrature
from .sampling import DEFAULT_TAU, find_gamma, reconstruct, sampling_operator
from .spectra import analytic_basis, count_eigenvalues, mesh_basis, random_bandlimited
from .weyl import geometric_grid, weyl_scan

log = logging.getLogger("weylsampl")

GAMMA_CEIL = 63 / 64
# options that do not change results and stay out of the config hash
_UNHASHED = {"out", "format", "threads", "config", "command", "func", "verbose"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInputError(f"{self.prog}: {message}")


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p, manifold=True):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], help="default: from --out suffix, else json")
    p.add_argument("--threads", type=int, help="thread cap (fallback: WEYLSAMPL_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    if manifold:
        p.add_argument("--manifold", choices=["circle", "torus", "sphere", "mesh"], default="circle")
        p.add_argument("--circumference", type=float, default=2 * math.pi)
        p.add_argument("--lengths", type=_floats, default=[1.0, 1.0], help="torus side lengths")
        p.add_argument("--mesh", help="OFF file for --manifold mesh")
        p.add_argument("--icosphere", type=int, help="icosphere subdivision level")
        p.add_argument("--torus-grid", type=int, help="n x n periodic torus mesh")
        p.add_argument("--injectivity", type=float, help="injectivity radius override for meshes")
        p.add_argument("--k", type=int, default=64, help="mesh eigenpairs to compute")


def build_parser():
    parser = _Parser(prog="weylsampl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="eigenvalues up to a threshold")
    _common(p)
    p.add_argument("--lambda-max", type=float, default=100.0)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("mesh-eig", help="cotangent-Laplacian eigenpairs of a mesh")
    _common(p)
    p.add_argument("--vectors", action="store_true", help="include eigenvectors in JSON")
    p.set_defaults(func=cmd_mesh_eig, manifold="mesh")

    p = sub.add_parser("lattice", help="greedy maximal rho-packing")
    _common(p)
    p.add_argument("--rho", type=float, default=0.1)
    p.add_argument("--order", choices=["random", "fps"], default="random")
    p.add_argument("--pool-size", type=int)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("sample", help="sampling operator report on a lattice")
    _common(p)
    p.add_argument("--omega", type=float, default=100.0)
    p.add_argument("--rho", type=float, help="default: omega^{-1/2} / 2")
    p.add_argument("--trials", type=int, default=0, help="random reconstructions to check")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("heat", help="heat trace, diagonal and Gaussian-bound fit")
    _common(p)
    p.add_argument("--t", type=_floats, default=[0.1, 0.5, 1.0])
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--lambda-max", type=float, help="default: large enough for min(t)")
    p.add_argument("--resolution", type=int, default=64, help="quadrature resolution")
    p.add_argument("--fit", action="store_true", help="fit Gaussian bounds on random pairs")
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("weyl-scan", help="eigenvalue counts versus lattice cardinalities")
    _common(p)
    p.add_argument("--omega-min", type=float, default=100.0)
    p.add_argument("--omega-max", type=float, default=1600.0)
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--gamma", type=float, help="default: gamma search at the median omega")
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--no-certify", action="store_true")
    p.set_defaults(func=cmd_weyl_scan)

    p = sub.add_parser("gamma", help="empirical gamma search")
    _common(p)
    p.add_argument("--omega", type=float, default=100.0)
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.set_defaults(func=cmd_gamma)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def _apply_config(parser, argv):
    """Parse twice: the config file becomes subparser defaults, flags win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"cannot read config {args.config}: {exc}")
    if not isinstance(cfg, dict):
        raise InvalidInputError("config must be a JSON object")
    sub = _subparser(parser, args.command)
    known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise InvalidInputError(f"unknown config key {key!r} for {args.command}")
        action = known[dest]
        if action.type is not None and isinstance(value, str):
            value = action.type(value)
        elif action.type is _floats and isinstance(value, (int, float)):
            value = [float(value)]
        if action.choices is not None and value not in action.choices:
            raise InvalidInputError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _manifold(args):
    params = {
        "circumference": args.circumference,
        "lengths": tuple(args.lengths),
        "path": args.mesh,
        "injectivity": args.injectivity,
    }
    if args.icosphere is not None:
        params["icosphere"] = args.icosphere
    if args.torus_grid is not None:
        params["torus_grid"] = args.torus_grid
    return make_manifold(args.manifold, **params)


def _basis(m, args, lambda_max):
    if isinstance(m, Mesh):
        b = mesh_basis(m, args.k)
        if lambda_max is not None and lambda_max > b.lambda_max:
            raise InvalidInputError(
                f"mesh basis with k={args.k} reaches lambda={b.lambda_max:.4g} < {lambda_max:g}; "
                "raise --k")
        return b
    return analytic_basis(m, lambda_max)


def _config_hash(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _UNHASHED}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _provenance(args):
    return {"tool": "weylsampl", "version": __version__, "command": args.command,
            "seed": int(args.seed), "config_hash": _config_hash(args)}


def _format(args):
    if args.format:
        return args.format
    if args.out and args.out.lower().endswith(".csv"):
        return "csv"
    return "json"


def _json_text(payload, args):
    out = {"provenance": _provenance(args)}
    out.update(payload)
    return json.dumps(out, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_text(header, rows, args):
    buf = io.StringIO()
    for k, v in _provenance(args).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(text, args):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv_body(body, args):
    """Prefix a module-produced CSV body with the provenance comment block."""
    head = "".join(f"# {k}: {v}\n" for k, v in _provenance(args).items())
    _emit(head + body, args)


def cmd_spectrum(args):
    m = _manifold(args)
    b = _basis(m, args, args.lambda_max)
    lam = b.eigenvalues
    if isinstance(m, Mesh):
        lam = lam[lam <= args.lambda_max * (1 + 1e-12)]
    if _format(args) == "csv":
        _emit(_csv_text(["index", "eigenvalue"], [(i, float(v)) for i, v in enumerate(lam)], args), args)
    else:
        _emit(_json_text({"manifold": m.describe(), "lambda_max": float(args.lambda_max),
                          "provenance_basis": b.provenance, "n": int(lam.size),
                          "eigenvalues": [float(v) for v in lam],
                          "multiplicities": [[float(v), int(c)] for v, c in b.multiplicities()
                                             if v <= args.lambda_max * (1 + 1e-12)]}, args), args)


def cmd_mesh_eig(args):
    m = _manifold(args)
    if not isinstance(m, Mesh):
        raise InvalidInputError("mesh-eig needs --manifold mesh")
    b = mesh_basis(m, args.k)
    if _format(args) == "csv":
        _emit(_csv_text(["index", "eigenvalue"], [(i, float(v)) for i, v in enumerate(b.eigenvalues)],
                        args), args)
        return
    data = b.to_dict()
    if not args.vectors:
        data.pop("eigenvectors", None)
    data["basis_provenance"] = data.pop("provenance")
    _emit(_json_text(data, args), args)


def cmd_lattice(args):
    m = _manifold(args)
    if args.rho > m.diameter:
        log.warning("rho=%g exceeds the diameter %.4g: the lattice is a single point", args.rho, m.diameter)
        print(f"warning: rho={args.rho:g} exceeds the diameter {m.diameter:.4g}; "
              "the lattice is a single point", file=sys.stderr)
    pool = None
    if args.pool_size:
        pool = candidate_pool(m, args.pool_size, args.seed)
    lat = build_lattice(m, args.rho, pool, args.seed, order=args.order)
    if _format(args) == "csv":
        pts = np.asarray(lat.points)
        pts = pts.reshape(len(pts), -1)
        header = ["index"] + [f"x{i}" for i in range(pts.shape[1])]
        rows = [[i] + [v.item() for v in row] for i, row in enumerate(pts)]
        _emit(_csv_text(header, rows, args), args)
    else:
        _emit(_json_text({"manifold": m.describe(), "lattice": lat.to_dict()}, args), args)


def cmd_sample(args):
    m = _manifold(args)
    b = _basis(m, args, args.omega)
    rho = args.rho if args.rho else 0.5 / math.sqrt(args.omega)
    lat = build_lattice(m, rho, None, args.seed)
    op = sampling_operator(b, args.omega, lat)
    rep = op.report()
    if args.trials > 0:
        err = 0.0
        for i in range(args.trials):
            f = random_bandlimited(b, args.omega, args.seed + i)
            g = reconstruct(op, f(lat.points))
            err = max(err, float(np.linalg.norm(g.coeffs - f.coeffs) / f.norm))
        rep["reconstruction_error"] = err
    if _format(args) == "csv":
        keys = list(rep)
        _emit(_csv_text(keys, [[rep[k] if rep[k] is not None else "" for k in keys]], args), args)
    else:
        _emit(_json_text({"manifold": m.describe(), "report": rep}, args), args)


def _heat_lambda_max(m, t):
    lam = max(50.0 / t, 16.0)
    while True:
        b = analytic_basis(m, lam)
        if t_min(b) <= t:
            return b
        lam *= 1.5


def cmd_heat(args):
    m = _manifold(args)
    ts = sorted(args.t)
    if not ts or ts[0] <= 0:
        raise InvalidInputError("--t needs positive values")
    if isinstance(m, Mesh):
        b = mesh_basis(m, args.k)
    elif args.lambda_max:
        b = analytic_basis(m, args.lambda_max)
    else:
        b = _heat_lambda_max(m, ts[0])
    pts = candidate_pool(m, args.points, args.seed)
    pairs = None
    if args.fit:
        x = candidate_pool(m, 4 * args.points, args.seed + 1)
        y = candidate_pool(m, 4 * args.points, args.seed + 2)
        pairs = (np.concatenate([m.as_points(x), m.as_points(x)]),
                 np.concatenate([m.as_points(x), m.as_points(y)]))
    diag = heat_diagnostics(b, m, ts, pts, quadrature(m, args.resolution), pairs, args.seed)
    if _format(args) == "csv":
        _emit_csv_body(diag.to_csv(), args)
    else:
        _emit(_json_text({"heat": diag.to_dict()}, args), args)


def cmd_weyl_scan(args):
    m = _manifold(args)
    grid = geometric_grid(args.omega_min, args.omega_max, args.points)
    b = _basis(m, args, grid[-1])
    gamma = args.gamma
    if gamma is None:
        mid = float(np.median(grid))
        gamma = min(find_gamma(b, m, mid, args.trials, args.seed, tau=args.tau), GAMMA_CEIL)
        print(f"empirical gamma at omega={mid:.6g}: {gamma:.6g}", file=sys.stderr)
    rep = weyl_scan(b, m, grid, gamma, args.trials, args.seed, certify=not args.no_certify)
    for r in rep.rows:
        if r.skipped:
            print(f"skipped omega={r.omega:.6g}: {r.reason}", file=sys.stderr)
    if _format(args) == "csv":
        _emit_csv_body(rep.to_csv(), args)
    else:
        _emit(_json_text({"report": rep.to_dict()}, args), args)


def cmd_gamma(args):
    m = _manifold(args)
    b = _basis(m, args, args.omega)
    g = find_gamma(b, m, args.omega, args.trials, args.seed, tau=args.tau)
    res = {"omega": float(args.omega), "gamma": float(g), "tau": float(args.tau),
           "trials": int(args.trials), "n_omega": int(count_eigenvalues(b, args.omega)),
           "label": "empirical gamma"}
    if _format(args) == "csv":
        keys = list(res)
        _emit(_csv_text(keys, [[res[k] for k in keys]], args), args)
    else:
        _emit(_json_text(res, args), args)


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                            format="%(levelname)s %(message)s")
        threads = args.threads or os.environ.get("WEYLSAMPL_THREADS")
        if threads:
            try:
                threads = int(threads)
            except ValueError:
                raise InvalidInputError(f"thread count must be an integer, got {threads!r}")
            if threads < 1:
                raise InvalidInputError("thread count must be >= 1")
            accel.set_threads(threads)
        log.info("backend: %s", accel.BACKEND)
        args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except WeylSamplError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
