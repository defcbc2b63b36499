"""Command-line entry point: ``holderkit <command> [options]``.

Commands: estimate, descend, quadnorm, certify, figure1.  Every command
accepts ``--seed``, ``--config`` (JSON file of option values; explicit
flags win), ``--out`` and ``--tol``.  JSON outputs carry the seed and a
SHA-256 hash of the resolved configuration.

Exit codes: 0 success, 1 usage error, 2 verification FAIL, 3 INCONCLUSIVE.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import certifier, corpus, descent, holder, quadnorms
from .normed_space import NormSpec
from .verdict import FAIL, PASS, dumps, jsonable

log = logging.getLogger("holderkit")

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3

DEFAULTS = {
    "common": {"seed": 0, "out": None, "tol": None},
    "estimate": {"fn": None, "norm": "l2", "dim": None, "nu": [1.0], "pairs": 200_000,
                 "refine": 200, "elite": 16, "box": 2.0},
    "descend": {"fn": None, "norm": "l2", "dim": None, "L": None, "nu": 1.0, "eps": 1e-3,
                "x0": None, "f_star": None, "xi": None, "max_iter": None,
                "trace": None, "compare": False},
    "quadnorm": {"B": "I", "norm": "l2", "dim": None},
    "certify": {"norm": "linf", "dim": 2, "pairs": 1000, "samples": 4096,
                "margin": 1e-3, "mvee_tol": 1e-7},
    "figure1": {"nu_min": 0.01, "nu_max": 1.0, "steps": 100},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- parsing helpers ---------------------------------------------------------


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _natural_dim(fid):
    if fid == "example51":
        return 2
    if fid in ("quad1d", "cubic") or fid.startswith("power:"):
        return 1
    if fid.startswith("linear:"):
        return len(_floats(fid.split(":", 1)[1]))
    if fid.startswith("quad:"):
        return corpus.load_matrix(fid.split(":", 1)[1]).shape[0]
    return None


def parse_norm(text, dim=None):
    """``l1``/``l2``/``linf``, ``weighted:<H.json>`` or a JSON norm file."""
    if text in ("l1", "l2", "linf"):
        if dim is None:
            raise UsageError(f"norm {text!r} needs a dimension (--dim)")
        return getattr(NormSpec, text)(int(dim))
    if text.startswith("weighted:"):
        return NormSpec.weighted(corpus.load_matrix(text.split(":", 1)[1]))
    path = Path(text)
    if path.is_file():
        with open(path) as fh:
            return NormSpec.from_dict(json.load(fh))
    raise UsageError(f"unknown norm {text!r}")


def parse_matrix(text, dim, rng):
    """``diag(a,b,..)``, ``I``, ``random``, ``random-psd``, a JSON file or inline JSON."""
    m = re.fullmatch(r"diag\((.*)\)", text.strip())
    if m:
        return np.diag(_floats(m.group(1)))
    if text in ("I", "random", "random-psd"):
        n = int(dim or 3)
        if text == "I":
            return np.eye(n)
        G = rng.standard_normal((n, n))
        return G + G.T if text == "random" else G @ G.T
    if Path(text).is_file():
        return corpus.load_matrix(text)
    try:
        return np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise UsageError(f"cannot parse matrix {text!r}") from None


def _function_and_norm(cfg):
    fid = cfg["fn"]
    if not fid:
        raise UsageError("--fn is required")
    try:
        dim = cfg["dim"] or _natural_dim(fid) or 2
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    spec = parse_norm(cfg["norm"], dim)
    try:
        f = corpus.get_function(fid, spec)
    except (KeyError, ValueError, OSError) as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc)) from None
    return f, spec


def config_hash(cfg):
    return hashlib.sha256(dumps(cfg).encode()).hexdigest()


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


IO_KEYS = ("out", "trace")


def _envelope(command, cfg, body):
    # output locations do not affect results, so they stay out of the hash
    rec = {k: v for k, v in cfg.items() if k not in IO_KEYS}
    return {"command": command, "seed": cfg["seed"], "config": rec,
            "config_hash": config_hash(rec), **body}


# -- commands ----------------------------------------------------------------


def cmd_estimate(cfg):
    f, spec = _function_and_norm(cfg)
    budget = holder.SamplingConfig(pairs=int(cfg["pairs"]), refine=int(cfg["refine"]),
                                   elite=int(cfg["elite"]), box=float(cfg["box"]),
                                   seed=int(cfg["seed"]))
    tol = cfg["tol"] if cfg["tol"] is not None else 1e-9
    reports, code = [], EXIT_OK
    for nu in cfg["nu"]:
        rep = holder.estimate_constants(f, spec, float(nu), budget)
        known = f.constants_for(nu, spec)
        truth = (known.M, known.L) if known else None
        v = holder.verify_bounds(rep, truth, euclidean=spec.is_euclidean_kind, tol=tol)
        if v.status == FAIL:
            code = EXIT_FAIL
        reports.append({"report": rep.to_dict(), "verdict": v.to_dict()})
    return _envelope("estimate", cfg, {"reports": reports}), code


def _default_x0(dim):
    return 1.0 / np.arange(1, dim + 1)


def _descend_once(f, spec, cfg, L, x0, f_star):
    dc = descent.DescentConfig(L=L, nu=float(cfg["nu"]), epsilon=float(cfg["eps"]), x0=x0,
                               f_star=f_star, xi=cfg["xi"], max_iter=cfg["max_iter"])
    rtol = cfg["tol"] if cfg["tol"] is not None else descent.DECREASE_RTOL
    try:
        trace = descent.run(f, spec, dc)
    except descent.DescentError as exc:
        return {"L": L, "verdict": {"status": FAIL, "message": str(exc)}}, None
    v = descent.verify_trace(trace, dc, rtol=rtol)
    body = {"L": L, "summary": trace.summary(), "verdict": v.to_dict(),
            "iterations": trace.iterations,
            "iteration_bound": v.details["iteration_bound"]}
    return body, trace


def cmd_descend(cfg):
    f, spec = _function_and_norm(cfg)
    x0 = np.asarray(_floats(cfg["x0"]) if cfg["x0"] else _default_x0(spec.dim))
    if x0.shape != (spec.dim,):
        raise UsageError(f"--x0 needs {spec.dim} values")
    f_star, assumed = cfg["f_star"], False
    if f_star is None:
        if f.lower_bound is None:
            f_star, assumed = float(f.value(x0)) - 100.0, True
        else:
            f_star = f.lower_bound
    nu = float(cfg["nu"])
    if cfg["compare"]:
        known = f.constants_for(nu, spec)
        if known is None or known.L <= 0:
            raise UsageError("--compare needs known constants for this function, norm and nu")
        Ls = {"L_f": known.L, "2L_f": 2 * known.L, "M_f": known.M}
        runs = {}
        code = EXIT_OK
        for label, L in Ls.items():
            body, _ = _descend_once(f, spec, cfg, L, x0, f_star)
            runs[label] = body
            if body["verdict"]["status"] != PASS:
                code = EXIT_FAIL
        return _envelope("descend", cfg, {"f_star": f_star, "f_star_assumed": assumed,
                                          "runs": runs}), code
    if cfg["L"] is None:
        raise UsageError("--L is required unless --compare is given")
    body, trace = _descend_once(f, spec, cfg, float(cfg["L"]), x0, f_star)
    if trace is not None:
        log.info("iterations %d, bound %d", body["iterations"], body["iteration_bound"])
        if cfg["trace"]:
            Path(cfg["trace"]).write_text(trace.to_csv())
    code = EXIT_OK if body["verdict"]["status"] == PASS else EXIT_FAIL
    return _envelope("descend", cfg, {"f_star": f_star, "f_star_assumed": assumed,
                                      **body}), code


def cmd_quadnorm(cfg):
    rng = np.random.default_rng(cfg["seed"])
    B = parse_matrix(str(cfg["B"]), cfg["dim"], rng)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise UsageError(f"matrix must be square, got shape {B.shape}")
    spec = parse_norm(cfg["norm"], B.shape[0])
    tol = cfg["tol"] if cfg["tol"] is not None else quadnorms.SANDWICH_TOL
    try:
        v = quadnorms.gap_report(B, spec, tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    code = {PASS: EXIT_OK, FAIL: EXIT_FAIL}.get(v.status, EXIT_INCONCLUSIVE)
    return _envelope("quadnorm", cfg, {"B": B, "opnorm": v.details["opnorm"],
                                       "qnorm": v.details["qnorm"],
                                       "ratio": v.details["ratio"],
                                       "verdict": v.to_dict()}), code


def cmd_certify(cfg):
    spec = parse_norm(cfg["norm"], cfg["dim"])
    cc = certifier.CertifyConfig(
        euclid_tol=cfg["tol"] if cfg["tol"] is not None else 1e-9,
        pairs=int(cfg["pairs"]), samples=int(cfg["samples"]), margin=float(cfg["margin"]),
        mvee_tol=float(cfg["mvee_tol"]), seed=int(cfg["seed"]))
    try:
        res = certifier.certify(spec, cc)
    except certifier.CertificationError as exc:
        raise UsageError(str(exc)) from None
    code = EXIT_INCONCLUSIVE if res.verdict == certifier.INCONCLUSIVE else EXIT_OK
    return _envelope("certify", cfg, {"norm": spec.to_dict(), **res.to_dict()}), code


def cmd_figure1(cfg):
    grid = np.linspace(float(cfg["nu_min"]), float(cfg["nu_max"]), int(cfg["steps"]))
    try:
        rows = holder.figure1_table(grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return holder.figure1_csv(rows), EXIT_OK


COMMANDS = {"estimate": cmd_estimate, "descend": cmd_descend, "quadnorm": cmd_quadnorm,
            "certify": cmd_certify, "figure1": cmd_figure1}


# -- argument parser ---------------------------------------------------------


def _common(p):
    # defaults are None so that config-file values survive; see DEFAULTS
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--config", help="JSON file of option values; flags override it")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--tol", type=float, help="verification tolerance (command-specific default)")


def build_parser():
    parser = _Parser(prog="holderkit", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="sampled lower bounds on M_f(nu), L_f(nu)")
    _common(p)
    p.add_argument("--fn", help="function id, e.g. example51, zero, power:0.5, quad:B.json")
    p.add_argument("--norm", help="l1 | l2 | linf | weighted:H.json | norm.json (default l2)")
    p.add_argument("--dim", type=int, help="dimension when the function does not fix it")
    p.add_argument("--nu", type=float, nargs="+", help="exponents (default 1)")
    p.add_argument("--pairs", type=int, help="random pairs (default 200000)")
    p.add_argument("--refine", type=int, help="refinement steps (default 200)")
    p.add_argument("--elite", type=int, help="pairs refined (default 16)")
    p.add_argument("--box", type=float, help="sampling box half-width (default 2)")

    p = sub.add_parser("descend", help="run the normalized gradient method and verify the trace")
    _common(p)
    p.add_argument("--fn")
    p.add_argument("--norm", help="default l2")
    p.add_argument("--dim", type=int)
    p.add_argument("--L", type=float, help="approximation parameter used by the method")
    p.add_argument("--nu", type=float, help="default 1")
    p.add_argument("--eps", type=float, help="target dual gradient norm (default 1e-3)")
    p.add_argument("--x0", help="comma-separated start (default 1, 1/2, 1/3, ...)")
    p.add_argument("--f-star", dest="f_star", type=float,
                   help="lower bound on f (default: known bound, else f(x0) - 100)")
    p.add_argument("--xi", type=float, help="default (1/(1+nu))^(1/nu)")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="default 10x the bound")
    p.add_argument("--trace", help="write the trace CSV here")
    p.add_argument("--compare", action="store_true", default=None,
                   help="run with L in {L_f, 2 L_f, M_f} from known constants")

    p = sub.add_parser("quadnorm", help="operator vs quadratic-form norm of a symmetric matrix")
    _common(p)
    p.add_argument("--B", help="diag(a,b,...) | I | random | random-psd | file.json | inline JSON")
    p.add_argument("--norm", help="default l2")
    p.add_argument("--dim", type=int, help="size for I/random (default 3)")

    p = sub.add_parser("certify", help="Euclidean test with a witness operator when it fails")
    _common(p)
    p.add_argument("--norm", help="default linf")
    p.add_argument("--dim", type=int, help="default 2")
    p.add_argument("--pairs", type=int, help="parallelogram fast-path pairs (default 1000)")
    p.add_argument("--samples", type=int, help="unit-sphere samples for the ellipsoid (default 4096)")
    p.add_argument("--margin", type=float, help="witness margin (default 1e-3)")
    p.add_argument("--mvee-tol", dest="mvee_tol", type=float, help="default 1e-7")

    p = sub.add_parser("figure1", help="coefficient curves as CSV")
    _common(p)
    p.add_argument("--nu-min", dest="nu_min", type=float, help="default 0.01")
    p.add_argument("--nu-max", dest="nu_max", type=float, help="default 1.0")
    p.add_argument("--steps", type=int, help="grid points (default 100)")
    return parser


def resolve_config(args):
    """Defaults, then the ``--config`` file, then explicit flags."""
    cmd = args.command
    cfg = {**DEFAULTS["common"], **DEFAULTS[cmd]}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        unknown = set(data) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        result, code = COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"holderkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(result if isinstance(result, str) else dumps(jsonable(result)), cfg["out"])
    return code


if __name__ == "__main__":
    sys.exit(main())
