"""Command-line front end.

Exit codes: 0 MEMBER or agreement, 1 NON_MEMBER or witness found,
2 UNDECIDED, 64 usage error, 65 malformed or invalid input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__, experiments, io, opsys, tensor
from .errors import MalformedInput, OpsysError
from .opsys import DEFAULT_TOL, MEMBER, NON_MEMBER, UNDECIDED

EXIT_OK, EXIT_NON, EXIT_UNDECIDED, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 64, 65

VERBS = ("validate", "dualize", "member", "cp", "extend", "lift", "wep", "wri", "np", "quasi", "search", "rays")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="opsystk", description="Operator system tensor oracles and harnesses.")
    p.add_argument("--version", action="version", version=f"opsystk {__version__}")
    p.add_argument("verb", help=", ".join(VERBS))
    p.add_argument("inputs", nargs="*", help="input files (or built-in names where a system is expected)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=2)
    p.add_argument("--out", default="-")
    p.add_argument("--catalog", default=None)
    p.add_argument("--tensor", choices=("min", "max"), default="min")
    return p


def _doc(arg):
    """A JSON file path, or a bare built-in system name."""
    if os.path.exists(arg):
        return io.read_json(arg)
    if arg.lstrip().startswith(("{", "[")):
        return io.parse_json(arg)
    try:
        io.builtin(arg)
    except MalformedInput:
        raise MalformedInput(f"no such file: {arg}") from None
    return {"builtin": arg}


def _need(args, k):
    if len(args.inputs) < k:
        raise UsageError(f"{args.verb} needs {k} input(s)")


def _config(args):
    return {"tol": args.tol, "level": args.level, "samples": args.samples, "seed": args.seed, "cap": args.cap,
            "catalog": args.catalog, "tensor": args.tensor, "inputs": list(args.inputs)}


def _verdict_doc(verb, args, v, **extra):
    doc = {"harness": verb, "config": _config(args),
           "instances": [{"id": verb, "verdict": v.status, "grounded": bool(v.grounded),
                          "certificate_digest": experiments.certificate_digest(v), "time_ms": 0,
                          "route": v.route, "lower": v.lower, "upper": v.upper}],
           "summary": {"verdict": v.status, **extra}}
    return doc, {MEMBER: EXIT_OK, NON_MEMBER: EXIT_NON, UNDECIDED: EXIT_UNDECIDED}[v.status]


def _catalog(args):
    if args.catalog is None:
        return experiments.Catalog.builtin(seed=args.seed)
    return io.load_catalog(_doc(args.catalog))


def _harness_exit(summary, bad_key, undecided_key="undecided"):
    if summary.get(bad_key):
        return EXIT_NON
    if summary.get(undecided_key):
        return EXIT_UNDECIDED
    return EXIT_OK


def cmd_validate(args):
    _need(args, 1)
    s = io.load_system(_doc(args.inputs[0]))
    summary = {"kind": s.kind, "n": s.n, "dim": s.dim, "abelian": bool(s.abelian), "name": s.name}
    if isinstance(s, opsys.QuotientSystem):
        summary["parent"] = s.parent
        summary["null_dim"] = s.null.dim
        summary["null_certificate"] = s.null.certificate
    return {"harness": "validate", "config": _config(args), "instances": [], "summary": summary}, EXIT_OK


def cmd_dualize(args):
    _need(args, 1)
    s = io.load_system(_doc(args.inputs[0]))
    if isinstance(s, opsys.QuotientSystem):
        d = opsys.dual_of_quotient(s)
    else:
        d = opsys.dual_of_matrix_system(s, check=False)
    d.name = f"dual({s.name})"
    summary = {"source_kind": s.kind, "kind": d.kind, "dim": d.dim, "n": d.n}
    return {"harness": "dualize", "config": _config(args), "instances": [], "summary": summary,
            "system": io.dump_system(d)}, EXIT_OK


def cmd_member(args):
    _need(args, 1)
    x = io.load_tensor(_doc(args.inputs[0]))
    if args.level != 1 and x.level == 1 and np.allclose(x.coeffs, tensor.TensorElement.unit(x.left, x.right).coeffs):
        x = tensor.TensorElement.unit(x.left, x.right, args.level)
    if args.tensor == "min":
        v = tensor.min_member(x, args.tol, samples=args.samples or 20, cap=args.cap, seed=args.seed)
    else:
        v = tensor.max_member(x, args.tol, cap=args.cap, samples=args.samples or 4, seed=args.seed)
    return _verdict_doc("member", args, v, tensor=args.tensor, level=x.level)


def cmd_cp(args):
    _need(args, 1)
    phi = io.load_map(_doc(args.inputs[0]))
    v = tensor.cp_check(phi, args.tol, cap=args.cap, samples=args.samples or 20, seed=args.seed)
    return _verdict_doc("cp", args, v)


def cmd_extend(args):
    _need(args, 1)
    doc = _doc(args.inputs[0])
    s1 = io.load_system(doc.get("s1") or doc["map"]["source"])
    s2 = io.load_system(doc["s2"])
    phi = io.load_map(doc["map"])
    phi.source = s1
    v = tensor.ucp_extension_exists(s1, s2, phi, args.tol)
    extra = {}
    if v.status == MEMBER:
        extra["extension_images"] = v.certificate["extension"].images.tolist()
    return _verdict_doc("extend", args, v, **extra)


def cmd_lift(args):
    _need(args, 1)
    doc = _doc(args.inputs[0])
    x = io.load_tensor(doc)
    v = tensor.positive_lift_exists(x, float(doc.get("eps", 1e-6)), args.tol)
    return _verdict_doc("lift", args, v)


def cmd_wep(args):
    _need(args, 1)
    s = io.load_system(_doc(args.inputs[0]))
    quots = _catalog(args).quotients()
    levels = tuple(range(1, args.level + 1))
    r = experiments.wep_scan(s, quots, levels, args.samples or 20, args.tol, args.seed)
    return r.to_dict(), _harness_exit(r.summary, "witnesses")


def cmd_wri(args):
    _need(args, 2)
    s1 = io.load_system(_doc(args.inputs[0]))
    s2 = io.load_system(_doc(args.inputs[1]))
    targets = [(k, v) for k, v in _catalog(args).matrix_systems() if v.n <= 4]
    r = experiments.wri_scan(s1, s2, targets, args.samples or 5, args.tol, args.seed)
    return r.to_dict(), _harness_exit(r.summary, "failures")


def cmd_np(args):
    _need(args, 1)
    s = io.load_system(_doc(args.inputs[0]))
    which = args.inputs[1] if len(args.inputs) > 1 else "W6"
    if which not in ("W6", "W23"):
        raise UsageError("np test system must be W6 or W23")
    r = experiments.np_test(s, which, tuple(range(1, args.level + 1)), args.samples or 10, args.tol, args.seed,
                            args.cap)
    return r.to_dict(), _harness_exit(r.summary, "witnesses", "gaps")


def cmd_quasi(args):
    _need(args, 1)
    s = io.load_system(_doc(args.inputs[0]))
    others = [(k, v) for k, v in _catalog(args).matrix_systems() if v.n <= 4 and v.dim <= 9]
    r = experiments.quasi_nuclear_scan(s, others, tuple(range(1, args.level + 1)), args.samples or 3,
                                       args.tol, args.seed, args.cap)
    return r.to_dict(), _harness_exit(r.summary, "witnesses", "gaps")


def cmd_search(args):
    _need(args, 2)
    left = io.load_system(_doc(args.inputs[0]))
    right = io.load_system(_doc(args.inputs[1]))
    w = experiments.witness_search(left, right, budget=args.samples if args.samples is not None else 20,
                                   seed=args.seed, tol=args.tol, cap=args.cap)
    doc = w.report.to_dict()
    if w.found:
        doc["witness"] = {"x": io.dump_tensor(w.x) if hasattr(w.x, "coeffs") else np.asarray(w.x).tolist(),
                          "f": io.encode_matrix(w.f)}
    return doc, EXIT_NON if w.found else EXIT_OK


def cmd_rays(args):
    _need(args, 1)
    s = io.load_system(_doc(args.inputs[0]))
    rays = experiments.lp_extreme_rays(s)
    return {"harness": "rays", "config": _config(args), "instances": [],
            "summary": {"system": s.name, "count": len(rays), "rays": [list(r) for r in rays]}}, EXIT_OK


COMMANDS = {v: globals()[f"cmd_{v}"] for v in VERBS}


def _emit(doc, out):
    # an emitted system is input for the next command, so it keeps full precision
    system = doc.pop("system", None)
    doc = experiments._canon(doc)
    if system is not None:
        doc["system"] = system
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    d = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".opsystk-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, out)


def run(argv=None):
    """Parse ``argv``, dispatch, write the report; returns the exit code."""
    try:
        args = build_parser().parse_intermixed_args(argv)
        if args.verb not in COMMANDS:
            raise UsageError(f"unknown verb {args.verb!r}; expected one of {', '.join(VERBS)}")
        doc, code = COMMANDS[args.verb](args)
    except UsageError as e:
        sys.stderr.write(f"opsystk: usage error: {e}\n")
        return EXIT_USAGE
    except OpsysError as e:
        _report_error(e)
        return EXIT_DATA
    except (KeyError, TypeError, ValueError) as e:
        _report_error(MalformedInput(str(e)))
        return EXIT_DATA
    _emit(doc, args.out)
    return code


def _report_error(e):
    details = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in e.details.items()}
    err = {"error": e.code, "message": str(e), "details": details}
    sys.stderr.write(json.dumps(experiments._canon(err), sort_keys=True) + "\n")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
