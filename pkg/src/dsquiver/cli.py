"""Command-line interface. Every command prints one JSON report.

Exit codes: 0 ok, 2 invalid input, 3 solver did not converge.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from .exceptions import InvalidInput
from .frontend import verdict
from .pencil import KroneckerPencil, splitting_type
from .quiver import (
    Quiver,
    StarShape,
    build_star,
    classify_root,
    decode_vertex,
    delta,
    in_fundamental_region,
    p_value,
    tits_q,
)
from .replab import DEFAULT_BUDGET, check_inequality_302, parameter_census
from .solver import (
    SolverOptions,
    certify,
    solve_additive,
    solve_multiplicative,
    tangent_analysis,
)
from .symplectic import CotangentSquidPoint, residual, theta_N
from .validation import check_dim_vector, check_instance, load_json, parse_int_list

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3


def dumps(obj) -> str:
    # repr-based floats are the shortest strings that parse back to the same double
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


class _Digest:
    def __init__(self, command: str):
        self.h = hashlib.sha256(command.encode())

    def add(self, label: str, data) -> None:
        if not isinstance(data, bytes):
            data = json.dumps(data, sort_keys=True).encode()
        self.h.update(b"\0" + label.encode() + b"\0" + data)

    def hexdigest(self) -> str:
        return self.h.hexdigest()


def _read(path: str, digest: _Digest, label: str):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    digest.add(label, raw)
    return load_json(raw.decode())


def _star_and_alpha(args, digest):
    if args.star:
        shape = StarShape.from_dict(_read(args.star, digest, "star"))
    elif args.w:
        shape = StarShape(tuple(parse_int_list(args.w)))
        digest.add("w", shape.w)
    else:
        raise InvalidInput("give --w or --star")
    q = build_star(shape)
    if args.alpha is None:
        raise InvalidInput("give --alpha")
    if Path(args.alpha).suffix == ".json" or args.alpha.lstrip().startswith("{"):
        raw = _read(args.alpha, digest, "alpha") if not args.alpha.lstrip().startswith("{") else load_json(args.alpha)
        a = check_dim_vector(q, raw)
    else:
        a = check_dim_vector(q, parse_int_list(args.alpha))
    digest.add("alpha", list(a.values()))
    return shape, q, a


def _options(args, digest) -> SolverOptions:
    base = {}
    if getattr(args, "opts", None):
        base = dict(_read(args.opts, digest, "opts"))
    for flag, key in (("tol", "tol"), ("starts", "starts"), ("max_iter", "max_iter")):
        val = getattr(args, flag, None)
        if val is not None:
            base[key] = val
    base.setdefault("seed", args.seed)
    if args.seed != 0:
        base["seed"] = args.seed
    opts = SolverOptions.from_dict(base)
    digest.add("opts", opts.to_dict())
    return opts


# -- commands -------------------------------------------------------------------

def cmd_verdict(args, digest):
    inst = check_instance(_read(args.instance, digest, "instance"))
    return {"verdict": verdict(inst).to_dict()}, EXIT_OK


def cmd_solve(args, digest):
    inst = check_instance(_read(args.instance, digest, "instance"))
    opts = _options(args, digest)
    v = verdict(inst)
    if inst.mode == "additive":
        res = solve_additive(inst, opts, n_jobs=args.jobs)
    elif inst.mode == "multiplicative":
        res = solve_multiplicative(inst, opts, n_jobs=args.jobs)
    else:
        raise InvalidInput("solve needs an additive or multiplicative instance")
    section = {"verdict": v.to_dict()}
    if res.converged:
        rep = tangent_analysis(res)
        res = replace(res, tangent_dim=rep.tangent_dim, constraint_rank=rep.constraint_rank)
        section["solver"] = res.to_dict()
        section["solver"]["rank_gap"] = rep.min_gap
        section["certified"] = certify(res, inst, args.certify_tol)
        return section, EXIT_OK
    section["solver"] = res.to_dict()
    section["certified"] = False
    return section, EXIT_NONCONVERGED


def cmd_forms(args, digest):
    shape, q, a = _star_and_alpha(args, digest)
    forms = {
        "q": tits_q(q, a),
        "p": p_value(q, a),
        "delta": delta(shape, a),
        "fundamental": in_fundamental_region(q, a),
        "root_class": classify_root(q, a).value if any(a.values()) else None,
    }
    return {"forms": forms}, EXIT_OK


def cmd_roots(args, digest):
    if args.quiver:
        q = Quiver.from_dict(_read(args.quiver, digest, "quiver"))
        if args.alpha is None:
            raise InvalidInput("give --alpha")
        raw = args.alpha
        a = check_dim_vector(q, load_json(raw) if raw.lstrip().startswith("{") else parse_int_list(raw),
                             nonnegative=False)
        digest.add("alpha", list(a.values()))
    else:
        _, q, a = _star_and_alpha(args, digest)
    return {"forms": {"root_class": classify_root(q, a).value}}, EXIT_OK


def cmd_decomp(args, digest):
    shape, q, a = _star_and_alpha(args, digest)
    digest.add("budget", args.budget)
    res = check_inequality_302(shape, a, budget=args.budget)
    return {"decomposition": {"p": p_value(q, a), **res.to_dict()}}, EXIT_OK


def cmd_splitting(args, digest):
    pencil = KroneckerPencil.from_dict(_read(args.pencil, digest, "pencil"))
    st = splitting_type(pencil)
    return {"splitting": {**st.to_dict(), "rank": st.rank, "degree": st.degree}}, EXIT_OK


def cmd_census(args, digest):
    if args.quiver:
        q = Quiver.from_dict(_read(args.quiver, digest, "quiver"))
        raw = args.alpha or ""
        a = check_dim_vector(q, load_json(raw) if raw.lstrip().startswith("{") else parse_int_list(raw))
        digest.add("alpha", list(a.values()))
    else:
        _, q, a = _star_and_alpha(args, digest)
    digest.add("census", [args.samples, args.seed, args.pool, args.shards])
    res = parameter_census(q, a, args.samples, args.seed, pool=args.pool, shards=args.shards, n_jobs=args.jobs)
    return {"census": res.to_dict()}, EXIT_OK


def _parse_zeta(raw) -> dict:
    if not isinstance(raw, dict):
        raise InvalidInput("zeta must be a JSON object keyed by 'i,j'")
    out = {}
    for k, z in raw.items():
        key = decode_vertex(k)
        if not isinstance(key, tuple) or len(key) != 2:
            raise InvalidInput(f"zeta key {k!r} is not of the form 'i,j'")
        if isinstance(z, dict):
            out[key] = complex(z.get("re", 0.0), z.get("im", 0.0))
        elif isinstance(z, (int, float)) and not isinstance(z, bool):
            out[key] = complex(z)
        else:
            raise InvalidInput(f"bad zeta value at {k!r}")
    return out


def cmd_moment_residual(args, digest):
    point = CotangentSquidPoint.from_dict(_read(args.point, digest, "point"))
    if args.zeta.lstrip().startswith("{"):
        zraw = load_json(args.zeta)
        digest.add("zeta", zraw)
    else:
        zraw = _read(args.zeta, digest, "zeta")
    zeta = _parse_zeta(zraw)
    digest.add("N", args.N)
    d = point.dims
    if "inf" not in d or 0 not in d:
        raise InvalidInput("the point must live on a squid (vertices 'inf' and 0)")
    alpha = {v: n for v, n in d.items() if v != "inf"}
    alpha[0] = d[0] - d["inf"]
    target = theta_N(zeta, alpha, args.N)
    r = residual(point, target)
    return {"moment": {"residual": r, "target": target.to_dict()}}, EXIT_OK


# -- parser -----------------------------------------------------------------------

def _star_flags(p):
    p.add_argument("--w", help="leg lengths, e.g. 2,2,2,2")
    p.add_argument("--star", help="star shape JSON file {\"w\": [...]}")
    p.add_argument("--alpha", help="dimension vector: 2,1,1,1,1 in vertex order, or a dims JSON")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float)
    common.add_argument("--starts", type=int)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common.add_argument("--json-out", dest="json_out")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--jobs", type=int, default=None, help="parallel workers (joblib)")

    parser = argparse.ArgumentParser(prog="dsquiver", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verdict", parents=[common], help="sufficient criteria and expected dimensions")
    p.add_argument("instance")
    p.set_defaults(func=cmd_verdict)

    p = sub.add_parser("solve", parents=[common], help="numerical solution and tangent dimension")
    p.add_argument("instance")
    p.add_argument("--opts", help="solver options JSON")
    p.add_argument("--certify-tol", dest="certify_tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("forms", parents=[common], help="q, p, delta, fundamental region, root class")
    _star_flags(p)
    p.set_defaults(func=cmd_forms)

    p = sub.add_parser("roots", parents=[common], help="root classification")
    _star_flags(p)
    p.add_argument("--quiver", help="quiver JSON (instead of a star)")
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("decomp-check", parents=[common], help="brute-force decomposition inequality")
    _star_flags(p)
    p.set_defaults(func=cmd_decomp)

    p = sub.add_parser("splitting", parents=[common], help="splitting type of a Kronecker pencil")
    p.add_argument("pencil")
    p.set_defaults(func=cmd_splitting)

    p = sub.add_parser("census", parents=[common], help="stabilizer-dimension census")
    _star_flags(p)
    p.add_argument("--quiver", help="quiver JSON (instead of a star)")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--pool", type=int, default=10)
    p.add_argument("--shards", type=int, default=1)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("moment-residual", parents=[common], help="moment-map residual against theta^N")
    p.add_argument("point")
    p.add_argument("--zeta", required=True, help="JSON object {\"i,j\": value} or a file")
    p.add_argument("--N", type=int, default=0)
    p.set_defaults(func=cmd_moment_residual)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    digest = _Digest(args.command)
    start = time.perf_counter()
    try:
        sections, code = args.func(args, digest)
    except (InvalidInput, ValueError, KeyError, TypeError) as exc:
        if not args.quiet:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = {"command": args.command, "input_digest": digest.hexdigest(), **sections,
              "elapsed_ms": int(round(1000 * (time.perf_counter() - start)))}
    text = dumps(report)
    if args.json_out:
        Path(args.json_out).write_text(text + "\n")
    else:
        print(text)
    if code == EXIT_NONCONVERGED and not args.quiet:
        print("warning: solver did not reach the tolerance", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
