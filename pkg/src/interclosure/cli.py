"""Command-line entry point: ``interclosure {analyze,build,verify,sample,search}``.

Exit codes: 0 success, 2 invalid input, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .builder import (
    build_perfect_control_universe,
    build_universe,
    maximize_control,
    spec_from_dict,
)
from .channels import Partition, partition_relation
from .errors import InputError, ReducibleAfterRetries, UniverseError
from .markov import _fraction_str
from .measures import (
    CLOSURE_TOL,
    conditional_next_entropy,
    informational_closure,
    interaction_closure,
    interaction_equalities,
    is_perfect_apparent_control,
    transfer_entropy,
)
from .sampler import empirical_measures, sample_trajectory
from .universe import Universe, load_universe, universe_to_dict
from .verify import _jsonable, sweep, verify_all

log = logging.getLogger("interclosure")

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 2, 3


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc


def _emit(doc, out=None):
    text = json.dumps(_jsonable(doc), indent=2, allow_nan=False)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def analysis_report(u: Universe, tol: float = CLOSURE_TOL) -> dict:
    """Everything the library can say about ``u`` as a JSON-ready dict."""
    j = u.joint
    report = {
        "digest": u.digest(),
        "n": u.n,
        "stationary": list(u.stationary.p),
        "full_support": u.stationary.full_support,
        "channels": {},
    }
    if u.stationary.exact is not None:
        report["stationary_exact"] = [_fraction_str(v) for v in u.stationary.exact]
    for name, ch in u.channels.items():
        report["channels"][name] = (
            {"kind": "deterministic", "map": list(ch.map)}
            if ch.map is not None
            else {"kind": "stochastic", "k": ch.k}
        )
    names = list(u.channels)
    report["weak_ic"] = {c: informational_closure(j, c, "weak", tol).to_dict() for c in names}
    report["strong_ic"] = {c: informational_closure(j, c, "strong", tol).to_dict() for c in names}
    if {"S", "M"} <= set(names):
        report["weak_iac"] = interaction_closure(j, "S", "M", "weak", tol).to_dict()
        report["strong_iac"] = interaction_closure(j, "S", "M", "strong", tol).to_dict()
        report["transfer_entropy"] = transfer_entropy(j, "S", "M")
        report["h_zprime_given_z"] = conditional_next_entropy(j, "M")
        report["perfect_control"] = is_perfect_apparent_control(j, "S", "M", tol).to_dict()
        report["equalities"] = interaction_equalities(j, "S", "M").to_dict()
        if u.fM is not None and u.fS is not None:
            current = Partition.from_map(u.fM)
            future = Partition.from_map(u.fS)
            rel = partition_relation(current, future)
            report["partitions"] = {
                "current": current.as_lists(),
                "future": future.as_lists(),
                "relation": rel.relation.value,
                "intersections": [
                    {"m": m, "s": s, "states": sorted(block)}
                    for (m, s), block in sorted(rel.intersections.items())
                ],
            }
        report["verification"] = {r.name: r.status for r in verify_all(u)}
    if u.provenance:
        report["provenance"] = u.provenance
    return report


def _pretty(report: dict) -> str:
    def fmt(v):
        return f"{v:.6g}" if isinstance(v, float) else str(v)

    lines = [f"universe {report['digest'][:12]}  n={report['n']}"]
    lines.append("stationary  " + " ".join(fmt(v) for v in report["stationary"]))
    for key in ("weak_ic", "strong_ic"):
        for name, m in report[key].items():
            lines.append(f"{key:<18}{name:<4}{fmt(m['value']):>12}  closed={m['verdict']}")
    for key in ("weak_iac", "strong_iac"):
        if key in report:
            m = report[key]
            lines.append(f"{key:<22}{fmt(m['value']):>12}  closed={m['verdict']}")
    for key in ("transfer_entropy", "h_zprime_given_z"):
        if key in report:
            lines.append(f"{key:<22}{fmt(report[key]):>12}")
    if "perfect_control" in report:
        lines.append(f"{'perfect_control':<22}{str(report['perfect_control']['holds']):>12}")
    if "partitions" in report:
        p = report["partitions"]
        lines.append(f"current {p['current']}  future {p['future']}  -> {p['relation']}")
    if "verification" in report:
        lines.append("verification  " + "  ".join(f"{k}={v}" for k, v in report["verification"].items()))
    return "\n".join(lines)


def cmd_analyze(args) -> int:
    u = load_universe(args.file)
    report = analysis_report(u, args.tol)
    if args.pretty:
        print(_pretty(report))
    else:
        _emit(report, args.out)
    return EXIT_OK


def cmd_build(args) -> int:
    doc = _read_json(args.spec)
    if args.seed is not None:
        doc["seed"] = args.seed
    spec = spec_from_dict(doc)
    u = build_perfect_control_universe(spec) if spec.require_perfect_control else build_universe(spec)
    _emit(universe_to_dict(u), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.sweep:
        rep = sweep(args.sweep, tuple(args.n_range), tuple(args.k_range), args.seed or 0, args.out)
        _emit(rep.to_dict())
        return EXIT_OK if rep.passed else EXIT_VERIFY
    if not args.file:
        raise InputError("verify needs a universe file or --sweep N")
    u = load_universe(args.file)
    reports = verify_all(u)
    _emit({"digest": u.digest(), "reports": [r.to_dict() for r in reports]})
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def cmd_sample(args) -> int:
    u = load_universe(args.file)
    traj = sample_trajectory(u, args.T, args.seed or 0)
    if args.out:
        with open(args.out, "w") as fh:
            for line in traj.lines():
                fh.write(line + "\n")
    doc = {"provenance": traj.provenance}
    if traj.T >= 2 and {"S", "M"} <= set(u.channels):
        doc["measures"] = empirical_measures(traj, u)
    _emit(doc)
    return EXIT_OK


def cmd_search(args) -> int:
    spec = spec_from_dict(_read_json(args.spec))
    best, trace = maximize_control(spec, args.iterations, args.seed or 0)
    doc = universe_to_dict(best)
    if args.out:
        _emit(doc, args.out)
        _emit({"best_score": trace[-1], "trace": trace})
    else:
        _emit({"universe": doc, "best_score": trace[-1], "trace": trace})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="interclosure", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="report every measure for a universe file")
    a.add_argument("file")
    a.add_argument("--tol", type=float, default=CLOSURE_TOL, help="closure verdict tolerance")
    a.add_argument("--pretty", action="store_true", help="human-readable table")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("build", help="build a closed universe from a spec file")
    b.add_argument("spec")
    b.add_argument("--seed", type=int)
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="run all verifiers on a file, or a random sweep")
    v.add_argument("file", nargs="?")
    v.add_argument("--sweep", type=int, metavar="N")
    v.add_argument("--seed", type=int)
    v.add_argument("--n-range", type=int, nargs=2, default=(4, 12), metavar=("LO", "HI"))
    v.add_argument("--k-range", type=int, nargs=2, default=(2, 3), metavar=("LO", "HI"))
    v.add_argument("--out", help="directory for counterexample universes")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sample", help="simulate a trajectory and estimate measures")
    s.add_argument("file")
    s.add_argument("--T", type=int, default=10_000)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="write 'x s m' lines here")
    s.set_defaults(func=cmd_sample)

    h = sub.add_parser("search", help="hill-climb apparent control over closed fills")
    h.add_argument("spec")
    h.add_argument("--iterations", type=int, default=200)
    h.add_argument("--seed", type=int)
    h.add_argument("--out")
    h.set_defaults(func=cmd_search)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (InputError, ReducibleAfterRetries, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UniverseError as exc:
        log.debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
