"""Command-line front end.

Every command reads an MDP document (see docio), runs one analysis, and
prints a JSON report with deterministic key order to stdout; ``sweep``
writes CSV.  Exit codes: 0 success, 2 input error, 3 a resource cap was
exceeded (a partial report is still emitted when one is available).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import corpus, docio
from .bellman import count_rules, optimal_set, rules_from_action_sets
from .conditions import NotIrregularError, boundedness_verdict
from .limits import CapExceededError
from .mdp import DecisionRule, Mdp, validate
from .partition import canonical_partition, point_position
from .smalldiscount import policy_filtration, small_discount_checks
from .turnpike import turnpike_integer, turnpike_intervals

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAP = 3


class InputError(ValueError):
    pass


def parse_alpha(text: str) -> Fraction:
    """Accept "p/q", an integer, or a terminating decimal such as "0.5"."""
    text = text.strip()
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            return Fraction(int(num), int(den))
        if "." in text:
            whole, _, frac = text.partition(".")
            body = (whole or "0") + "." + frac
            if not frac.isdigit() or not (whole or "0").lstrip("+-").isdigit():
                raise ValueError(text)
            return Fraction(body)  # exact: d.ddd = dddd / 10^k
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse {text!r} as an exact rational")


def parse_discount(text: str) -> Fraction:
    value = parse_alpha(text)
    if not (0 <= value < 1):
        raise InputError(f"discount factor {text!r} is outside [0, 1)")
    return value


def load_mdp(path: str) -> Mdp:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = docio.loads_document(fh.read())
        mdp = docio.mdp_from_document(doc)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}")
    except docio.DocumentError as exc:
        raise InputError(f"{path}: {exc}")
    report = validate(mdp)
    if not report.ok:
        first = report.violations[0]
        raise InputError(
            f"{path}: invalid MDP: {first.code}"
            + (f" at state {first.state}" if first.state else "")
            + (f", action {first.action}" if first.action else "")
        )
    return mdp


def frac_str(value: Fraction) -> str:
    return docio.format_rational(value)


def rule_json(mdp: Mdp, rule: DecisionRule) -> list[str]:
    return [mdp.actions[i][a] for i, a in enumerate(rule.choices)]


def rules_json(mdp: Mdp, rules) -> list[list[str]]:
    return [rule_json(mdp, r) for r in sorted(rules)]


def point_json(pt):
    if isinstance(pt, Fraction):
        return frac_str(pt)
    return {
        "bracket": [frac_str(pt.lo), frac_str(pt.hi)],
        "defining": [frac_str(c) for c in pt.defining.coeffs],
    }


def emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")


def cmd_validate(args) -> int:
    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            doc = docio.loads_document(fh.read())
        mdp = docio.mdp_from_document(doc)
    except OSError as exc:
        raise InputError(f"cannot read {args.file}: {exc}")
    except docio.DocumentError as exc:
        raise InputError(f"{args.file}: {exc}")
    report = validate(mdp)
    emit(
        {
            "ok": report.ok,
            "violations": [
                {
                    "code": v.code,
                    "state": v.state,
                    "action": v.action,
                    "detail": v.detail,
                }
                for v in report.violations
            ],
        }
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    mdp = load_mdp(args.file)
    alpha = parse_discount(args.alpha)
    opt = optimal_set(mdp, alpha)
    emit(
        {
            "alpha": frac_str(alpha),
            "value": {
                s: frac_str(opt.v_alpha[i]) for i, s in enumerate(mdp.states)
            },
            "num_optimal_rules": count_rules(opt.d_alpha_sets),
            "optimal_rules": rules_json(
                mdp, rules_from_action_sets(opt.d_alpha_sets)
            ),
        }
    )
    return EXIT_OK


def cmd_turnpike(args) -> int:
    mdp = load_mdp(args.file)
    if args.alpha is None and args.interval is None:
        raise InputError("turnpike needs --alpha or --interval")
    if args.alpha is not None:
        alpha = parse_discount(args.alpha)
        res = turnpike_integer(mdp, alpha)
        emit(
            {
                "alpha": frac_str(alpha),
                "N": res.n_value,
                "certificate_horizon": res.certificate_horizon,
                "gap": frac_str(res.gap) if res.gap is not None else None,
                "witness": rule_json(mdp, res.witness) if res.witness else None,
            }
        )
        return EXIT_OK
    lo_text, _, hi_text = args.interval.partition(",")
    lo, hi = parse_discount(lo_text), parse_discount(hi_text)
    tmap = turnpike_intervals(mdp, lo, hi, n_cap=args.ncap)
    report = {
        "interval": [frac_str(lo), frac_str(hi)],
        "spans": [
            {
                "lo": point_json(s.lo),
                "hi": point_json(s.hi),
                "lo_closed": s.lo_closed,
                "hi_closed": s.hi_closed,
                "N": s.n_value,
            }
            for s in tmap.spans
        ],
        "discontinuities": {
            "left": [frac_str(p) for p in tmap.d_minus],
            "right": [frac_str(p) for p in tmap.d_plus],
            "both": [frac_str(p) for p in tmap.d_hat],
            "all": [frac_str(p) for p in tmap.d_all],
        },
        "indeterminate_points": [point_json(p) for p in tmap.indeterminate],
        "partial": tmap.partial,
    }
    emit(report)
    return EXIT_CAP if tmap.partial else EXIT_OK


def cmd_partition(args) -> int:
    mdp = load_mdp(args.file)
    part = canonical_partition(mdp)
    emit(
        {
            "irregular_points": [
                {
                    "point": point_json(ip.point),
                    "class": ip.kind,
                    "optimal_at": rules_json(mdp, ip.d_at),
                    "optimal_left": rules_json(mdp, ip.d_left),
                    "optimal_right": rules_json(mdp, ip.d_right),
                }
                for ip in part.irregular_points
            ],
            "intervals": [
                {
                    "lo": point_json(iv.lo),
                    "hi": point_json(iv.hi),
                    "optimal_rules": rules_json(mdp, iv.d_set),
                }
                for iv in part.intervals
            ],
            "blackwell_point": point_json(part.blackwell_point),
        }
    )
    return EXIT_OK


def cmd_small_discount(args) -> int:
    mdp = load_mdp(args.file)
    rep = policy_filtration(mdp)
    checks = small_discount_checks(mdp)
    emit(
        {
            "l_value": rep.l_value,
            "h_value": rep.h_value,
            "jump_indices": list(rep.jump_indices),
            "c_chain": [
                frac_str(c) if c is not None else None for c in rep.c_chain
            ],
            "delta": frac_str(rep.delta),
            "delta_tilde": frac_str(rep.delta_tilde),
            "stable_rules": rules_json(mdp, rep.rules_at(rep.l_value)),
            "checks": [
                {"name": o.name, "passed": o.passed, "detail": o.detail}
                for o in checks.outcomes
            ],
        }
    )
    return EXIT_OK


def _verdict_json(mdp: Mdp, v) -> dict:
    out = {
        "condition": v.condition,
        "holds": v.holds,
        "method": v.method,
        "horizon_used": v.horizon_used,
    }
    if v.threshold is not None:
        out["threshold"] = frac_str(v.threshold)
    if v.extrema:
        out["extrema"] = [
            {
                "phi": rule_json(mdp, phi),
                "psi": rule_json(mdp, psi),
                "value": frac_str(data["value"]),
                "state": data["state"],
            }
            for (phi, psi), data in sorted(v.extrema.items())
        ]
    if v.window:
        out["window"] = {str(n): ok for n, ok in sorted(v.window.items())}
    return out


def cmd_conditions(args) -> int:
    mdp = load_mdp(args.file)
    point = parse_discount(args.point)
    try:
        report = boundedness_verdict(mdp, point)
    except NotIrregularError as exc:
        raise InputError(str(exc))
    emit(
        {
            "point": frac_str(point),
            "left": report.left,
            "right": report.right,
            "method_left": report.method_left,
            "method_right": report.method_right,
            "A_minus": _verdict_json(mdp, report.a_left),
            "A_plus": _verdict_json(mdp, report.a_right),
            "B_minus": _verdict_json(mdp, report.b_left),
            "B_plus": _verdict_json(mdp, report.b_right),
            "samples_left": [
                [frac_str(a), n] for a, n in report.samples_left
            ],
            "samples_right": [
                [frac_str(a), n] for a, n in report.samples_right
            ],
        }
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    mdp = load_mdp(args.file)
    lo_text, _, hi_text = args.interval.partition(",")
    lo, hi = parse_discount(lo_text), parse_discount(hi_text)
    if not lo < hi:
        raise InputError("sweep interval must have lo < hi")
    steps = args.steps
    if steps < 1:
        raise InputError("sweep needs at least one step")
    part = canonical_partition(mdp)
    irregular_positions = [
        point_position(ip.point) for ip in part.irregular_points
    ]
    lines = ["alpha,N,num_optimal_rules,in_interval_id"]
    for i in range(1, steps + 1):
        alpha = lo + (hi - lo) * Fraction(i, steps + 1)
        res = turnpike_integer(mdp, alpha)
        n_opt = count_rules(res.d_alpha_sets)
        interval_id = sum(1 for (plo, phi) in irregular_positions if phi <= alpha)
        lines.append(f"{frac_str(alpha)},{res.n_value},{n_opt},{interval_id}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_corpus(args) -> int:
    try:
        fixture = corpus.build_example(args.id, m=args.m)
    except corpus.UnknownExampleError as exc:
        raise InputError(str(exc))
    doc = docio.document_from_mdp(fixture.mdp)
    sys.stdout.write(docio.dumps_document(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exactmdp",
        description="Exact-arithmetic analysis of discounted finite MDPs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an MDP document")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="optimal value and rules at a discount")
    p.add_argument("file")
    p.add_argument("--alpha", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("turnpike", help="turnpike integer or interval map")
    p.add_argument("file")
    p.add_argument("--alpha")
    p.add_argument("--interval", help="rational pair lo,hi")
    p.add_argument("--ncap", type=int, default=16)
    p.set_defaults(func=cmd_turnpike)

    p = sub.add_parser("partition", help="canonical partition of [0, 1)")
    p.add_argument("file")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("small-discount", help="filtration, radii and checks")
    p.add_argument("file")
    p.set_defaults(func=cmd_small_discount)

    p = sub.add_parser("conditions", help="boundedness conditions at a point")
    p.add_argument("file")
    p.add_argument("--point", required=True)
    p.set_defaults(func=cmd_conditions)

    p = sub.add_parser("sweep", help="CSV sweep of N over an interval")
    p.add_argument("file")
    p.add_argument("--interval", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("corpus", help="emit a bundled example as a document")
    p.add_argument("--id", required=True)
    p.add_argument("--m", type=int, default=None)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except CapExceededError as exc:
        sys.stderr.write(f"cap exceeded: {exc}\n")
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
