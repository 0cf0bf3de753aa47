"""Canonical JSON document format for MDPs.

All numeric payloads are exact rational strings ("p/q" or an integer
string); JSON float literals are rejected at parse time so no rounding can
sneak into an analysis.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .mdp import Mdp

FORMAT_VERSION = 1


class DocumentError(ValueError):
    pass


def _reject_float(text: str):
    raise DocumentError(
        f"float literal {text!r} is not accepted; use rational strings like \"1/2\""
    )


def parse_rational_string(raw, where: str = "") -> Fraction:
    """Parse "p/q" or integer payloads; floats and decimals are rejected."""
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        text = raw.strip()
        if "/" in text:
            num, _, den = text.partition("/")
            try:
                return Fraction(int(num), int(den))
            except (ValueError, ZeroDivisionError) as exc:
                raise DocumentError(f"bad rational {raw!r} at {where}: {exc}")
        try:
            return Fraction(int(text))
        except ValueError:
            raise DocumentError(
                f"bad rational {raw!r} at {where}; expected \"p/q\" or an integer"
            )
    raise DocumentError(f"bad rational value {raw!r} at {where}")


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def loads_document(text: str) -> dict:
    try:
        return json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: line {exc.lineno}, column {exc.colno}")


def mdp_from_document(doc: dict) -> Mdp:
    if not isinstance(doc, dict):
        raise DocumentError("document root must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DocumentError(f"unsupported format_version {version!r}")
    for key in ("states", "actions", "transitions", "rewards", "terminal"):
        if key not in doc:
            raise DocumentError(f"missing field {key!r}")
    states = list(doc["states"])
    actions = doc["actions"]
    transitions = {}
    rewards = {}
    for s in states:
        if s not in actions:
            raise DocumentError(f"state {s!r} missing from actions")
        for a in actions[s]:
            key = f"{s}/{a}"
            if key not in doc["transitions"]:
                raise DocumentError(f"missing transitions[{key!r}]")
            if key not in doc["rewards"]:
                raise DocumentError(f"missing rewards[{key!r}]")
            row = doc["transitions"][key]
            if len(row) != len(states):
                raise DocumentError(
                    f"transitions[{key!r}] has {len(row)} entries, expected {len(states)}"
                )
            transitions[(s, a)] = [
                parse_rational_string(p, f"transitions[{key}][{j}]")
                for j, p in enumerate(row)
            ]
            rewards[(s, a)] = parse_rational_string(
                doc["rewards"][key], f"rewards[{key}]"
            )
    if len(doc["terminal"]) != len(states):
        raise DocumentError("terminal vector length mismatch")
    terminal = [
        parse_rational_string(t, f"terminal[{i}]")
        for i, t in enumerate(doc["terminal"])
    ]
    return Mdp.from_tables(states, actions, transitions, rewards, terminal)


def document_from_mdp(mdp: Mdp) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "states": list(mdp.states),
        "actions": {s: list(mdp.actions[i]) for i, s in enumerate(mdp.states)},
        "transitions": {},
        "rewards": {},
        "terminal": [format_rational(t) for t in mdp.terminal],
    }
    for i, s in enumerate(mdp.states):
        for k, a in enumerate(mdp.actions[i]):
            key = f"{s}/{a}"
            doc["transitions"][key] = [
                format_rational(p) for p in mdp.transitions[i][k]
            ]
            doc["rewards"][key] = format_rational(mdp.rewards[i][k])
    return doc


def dumps_document(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"
