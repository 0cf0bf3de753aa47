"""Boundedness analysis of the turnpike function near an irregular point.

Two families of conditions are checked at an irregular discount factor:

- A-conditions: some one-side-optimal rule stays first-step-optimal at the
  point for every large horizon.  With singleton one-sided sets these are
  verified jointly through a finite pushforward-equality certificate on
  the value-iteration residual; otherwise only definition-window evidence
  is reported.
- B-conditions: the one-side-optimal rules strictly dominate, to first
  order in the discount factor, every other optimal rule, uniformly over
  continuations drawn from the optimal set.  Verified with terminal
  rewards zeroed by comparing exact finite-horizon derivatives against an
  explicit tail bound; a tangency of value-function derivatives refutes
  them outright.

A side is declared bounded when its A- and B-conditions are certified, or
when the point is within the small-discount radius; growth of sampled
turnpike values is reported as evidence of unboundedness, never as proof.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .bellman import optimal_set, rules_from_action_sets, value_iteration
from .equivalence import pushforwards_equal
from .limits import CapExceededError, prefix_cap
from .mdp import DecisionRule, MarkovPrefix, Mdp, spreads
from .partition import PartitionReport, canonical_partition, one_sided_optimal_sets
from .smalldiscount import policy_filtration
from .turnpike import turnpike_integer

Vector = tuple[Fraction, ...]


class NotIrregularError(ValueError):
    pass


@dataclass(frozen=True)
class ConditionVerdict:
    condition: str  # 'A-', 'A+', 'B-', 'B+'
    point: Fraction
    holds: bool | None  # None = inconclusive
    method: str
    horizon_used: int | None = None
    threshold: Fraction | None = None
    extrema: dict | None = None
    window: dict | None = None
    witnesses: dict | None = None


def _mat_mul(a, b, m):
    return tuple(
        tuple(
            sum((a[i][k] * b[k][j] for k in range(m)), Fraction(0))
            for j in range(m)
        )
        for i in range(m)
    )


def _mat_vec(a, v, m):
    return tuple(
        sum((a[i][j] * v[j] for j in range(m)), Fraction(0)) for i in range(m)
    )


def _identity(m):
    return tuple(
        tuple(Fraction(1 if i == j else 0) for j in range(m)) for i in range(m)
    )


def derivative_difference(
    mdp: Mdp,
    phi: DecisionRule,
    psi: DecisionRule,
    prefix: MarkovPrefix,
    alpha_star: Fraction,
    n: int | None,
) -> Vector:
    """Exact per-state derivative, at alpha_star, of the value difference
    between playing phi versus psi first and the given prefix afterwards.

    With n None the infinite-horizon difference is differentiated; this
    requires the prefix to end in a stationary tail.
    """
    m = mdp.m
    if n is not None:
        d1 = _finite_value_derivative(mdp, phi, prefix, alpha_star, n)
        d2 = _finite_value_derivative(mdp, psi, prefix, alpha_star, n)
        return tuple(a - b for a, b in zip(d1, d2))
    if prefix.tail is None:
        raise ValueError("infinite-horizon derivative needs a stationary tail")
    from .exactarith import value_rational_function

    def _symbolic(first: DecisionRule):
        # polynomial head of the reward stream, then the tail value function
        head_rules = [first, *prefix.rules]
        coeffs: list[Vector] = []
        p = _identity(m)
        for rule in head_rules:
            coeffs.append(_mat_vec(p, mdp.reward_vector(rule), m))
            p = _mat_mul(p, mdp.transition_matrix(rule), m)
        tail_v = value_rational_function(mdp, prefix.tail)
        return coeffs, p, tail_v

    c1, p1, tail_v = _symbolic(phi)
    c2, p2, _ = _symbolic(psi)
    horizon = len(c1)
    out = []
    a = alpha_star
    tail_vals = tuple(rf(a) for rf in tail_v)
    tail_derivs = tuple(rf.derivative()(a) for rf in tail_v)
    for x in range(m):
        val = Fraction(0)
        for t in range(1, horizon):
            val += t * a ** (t - 1) * (c1[t][x] - c2[t][x])
        head = horizon * a ** (horizon - 1)
        p_diff_v = sum(
            (p1[x][j] - p2[x][j]) * tail_vals[j] for j in range(m)
        )
        p_diff_dv = sum(
            (p1[x][j] - p2[x][j]) * tail_derivs[j] for j in range(m)
        )
        val += head * p_diff_v + a**horizon * p_diff_dv
        out.append(val)
    return tuple(out)


def _finite_value_derivative(
    mdp: Mdp, first: DecisionRule, prefix: MarkovPrefix, alpha: Fraction, n: int
) -> Vector:
    """Derivative of the n-horizon value of (first, prefix...) at alpha,
    terminal rewards included."""
    m = mdp.m
    deriv = [Fraction(0)] * m
    p = _identity(m)
    for t in range(n):
        rule = first if t == 0 else prefix.rule_at(t - 1)
        if t >= 1:
            c_t = _mat_vec(p, mdp.reward_vector(rule), m)
            w = t * alpha ** (t - 1)
            for x in range(m):
                deriv[x] += w * c_t[x]
        p = _mat_mul(p, mdp.transition_matrix(rule), m)
    if n >= 1:
        term = _mat_vec(p, tuple(mdp.terminal), m)
        w = n * alpha ** (n - 1)
        for x in range(m):
            deriv[x] += w * term[x]
    return tuple(deriv)


def _require_irregular(
    mdp: Mdp, alpha_star: Fraction, report: PartitionReport | None
) -> tuple[PartitionReport, frozenset, frozenset, frozenset]:
    if not (0 < alpha_star < 1):
        raise NotIrregularError("conditions are defined on irregular points in (0, 1)")
    report = canonical_partition(mdp) if report is None else report
    d_minus, d_at, d_plus = one_sided_optimal_sets(mdp, alpha_star, report)
    if d_minus == d_plus and d_at == d_minus | d_plus:
        raise NotIrregularError(f"{alpha_star} is a regular point")
    return report, d_minus, d_at, d_plus


def check_condition_A(
    mdp: Mdp,
    alpha_star: Fraction,
    side: str,
    k_min: int = 1,
    k_max: int = 24,
    report: PartitionReport | None = None,
) -> ConditionVerdict:
    """Check whether some side-optimal rule remains first-step-optimal at the
    point for all large horizons.

    When both one-sided sets are singletons the pushforward certificate is
    attempted for residual horizons up to k_max; at a non-touching break
    point its success decides both sides at once.  Otherwise the first-step
    sets over a horizon window are reported, which can only ever be
    evidence: the condition quantifies over all horizons.
    """
    if side not in ("minus", "plus"):
        raise ValueError("side must be 'minus' or 'plus'")
    report, d_minus, d_at, d_plus = _require_irregular(mdp, alpha_star, report)
    name = "A-" if side == "minus" else "A+"
    d_side = d_minus if side == "minus" else d_plus
    singletons = len(d_minus) == 1 and len(d_plus) == 1
    non_touching = d_at == (d_minus | d_plus)
    certificate_k = None
    trace = value_iteration(mdp, alpha_star, k_max)
    if singletons:
        phi = next(iter(d_minus))
        psi = next(iter(d_plus))
        n_val = turnpike_integer(mdp, alpha_star).n_value
        v_inf = optimal_set(mdp, alpha_star).v_alpha
        for k in range(max(0, n_val - 1), k_max + 1):
            w = tuple(
                v_inf[i] - trace[k].value[i] for i in range(mdp.m)
            )
            if pushforwards_equal(mdp, phi, w, psi, w):
                certificate_k = k
                break
        if certificate_k is not None and non_touching:
            return ConditionVerdict(
                name,
                alpha_star,
                True,
                "certificate",
                horizon_used=certificate_k,
                witnesses={"phi": phi, "psi": psi},
            )
    window = {}
    for step in trace[1:]:
        if step.horizon < k_min:
            continue
        dn = rules_from_action_sets(step.first_step)
        window[step.horizon] = bool(dn & d_side)
    return ConditionVerdict(
        name,
        alpha_star,
        None,
        "definition-window",
        horizon_used=k_max,
        window=window,
        witnesses={"certificate_horizon": certificate_k},
    )


def condition_b_threshold(alpha_star: Fraction, k: int, r1_star: Fraction) -> Fraction:
    return (
        2
        * alpha_star**k
        * (
            alpha_star / (1 - alpha_star) ** 2
            + Fraction(k + 1) / (1 - alpha_star)
        )
        * r1_star
    )


def check_condition_B(
    mdp: Mdp,
    alpha_star: Fraction,
    side: str,
    k_range=range(0, 13),
    report: PartitionReport | None = None,
) -> ConditionVerdict:
    """Check strict first-order dominance of the side-optimal rules over the
    other optimal rules, uniformly in the continuation.

    Terminal rewards are zeroed internally (the conditions do not depend on
    them).  For each horizon K the supremum/infimum of the exact derivative
    over all continuation prefixes drawn from the optimal set is compared
    with the tail bound; the first conclusive K settles the condition.
    """
    if side not in ("minus", "plus"):
        raise ValueError("side must be 'minus' or 'plus'")
    mdp0 = mdp.with_terminal([Fraction(0)] * mdp.m)
    report0 = canonical_partition(mdp0) if report is None else report
    _, d_minus, d_at, d_plus = _require_irregular(mdp0, alpha_star, report0)
    name = "B-" if side == "minus" else "B+"
    d_side = d_minus if side == "minus" else d_plus
    others = d_at - d_side
    if not others:
        return ConditionVerdict(name, alpha_star, True, "vacuous")
    r1_star = spreads(mdp0).r1_star
    vf = report0.value_functions
    for phi in sorted(d_side):
        for psi in sorted(others):
            dv = tuple(
                (vf[phi][x] - vf[psi][x]).derivative()(alpha_star)
                for x in range(mdp.m)
            )
            if all(v == 0 for v in dv):
                return ConditionVerdict(
                    name,
                    alpha_star,
                    False,
                    "tangency",
                    witnesses={"phi": phi, "psi": psi},
                )
    rules_sorted = sorted(d_at)
    for k in k_range:
        count = len(rules_sorted) ** (k + 1)
        if count > prefix_cap():
            raise CapExceededError("prefix", count, prefix_cap())
        threshold = condition_b_threshold(alpha_star, k, r1_star)
        tails = list(product(rules_sorted, repeat=k))
        derivs: dict[tuple[DecisionRule, tuple], Vector] = {}
        for first in rules_sorted:
            for tail in tails:
                # the continuation prefix only matters for horizons >= 1
                continuation = MarkovPrefix(tail if tail else (first,))
                derivs[(first, tail)] = _finite_value_derivative(
                    mdp0, first, continuation, alpha_star, k + 1
                )
        all_ok = True
        extrema = {}
        for phi in sorted(d_side):
            for psi in sorted(others):
                per_state = [
                    [
                        derivs[(phi, tail)][x] - derivs[(psi, tail)][x]
                        for tail in tails
                    ]
                    for x in range(mdp.m)
                ]
                if side == "plus":
                    best = [(min(vals), x) for x, vals in enumerate(per_state)]
                    ok = any(v > threshold for v, _ in best)
                    extreme = max(best, key=lambda t: t[0])
                else:
                    best = [(max(vals), x) for x, vals in enumerate(per_state)]
                    ok = any(v < -threshold for v, _ in best)
                    extreme = min(best, key=lambda t: t[0])
                extrema[(phi, psi)] = {
                    "value": extreme[0],
                    "state": mdp.states[extreme[1]],
                }
                if not ok:
                    all_ok = False
        if all_ok:
            return ConditionVerdict(
                name,
                alpha_star,
                True,
                "finite-horizon-threshold",
                horizon_used=k,
                threshold=threshold,
                extrema=extrema,
            )
    return ConditionVerdict(
        name,
        alpha_star,
        None,
        "finite-horizon-threshold",
        horizon_used=max(k_range),
    )


@dataclass(frozen=True)
class BoundednessReport:
    point: Fraction
    left: str  # 'bounded', 'unbounded-evidence', 'unknown'
    right: str
    a_left: ConditionVerdict
    a_right: ConditionVerdict
    b_left: ConditionVerdict
    b_right: ConditionVerdict
    method_left: str
    method_right: str
    samples_left: tuple[tuple[Fraction, int], ...] = ()
    samples_right: tuple[tuple[Fraction, int], ...] = ()


def _empirical_samples(
    mdp: Mdp, alpha_star: Fraction, side: str, count: int
) -> tuple[tuple[Fraction, int], ...]:
    out = []
    for k in range(3, 3 + count):
        step = min(alpha_star, 1 - alpha_star) / 2**k
        alpha = alpha_star - step if side == "minus" else alpha_star + step
        out.append((alpha, turnpike_integer(mdp, alpha).n_value))
    return tuple(out)


def boundedness_verdict(
    mdp: Mdp,
    alpha_star: Fraction,
    k_max_a: int = 24,
    k_range_b=range(0, 13),
    samples: int = 6,
) -> BoundednessReport:
    """Combine the condition checks into a per-side boundedness verdict.

    A side is 'bounded' when its A- and B-conditions are both certified, or
    when the whole side neighborhood sits inside the small-discount radius.
    Otherwise sampled turnpike values approaching the point are attached;
    clear growth is labeled 'unbounded-evidence', anything else 'unknown'.
    """
    report = canonical_partition(mdp)
    verdicts = {}
    for side in ("minus", "plus"):
        verdicts[("A", side)] = check_condition_A(
            mdp, alpha_star, side, k_max=k_max_a, report=report
        )
        verdicts[("B", side)] = check_condition_B(
            mdp, alpha_star, side, k_range=k_range_b
        )
    filt = policy_filtration(mdp)
    labels = {}
    methods = {}
    sample_data = {"minus": (), "plus": ()}
    for side in ("minus", "plus"):
        a, b = verdicts[("A", side)], verdicts[("B", side)]
        if a.holds is True and b.holds is True:
            labels[side] = "bounded"
            methods[side] = "conditions"
        elif side == "minus" and filt.delta is not None and alpha_star <= filt.delta:
            labels[side] = "bounded"
            methods[side] = "small-discount-radius"
        else:
            data = _empirical_samples(mdp, alpha_star, side, samples)
            sample_data[side] = data
            values = [n for _, n in data]
            growing = values[-1] >= max(6, values[0] + 3) and all(
                a2 >= a1 for a1, a2 in zip(values, values[1:])
            )
            labels[side] = "unbounded-evidence" if growing else "unknown"
            methods[side] = "empirical"
    return BoundednessReport(
        point=alpha_star,
        left=labels["minus"],
        right=labels["plus"],
        a_left=verdicts[("A", "minus")],
        a_right=verdicts[("A", "plus")],
        b_left=verdicts[("B", "minus")],
        b_right=verdicts[("B", "plus")],
        method_left=methods["minus"],
        method_right=methods["plus"],
        samples_left=sample_data["minus"],
        samples_right=sample_data["plus"],
    )
