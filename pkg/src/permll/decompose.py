"""Decomposability testing, the canonical lambda decomposition, and
conditional-independence checks.

Verdicts are computed along two redundant paths — conditional-probability
equalities and the round trip through the canonical decomposition — and the
pair is required to agree within numerical slack; a disagreement signals a
bug, not a modeling question.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import InternalCheckError, InvalidLambdaError, ValidationError
from .perms import (
    ConsecutiveSections,
    DistributionTable,
    SetPartition,
    enumerate_permutations,
    inverse,
    perm_index,
)
from .subspaces import DECOMPOSABLE_KINDS, FamilyKind

DEFAULT_TOL = 1e-9


@dataclass
class LambdaDecomposition:
    """Weights on (next element, prefix set) pairs, plus a global constant.

    ``constant=None`` means "normalize by summation" and is used by model
    constructors whose printed weight function is unnormalized.
    """

    n: int
    values: dict[tuple[int, frozenset[int]], float]
    constant: float | None = 1.0

    def get(self, x: int, prefix: frozenset[int]) -> float:
        return self.values.get((x, frozenset(prefix)), 0.0)


def canonical_lambda(p: DistributionTable) -> LambdaDecomposition:
    """Conditional chain weights: P(next = x | first |C| elements form the set C)."""
    n = p.n
    joint: dict[tuple[int, frozenset[int]], float] = defaultdict(float)
    for pi, w in zip(enumerate_permutations(n), p.probs):
        prefix = frozenset()
        for x in pi:
            joint[(x, prefix)] += w
            prefix = prefix | {x}
    values = {}
    for size in range(n):
        for comb in itertools.combinations(range(1, n + 1), size):
            prefix = frozenset(comb)
            mass = sum(joint.get((x, prefix), 0.0) for x in range(1, n + 1) if x not in prefix)
            for x in range(1, n + 1):
                if x not in prefix:
                    values[(x, prefix)] = joint.get((x, prefix), 0.0) / mass if mass > 0.0 else 0.0
    return LambdaDecomposition(n, values, 1.0)


def distribution_from_lambda(lam: LambdaDecomposition) -> DistributionTable:
    """Chain product p(pi) = c * prod_k lambda(pi(k+1), {pi(1..k)})."""
    n = lam.n
    perms = enumerate_permutations(n)
    raw = np.empty(len(perms))
    for i, pi in enumerate(perms):
        prefix = frozenset()
        prod = 1.0
        for x in pi:
            prod *= lam.get(x, prefix)
            if prod == 0.0:
                break
            prefix = prefix | {x}
        raw[i] = prod
    total = raw.sum()
    if lam.constant is None:
        if total <= 0.0:
            raise InvalidLambdaError("lambda weights have zero total mass")
        return DistributionTable(n, raw / total)
    scaled = total * lam.constant
    if abs(scaled - 1.0) > 1e-9:
        raise InvalidLambdaError(f"lambda normalizes to {scaled}, not 1")
    return DistributionTable(n, raw * lam.constant)


def markovianize(p: DistributionTable) -> DistributionTable:
    """Closest chain-factorized table: round trip through the canonical lambda."""
    return distribution_from_lambda(canonical_lambda(p))


def inverse_distribution(p: DistributionTable) -> DistributionTable:
    """The law of the inverse permutation: result(pi) = p(pi^-1)."""
    out = np.empty_like(p.probs)
    for i, pi in enumerate(enumerate_permutations(p.n)):
        out[i] = p.probs[perm_index(inverse(pi))]
    return DistributionTable._from_valid(p.n, out)


def _conditional_violation(p: DistributionTable) -> float:
    """Max gap between next-element laws conditioned on ordered vs unordered prefixes."""
    n = p.n
    worst = 0.0
    perms = enumerate_permutations(n)
    for k in range(2, n - 1):
        joint_ord: dict = defaultdict(float)
        mass_ord: dict = defaultdict(float)
        joint_set: dict = defaultdict(float)
        mass_set: dict = defaultdict(float)
        for pi, w in zip(perms, p.probs):
            prefix = pi[:k]
            pset = frozenset(prefix)
            joint_ord[(prefix, pi[k])] += w
            mass_ord[prefix] += w
            joint_set[(pset, pi[k])] += w
            mass_set[pset] += w
        for prefix, denom in mass_ord.items():
            if denom <= 0.0:
                continue
            pset = frozenset(prefix)
            set_mass = mass_set[pset]
            for x in range(1, n + 1):
                if x in pset:
                    continue
                gap = abs(
                    joint_ord.get((prefix, x), 0.0) / denom
                    - joint_set.get((pset, x), 0.0) / set_mass
                )
                worst = max(worst, gap)
    return worst


def _union_spread(p: DistributionTable) -> float:
    """Spread of canonical lambda values over pairs sharing the same union set."""
    lam = canonical_lambda(p)
    n = p.n
    reach: dict = defaultdict(float)
    for pi, w in zip(enumerate_permutations(n), p.probs):
        prefix = frozenset()
        for x in pi:
            reach[prefix] += w
            prefix = prefix | {x}
    groups: dict = defaultdict(list)
    for (x, prefix), v in lam.values.items():
        if reach.get(prefix, 0.0) > 0.0:
            groups[frozenset(prefix | {x})].append(v)
    worst = 0.0
    for vals in groups.values():
        if len(vals) > 1:
            worst = max(worst, max(vals) - min(vals))
    return worst


def _l_check(p: DistributionTable, tol: float) -> tuple[bool, float]:
    cond = _conditional_violation(p)
    fitted = markovianize(p)
    rt = float(np.abs(p.probs - fitted.probs).max())
    verdict_cond = cond <= tol
    verdict_rt = rt <= tol
    if verdict_cond != verdict_rt and max(cond, rt) > 100.0 * tol and min(cond, rt) <= tol:
        raise InternalCheckError(
            f"conditional path ({cond}) and round-trip path ({rt}) disagree"
        )
    return verdict_rt and verdict_cond, max(cond, rt)


def is_decomposable(
    p: DistributionTable, family: FamilyKind, tol: float = DEFAULT_TOL
) -> tuple[bool, float]:
    """Verdict and max violation for one of the six decomposable families."""
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if family not in DECOMPOSABLE_KINDS:
        raise ValidationError(f"{family} is not a decomposability family")
    if family is FamilyKind.L:
        return _l_check(p, tol)
    if family is FamilyKind.L_PRIME:
        return _l_check(inverse_distribution(p), tol)
    if family is FamilyKind.L_S:
        ok, viol = _l_check(p, tol)
        spread = _union_spread(p)
        return ok and spread <= tol, max(viol, spread)
    if family is FamilyKind.L_S_PRIME:
        return is_decomposable(inverse_distribution(p), FamilyKind.L_S, tol)
    if family is FamilyKind.BI:
        ok1, v1 = _l_check(p, tol)
        ok2, v2 = _l_check(inverse_distribution(p), tol)
        return ok1 and ok2, max(v1, v2)
    ok1, v1 = is_decomposable(p, FamilyKind.L_S, tol)
    ok2, v2 = is_decomposable(p, FamilyKind.L_S_PRIME, tol)
    return ok1 and ok2, max(v1, v2)


@dataclass
class DecomposabilityReport:
    verdicts: dict[FamilyKind, bool]
    violations: dict[FamilyKind, float]
    tolerance: float

    def to_json(self) -> dict:
        return {
            "families": {
                kind.value: {
                    "verdict": bool(self.verdicts[kind]),
                    "max_violation": float(self.violations[kind]),
                }
                for kind in DECOMPOSABLE_KINDS
            },
            "tolerance": self.tolerance,
        }


def decomposability_report(p: DistributionTable, tol: float = DEFAULT_TOL) -> DecomposabilityReport:
    verdicts, violations = {}, {}
    for kind in DECOMPOSABLE_KINDS:
        verdicts[kind], violations[kind] = is_decomposable(p, kind, tol)
    return DecomposabilityReport(verdicts, violations, tol)


class IndependenceMode:
    CONSECUTIVE = "consecutive"
    RECTANGLE = "rectangle"


def check_block_independence(
    p: DistributionTable, partition: SetPartition, tol: float = DEFAULT_TOL
) -> tuple[bool, float]:
    """Conditional independence of ordered marginals over arbitrary position atoms,
    given the vector of unordered marginals."""
    blocks = [tuple(sorted(atom)) for atom in partition.atoms]
    perms = enumerate_permutations(p.n)
    classes: dict = defaultdict(list)
    for idx, pi in enumerate(perms):
        key = tuple(frozenset(pi[i - 1] for i in block) for block in blocks)
        classes[key].append(idx)
    worst = 0.0
    for members in classes.values():
        mass = float(p.probs[members].sum())
        if mass <= 0.0:
            continue
        laws = [defaultdict(float) for _ in blocks]
        for idx in members:
            pi = perms[idx]
            w = p.probs[idx] / mass
            for b, block in enumerate(blocks):
                laws[b][tuple(pi[i - 1] for i in block)] += w
        for idx in members:
            pi = perms[idx]
            prod = 1.0
            for b, block in enumerate(blocks):
                prod *= laws[b][tuple(pi[i - 1] for i in block)]
            worst = max(worst, abs(p.probs[idx] / mass - prod))
    return worst <= tol, worst


def _rectangle_violation(
    p: DistributionTable, kappa: ConsecutiveSections, lamb: ConsecutiveSections
) -> float:
    n = p.n
    row_blocks = kappa.blocks(n)
    col_blocks = lamb.blocks(n)
    perms = enumerate_permutations(n)
    cells = [(rb, frozenset(cb)) for rb in row_blocks for cb in col_blocks]

    def cell_marginal(pi, rb, cset):
        return frozenset((a, pi[a - 1]) for a in rb if pi[a - 1] in cset)

    classes: dict = defaultdict(list)
    for idx, pi in enumerate(perms):
        inv = {v: i + 1 for i, v in enumerate(pi)}
        key = (
            tuple(frozenset(pi[i - 1] for i in rb) for rb in row_blocks),
            tuple(frozenset(inv[v] for v in cb) for cb in col_blocks),
        )
        classes[key].append(idx)
    worst = 0.0
    for members in classes.values():
        mass = float(p.probs[members].sum())
        if mass <= 0.0:
            continue
        laws = [defaultdict(float) for _ in cells]
        for idx in members:
            pi = perms[idx]
            w = p.probs[idx] / mass
            for c, (rb, cset) in enumerate(cells):
                laws[c][cell_marginal(pi, rb, cset)] += w
        for idx in members:
            pi = perms[idx]
            prod = 1.0
            for c, (rb, cset) in enumerate(cells):
                prod *= laws[c][cell_marginal(pi, rb, cset)]
            worst = max(worst, abs(p.probs[idx] / mass - prod))
    return worst


def check_conditional_independence(
    p: DistributionTable,
    mode: str,
    kappa: ConsecutiveSections,
    lamb: ConsecutiveSections | None = None,
    tol: float = DEFAULT_TOL,
) -> tuple[bool, float]:
    """Factorization checks behind the two decomposability characterizations.

    CONSECUTIVE: ordered marginals over the kappa intervals are conditionally
    independent given the vector of their unordered marginals.  RECTANGLE:
    the per-block pairings over the kappa x lambda grid are conditionally
    independent given the unordered row and column marginals.
    """
    if mode == IndependenceMode.CONSECUTIVE:
        return check_block_independence(p, kappa.partition(p.n), tol)
    if mode == IndependenceMode.RECTANGLE:
        if lamb is None:
            raise ValidationError("RECTANGLE mode needs both kappa and lambda")
        worst = _rectangle_violation(p, kappa, lamb)
        return worst <= tol, worst
    raise ValidationError(f"unknown mode {mode!r}")
