"""Constructors and a sampler for six classic ranking models.

Every constructor evaluates its printed weight formula over all of S_n and
normalizes by summation, never by a closed-form constant.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .fit import EmpiricalData
from .decompose import LambdaDecomposition, distribution_from_lambda
from .perms import DistributionTable, enumerate_permutations

_PARAM_TOL = 1e-9


class ClassicKind(str, Enum):
    LUCE = "luce"
    BABINGTON_SMITH = "babington-smith"
    MBT = "mbt"
    MULTISTAGE = "multistage"
    REPEATED_INSERTION = "repeated-insertion"
    QUASI_INDEPENDENCE = "quasi-independence"


@dataclass
class ClassicSpec:
    kind: ClassicKind
    params: dict


def _check_stochastic(vec, what: str) -> np.ndarray:
    arr = np.asarray(vec, dtype=float)
    if (arr <= 0).any():
        raise ValidationError(f"{what} must be strictly positive")
    if abs(arr.sum() - 1.0) > _PARAM_TOL:
        raise ValidationError(f"{what} must sum to 1, got {arr.sum()}")
    return arr


def _luce(theta, n: int) -> DistributionTable:
    theta = _check_stochastic(theta, "luce weights")
    if len(theta) != n:
        raise ValidationError(f"need {n} weights, got {len(theta)}")
    values = {}
    # lambda(x, C) = theta_x / sum of theta over elements outside C
    for size in range(n):
        for comb in itertools.combinations(range(1, n + 1), size):
            prefix = frozenset(comb)
            rest = [y for y in range(1, n + 1) if y not in prefix]
            denom = sum(theta[y - 1] for y in rest)
            for x in rest:
                values[(x, prefix)] = theta[x - 1] / denom
    return distribution_from_lambda(LambdaDecomposition(n, values, None))


def _babington_smith(theta, n: int) -> DistributionTable:
    arr = np.asarray(theta, dtype=float)
    if arr.shape != (n, n):
        raise ValidationError(f"need an {n}x{n} preference matrix")
    for x in range(n):
        for y in range(x + 1, n):
            if not (0.0 < arr[x, y] < 1.0) or abs(arr[x, y] + arr[y, x] - 1.0) > _PARAM_TOL:
                raise ValidationError("pair probabilities must lie in (0,1) and sum to 1")
    perms = enumerate_permutations(n)
    raw = np.empty(len(perms))
    for i, pi in enumerate(perms):
        w = 1.0
        for a in range(n):
            for b in range(a + 1, n):
                w *= arr[pi[a] - 1, pi[b] - 1]
        raw[i] = w
    return DistributionTable(n, raw / raw.sum())


def _mbt(alpha, n: int) -> DistributionTable:
    arr = np.asarray(alpha, dtype=float)
    if arr.shape != (n,) or (arr <= 0).any():
        raise ValidationError(f"need {n} positive weights")
    perms = enumerate_permutations(n)
    raw = np.empty(len(perms))
    for i, pi in enumerate(perms):
        w = 1.0
        for pos, x in enumerate(pi):
            w *= arr[x - 1] ** (n - pos - 1)
        raw[i] = w
    return DistributionTable(n, raw / raw.sum())


def _stage_table(theta, lengths, what: str) -> list[np.ndarray]:
    if len(theta) != len(lengths):
        raise ValidationError(f"{what}: need {len(lengths)} stages, got {len(theta)}")
    stages = []
    for k, (stage, want) in enumerate(zip(theta, lengths), start=1):
        arr = _check_stochastic(stage, f"{what} stage {k}")
        if len(arr) != want:
            raise ValidationError(f"{what} stage {k}: need {want} entries, got {len(arr)}")
        stages.append(arr)
    return stages


def _multistage(theta, n: int) -> DistributionTable:
    # stage k chooses the i-th smallest remaining candidate with probability theta[k][i]
    stages = _stage_table(theta, [n - k + 1 for k in range(1, n + 1)], "multistage")
    values = {}
    for size in range(n):
        for comb in itertools.combinations(range(1, n + 1), size):
            prefix = frozenset(comb)
            for x in range(1, n + 1):
                if x not in prefix:
                    rank = sum(1 for y in range(1, x + 1) if y not in prefix)
                    values[(x, prefix)] = float(stages[size][rank - 1])
    return distribution_from_lambda(LambdaDecomposition(n, values, None))


def _repeated_insertion(theta, n: int) -> DistributionTable:
    # candidate x is inserted at slot i among the x current places with probability theta[x][i]
    stages = _stage_table(theta, list(range(1, n + 1)), "repeated-insertion")
    values = {}
    for size in range(n):
        for comb in itertools.combinations(range(1, n + 1), size):
            prefix = frozenset(comb)
            for x in range(1, n + 1):
                if x not in prefix:
                    slot = sum(1 for y in prefix if y <= x) + 1
                    values[(x, prefix)] = float(stages[x - 1][slot - 1])
    return distribution_from_lambda(LambdaDecomposition(n, values, None))


def _quasi_independence(theta, n: int) -> DistributionTable:
    arr = np.asarray(theta, dtype=float)
    if arr.shape != (n, n) or (arr < 0).any():
        raise ValidationError(f"need a non-negative {n}x{n} matrix")
    if (np.abs(arr.sum(axis=0) - 1.0) > _PARAM_TOL).any() or (
        np.abs(arr.sum(axis=1) - 1.0) > _PARAM_TOL
    ).any():
        raise ValidationError("matrix must be doubly stochastic")
    perms = enumerate_permutations(n)
    raw = np.empty(len(perms))
    for i, pi in enumerate(perms):
        w = 1.0
        for pos, x in enumerate(pi):
            w *= arr[pos, x - 1]
        raw[i] = w
    if raw.sum() <= 0.0:
        raise ValidationError("matrix puts zero mass on every permutation")
    return DistributionTable(n, raw / raw.sum())


_BUILDERS = {
    ClassicKind.LUCE: ("theta", _luce),
    ClassicKind.BABINGTON_SMITH: ("theta", _babington_smith),
    ClassicKind.MBT: ("alpha", _mbt),
    ClassicKind.MULTISTAGE: ("theta", _multistage),
    ClassicKind.REPEATED_INSERTION: ("theta", _repeated_insertion),
    ClassicKind.QUASI_INDEPENDENCE: ("theta", _quasi_independence),
}


def classic_distribution(spec: ClassicSpec, n: int) -> DistributionTable:
    """Exact dense table of one of the six classic models."""
    key, builder = _BUILDERS[ClassicKind(spec.kind)]
    if key not in spec.params:
        raise ValidationError(f"{spec.kind.value} needs parameter {key!r}")
    return builder(spec.params[key], n)


def spec_from_json(path) -> tuple[ClassicSpec, int]:
    """Load a {kind, n, params} parameter file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        kind = ClassicKind(doc["kind"])
        n = int(doc["n"])
        params = dict(doc["params"])
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad classic spec file {path}: {exc}") from exc
    return ClassicSpec(kind, params), n


def sample(p: DistributionTable, m: int, seed: int) -> EmpiricalData:
    """m inverse-CDF draws on the lexicographic index, deterministic in seed."""
    if m < 1:
        raise ValidationError("need at least one draw")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(p.probs)
    idx = np.searchsorted(cdf, rng.random(m), side="right")
    idx = np.minimum(idx, len(p.probs) - 1)
    counts = np.bincount(idx, minlength=len(p.probs)).astype(np.int64)
    return EmpiricalData(p.n, counts)
