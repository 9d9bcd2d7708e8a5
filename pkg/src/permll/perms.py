"""Permutations, partitions of {1..n}, product partitions, and marginal statistics.

Permutations are stored in one-line image form as tuples of 1-based
integers: ``pi[i-1]`` is the image of ``i``.  The lexicographic position of a
permutation in ``enumerate_permutations(n)`` is its canonical index, used by
every dense table in the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, SizeError, ValidationError

Perm = tuple[int, ...]

DEFAULT_MAX_N = 9
HARD_MAX_N = 11

NORMALIZATION_TOL = 1e-12
RENORMALIZE_TOL = 1e-9


def check_size(n: int, cap: int = DEFAULT_MAX_N) -> None:
    if cap > HARD_MAX_N:
        raise SizeError(f"cap {cap} exceeds the hard limit {HARD_MAX_N}")
    if not 1 <= n <= cap:
        raise SizeError(f"board size {n} outside 1..{cap}")


def check_permutation(image: Sequence[int]) -> Perm:
    """Validate a 1-based one-line image and return it as a tuple."""
    pi = tuple(int(v) for v in image)
    if sorted(pi) != list(range(1, len(pi) + 1)):
        raise ValidationError(f"{pi} is not a permutation of 1..{len(pi)}")
    return pi


def identity(n: int) -> Perm:
    return tuple(range(1, n + 1))


@lru_cache(maxsize=None)
def enumerate_permutations(n: int, cap: int = DEFAULT_MAX_N) -> tuple[Perm, ...]:
    """All permutations of 1..n in lexicographic order (length n!)."""
    check_size(n, cap)
    return tuple(itertools.permutations(range(1, n + 1)))


@lru_cache(maxsize=None)
def _index_map(n: int) -> dict[Perm, int]:
    return {pi: i for i, pi in enumerate(enumerate_permutations(n))}


def perm_index(pi: Sequence[int]) -> int:
    """Canonical (lexicographic) index of a permutation."""
    return _index_map(len(pi))[tuple(pi)]


def inverse(pi: Sequence[int]) -> Perm:
    n = len(pi)
    out = [0] * n
    for i, v in enumerate(pi):
        out[v - 1] = i + 1
    return tuple(out)


def compose(pi: Sequence[int], sigma: Sequence[int]) -> Perm:
    """Composition (pi sigma)(i) = pi(sigma(i))."""
    if len(pi) != len(sigma):
        raise SizeError(f"cannot compose permutations of sizes {len(pi)} and {len(sigma)}")
    return tuple(pi[s - 1] for s in sigma)


class SetPartition:
    """Partition of {1..n} into disjoint non-empty atoms.

    Atoms are stored sorted by their minimum element, so two partitions are
    equal iff they are structurally equal.
    """

    __slots__ = ("atoms", "n", "_labels")

    def __init__(self, atoms: Iterable[Iterable[int]], n: int | None = None):
        cleaned = [frozenset(int(x) for x in atom) for atom in atoms]
        cleaned = [a for a in cleaned if a]
        cleaned.sort(key=min)
        covered = sorted(x for atom in cleaned for x in atom)
        if n is None:
            n = len(covered)
        if covered != list(range(1, n + 1)):
            raise ValidationError(f"atoms {cleaned} do not partition 1..{n}")
        self.atoms: tuple[frozenset[int], ...] = tuple(cleaned)
        self.n = n
        labels = [0] * n
        for idx, atom in enumerate(self.atoms):
            for x in atom:
                labels[x - 1] = idx
        self._labels = tuple(labels)

    @property
    def size(self) -> int:
        return len(self.atoms)

    def atom_of(self, x: int) -> int:
        """Index of the atom containing element x."""
        return self._labels[x - 1]

    @classmethod
    def trivial(cls, n: int) -> "SetPartition":
        return cls([range(1, n + 1)])

    @classmethod
    def singletons(cls, n: int) -> "SetPartition":
        return cls([{i} for i in range(1, n + 1)])

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "SetPartition":
        """Parse the text form, e.g. ``"1,2|3,4,5"``."""
        try:
            atoms = [[int(tok) for tok in part.split(",")] for part in text.split("|")]
        except ValueError as exc:
            raise ParseError(f"bad partition text {text!r}") from exc
        return cls(atoms, n)

    def __str__(self) -> str:
        return "|".join(",".join(str(x) for x in sorted(atom)) for atom in self.atoms)

    def __repr__(self) -> str:
        return f"SetPartition({self})"

    def __eq__(self, other) -> bool:
        return isinstance(other, SetPartition) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return hash(self.atoms)

    def refines(self, other: "SetPartition") -> bool:
        return all(any(atom <= w for w in other.atoms) for atom in self.atoms)


@dataclass(frozen=True)
class ConsecutiveSections:
    """Strictly increasing sections 0 < k_1 < ... < k_j < n cutting 1..n into intervals."""

    sections: tuple[int, ...]

    def __post_init__(self):
        secs = tuple(int(k) for k in self.sections)
        object.__setattr__(self, "sections", secs)
        if any(b <= a for a, b in zip(secs, secs[1:])) or (secs and secs[0] < 1):
            raise ValidationError(f"sections {secs} not strictly increasing positive")

    def partition(self, n: int) -> SetPartition:
        if self.sections and self.sections[-1] >= n:
            raise ValidationError(f"sections {self.sections} invalid for n={n}")
        cuts = (0,) + self.sections + (n,)
        return SetPartition([range(a + 1, b + 1) for a, b in zip(cuts, cuts[1:])], n)

    def blocks(self, n: int) -> tuple[tuple[int, ...], ...]:
        """The intervals as ordered position tuples."""
        cuts = (0,) + self.sections + (n,)
        if self.sections and self.sections[-1] >= n:
            raise ValidationError(f"sections {self.sections} invalid for n={n}")
        return tuple(tuple(range(a + 1, b + 1)) for a, b in zip(cuts, cuts[1:]))


def all_consecutive_sections(n: int) -> list[ConsecutiveSections]:
    """Every non-trivial set of sections for board size n (2^(n-1) - 1 of them)."""
    out = []
    for r in range(1, n):
        for secs in itertools.combinations(range(1, n), r):
            out.append(ConsecutiveSections(secs))
    return out


@dataclass(frozen=True)
class ProductPartition:
    """Row-partition x column-partition of the n x n board."""

    rows: SetPartition
    cols: SetPartition

    def __post_init__(self):
        if self.rows.n != self.cols.n:
            raise SizeError(
                f"row partition on 1..{self.rows.n} vs column partition on 1..{self.cols.n}"
            )

    @property
    def n(self) -> int:
        return self.rows.n

    def __str__(self) -> str:
        return f"{self.rows} x {self.cols}"


def marginal(pi: Sequence[int], board: ProductPartition) -> np.ndarray:
    """Rook counts per block: counts[i][j] = #{s in R_i : pi(s) in C_j}."""
    if board.n != len(pi):
        raise SizeError(f"partition for n={board.n} applied to permutation of size {len(pi)}")
    counts = np.zeros((board.rows.size, board.cols.size), dtype=np.int64)
    for s, v in enumerate(pi):
        counts[board.rows.atom_of(s + 1), board.cols.atom_of(v)] += 1
    return counts


def unordered_marginal(pi: Sequence[int], kappa: ConsecutiveSections) -> tuple[frozenset[int], ...]:
    """Sets of images over each consecutive block of positions."""
    return tuple(frozenset(pi[i - 1] for i in block) for block in kappa.blocks(len(pi)))


class DistributionTable:
    """Dense probability table over S_n, indexed lexicographically.

    Construction renormalizes when the total deviates from 1 by at most 1e-9
    and rejects larger deviations.
    """

    __slots__ = ("n", "probs")

    def __init__(self, n: int, probs):
        check_size(n)
        arr = np.asarray(probs, dtype=np.float64).copy()
        if arr.shape != (math.factorial(n),):
            raise SizeError(f"expected {math.factorial(n)} probabilities, got shape {arr.shape}")
        if arr.min() < -NORMALIZATION_TOL:
            raise ValidationError(f"negative probability {arr.min()}")
        arr[arr < 0.0] = 0.0
        dev = abs(arr.sum() - 1.0)
        if dev > RENORMALIZE_TOL:
            raise ValidationError(f"probabilities sum to {arr.sum()}, off by {dev}")
        if dev > NORMALIZATION_TOL:
            arr = arr / arr.sum()
        arr.setflags(write=False)
        self.n = n
        self.probs = arr

    @classmethod
    def _from_valid(cls, n: int, arr: np.ndarray) -> "DistributionTable":
        """Internal constructor for pure reindexings of an already-valid table."""
        obj = object.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        arr.setflags(write=False)
        obj.n = n
        obj.probs = arr
        return obj

    @classmethod
    def uniform(cls, n: int) -> "DistributionTable":
        size = math.factorial(n)
        return cls(n, np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, pi: Sequence[int]) -> "DistributionTable":
        pi = check_permutation(pi)
        arr = np.zeros(math.factorial(len(pi)))
        arr[perm_index(pi)] = 1.0
        return cls(len(pi), arr)

    def prob(self, pi: Sequence[int]) -> float:
        return float(self.probs[perm_index(pi)])

    def __len__(self) -> int:
        return len(self.probs)

    def __repr__(self) -> str:
        return f"DistributionTable(n={self.n})"


def relabel_distribution(
    p: DistributionTable, sigma: Sequence[int], rho: Sequence[int]
) -> DistributionTable:
    """Push p through the relabelling (sigma, rho): result(tau) = p(rho^-1 tau sigma)."""
    sigma = check_permutation(sigma)
    rho = check_permutation(rho)
    if len(sigma) != p.n or len(rho) != p.n:
        raise SizeError("relabelling permutations must match the table size")
    inv_rho = inverse(rho)
    perms = enumerate_permutations(p.n)
    out = np.empty_like(p.probs)
    for t, tau in enumerate(perms):
        out[t] = p.probs[perm_index(compose(compose(inv_rho, tau), sigma))]
    return DistributionTable._from_valid(p.n, out)
