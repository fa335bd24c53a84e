"""Feasible-solution spaces: index codecs, graph distances and distance-h subsets.

Three structures are supported. Binary and integer spaces index solutions with a
base-k positional code (``vars[0]`` least significant). Permutation spaces use the
Lehmer code, which enumerates permutations in lexicographic order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

BINARY = "binary"
INTEGER = "integer"
PERMUTATION = "permutation"


@dataclass(frozen=True)
class SolutionSpace:
    kind: str
    n: int
    k: int

    def __post_init__(self):
        if self.kind not in (BINARY, INTEGER, PERMUTATION):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == BINARY and self.k != 2:
            raise ValueError("binary spaces have k = 2")
        if self.kind == INTEGER and self.k < 2:
            raise ValueError("integer spaces need k >= 2")
        if self.kind == PERMUTATION and self.k != self.n:
            raise ValueError("permutation spaces have k = n")

    @classmethod
    def binary(cls, n: int) -> "SolutionSpace":
        return cls(BINARY, n, 2)

    @classmethod
    def integer(cls, n: int, k: int) -> "SolutionSpace":
        return cls(INTEGER, n, k)

    @classmethod
    def permutation(cls, n: int) -> "SolutionSpace":
        return cls(PERMUTATION, n, n)

    @property
    def size(self) -> int:
        if self.kind == PERMUTATION:
            return math.factorial(self.n)
        return self.k**self.n

    @property
    def degree(self) -> int:
        """Number of neighbours of every vertex in the mixing graph."""
        if self.kind == PERMUTATION:
            return self.n * (self.n - 1) // 2
        return self.n * (self.k - 1)

    @property
    def diameter(self) -> int:
        return self.n - 1 if self.kind == PERMUTATION else self.n

    def __str__(self):
        if self.kind == INTEGER:
            return f"Integer(n={self.n}, k={self.k})"
        return f"{self.kind.capitalize()}(n={self.n})"


def _check_index(space: SolutionSpace, idx: int):
    if not 0 <= idx < space.size:
        raise IndexError(f"index {idx} out of range for {space} (N={space.size})")


def validate(space: SolutionSpace, sol) -> np.ndarray:
    """Return ``sol`` as an int array after checking it belongs to ``space``."""
    x = np.asarray(sol, dtype=np.int64)
    if x.shape != (space.n,):
        raise ValueError(f"solution must have {space.n} entries, got shape {x.shape}")
    if x.min() < 0 or x.max() >= space.k:
        raise ValueError(f"solution entries must lie in [0, {space.k})")
    if space.kind == PERMUTATION and len(set(x.tolist())) != space.n:
        raise ValueError("permutation has repeated entries")
    return x


def index_to_solution(space: SolutionSpace, idx: int) -> np.ndarray:
    idx = int(idx)
    _check_index(space, idx)
    n, k = space.n, space.k
    if space.kind != PERMUTATION:
        out = np.empty(n, dtype=np.int64)
        for j in range(n):
            idx, out[j] = divmod(idx, k)
        return out
    pool = list(range(n))
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        digit, idx = divmod(idx, math.factorial(n - 1 - i))
        out[i] = pool.pop(digit)
    return out


def solution_to_index(space: SolutionSpace, sol) -> int:
    x = validate(space, sol).tolist()
    n, k = space.n, space.k
    if space.kind != PERMUTATION:
        idx = 0
        for v in reversed(x):
            idx = idx * k + v
        return idx
    idx = 0
    for i, v in enumerate(x):
        smaller_after = sum(1 for w in x[i + 1:] if w < v)
        idx += smaller_after * math.factorial(n - 1 - i)
    return idx


def indices_of(space: SolutionSpace, sols: np.ndarray) -> np.ndarray:
    """Vectorised ``solution_to_index`` for an (m, n) array of valid solutions."""
    sols = np.asarray(sols, dtype=np.int64)
    n, k = space.n, space.k
    if space.kind != PERMUTATION:
        return sols @ (k ** np.arange(n, dtype=np.int64))
    idx = np.zeros(sols.shape[0], dtype=np.int64)
    for i in range(n - 1):
        smaller_after = (sols[:, i + 1:] < sols[:, i:i + 1]).sum(axis=1)
        idx += smaller_after * math.factorial(n - 1 - i)
    return idx


@lru_cache(maxsize=8)
def _all_solutions(space: SolutionSpace) -> np.ndarray:
    n, k = space.n, space.k
    if space.kind == PERMUTATION:
        # itertools emits permutations in lexicographic order, which is Lehmer rank order
        out = np.array(list(itertools.permutations(range(n))), dtype=np.int8)
    else:
        idx = np.arange(space.size, dtype=np.int64)
        out = np.empty((space.size, n), dtype=np.int8)
        for j in range(n):
            out[:, j] = (idx // k**j) % k
    out.setflags(write=False)
    return out


def all_solutions(space: SolutionSpace) -> np.ndarray:
    """Every solution as a read-only (N, n) int8 array in index order."""
    if space.size > 1 << 23:
        raise ValueError(f"{space} is too large to enumerate (N={space.size})")
    return _all_solutions(space)


def _cycle_count(perm) -> int:
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if not seen[start]:
            cycles += 1
            j = start
            while not seen[j]:
                seen[j] = True
                j = perm[j]
    return cycles


def distance(space: SolutionSpace, u, v) -> int:
    """Graph distance on the mixing graph between two solutions of ``space``."""
    u = validate(space, u)
    v = validate(space, v)
    if space.kind != PERMUTATION:
        return int(np.count_nonzero(u != v))
    # relative permutation v∘u⁻¹ maps u[i] -> v[i]
    rel = np.empty(space.n, dtype=np.int64)
    rel[u] = v
    return space.n - _cycle_count(rel.tolist())


@lru_cache(maxsize=None)
def stirling_first(n: int, c: int) -> int:
    """Unsigned Stirling number of the first kind: permutations of n with c cycles."""
    if n == 0 and c == 0:
        return 1
    if n == 0 or c == 0 or c > n:
        return 0
    return stirling_first(n - 1, c - 1) + (n - 1) * stirling_first(n - 1, c)


def subset_size(space: SolutionSpace, h: int) -> int:
    """Number of solutions at distance exactly h from any fixed solution."""
    if not 0 <= h <= space.diameter:
        raise IndexError(f"h={h} outside [0, {space.diameter}]")
    n = space.n
    if space.kind == PERMUTATION:
        return stirling_first(n, n - h)
    return math.comb(n, h) * (space.k - 1) ** h


def _random_perm_with_cycles(n: int, cycles: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from the permutations of n elements with a given cycle count.

    Element m either closes a new fixed point or is spliced into an existing
    cycle; the choice is drawn with the exact Stirling-number odds, so every
    permutation with the requested cycle count is equally likely.
    """
    fixed = np.zeros((size, n), dtype=bool)
    remaining = np.full(size, cycles, dtype=np.int64)
    for m in range(n, 0, -1):
        s_total = np.array([stirling_first(m, c) for c in range(m + 1)], dtype=float)
        s_prev = np.array([stirling_first(m - 1, c) for c in range(m + 1)], dtype=float)
        c = remaining
        p_fixed = np.where(c >= 1, s_prev[np.maximum(c - 1, 0)] / s_total[c], 0.0)
        is_fixed = rng.random(size) < p_fixed
        fixed[:, m - 1] = is_fixed
        remaining = remaining - is_fixed
    perm = np.zeros((size, n), dtype=np.int64)
    rows = np.arange(size)
    for m in range(n):
        perm[:, m] = m
        splice = ~fixed[:, m]
        if m > 0 and splice.any():
            r = rows[splice]
            j = rng.integers(0, m, size=r.size)
            perm[r, m] = perm[r, j]
            perm[r, j] = m
    return perm


def sample_at_distance_many(space: SolutionSpace, u, h: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` independent uniform samples from the distance-h subset of u."""
    if not 0 <= h <= space.diameter:
        raise IndexError(f"h={h} outside [0, {space.diameter}]")
    u = validate(space, u)
    n, k = space.n, space.k
    out = np.broadcast_to(u, (size, n)).copy()
    if h == 0:
        return out
    if space.kind != PERMUTATION:
        # random h-subset of positions per row via argsort of uniform keys
        pos = np.argsort(rng.random((size, n)), axis=1)[:, :h]
        shift = rng.integers(1, k, size=(size, h))
        rows = np.arange(size)[:, None]
        out[rows, pos] = (out[rows, pos] + shift) % k
        return out
    sigma = _random_perm_with_cycles(n, n - h, size, rng)
    # w = sigma∘u, so that w∘u⁻¹ = sigma has exactly n - h cycles
    return np.take_along_axis(sigma, np.broadcast_to(u, (size, n)), axis=1)


def sample_at_distance(space: SolutionSpace, u, h: int, rng: np.random.Generator) -> np.ndarray:
    return sample_at_distance_many(space, u, h, 1, rng)[0]


def random_solutions(space: SolutionSpace, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random solutions as an (size, n) array."""
    if space.kind == PERMUTATION:
        return rng.permuted(np.broadcast_to(np.arange(space.n), (size, space.n)), axis=1)
    return rng.integers(0, space.k, size=(size, space.n))
