"""Objective functions for the five problem classes, penalties, and objective statistics.

Every instance exposes ``space``, ``sense`` and ``evaluate_many(X, ...)`` which
scores an (m, n) array of solutions. ``values(...)`` scores the whole solution
space in index order and is what the simulator consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .space import SolutionSpace, all_solutions, random_solutions

MAXIMIZE = "maximize"
MINIMIZE = "minimize"


def sense_sign(sense: str) -> int:
    if sense == MAXIMIZE:
        return 1
    if sense == MINIMIZE:
        return -1
    raise ValueError(f"unknown sense {sense!r}")


def _as_batch(X, n):
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n:
        raise ValueError(f"solutions must have {n} entries")
    return X


class Problem:
    kind = ""
    sense = MINIMIZE

    @property
    def space(self) -> SolutionSpace:
        raise NotImplementedError

    def evaluate_many(self, X, **cfg) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x, **cfg) -> float:
        return float(self.evaluate_many(np.asarray(x)[None, :], **cfg)[0])

    def values(self, **cfg) -> np.ndarray:
        return self.evaluate_many(all_solutions(self.space), **cfg)


@dataclass(eq=False)
class MaxcutInstance(Problem):
    n: int
    edges: list

    kind = "maxcut"
    sense = MAXIMIZE

    def __post_init__(self):
        self.edges = [(int(i), int(j), float(w)) for i, j, w in self.edges]
        for i, j, w in self.edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) must satisfy 0 <= i < j < n")
            if w <= 0:
                raise ValueError("edge weights must be positive")

    @property
    def space(self):
        return SolutionSpace.binary(self.n)

    @property
    def total_weight(self) -> float:
        return math.fsum(w for _, _, w in self.edges)

    def evaluate_many(self, X):
        X = _as_batch(X, self.n)
        out = np.zeros(X.shape[0])
        for i, j, w in self.edges:
            out += w * (X[:, i] != X[:, j])
        return out

    @cached_property
    def _values(self):
        v = self.evaluate_many(all_solutions(self.space))
        v.setflags(write=False)
        return v

    def values(self):
        return self._values


@dataclass(eq=False)
class KMeansInstance(Problem):
    """Clustering n points into k labelled clusters.

    The score of a cluster is the sum of squared distances over *ordered* pairs
    of its members divided by its size, which is twice the sum of squared
    distances to the centroid. Empty clusters score zero.
    """

    points: np.ndarray
    k: int

    kind = "kmeans"
    sense = MINIMIZE

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            raise ValueError("points must be a 2-d array")
        if not self.n >= self.k >= 2:
            raise ValueError("need n >= k >= 2")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def space(self):
        return SolutionSpace.integer(self.n, self.k)

    def raw_many(self, X) -> np.ndarray:
        X = _as_batch(X, self.n)
        sq = np.einsum("ij,ij->i", self.points, self.points)
        out = np.zeros(X.shape[0])
        for c in range(self.k):
            member = (X == c).astype(float)
            count = member.sum(axis=1)
            s1 = member @ self.points
            s2 = member @ sq
            nonempty = count > 0
            spread = s2 - np.einsum("ij,ij->i", s1, s1) / np.where(nonempty, count, 1.0)
            out += np.where(nonempty, 2.0 * spread, 0.0)
        return out

    @staticmethod
    def cluster_counts(X) -> np.ndarray:
        """Number of distinct labels used by each solution."""
        X = np.asarray(X)
        srt = np.sort(X, axis=1)
        return 1 + np.count_nonzero(np.diff(srt, axis=1), axis=1)

    def evaluate_many(self, X, cluster_means=None):
        """Raw objective, or the cluster-count-levelled one when ``cluster_means`` is given.

        ``cluster_means[j-1]`` is the mean raw objective over solutions with j clusters.
        """
        raw = self.raw_many(X)
        if cluster_means is None:
            return raw
        mu = np.asarray(cluster_means, dtype=float)
        if mu.shape != (self.k,):
            raise ValueError(f"cluster_means needs {self.k} entries")
        c = self.cluster_counts(_as_batch(X, self.n))
        return raw - (mu[c - 1] - mu[self.k - 1])

    @cached_property
    def _raw_values(self):
        v = self.raw_many(all_solutions(self.space))
        v.setflags(write=False)
        return v

    def values(self, cluster_means=None):
        if cluster_means is None:
            return self._raw_values
        c = self.cluster_counts(all_solutions(self.space))
        mu = np.asarray(cluster_means, dtype=float)
        return self._raw_values - (mu[c - 1] - mu[self.k - 1])


@dataclass
class ClusterMeans:
    means: np.ndarray
    counts: np.ndarray
    complete: bool
    method: str


def estimate_cluster_means(inst: KMeansInstance, mode="exact", per_bucket=10_000,
                           seed=0, max_draws=10_000_000) -> ClusterMeans:
    """Mean raw objective over solutions grouped by their number of non-empty clusters.

    ``mode="sampled"`` draws uniform solutions until every bucket holds
    ``per_bucket`` of them or ``max_draws`` is exhausted; in the latter case the
    result is flagged incomplete and starved buckets hold NaN.
    """
    k = inst.k
    if mode == "exact":
        if inst.space.size > 1 << 22:
            raise ValueError("exact cluster means need N <= 2^22")
        c = inst.cluster_counts(all_solutions(inst.space))
        raw = inst.values()
        counts = np.bincount(c, minlength=k + 1)[1:]
        sums = np.bincount(c, weights=raw, minlength=k + 1)[1:]
        with np.errstate(invalid="ignore"):
            means = sums / counts
        return ClusterMeans(means, counts, bool(np.all(counts > 0)), "exact")
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    sums = np.zeros(k)
    counts = np.zeros(k, dtype=np.int64)
    drawn = 0
    batch = 100_000
    while drawn < max_draws and counts.min() < per_bucket:
        X = random_solutions(inst.space, batch, rng)
        drawn += batch
        c = inst.cluster_counts(X)
        need = counts[c - 1] < per_bucket
        # only score rows whose bucket is still filling
        X, c = X[need], c[need]
        if X.size == 0:
            continue
        f = inst.raw_many(X)
        for j in range(1, k + 1):
            sel = np.flatnonzero(c == j)[: per_bucket - counts[j - 1]]
            sums[j - 1] += f[sel].sum()
            counts[j - 1] += sel.size
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return ClusterMeans(means, counts, bool(counts.min() >= per_bucket), "sampled")


@dataclass(eq=False)
class QapInstance(Problem):
    L: np.ndarray
    F: np.ndarray

    kind = "qap"
    sense = MINIMIZE

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        if self.L.shape != self.F.shape or self.L.shape[0] != self.L.shape[1]:
            raise ValueError("L and F must be square and of equal size")
        if not np.array_equal(self.L, self.L.T) or np.any(np.diag(self.L) != 0):
            raise ValueError("L must be symmetric with a zero diagonal")
        if np.any(self.F < 0):
            raise ValueError("flows F must be non-negative")

    @property
    def n(self):
        return self.L.shape[0]

    @property
    def space(self):
        return SolutionSpace.permutation(self.n)

    def evaluate_many(self, X):
        X = _as_batch(X, self.n).astype(np.intp)
        out = np.zeros(X.shape[0])
        rows = np.arange(X.shape[0])
        for i in range(self.n):
            Li = self.L[X[:, i]]  # rows L[x_i, :]
            for j in range(self.n):
                if self.F[i, j] != 0:
                    out += self.F[i, j] * Li[rows, X[:, j]]
        return out

    @cached_property
    def _values(self):
        v = self.evaluate_many(all_solutions(self.space))
        v.setflags(write=False)
        return v

    def values(self):
        return self._values


@dataclass(eq=False)
class MisInstance(Problem):
    """Maximum independent set scored as subset size minus constraint penalties."""

    n: int
    edges: list
    default_penalty: tuple = (1.5, 0.0)

    kind = "mis"
    sense = MAXIMIZE

    def __post_init__(self):
        self.edges = sorted({(min(int(i), int(j)), max(int(i), int(j))) for i, j in self.edges})
        if any(i == j or not 0 <= i < self.n or not 0 <= j < self.n for i, j in self.edges):
            raise ValueError("edges must join distinct vertices in [0, n)")

    @property
    def space(self):
        return SolutionSpace.binary(self.n)

    def components(self, X):
        """(subset size, edges inside subset, any edge inside subset)."""
        X = _as_batch(X, self.n).astype(np.int64)
        size = X.sum(axis=1)
        inside = np.zeros(X.shape[0], dtype=np.int64)
        for i, j in self.edges:
            inside += X[:, i] & X[:, j]
        return size, inside, (inside > 0).astype(np.int64)

    @staticmethod
    def _combine(parts, penalty):
        size, p1, p2 = parts
        lam1, lam2 = _penalty(penalty, 2)
        return size - lam1 * p1 - lam2 * p2

    def evaluate_many(self, X, penalty=None):
        return self._combine(self.components(X), self.default_penalty if penalty is None else penalty)

    @cached_property
    def _parts(self):
        return self.components(all_solutions(self.space))

    def values(self, penalty=None):
        return self._combine(self._parts, self.default_penalty if penalty is None else penalty)

    def valid_mask(self) -> np.ndarray:
        return self._parts[1] == 0


def _penalty(penalty, length):
    lam = tuple(float(v) for v in penalty)
    if len(lam) != length:
        raise ValueError(f"penalty vector needs {length} entries, got {len(lam)}")
    if any(v < 0 for v in lam):
        raise ValueError("penalty entries must be non-negative")
    return lam


@dataclass(eq=False)
class CflpInstance(Problem):
    """Capacitated facility location: customer j is served from location x_j."""

    R: np.ndarray
    C: np.ndarray
    L: np.ndarray
    F: np.ndarray
    default_penalty: tuple = (1.0, 1.0, 0.0)

    kind = "cflp"
    sense = MINIMIZE

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=np.int64)
        self.C = np.asarray(self.C, dtype=np.int64)
        self.L = np.asarray(self.L, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        if self.L.shape != (self.n, self.k) or self.C.shape != (self.k,) or self.F.shape != (self.k,):
            raise ValueError("inconsistent CFLP array shapes")
        if (self.R < 0).any() or (self.C <= 0).any() or (self.L < 0).any() or (self.F < 0).any():
            raise ValueError("CFLP data must be non-negative with positive capacities")

    @property
    def n(self):
        return self.R.shape[0]

    @property
    def k(self):
        return self.C.shape[0]

    @property
    def space(self):
        return SolutionSpace.integer(self.n, self.k)

    def components(self, X):
        """(unpenalised cost, summed variable penalty, summed fixed penalty, valid)."""
        X = _as_batch(X, self.n).astype(np.intp)
        m = X.shape[0]
        cost = np.zeros(m)
        for j in range(self.n):
            cost += self.R[j] * self.L[j, X[:, j]]
        var_pen = np.zeros(m)
        fix_pen = np.zeros(m)
        valid = np.ones(m, dtype=bool)
        avg_l = self.L.mean()
        avg_f = self.F.mean()
        for i in range(self.k):
            used = X == i
            cost += np.where(used.any(axis=1), self.F[i], 0.0)
            excess = used.astype(np.int64) @ self.R - self.C[i]
            over = excess > 0
            valid &= ~over
            excess = np.where(over, excess, 0)
            var_pen += avg_l * excess
            fix_pen += avg_f * (-(-excess // self.C[i]))  # exact integer ceiling
        return cost, var_pen, fix_pen, valid

    def _combine(self, parts, penalty, reference):
        cost, var_pen, fix_pen, valid = parts
        lam1, lam2, lam3 = _penalty(penalty, 3)
        g = cost + lam1 * var_pen + lam2 * fix_pen
        if lam3 == 0:
            return g
        if reference is None:
            raise ValueError("a reference solution is required when the third penalty is non-zero")
        ref_cost, ref_var, ref_fix, _ = self.components(np.asarray(reference)[None, :])
        g_ref = ref_cost[0] + lam1 * ref_var[0] + lam2 * ref_fix[0]
        return np.where(valid, g, g - lam3 * (g - g_ref))

    def evaluate_many(self, X, penalty=None, reference=None):
        penalty = self.default_penalty if penalty is None else penalty
        return self._combine(self.components(X), penalty, reference)

    @cached_property
    def _parts(self):
        return self.components(all_solutions(self.space))

    def values(self, penalty=None, reference=None):
        penalty = self.default_penalty if penalty is None else penalty
        return self._combine(self._parts, penalty, reference)

    def valid_mask(self) -> np.ndarray:
        return self._parts[3]

    def unconstrained_optimum(self) -> np.ndarray:
        """Cheapest assignment ignoring capacities, by exhaustive search."""
        cost = self._parts[0]
        return np.asarray(all_solutions(self.space)[int(np.argmin(cost))], dtype=np.int64)


@dataclass(frozen=True)
class ObjectiveStats:
    mean: float
    std: float
    method: str
    samples: int = 0
    seed: int | None = None


def objective_stats(evaluate_many, space: SolutionSpace, mode="auto", samples=10_000, seed=0,
                    values: np.ndarray | None = None) -> ObjectiveStats:
    """Population mean and standard deviation of an objective over ``space``.

    Exact enumeration is used up to N = 2^22 (or when ``values`` is supplied);
    otherwise ``samples`` uniform solutions are scored.
    """
    if mode == "auto":
        mode = "exact" if (values is not None or space.size <= 1 << 22) else "sampled"
    if mode == "exact":
        v = values if values is not None else evaluate_many(all_solutions(space))
        return ObjectiveStats(float(np.mean(v)), float(np.std(v)), "exact", int(v.size))
    rng = np.random.default_rng(seed)
    v = evaluate_many(random_solutions(space, samples, rng))
    return ObjectiveStats(float(np.mean(v)), float(np.std(v)), "sampled", samples, seed)
