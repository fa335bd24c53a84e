"""Built-in problem instances, random generators, JSON round-trip and exhaustive oracles."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .problems import (MAXIMIZE, CflpInstance, KMeansInstance, MaxcutInstance, MisInstance,
                       Problem, QapInstance)

BUILTINS = {
    "maxcut-n18": "maxcut-n18.json",
    "kmeans-n12k3": "kmeans-n12k3.json",
    "qap-n9": "qap-n9.json",
    "mis-n18": "mis-n18.json",
    "cflp-n12k3": "cflp-n12k3.json",
}


def to_dict(inst: Problem) -> dict:
    """Instance as the JSON schema {"kind", "n", "k", "data"}."""
    if isinstance(inst, MaxcutInstance):
        return {"kind": "maxcut", "n": inst.n, "k": 2,
                "data": {"edges": [[i, j, w] for i, j, w in inst.edges]}}
    if isinstance(inst, KMeansInstance):
        return {"kind": "kmeans", "n": inst.n, "k": inst.k, "data": {"points": inst.points.tolist()}}
    if isinstance(inst, QapInstance):
        return {"kind": "qap", "n": inst.n, "k": inst.n,
                "data": {"L": inst.L.tolist(), "F": inst.F.tolist()}}
    if isinstance(inst, MisInstance):
        return {"kind": "mis", "n": inst.n, "k": 2,
                "data": {"edges": [list(e) for e in inst.edges]}}
    if isinstance(inst, CflpInstance):
        return {"kind": "cflp", "n": inst.n, "k": inst.k,
                "data": {"R": inst.R.tolist(), "C": inst.C.tolist(), "L": inst.L.tolist(),
                         "F": inst.F.tolist()}}
    raise TypeError(f"cannot serialise {type(inst).__name__}")


def from_dict(doc: dict) -> Problem:
    kind = doc.get("kind")
    data = doc.get("data", {})
    try:
        if kind == "maxcut":
            return MaxcutInstance(int(doc["n"]), [tuple(e) for e in data["edges"]])
        if kind == "kmeans":
            return KMeansInstance(np.array(data["points"], dtype=float), int(doc["k"]))
        if kind == "qap":
            return QapInstance(np.array(data["L"], dtype=float), np.array(data["F"], dtype=float))
        if kind == "mis":
            return MisInstance(int(doc["n"]), [tuple(e) for e in data["edges"]])
        if kind == "cflp":
            return CflpInstance(data["R"], data["C"], data["L"], data["F"])
    except KeyError as exc:
        raise ValueError(f"instance document missing field {exc}") from None
    raise ValueError(f"unknown instance kind {kind!r}")


def dumps(inst: Problem) -> str:
    return json.dumps(to_dict(inst))


def load_json(path) -> Problem:
    return from_dict(json.loads(Path(path).read_text()))


def load_builtin(name: str) -> Problem:
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin {name!r}; available: {', '.join(BUILTINS)}")
    text = resources.files("qwoa").joinpath("data", BUILTINS[name]).read_text()
    return from_dict(json.loads(text))


def load(ref: str) -> Problem:
    """Resolve ``builtin:NAME`` or a path to an instance JSON file."""
    if ref.startswith("builtin:"):
        return load_builtin(ref.split(":", 1)[1])
    return load_json(ref)


def _connected(n, edges) -> bool:
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    todo = deque([0])
    while todo:
        v = todo.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == n


def _erdos_renyi(n, p, rng):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


def _pairwise_distances(a, b):
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1))


def generate(kind: str, seed: int = 0, **params) -> Problem:
    """Random instance following the recipe for ``kind``.

    maxcut: n, p=0.5, weights in (0, 1].  kmeans: n, k, dim=10, coordinates in (0, 10].
    qap: n, locations in [0, 30)^2, flows in [0, 20).  mis: n, p=0.2, resampled until
    connected.  cflp: n, k, demands in [200, 800), capacity (default 1.4 * total demand / k).
    """
    rng = np.random.default_rng(seed)
    n = int(params.get("n", 18))
    if kind == "maxcut":
        edges = _erdos_renyi(n, params.get("p", 0.5), rng)
        weights = 1.0 - rng.random(len(edges))  # (0, 1]
        return MaxcutInstance(n, [(i, j, w) for (i, j), w in zip(edges, weights.tolist())])
    if kind == "kmeans":
        k = int(params.get("k", 3))
        dim = int(params.get("dim", 10))
        return KMeansInstance(10.0 * (1.0 - rng.random((n, dim))), k)
    if kind == "qap":
        loc = 30.0 * rng.random((n, 2))
        L = _pairwise_distances(loc, loc)
        F = 20.0 * rng.random((n, n))
        np.fill_diagonal(F, 0.0)
        return QapInstance(L, F)
    if kind == "mis":
        p = params.get("p", 0.2)
        while True:
            edges = _erdos_renyi(n, p, rng)
            if _connected(n, edges):
                return MisInstance(n, edges)
    if kind == "cflp":
        k = int(params.get("k", 3))
        R = rng.integers(200, 800, size=n)
        cap = params.get("capacity")
        if cap is None:
            cap = int(round(1.4 * R.sum() / k))
        facilities = 8.0 * rng.random((k, 2))
        customers = 8.0 * rng.random((n, 2))
        F = rng.uniform(1000.0, 2000.0, size=k)
        return CflpInstance(R, np.full(k, int(cap)), _pairwise_distances(customers, facilities), F)
    raise ValueError(f"unknown instance kind {kind!r}")


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    solutions: np.ndarray  # indices of every optimal solution, ascending

    @property
    def count(self) -> int:
        return int(self.solutions.size)


def brute_force_optimum(values: np.ndarray, sense: str, rtol: float = 1e-12) -> BruteForceResult:
    """Best value over a full objective table and every index attaining it.

    Values within ``rtol`` (relative to the optimum's magnitude) count as ties, so
    that degenerate solutions summed in a different order are not split apart.
    """
    values = np.asarray(values)
    if values.size > 1 << 22:
        raise ValueError("exhaustive search limited to N <= 2^22")
    best = values.max() if sense == MAXIMIZE else values.min()
    tol = rtol * max(abs(float(best)), 1.0)
    idx = np.flatnonzero(np.abs(values - best) <= tol)
    return BruteForceResult(float(best), idx)
