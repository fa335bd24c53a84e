"""Self-checks of the mixers and circuits against dense reference constructions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import circuits as qc
from .engine import equal_superposition
from .mixers import HammingMixer, HypercubeMixer, make_mixer
from .space import SolutionSpace, all_solutions, distance


@dataclass(frozen=True)
class Check:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)


def dense_adjacency(space: SolutionSpace) -> np.ndarray:
    """Adjacency matrix built directly from ``distance(u, v) == 1`` over all pairs."""
    if space.size > 2000:
        raise ValueError("dense adjacency limited to N <= 2000")
    sols = all_solutions(space)
    N = space.size
    A = np.zeros((N, N))
    for i in range(N):
        for j in range(i + 1, N):
            if distance(space, sols[i], sols[j]) == 1:
                A[i, j] = A[j, i] = 1.0
    return A


def _random_state(N, rng):
    v = rng.normal(size=N) + 1j * rng.normal(size=N)
    return v / np.linalg.norm(v)


def mixer_checks(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    spaces = [SolutionSpace.binary(5), SolutionSpace.integer(3, 4), SolutionSpace.integer(4, 3),
              SolutionSpace.permutation(5)]
    for space in spaces:
        A = dense_adjacency(space)
        mixer = make_mixer(space)
        for t in (0.17, 0.9):
            psi = _random_state(space.size, rng)
            want = expm(-1j * t * A) @ psi
            got = mixer.apply(psi, t) / mixer.global_phase(t)
            out.append(Check(f"{mixer.name} {space} t={t} vs dense exponential",
                             float(np.max(np.abs(got - want))), 1e-9))
        s = equal_superposition(space)
        t = 0.4
        got = mixer.apply(s, t) / mixer.global_phase(t)
        out.append(Check(f"{mixer.name} {space} equal superposition eigenvalue",
                         float(np.max(np.abs(got - np.exp(-1j * space.degree * t) * s))), 1e-10))
    for n in (3, 8):
        psi = _random_state(1 << n, rng)
        cube = HypercubeMixer(SolutionSpace.binary(n)).apply(psi, 0.37)
        ham = HammingMixer(SolutionSpace.integer(n, 2))
        got = ham.apply(psi, 0.37) / ham.global_phase(0.37)
        out.append(Check(f"hamming(k=2) equals hypercube, n={n}", float(np.max(np.abs(got - cube))), 1e-12))
    return out


def circuit_checks(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(2, 65):
        psi = qc.simulate_circuit(qc.build_uk_binary(k))
        want = np.zeros(psi.size)
        want[:k] = 1 / math.sqrt(k)
        out.append(Check(f"binary U_k k={k}", float(np.max(np.abs(psi - want))), 1e-10))
    for k in range(2, 13):
        psi = qc.simulate_circuit(qc.build_uk_onehot(k))
        want = np.zeros(psi.size)
        want[[1 << j for j in range(k)]] = 1 / math.sqrt(k)
        out.append(Check(f"one-hot U_k k={k}", float(np.max(np.abs(psi - want))), 1e-10))
    for encoding in ("binary", "onehot"):
        for k in (2, 3, 4):
            t = float(rng.uniform(0.05, 1.5))
            c = qc.build_hamming_mixer_circuit(k, t, encoding)
            U = qc.restricted_unitary(c, k, encoding)
            err = qc.phase_aligned_difference(U, qc.complete_graph_walk(k, t))
            out.append(Check(f"mixer circuit {encoding} k={k} t={t:.3f}", err, 1e-9))
    for n in (2, 3, 4):
        psi = qc.simulate_circuit(qc.build_permutation_superposition(n))
        want = np.zeros(psi.size)
        want[qc.permutation_state_indices(n)] = 1 / math.sqrt(math.factorial(n))
        out.append(Check(f"permutation superposition n={n}", float(np.max(np.abs(psi - want))), 1e-9))
    return out


def format_table(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  err={c.error:.3e}  tol={c.tol:.0e}"
             for c in checks]
    return "\n".join(lines)
