"""Continuous-time quantum-walk mixers on the three mixing graphs.

Each mixer acts on a dense amplitude vector indexed by solution index (see
:mod:`qwoa.space`). The hypercube and Hamming mixers factor into independent
per-variable passes. The transposition mixer has no such product form and is
evaluated with an adaptive Taylor series over a precomputed neighbour table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .space import (BINARY, INTEGER, PERMUTATION, SolutionSpace, all_solutions, solution_to_index,
                    validate)


class SeriesError(ArithmeticError):
    """Raised when the transposition series fails to converge or loses norm."""


def state_norm(state: np.ndarray) -> float:
    """2-norm with pairwise summation (BLAS complex norms drift by ~1e-12 at N ~ 1e5)."""
    return float(np.sqrt(np.sum(state.real**2) + np.sum(state.imag**2)))


def _group_for(k: int, n: int) -> int:
    # keep the per-block buffer around 1k amplitudes
    g = max(1, int(math.log(1024) / math.log(k)))
    return min(g, n)


class Mixer:
    space: SolutionSpace
    name = "mixer"

    def apply(self, state: np.ndarray, t: float) -> np.ndarray:
        """Return the walked state; the input is left untouched."""
        out = np.array(state, dtype=np.complex128, copy=True)
        self.apply_inplace(out, t)
        return out

    def apply_inplace(self, state: np.ndarray, t: float) -> None:
        raise NotImplementedError

    def adjacency_apply(self, state: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def global_phase(self, t: float) -> complex:
        """Factor relating the emitted state to the exact walk e^{-itA} state."""
        return 1.0 + 0j

    @property
    def degree(self) -> int:
        return self.space.degree

    def _check(self, state):
        if state.shape != (self.space.size,):
            raise ValueError(f"state has shape {state.shape}, expected ({self.space.size},)")
        if state.dtype != np.complex128:
            raise TypeError("state must be complex128")


class HypercubeMixer(Mixer):
    name = "hypercube"

    def __init__(self, space: SolutionSpace):
        if space.kind != BINARY:
            raise ValueError("hypercube mixer needs a binary space")
        self.space = space
        self._group = _group_for(2, space.n)

    def apply_inplace(self, state, t):
        self._check(state)
        if t == 0:
            return
        # the k=2 complete-graph walk is the butterfly [[cos t, -i sin t], [-i sin t, cos t]]
        # up to the factor e^{-it} per variable, which is undone here
        c_move = (np.exp(-2j * t) - 1.0) / 2
        _kernels.complete_graph_apply(state, 2, self.space.n, c_move, self._group)
        state *= np.exp(1j * self.space.n * t)

    def adjacency_apply(self, state):
        state = np.ascontiguousarray(state, dtype=np.complex128)
        out = np.empty_like(state)
        _kernels.axis_sum(state, out, 2, self.space.n)
        return out


class HammingMixer(Mixer):
    """Product of complete-graph walks, emitted as e^{-int} e^{-itA}.

    On each variable the held value keeps (e^{-ikt}+k-1)/k of its amplitude and
    every other value receives (e^{-ikt}-1)/k of it.
    """

    name = "hamming"

    def __init__(self, space: SolutionSpace):
        if space.kind != INTEGER:
            raise ValueError("hamming mixer needs an integer space")
        self.space = space
        self._group = _group_for(space.k, space.n)

    def apply_inplace(self, state, t):
        self._check(state)
        if t == 0:
            return
        k = self.space.k
        c_move = (np.exp(-1j * k * t) - 1.0) / k
        _kernels.complete_graph_apply(state, k, self.space.n, c_move, self._group)

    def adjacency_apply(self, state):
        state = np.ascontiguousarray(state, dtype=np.complex128)
        out = np.empty_like(state)
        _kernels.axis_sum(state, out, self.space.k, self.space.n)
        return out

    def global_phase(self, t):
        return complex(np.exp(-1j * self.space.n * t))


@lru_cache(maxsize=2)
def transposition_neighbours(n: int) -> np.ndarray:
    """(n!, n(n-1)/2) table of neighbour indices under every position swap."""
    table = _kernels.transposition_table(n)
    table.setflags(write=False)
    return table


class TranspositionMixer(Mixer):
    """Walk on the transposition graph via a renormalised Taylor series.

    ``max_substep_norm`` bounds t·d per series evaluation; larger times are split
    into equal sub-steps so that the alternating series never has to cancel huge
    intermediate terms. Pass ``None`` to evaluate in one shot.
    """

    name = "transposition"

    def __init__(self, space: SolutionSpace, tol=1e-14, max_terms=500,
                 max_substep_norm: float | None = 6.0, renorm_tol=1e-12):
        if space.kind != PERMUTATION:
            raise ValueError("transposition mixer needs a permutation space")
        self.space = space
        self.tol = tol
        self.max_terms = max_terms
        self.max_substep_norm = max_substep_norm
        self.renorm_tol = renorm_tol
        self.last_terms = 0

    @property
    def neighbours(self):
        return transposition_neighbours(self.space.n)

    def apply_inplace(self, state, t):
        self._check(state)
        if t == 0:
            return
        d = max(self.degree, 1)
        steps = 1
        if self.max_substep_norm is not None:
            steps = max(1, math.ceil(abs(t) * d / self.max_substep_norm))
        dt = t / steps
        nbr = self.neighbours
        term = np.empty_like(state)
        nxt = np.empty_like(state)
        self.last_terms = 0
        for _ in range(steps):
            norm0 = state_norm(state)
            term[:] = state
            total = state  # accumulate in place
            thresh = (self.tol * norm0) ** 2
            for m in range(1, self.max_terms + 1):
                nrm2 = _kernels.taylor_step(term, nbr, -1j * dt / m, nxt, total)
                term, nxt = nxt, term
                if nrm2 < thresh:
                    break
            else:
                raise SeriesError(f"series did not converge in {self.max_terms} terms (t*d={dt * d:.3g})")
            self.last_terms += m
            norm1 = state_norm(total)
            factor = norm0 / norm1
            if abs(factor - 1.0) > self.renorm_tol:
                raise SeriesError(f"series lost norm: renormalisation factor {factor!r}")
            total *= factor

    def adjacency_apply(self, state):
        state = np.ascontiguousarray(state, dtype=np.complex128)
        out = np.empty_like(state)
        _kernels.gather_sum(state, self.neighbours, out)
        return out


def make_mixer(space: SolutionSpace, **kwargs) -> Mixer:
    """The natural mixer for a space: hypercube, Hamming or transposition."""
    cls = {BINARY: HypercubeMixer, INTEGER: HammingMixer, PERMUTATION: TranspositionMixer}[space.kind]
    return cls(space, **kwargs)


def apply_mixer(mixer: Mixer, t: float, state) -> np.ndarray:
    if t < 0:
        raise ValueError("walk time must be non-negative")
    return mixer.apply(np.asarray(state, dtype=np.complex128), t)


@dataclass(frozen=True)
class PolarFactors:
    r1: float
    r2: float
    phi1: float
    phi2: float
    phi: float
    degenerate: bool = False


def polar_factors(k: int, t: float) -> PolarFactors:
    """Polar forms of the stay/move factors of the complete-graph walk.

    Stay factor (e^{-ikt}+k-1) has modulus r1 and argument phi1, move factor
    (e^{-ikt}-1) has modulus r2 and argument phi2; ``phi`` = phi1 - phi2 is the
    phase lost per unit of distance.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if t < 0 or t > math.pi / k + 1e-15:
        raise ValueError(f"t must lie in (0, pi/k] = (0, {math.pi / k}]")
    if t == 0:
        return PolarFactors(float(k), 0.0, 0.0, math.nan, math.pi / 2, degenerate=True)
    kt = k * t
    # 1 - cos(kt) = 2 sin^2(kt/2), which avoids cancellation at small t
    one_minus_cos = 2 * math.sin(kt / 2) ** 2
    r1 = math.sqrt(k * k - 2 * (k - 1) * one_minus_cos)
    r2 = 2 * abs(math.sin(kt / 2))
    phi1 = math.atan2(-math.sin(kt), k - one_minus_cos)
    phi2 = math.atan2(math.sin(kt), one_minus_cos) - math.pi
    return PolarFactors(r1, r2, phi1, phi2, phi1 - phi2)


def distances_from(space: SolutionSpace, u) -> np.ndarray:
    """Distance from u to every solution, in index order."""
    u = validate(space, u)
    sols = all_solutions(space)
    if space.kind != PERMUTATION:
        return np.count_nonzero(sols != u, axis=1)
    n = space.n
    inv_u = np.argsort(u)
    # relative permutation rel[u[i]] = x[i], i.e. rel = x∘u⁻¹
    rel = sols[:, inv_u].astype(np.int64)
    seen = np.zeros(rel.shape, dtype=bool)
    cycles = np.zeros(rel.shape[0], dtype=np.int64)
    rows = np.arange(rel.shape[0])
    for start in range(n):
        new = ~seen[:, start]
        cycles += new
        j = np.full(rel.shape[0], start)
        for _ in range(n):
            seen[rows[new], j[new]] = True
            j = rel[rows, j]
    return n - cycles


@dataclass(frozen=True)
class PhaseReport:
    max_phase_deviation: float
    min_magnitude: float
    phi: float
    global_phase: float

    def holds(self, mixer_kind: str) -> bool:
        if mixer_kind == "transposition":
            return self.max_phase_deviation < 1e-6 and self.min_magnitude > 0
        return self.max_phase_deviation < 1e-8


def verify_phase_condition(mixer: Mixer, t: float, u) -> PhaseReport:
    """Check that walking from |u> gives phase globalPhase - h*phi on the distance-h shell."""
    space = mixer.space
    u = validate(space, u)
    psi = np.zeros(space.size, dtype=np.complex128)
    psi[solution_to_index(space, u)] = 1.0
    out = mixer.apply(psi, t)
    h = distances_from(space, u)
    if isinstance(mixer, HammingMixer):
        phi = polar_factors(space.k, t).phi
    else:
        phi = math.pi / 2
    ref = float(np.angle(out[solution_to_index(space, u)]))
    dev = np.angle(out * np.exp(1j * (h * phi - ref)))
    return PhaseReport(float(np.max(np.abs(dev))), float(np.min(np.abs(out))), phi, ref)
