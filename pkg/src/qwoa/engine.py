"""Amplified-state preparation, measurement statistics and parameter search.

The amplified state alternates phase separation and a quantum walk, starting
from the equal superposition::

    |γ,t,β> = U_M(t_{p-1}) U_Q(±γ_{p-1}/σ) ... U_M(t_0) U_Q(±γ_0/σ) |s>

with phase strengths rising linearly from βγ to γ and walk times falling
linearly from t to βt.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import _kernels
from .mixers import Mixer
from .problems import MAXIMIZE, MINIMIZE, sense_sign
from .space import SolutionSpace

log = logging.getLogger(__name__)

GAMMA_MIN = 1e-4
T_MIN = 1e-4
BETA_MIN, BETA_MAX = 1e-4, 1 - 1e-4
MAX_HALVINGS = 40


@dataclass(frozen=True)
class RunParams:
    gamma: float
    t: float
    beta: float
    p: int
    sense: str = MAXIMIZE
    sigma: float = 1.0
    penalty: tuple | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if not (self.gamma >= 0 and self.t >= 0 and math.isfinite(self.gamma) and math.isfinite(self.t)):
            raise ValueError("gamma and t must be finite and non-negative")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        sense_sign(self.sense)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["penalty"] is not None:
            d["penalty"] = list(d["penalty"])
        return d


def schedule(params: RunParams, i: int) -> tuple[float, float]:
    """(γ_i, t_i) for iteration i; a single iteration uses (γ, t) unchanged."""
    if not 0 <= i < params.p:
        raise IndexError(f"iteration {i} outside [0, {params.p})")
    if params.p == 1:
        return params.gamma, params.t
    frac = (1 - params.beta) * i / (params.p - 1)
    return (params.beta + frac) * params.gamma, (1 - frac) * params.t


def equal_superposition(space: SolutionSpace) -> np.ndarray:
    return np.full(space.size, 1 / math.sqrt(space.size), dtype=np.complex128)


def phase_separate(state: np.ndarray, values: np.ndarray, gamma_eff: float, sense: str,
                   inplace: bool = False) -> np.ndarray:
    """Multiply each amplitude by exp(-i s γ f(x)), s = +1 to maximise and -1 to minimise."""
    phase = np.exp((-1j * sense_sign(sense) * gamma_eff) * values)
    if inplace:
        state *= phase
        return state
    return state * phase


class Metrics:
    """Expectation, CVaR and optimal-solution probability of states over one objective."""

    def __init__(self, values: np.ndarray, sense: str, optima=None, cvar_alpha: float = 0.1):
        if not 0 < cvar_alpha <= 1:
            raise ValueError("cvar_alpha must lie in (0, 1]")
        self.values = np.asarray(values, dtype=float)
        self.sense = sense
        self.cvar_alpha = cvar_alpha
        s = sense_sign(sense)
        if optima is None:
            best = self.values.max() if s > 0 else self.values.min()
            optima = np.flatnonzero(self.values == best)
        self.optima = np.asarray(optima, dtype=np.int64)
        # best solutions first
        self._order = np.argsort(-s * self.values, kind="stable")
        self._sorted_values = self.values[self._order]

    def probabilities(self, state):
        return state.real**2 + state.imag**2

    def expectation(self, probs) -> float:
        return float(probs @ self.values)

    def cvar(self, probs) -> float:
        alpha = self.cvar_alpha
        p = probs[self._order]
        cum = np.cumsum(p)
        j = int(np.searchsorted(cum, alpha))
        j = min(j, p.size - 1)
        before = cum[j - 1] if j > 0 else 0.0
        head = float(p[:j] @ self._sorted_values[:j])
        return (head + (alpha - before) * self._sorted_values[j]) / alpha

    def optimal_probability(self, probs) -> float:
        return float(probs[self.optima].sum())

    def metric(self, state, name: str) -> float:
        probs = self.probabilities(state)
        if name == "expectation":
            return self.expectation(probs)
        if name == "cvar":
            return self.cvar(probs)
        raise ValueError(f"unknown metric {name!r}")


@dataclass
class MeasureStats:
    expectation: float
    cvar: float
    optimal_probability: float
    amplification: np.ndarray


def measure_stats(state, values, optima=None, cvar_alpha=0.1, sense=MAXIMIZE) -> MeasureStats:
    m = Metrics(values, sense, optima, cvar_alpha)
    probs = m.probabilities(state)
    return MeasureStats(m.expectation(probs), m.cvar(probs), m.optimal_probability(probs),
                        probs * state.size)


@dataclass
class IterationRecord:
    iter: int
    optimal_probability: float
    expectation: float
    cvar: float


@dataclass
class RunTrace:
    params: RunParams
    trace: list = field(default_factory=list)
    state: np.ndarray | None = None

    @property
    def final_probability(self) -> float:
        return self.trace[-1].optimal_probability

    def top(self, values, count=10) -> list:
        if self.state is None:
            return []
        amp = (self.state.real**2 + self.state.imag**2) * self.state.size
        idx = np.argsort(-amp, kind="stable")[:count]
        return [{"index": int(i), "objective": float(values[i]), "amplification": float(amp[i])}
                for i in idx]

    def to_dict(self, values=None, top=10) -> dict:
        return {
            "params": self.params.to_dict(),
            "trace": [asdict(r) for r in self.trace],
            "final": {"top": self.top(values, top) if values is not None else []},
        }


def _iterate(mixer: Mixer, values: np.ndarray, params: RunParams,
             after: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    space = mixer.space
    if values.shape != (space.size,):
        raise ValueError("objective table does not match the mixer's space")
    state = equal_superposition(space)
    scale = -1j * sense_sign(params.sense) / params.sigma
    if params.p == 1:
        current = np.exp((scale * params.gamma) * values)
        step = np.ones_like(current)
    else:
        # γ_i is linear in i, so each iteration's phase is the previous one times a fixed step
        current = np.exp((scale * params.beta * params.gamma) * values)
        step = np.exp((scale * params.gamma * (1 - params.beta) / (params.p - 1)) * values)
    for i in range(params.p):
        _kernels.phase_step(state, current, step)
        mixer.apply_inplace(state, schedule(params, i)[1])
        if after is not None:
            after(i, state)
    return state


def amplified_state(mixer: Mixer, values, params: RunParams) -> np.ndarray:
    """Final amplified state without per-iteration bookkeeping."""
    return _iterate(mixer, np.asarray(values, dtype=float), params)


def prepare_amplified(mixer: Mixer, values, params: RunParams, optima=None,
                      hook: Callable[[int, np.ndarray], None] | None = None,
                      cvar_alpha: float = 0.1, metric_values=None, keep_state: bool = True) -> RunTrace:
    """Run all p iterations, recording metrics after each one.

    ``metric_values`` scores the recorded metrics when it differs from the
    objective driving the phases (penalty tuning). ``hook(i, state)`` sees the
    live state after iteration i and must copy it if it keeps it.
    """
    values = np.asarray(values, dtype=float)
    mv = values if metric_values is None else np.asarray(metric_values, dtype=float)
    metrics = Metrics(mv, params.sense, optima, cvar_alpha)
    trace = RunTrace(params)

    def record(i, state):
        probs = metrics.probabilities(state)
        trace.trace.append(IterationRecord(i, metrics.optimal_probability(probs),
                                           metrics.expectation(probs), metrics.cvar(probs)))
        if hook is not None:
            hook(i, state)

    state = _iterate(mixer, values, params, record)
    if keep_state:
        trace.state = state
    return trace


@dataclass
class OptimizeResult:
    params: RunParams
    value: float
    converged: bool
    evaluations: int
    history: list = field(default_factory=list)  # (iteration, metric value, parameter vector)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "value": self.value,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "history": [{"step": s, "value": v, "x": list(x)} for s, v, x in self.history],
        }


class _Budget(Exception):
    pass


def _ascend(fun, x0, lower, upper, active, max_evals, grad_tol, rel_step, max_move):
    """Maximise ``fun`` by projected quasi-Newton ascent with finite-difference gradients.

    Gradients use central differences with step rel_step*|x_i| (rel_step when
    x_i = 0), falling back to one-sided differences at a bound. The search
    direction comes from a BFGS inverse-Hessian estimate; every step is a
    backtracking line search that halves from the unit step until the value
    improves. The unit step is shortened when it would move any coordinate by
    more than ``max_move``, which keeps the search in the basin it starts in.
    Returns (x, value, converged, evaluations, history).
    """
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    evals = 0
    history = []

    def f(z):
        nonlocal evals
        if evals >= max_evals:
            raise _Budget
        evals += 1
        return fun(z)

    def grad(z, fz):
        g = np.zeros_like(z)
        for i in np.flatnonzero(active):
            h = rel_step * abs(z[i]) if z[i] != 0 else rel_step
            up, dn = z.copy(), z.copy()
            up[i] += h
            dn[i] -= h
            if dn[i] < lower[i]:
                g[i] = (f(up) - fz) / h
            elif up[i] > upper[i]:
                g[i] = (fz - f(dn)) / h
            else:
                g[i] = (f(up) - f(dn)) / (2 * h)
        return g

    fx = f(x)
    history.append((0, fx, x.tolist()))
    H = np.eye(x.size)
    converged = False
    try:
        g = grad(x, fx)
        for it in range(1, 10**6):
            # projected gradient: ignore components pushing into an active bound
            pg = g.copy()
            pg[(x <= lower) & (g < 0)] = 0
            pg[(x >= upper) & (g > 0)] = 0
            if np.max(np.abs(pg)) < grad_tol:
                converged = True
                break
            d = H @ pg
            if d @ pg <= 0:
                H = np.eye(x.size)
                d = pg.copy()
            big = np.max(np.abs(d))
            step, xn, fn = min(1.0, max_move / big) if big > 0 else 1.0, x, fx
            for _ in range(MAX_HALVINGS):
                xn = np.clip(x + step * d, lower, upper)
                if np.array_equal(xn, x):
                    break
                fn = f(xn)
                if fn > fx:
                    break
                step *= 0.5
            if np.array_equal(xn, x) or not fn > fx:
                # no representable improving step: we sit at a stationary point
                converged = True
                break
            gn = grad(xn, fn)
            s, y = xn - x, -(gn - g)  # curvature of -fun
            sy = s @ y
            if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
                rho = 1.0 / sy
                I = np.eye(x.size)
                H = (I - rho * np.outer(s, y)) @ H @ (I - rho * np.outer(y, s)) + rho * np.outer(s, s)
            x, fx, g = xn, fn, gn
            history.append((it, fx, x.tolist()))
    except _Budget:
        pass
    return x, fx, converged, evals, history


def _bounds(extra: int):
    lower = np.array([GAMMA_MIN, T_MIN, BETA_MIN] + [0.0] * extra)
    upper = np.array([np.inf, np.inf, BETA_MAX] + [np.inf] * extra)
    return lower, upper


def optimize_params(mixer: Mixer, values, init: RunParams, metric: str = "expectation",
                    cvar_alpha: float = 0.1, max_evals: int = 500, grad_tol: float = 1e-6,
                    rel_step: float = 1e-3, max_move: float = 0.25) -> OptimizeResult:
    """Local search over (γ, t, β) for the best metric of the amplified state.

    Maximisation problems climb the metric and minimisation problems descend it.
    Exhausting ``max_evals`` returns the best point found with ``converged=False``.
    """
    values = np.asarray(values, dtype=float)
    metrics = Metrics(values, init.sense, None, cvar_alpha)
    s = sense_sign(init.sense)

    def fun(x):
        params = replace(init, gamma=x[0], t=x[1], beta=x[2])
        return s * metrics.metric(amplified_state(mixer, values, params), metric)

    lower, upper = _bounds(0)
    x0 = [init.gamma, init.t, init.beta]
    x, fx, ok, evals, hist = _ascend(fun, x0, lower, upper, np.ones(3, bool), max_evals, grad_tol, rel_step,
                                               max_move)
    log.info("optimize_params: %s after %d evaluations, metric %.10g", "converged" if ok else "stopped", evals, s * fx)
    best = replace(init, gamma=float(x[0]), t=float(x[1]), beta=float(x[2]))
    return OptimizeResult(best, s * fx, ok, evals, [(i, s * v, xx) for i, v, xx in hist])


def tune_penalty(mixer: Mixer, values_for: Callable[[tuple], np.ndarray], penalty_fixed, init: RunParams,
                 metric: str = "expectation", cvar_alpha: float = 0.1, max_evals: int = 500,
                 grad_tol: float = 1e-6, rel_step: float = 1e-3, max_move: float = 0.25,
                 freeze_penalty: bool = False) -> OptimizeResult:
    """Joint search over (γ, t, β, λ_T) with the metric always scored on the fixed penalty.

    ``values_for(λ)`` returns the objective table for penalty vector λ. The
    state is prepared from ``values_for(λ_T)`` with σ set to that table's
    standard deviation; the metric is evaluated on ``values_for(penalty_fixed)``.
    The search starts from λ_T = ``penalty_fixed``.
    """
    lam_f = tuple(float(v) for v in penalty_fixed)
    metric_values = np.asarray(values_for(lam_f), dtype=float)
    metrics = Metrics(metric_values, init.sense, None, cvar_alpha)
    s = sense_sign(init.sense)
    m = len(lam_f)

    def params_at(x):
        lam = tuple(float(v) for v in x[3:])
        table = np.asarray(values_for(lam), dtype=float)
        sigma = float(np.std(table))
        return replace(init, gamma=float(x[0]), t=float(x[1]), beta=float(x[2]), sigma=sigma, penalty=lam), table

    def fun(x):
        params, table = params_at(x)
        return s * metrics.metric(amplified_state(mixer, table, params), metric)

    lower, upper = _bounds(m)
    active = np.ones(3 + m, bool)
    if freeze_penalty:
        active[3:] = False
    x0 = [init.gamma, init.t, init.beta, *lam_f]
    x, fx, ok, evals, hist = _ascend(fun, x0, lower, upper, active, max_evals, grad_tol, rel_step, max_move)
    log.info("tune_penalty: %s after %d evaluations, metric %.10g", "converged" if ok else "stopped", evals, s * fx)
    best, _ = params_at(x)
    return OptimizeResult(best, s * fx, ok, evals, [(i, s * v, xx) for i, v, xx in hist])
