"""Statistics of objective values over distance shells and of interference in amplified states."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .instances import MaxcutInstance
from .problems import MAXIMIZE, sense_sign
from .space import (PERMUTATION, SolutionSpace, all_solutions, indices_of, random_solutions,
                    sample_at_distance_many, subset_size)


def alpha_h(n: int, h: int) -> float:
    """Fraction by which the distance-h shell mean of a maxcut solution regresses to the global mean."""
    if not 0 <= h <= n:
        raise ValueError("h must lie in [0, n]")
    return 4.0 * h * (n - h) / (n * (n - 1))


def maxcut_subset_mean_exact(inst: MaxcutInstance, f_u: float, h: int) -> float:
    mu = inst.total_weight / 2
    return f_u - alpha_h(inst.n, h) * (f_u - mu)


@dataclass(frozen=True)
class SubsetMeanRow:
    f_bin_center: float
    h: int
    mean: float
    std: float
    count: int


def subset_means_sampled(space: SolutionSpace, evaluate_many, bins: int, per_bin: int, h_list,
                         rng: np.random.Generator, pool: int = 100_000, inner: int = 200) -> list:
    """Shell means μ_hx for solutions spread across the objective range.

    ``pool`` uniform solutions are binned by objective value into ``bins``
    equal-width bins over their observed range and up to ``per_bin`` are kept from
    each. For every kept x and h, μ_hx averages f over ``inner`` uniform draws from
    the distance-h shell of x (the whole shell when it is smaller than that).
    Rows aggregate μ_hx per (bin, h); empty bins are skipped.
    """
    if bins < 1 or per_bin < 1:
        raise ValueError("bins and per_bin must be positive")
    X = random_solutions(space, pool, rng)
    f = evaluate_many(X)
    lo, hi = float(f.min()), float(f.max())
    width = (hi - lo) / bins if hi > lo else 1.0
    which = np.minimum(((f - lo) / width).astype(np.int64), bins - 1)
    rows = []
    for b in range(bins):
        members = np.flatnonzero(which == b)[:per_bin]
        if members.size == 0:
            continue
        center = lo + (b + 0.5) * width
        for h in h_list:
            mus = np.array([shell_mean(space, evaluate_many, X[i], h, rng, inner) for i in members])
            rows.append(SubsetMeanRow(center, int(h), float(mus.mean()), float(mus.std()), int(mus.size)))
    return rows


def shell_mean(space, evaluate_many, u, h, rng, inner=200) -> float:
    if h == 0:
        return float(evaluate_many(np.asarray(u)[None, :])[0])
    if space.kind != PERMUTATION and subset_size(space, h) <= inner:
        members = shell_members(space, u, h)
    else:
        members = sample_at_distance_many(space, u, h, inner, rng)
    return float(evaluate_many(members).mean())


@lru_cache(maxsize=64)
def _shell_offsets(space: SolutionSpace, h: int):
    pos = np.array(list(itertools.combinations(range(space.n), h)), dtype=np.int64).reshape(-1, h)
    shifts = np.array(list(itertools.product(range(1, space.k), repeat=h)), dtype=np.int64).reshape(-1, h)
    P = np.repeat(pos, len(shifts), axis=0)
    S = np.tile(shifts, (len(pos), 1))
    return P, S


def shell_members(space: SolutionSpace, u, h: int) -> np.ndarray:
    """Every solution at Hamming distance h from u (binary or integer spaces)."""
    if space.kind == PERMUTATION:
        raise ValueError("shell enumeration is only implemented for binary and integer spaces")
    u = np.asarray(u, dtype=np.int64)
    P, S = _shell_offsets(space, h)
    X = np.tile(u, (len(P), 1))
    rows = np.arange(len(P))[:, None]
    X[rows, P] = (u[P] + S) % space.k
    return X


@dataclass(frozen=True)
class WeightedShellStats:
    u: int
    h: int
    f_u: float
    E_f: float
    E_phi: float
    V_f: float
    V_phi: float
    C: float
    E: float
    V: float
    members: int


def relative_phases(state: np.ndarray) -> np.ndarray:
    """Amplitude phases measured from the phase of the largest-magnitude amplitude."""
    ref = state[np.argmax(np.abs(state))]
    return np.angle(state * np.conj(ref / abs(ref)))


def weighted_subset_stats(state, space: SolutionSpace, values, gamma: float, sample_u, mixer_kind: str,
                          h_list=None, sense: str = MAXIMIZE, exhaustive_limit: int = 10_000,
                          samples: int = 2_000, rng: np.random.Generator | None = None) -> list:
    """Amplitude-weighted shell statistics of objective value and relative phase.

    Weights are a_x = sqrt(N)|c_x|. For each u and h the shell is enumerated when
    it holds at most ``exhaustive_limit`` members and sampled otherwise.
    ``gamma`` is the effective strength of the next phase separation; it enters
    only through the combined mean E = -s*gamma*E_f + E_phi and variance
    V = gamma^2 V_f + V_phi - 2 s gamma C, where s is the sense sign.
    """
    if mixer_kind not in ("hypercube", "hamming"):
        raise ValueError(f"weighted shell statistics need a hypercube or Hamming mixer, not {mixer_kind!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    values = np.asarray(values, dtype=float)
    N = space.size
    a = np.sqrt(N) * np.abs(state)
    phi = relative_phases(state)
    s = sense_sign(sense)
    h_list = range(space.diameter + 1) if h_list is None else h_list
    sols = all_solutions(space)
    out = []
    for ui in sample_u:
        u = np.asarray(sols[int(ui)], dtype=np.int64)
        for h in h_list:
            if h == 0:
                idx = np.array([int(ui)])
            elif subset_size(space, h) <= exhaustive_limit:
                idx = indices_of(space, shell_members(space, u, h))
            else:
                idx = indices_of(space, sample_at_distance_many(space, u, h, samples, rng))
            w = a[idx]
            f = values[idx]
            ph = phi[idx]
            wsum = w.sum()
            E_f = float(w @ f / wsum)
            E_phi = float(w @ ph / wsum)
            V_f = float(w @ (f - E_f) ** 2 / wsum)
            V_phi = float(w @ (ph - E_phi) ** 2 / wsum)
            C = float(w @ (f * (ph - E_phi) + E_f * (E_phi - ph)) / wsum)
            E = -s * gamma * E_f + E_phi
            V = gamma**2 * V_f + V_phi - 2 * s * gamma * C
            out.append(WeightedShellStats(int(ui), int(h), float(values[int(ui)]), E_f, E_phi, V_f,
                                          V_phi, C, E, V, int(idx.size)))
    return out


def transition_point(f_u, shift) -> float:
    """Objective value where a linear fit of ``shift`` against ``f_u`` crosses zero.

    With shift = E_f(h) - f(u), this is where shells switch from pulling the
    weighted mean up (below the point) to pulling it down (above it).
    """
    slope, intercept = np.polyfit(np.asarray(f_u, float), np.asarray(shift, float), 1)
    return float(-intercept / slope)


def amplification_profile(state, values, max_points: int = 1 << 20, top: int = 10_000,
                          rng: np.random.Generator | None = None):
    """(f(x), a_x^2) pairs; large states keep the top amplitudes plus a uniform sample."""
    values = np.asarray(values, dtype=float)
    amp = (state.real**2 + state.imag**2) * state.size
    if state.size <= max_points:
        return values.copy(), amp
    rng = np.random.default_rng(0) if rng is None else rng
    best = np.argpartition(-amp, top)[:top]
    rest = rng.choice(state.size, size=max_points - top, replace=False)
    idx = np.union1d(best, rest)
    return values[idx], amp[idx]


def circular_std(phases, weights=None) -> float:
    z = np.exp(1j * np.asarray(phases))
    R = abs(np.average(z, weights=weights))
    return float(math.sqrt(-2 * math.log(max(R, 1e-300))))


def idealized_amplification(n: int, t: float, theta: float) -> float:
    return (1 + math.sin(2 * t) * math.sin(theta)) ** n


def shell_contributions(n: int, t: float, theta: float) -> np.ndarray:
    """Complex contribution of each distance shell h = 0..n to the walked amplitude at u.

    Their sum has squared magnitude ``idealized_amplification(n, t, theta)``.
    """
    h = np.arange(n + 1)
    binom = np.array([math.comb(n, int(j)) for j in h], dtype=float)
    return binom * np.exp(-1j * np.pi * h / 2) * np.exp(1j * theta * h) * math.cos(t) ** (n - h) * math.sin(t) ** h


def predicted_amplification(n: int, t: float, gamma: float, sigma: float, delta: float, f, mu: float):
    f = np.asarray(f, dtype=float)
    return np.exp(-(gamma * sigma) ** 2) * (1 + math.sin(2 * t) * np.sin(gamma * delta * (f - mu))) ** n


@dataclass(frozen=True)
class CoherentSum:
    r: np.ndarray
    phi: np.ndarray
    resultant: complex
    approximation: complex
    E: float
    V: float


def approx_resultant(r, phi) -> CoherentSum:
    """Exact sum of r_m e^{i phi_m} next to the estimate (sum r) e^{-V/2} e^{iE}."""
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if (r < 0).any():
        raise ValueError("weights must be non-negative")
    total = r.sum()
    if not total > 0:
        raise ValueError("weights must not all be zero")
    E = float(r @ phi / total)
    V = float(r @ (phi - E) ** 2 / total)
    exact = complex(np.sum(r * np.exp(1j * phi)))
    approx = complex(total * math.exp(-V / 2) * np.exp(1j * E))
    return CoherentSum(r, phi, exact, approx, E, V)


@dataclass(frozen=True)
class ErrorPoint:
    phase_dist: str
    weight_dist: str
    std: float
    phase_error_mean: float
    phase_error_std: float
    phase_error_abs: float
    magnitude_error_mean: float
    magnitude_error_std: float
    magnitude_error_abs: float


def _draw_phases(dist, std, shape, rng):
    if dist == "normal":
        return rng.normal(0.0, std, size=shape)
    if dist == "uniform":
        half = math.sqrt(3.0) * std  # uniform on [-a, a] has std a/sqrt(3)
        return rng.uniform(-half, half, size=shape)
    raise ValueError(f"unknown phase distribution {dist!r}")


def _draw_weights(dist, phi, rng):
    if dist == "uniform":
        return rng.random(phi.shape)
    if dist == "increasing":
        # rank-based, so weights rise strictly with phase whatever its spread
        ranks = np.argsort(np.argsort(phi, axis=1, kind="stable"), axis=1)
        return (ranks + 1.0) / phi.shape[1]
    raise ValueError(f"unknown weight distribution {dist!r}")


def approx_error_experiment(phase_dist: str, weight_dist: str, std_grid, terms: int = 1000,
                            trials: int = 10_000, rng: np.random.Generator | None = None,
                            chunk: int = 1000) -> list:
    """Phase and relative magnitude error of the coherent-sum estimate on random sums.

    Phase error is arg(estimate / exact); magnitude error is |estimate|/|exact| - 1.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    for std in std_grid:
        perr = []
        merr = []
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            phi = _draw_phases(phase_dist, float(std), (m, terms), rng)
            r = _draw_weights(weight_dist, phi, rng)
            total = r.sum(axis=1)
            E = (r * phi).sum(axis=1) / total
            V = (r * (phi - E[:, None]) ** 2).sum(axis=1) / total
            exact = (r * np.exp(1j * phi)).sum(axis=1)
            approx = total * np.exp(-V / 2) * np.exp(1j * E)
            perr.append(np.angle(approx / exact))
            merr.append(np.abs(approx) / np.abs(exact) - 1)
            done += m
        perr = np.concatenate(perr)
        merr = np.concatenate(merr)
        out.append(ErrorPoint(phase_dist, weight_dist, float(std), float(perr.mean()), float(perr.std()),
                              float(np.abs(perr).mean()), float(merr.mean()), float(merr.std()),
                              float(np.abs(merr).mean())))
    return out


def write_csv(path, rows) -> None:
    """Write (x, series, y, y_err) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "series", "y", "y_err"])
        for x, series, y, err in rows:
            w.writerow([repr(float(x)), series, repr(float(y)), "" if err is None else repr(float(err))])
