import csv
import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import spearmanr

from qwoa.analysis import (alpha_h, amplification_profile, approx_error_experiment, approx_resultant,
                           circular_std, idealized_amplification, maxcut_subset_mean_exact,
                           predicted_amplification, relative_phases, shell_contributions, shell_mean,
                           subset_means_sampled, transition_point, weighted_subset_stats, write_csv)
from qwoa.engine import MAXIMIZE, RunParams, amplified_state, equal_superposition, prepare_amplified
from qwoa.instances import generate
from qwoa.mixers import make_mixer
from qwoa.space import SolutionSpace, all_solutions

from conftest import random_state


def test_alpha_examples():
    assert alpha_h(18, 0) == 0
    assert alpha_h(18, 9) == pytest.approx(324 / 306, rel=1e-15)
    vals = [alpha_h(18, h) for h in range(10)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        alpha_h(5, 6)


@given(st.integers(2, 60), st.data())
def test_alpha_mirror(n, data):
    h = data.draw(st.integers(0, n))
    assert alpha_h(n, h) == pytest.approx(alpha_h(n, n - h), abs=1e-15)


def _popcount(x):
    return np.array([bin(int(v)).count("1") for v in x])


@pytest.mark.parametrize("n,seed", [(4, 0), (6, 1), (8, 2), (10, 3)])
def test_exact_shell_mean_formula_vs_enumeration(n, seed):
    inst = generate("maxcut", seed=seed, n=n)
    f = inst.values()
    idx = np.arange(1 << n)
    for u in range(1 << n):
        h = _popcount(idx ^ u)
        for d in range(n + 1):
            got = maxcut_subset_mean_exact(inst, f[u], d)
            assert abs(got - f[h == d].mean()) <= 1e-9
    assert maxcut_subset_mean_exact(inst, f[5], 0) == f[5]
    for d in range(n + 1):
        assert maxcut_subset_mean_exact(inst, f[3], d) == pytest.approx(maxcut_subset_mean_exact(inst, f[3], n - d),
                                                                         abs=1e-12)


def test_subset_means_constant_objective():
    space = SolutionSpace.permutation(6)
    rows = subset_means_sampled(space, lambda X: np.full(len(X), 2.5), 10, 5, [0, 1, 3], np.random.default_rng(0),
                                pool=200, inner=50)
    assert rows and all(r.mean == 2.5 and r.std == 0 and r.count > 0 for r in rows)
    with pytest.raises(ValueError):
        subset_means_sampled(space, lambda X: X[:, 0], 0, 5, [1], np.random.default_rng(0))


def test_subset_means_exhaustive_shells_follow_formula():
    # n=8 shells hold at most 70 members, so each inner mean is exact
    inst = generate("maxcut", seed=4, n=8)
    mu = inst.total_weight / 2
    rows = subset_means_sampled(inst.space, inst.evaluate_many, 6, 15, range(9), np.random.default_rng(1),
                                pool=2000, inner=200)
    by_bin = {}
    for r in rows:
        by_bin.setdefault(r.f_bin_center, {})[r.h] = r
    for cells in by_bin.values():
        base = cells[0]
        for h, r in cells.items():
            a = alpha_h(8, h)
            assert r.mean == pytest.approx(base.mean - a * (base.mean - mu), abs=1e-9)
            assert r.std == pytest.approx(abs(1 - a) * base.std, abs=1e-9)


def test_subset_means_sampled_within_three_standard_errors():
    inst = generate("maxcut", seed=5, n=12)
    mu = inst.total_weight / 2
    f = inst.values()
    idx = np.arange(1 << 12)
    dist = _popcount(idx)[idx[:, None] ^ idx[None, :]]
    # largest within-shell spread over every (u, h), which bounds each inner estimate's noise
    sd = max(float(f[dist[u] == h].std()) for u in range(0, 1 << 12, 7) for h in range(13))
    inner = 300
    rows = subset_means_sampled(inst.space, inst.evaluate_many, 5, 12, range(13), np.random.default_rng(2),
                                pool=3000, inner=inner)
    base = {r.f_bin_center: r for r in rows if r.h == 0}
    for r in rows:
        b = base[r.f_bin_center]
        want = b.mean - alpha_h(12, r.h) * (b.mean - mu)
        se = sd / math.sqrt(inner * r.count)
        assert abs(r.mean - want) < 3 * se + 1e-9


def test_shell_mean_uses_enumeration_for_small_shells():
    inst = generate("maxcut", seed=6, n=6)
    f = inst.values()
    u = all_solutions(inst.space)[11]
    idx = np.arange(64)
    h = _popcount(idx ^ 11)
    assert shell_mean(inst.space, inst.evaluate_many, u, 2, np.random.default_rng(0)) == pytest.approx(f[h == 2].mean())


def test_qap_subset_means_shape(qap):
    mu = float(qap.values().mean())
    rows = subset_means_sampled(qap.space, qap.evaluate_many, 20, 20, range(9), np.random.default_rng(0),
                                pool=20_000, inner=400)
    cells = {}
    for r in rows:
        cells.setdefault(r.f_bin_center, {})[r.h] = r
    checked = 0
    for center, c in cells.items():
        if center >= mu:
            continue
        checked += 1

        def se(a, b):
            return math.sqrt(a.std**2 / a.count + b.std**2 / b.count)

        for h in range(1, 9):
            assert c[h].mean - c[0].mean > -3 * se(c[h], c[0])
        for h in range(0, 7):
            assert c[h + 1].mean - c[h].mean > -3 * se(c[h + 1], c[h])
    assert checked >= 3


def _weighted_oracle(state, space, values, u_index, h):
    N = space.size
    sols = all_solutions(space)
    u = sols[u_index]
    ref = state[np.argmax(np.abs(state))]
    members = [i for i in range(N) if np.count_nonzero(sols[i] != u) == h]
    a = np.array([math.sqrt(N) * abs(state[i]) for i in members])
    f = np.array([values[i] for i in members])
    ph = np.array([np.angle(state[i] / (ref / abs(ref))) for i in members])
    Ef = np.sum(a * f) / a.sum()
    Ep = np.sum(a * ph) / a.sum()
    Vf = np.sum(a * (f - Ef) ** 2) / a.sum()
    Vp = np.sum(a * (ph - Ep) ** 2) / a.sum()
    C = np.sum(a * (f - Ef) * (ph - Ep)) / a.sum()
    return Ef, Ep, Vf, Vp, C


def test_weighted_stats_against_definitions():
    inst = generate("kmeans", seed=0, n=5, k=3, dim=2)
    space = inst.space
    f = inst.values()
    state = random_state(space.size, np.random.default_rng(3))
    g = 0.7
    rows = weighted_subset_stats(state, space, f, g, [4, 100], "hamming", sense=inst.sense)
    assert len(rows) == 2 * (space.diameter + 1)
    for r in rows:
        Ef, Ep, Vf, Vp, C = _weighted_oracle(state, space, f, r.u, r.h)
        assert (r.E_f, r.E_phi, r.V_f, r.V_phi, r.C) == pytest.approx((Ef, Ep, Vf, Vp, C), abs=1e-9)
        assert r.V_f >= 0 and r.V_phi >= 0
        # minimising: s = -1
        assert r.E == pytest.approx(g * r.E_f + r.E_phi, abs=1e-12)
        assert r.V == pytest.approx(g**2 * r.V_f + r.V_phi + 2 * g * r.C, abs=1e-9)


def test_weighted_stats_equal_superposition():
    inst = generate("maxcut", seed=7, n=8)
    f = inst.values()
    s = equal_superposition(inst.space)
    rows = weighted_subset_stats(s, inst.space, f, 0.3, [0, 77, 200], "hypercube")
    for r in rows:
        assert r.E_f == pytest.approx(maxcut_subset_mean_exact(inst, r.f_u, r.h), abs=1e-9)
        assert r.V_phi == 0 and r.E_phi == 0 and r.C == 0


def test_weighted_stats_constant_phase_zero_covariance():
    inst = generate("maxcut", seed=8, n=8)
    state = np.random.default_rng(0).random(256) * np.exp(0.4j)
    state /= np.linalg.norm(state)
    for r in weighted_subset_stats(state, inst.space, inst.values(), 0.5, [3, 9], "hypercube"):
        assert abs(r.C) <= 1e-12 and abs(r.V_phi) <= 1e-24


def test_weighted_stats_rejects_transposition():
    space = SolutionSpace.permutation(4)
    with pytest.raises(ValueError):
        weighted_subset_stats(equal_superposition(space), space, np.zeros(24), 0.1, [0], "transposition")


def test_relative_phases_anchor():
    s = np.array([0.1j, -0.9, 0.3 + 0.1j])
    ph = relative_phases(s)
    assert ph[1] == 0
    assert ph[0] == pytest.approx(np.angle(0.1j / -1))


def test_amplification_profile_basics():
    space = SolutionSpace.binary(10)
    f = np.arange(1024.0)
    x, a2 = amplification_profile(equal_superposition(space), f)
    assert np.allclose(a2, 1.0) and np.array_equal(x, f)
    state = random_state(1024, np.random.default_rng(0))
    x, a2 = amplification_profile(state, f, max_points=300, top=50)
    full = np.abs(state) ** 2 * 1024
    assert len(x) <= 300
    assert set(np.argsort(-full)[:50].tolist()) <= set(x.astype(int).tolist())
    assert np.allclose(a2, full[x.astype(int)])


def test_single_iteration_profile_tracks_objective(maxcut):
    f = maxcut.values()
    sigma = float(f.std())
    mixer = make_mixer(maxcut.space)
    mu = float(f.mean())
    spreads = []
    for g in (0.2, 0.4, 0.6):
        state = amplified_state(mixer, f, RunParams(g / sigma, 0.3, 1.0, 1, MAXIMIZE, 1.0))
        x, a2 = amplification_profile(state, f)
        if g == 0.2:
            assert spearmanr(x, a2).statistic > 0.9
        pred = predicted_amplification(18, 0.3, g / sigma, sigma, 0.18, x, mu)
        rms = math.sqrt(np.mean((np.log(a2) - np.log(pred)) ** 2))
        spreads.append((rms, float(np.std(np.log(a2)))))
    # every predicted curve is closer than the spread of the most dispersed profile
    assert all(rms < spreads[-1][1] for rms, _ in spreads)


def test_phase_dispersion_grows_with_gamma(maxcut):
    f = maxcut.values()
    sigma = float(f.std())
    mixer = make_mixer(maxcut.space)
    disp = []
    for g in (0.2, 0.4, 0.6):
        state = amplified_state(mixer, f, RunParams(g / sigma, 0.3, 1.0, 1, MAXIMIZE, 1.0))
        disp.append(circular_std(relative_phases(state), np.abs(state)))
    assert disp[0] < disp[1] < disp[2]


def test_per_iteration_ratio_monotone_in_top_half(maxcut):
    f = maxcut.values()
    sigma = float(f.std())
    params = RunParams(0.3, 0.2, 1 / 20, 20, MAXIMIZE, sigma)
    prev = [np.full(f.size, 1.0)]
    top = f >= (f.min() + f.max()) / 2
    edges = np.linspace(f[top].min(), f.max(), 21)
    which = np.clip(np.digitize(f[top], edges) - 1, 0, 19)
    rhos = []

    def hook(i, state):
        a2 = np.abs(state) ** 2 * f.size
        ratio = (a2 / prev[0])[top]
        prev[0] = a2
        means = [ratio[which == b].mean() for b in range(20) if np.any(which == b)]
        centers = [(edges[b] + edges[b + 1]) / 2 for b in range(20) if np.any(which == b)]
        rhos.append(spearmanr(centers, means).statistic)

    prepare_amplified(make_mixer(maxcut.space), f, params, hook=hook, keep_state=False)
    assert len(rhos) == 20 and min(rhos) > 0.8


def test_transition_point_linear_fit():
    f = np.array([0.0, 1.0, 2.0, 3.0])
    assert transition_point(f, 2.0 - f) == pytest.approx(2.0)


def test_idealized_amplification():
    assert idealized_amplification(7, 0.3, 0.0) == 1
    for n in (1, 3, 10):
        assert idealized_amplification(n, math.pi / 4, math.pi / 2) == pytest.approx(2.0**n)
    mags = []
    for theta in (0, math.pi / 8, math.pi / 4, math.pi / 2):
        z = shell_contributions(3, math.pi / 4, theta)
        assert abs(z.sum()) ** 2 == pytest.approx(idealized_amplification(3, math.pi / 4, theta), rel=1e-12)
        mags.append(abs(z.sum()))
    assert all(a < b for a, b in zip(mags, mags[1:]))


@given(st.integers(1, 12), st.floats(0, 1.5), st.floats(-3, 3))
def test_shell_contributions_sum_property(n, t, theta):
    z = shell_contributions(n, t, theta)
    assert abs(z.sum()) ** 2 == pytest.approx(idealized_amplification(n, t, theta), rel=1e-9, abs=1e-12)


def test_predicted_amplification_limits():
    f = np.linspace(-3, 5, 9)
    assert np.allclose(predicted_amplification(10, 0.3, 0.0, 2.0, 0.18, f, 1.0), 1.0)
    at_mean = predicted_amplification(10, 0.3, 0.4, 2.0, 0.18, np.array([1.0]), 1.0)
    assert at_mean[0] == pytest.approx(math.exp(-(0.4 * 2.0) ** 2))


def test_approx_resultant_cases():
    cs = approx_resultant([0.2, 1.0, 3.0], [0.7, 0.7, 0.7])
    assert cs.V == pytest.approx(0, abs=1e-30)
    assert cs.approximation == pytest.approx(cs.resultant, abs=1e-14)
    bad = approx_resultant([1.0, 1.0], [math.pi / 2, -math.pi / 2])
    assert abs(bad.resultant) < 1e-15
    assert bad.approximation == pytest.approx(2 * math.exp(-math.pi**2 / 8), abs=1e-14)
    with pytest.raises(ValueError):
        approx_resultant([0.0, 0.0], [0.1, 0.2])
    with pytest.raises(ValueError):
        approx_resultant([-1.0, 2.0], [0.1, 0.2])


@given(st.integers(0, 10_000))
def test_approx_magnitude_identity(seed):
    rng = np.random.default_rng(seed)
    r = rng.random(20)
    phi = rng.normal(0, 0.4, 20)
    cs = approx_resultant(r, phi)
    assert abs(cs.approximation) == pytest.approx(r.sum() * math.exp(-cs.V / 2), rel=1e-12)


def test_approx_error_vanishes_with_spread():
    rng = np.random.default_rng(0)
    r = rng.random(1000)
    errs = []
    for sd in (0.5, 0.1, 0.03, 0.01):
        cs = approx_resultant(r, rng.normal(0, sd, 1000))
        errs.append(abs(cs.approximation - cs.resultant) / abs(cs.resultant))
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3


def test_approx_error_at_half_radian_is_small():
    # normal phases with std 0.5 and uniform weights: relative error stays at the percent level
    rng = np.random.default_rng(1)
    cs = approx_resultant(rng.random(1000), rng.normal(0, 0.5, 1000))
    pts = approx_error_experiment("normal", "uniform", [0.5], terms=1000, trials=1000, rng=np.random.default_rng(2))
    rel = abs(cs.approximation - cs.resultant) / abs(cs.resultant)
    envelope = abs(pts[0].magnitude_error_mean) + 3 * pts[0].magnitude_error_std + 3 * pts[0].phase_error_std
    assert rel < envelope


def test_approx_error_zero_spread():
    for pd, wd in itertools.product(["normal", "uniform"], ["uniform", "increasing"]):
        pt = approx_error_experiment(pd, wd, [0.0], terms=50, trials=1000, rng=np.random.default_rng(0))[0]
        assert pt.phase_error_abs == 0 and abs(pt.magnitude_error_abs) < 1e-14


def test_approx_error_grows_with_spread():
    pts = approx_error_experiment("normal", "uniform", [0.5, 1.0], terms=1000, trials=1000,
                                  rng=np.random.default_rng(0))
    assert pts[0].phase_error_abs < pts[1].phase_error_abs
    assert pts[0].magnitude_error_abs < pts[1].magnitude_error_abs
    with pytest.raises(ValueError):
        approx_error_experiment("cauchy", "uniform", [0.5], trials=1000)


def test_write_csv(tmp_path):
    path = tmp_path / "out.csv"
    write_csv(path, [(0.1, "a", 2.0, None), (1, "b", 3, 0.5)])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "series", "y", "y_err"]
    assert rows[1] == ["0.1", "a", "2.0", ""]
    assert float(rows[2][3]) == 0.5
