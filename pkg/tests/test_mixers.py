import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import brentq

from qwoa.engine import equal_superposition
from qwoa.mixers import (HammingMixer, HypercubeMixer, SeriesError, TranspositionMixer, apply_mixer,
                         distances_from, make_mixer, polar_factors, verify_phase_condition)
from qwoa.space import SolutionSpace, index_to_solution

from conftest import move_adjacency, random_state

SMALL = [SolutionSpace.binary(4), SolutionSpace.binary(8), SolutionSpace.integer(3, 3),
         SolutionSpace.integer(2, 5), SolutionSpace.integer(4, 3), SolutionSpace.permutation(4),
         SolutionSpace.permutation(5), SolutionSpace.permutation(6)]


@pytest.fixture(scope="module")
def adjacency():
    cache = {}

    def get(space):
        if space not in cache:
            cache[space] = move_adjacency(space)
        return cache[space]

    return get


@pytest.mark.parametrize("space", SMALL, ids=str)
def test_matches_dense_exponential(space, adjacency):
    A = adjacency(space)
    mixer = make_mixer(space)
    rng = np.random.default_rng(space.size)
    for t in (0.05, 0.3, 1.1):
        psi = random_state(space.size, rng)
        want = expm(-1j * t * A) @ psi
        got = apply_mixer(mixer, t, psi) / mixer.global_phase(t)
        assert np.max(np.abs(got - want)) <= 1e-9


@pytest.mark.parametrize("space", SMALL, ids=str)
def test_adjacency_action(space, adjacency):
    A = adjacency(space)
    mixer = make_mixer(space)
    rng = np.random.default_rng(1)
    psi = random_state(space.size, rng)
    assert np.allclose(mixer.adjacency_apply(psi), A @ psi, atol=1e-13)
    e = np.zeros(space.size, complex)
    e[space.size // 2] = 1
    row = mixer.adjacency_apply(e).real
    assert sorted(set(row.tolist())) == [0.0, 1.0] and row.sum() == space.degree
    s = equal_superposition(space)
    assert np.vdot(s, mixer.adjacency_apply(s)).real == pytest.approx(space.degree, rel=1e-12)


def test_adjacency_symmetric():
    space = SolutionSpace.permutation(5)
    mixer = make_mixer(space)
    cols = np.array([mixer.adjacency_apply(np.eye(space.size, dtype=complex)[i]) for i in range(space.size)])
    assert np.array_equal(cols, cols.T)


@pytest.mark.parametrize("space", SMALL + [SolutionSpace.binary(14), SolutionSpace.permutation(8)], ids=str)
def test_identity_at_zero_and_eigenstate(space):
    mixer = make_mixer(space)
    psi = random_state(space.size, np.random.default_rng(0))
    assert np.array_equal(mixer.apply(psi, 0.0), psi)
    s = equal_superposition(space)
    t = 0.27
    out = mixer.apply(s, t) / mixer.global_phase(t)
    assert np.max(np.abs(out - np.exp(-1j * space.degree * t) * s)) <= 1e-10


@given(st.sampled_from(SMALL), st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_unitarity_and_composition(space, t1, t2, seed):
    mixer = make_mixer(space)
    psi = random_state(space.size, np.random.default_rng(seed))
    a = mixer.apply(mixer.apply(psi, t2), t1)
    assert abs(np.linalg.norm(a) - 1) <= 1e-12
    b = mixer.apply(psi, t1 + t2)
    assert np.max(np.abs(a - b)) <= 1e-10


@pytest.mark.parametrize("n", [1, 5, 12])
def test_hamming_k2_is_hypercube(n):
    psi = random_state(1 << n, np.random.default_rng(n))
    for t in (0.1, 0.8, 2.5):
        cube = HypercubeMixer(SolutionSpace.binary(n)).apply(psi, t)
        ham = HammingMixer(SolutionSpace.integer(n, 2))
        assert np.max(np.abs(ham.apply(psi, t) / ham.global_phase(t) - cube)) <= 1e-12


@pytest.mark.parametrize("space,t", [(SolutionSpace.binary(6), 0.4), (SolutionSpace.binary(6), 1.3),
                                     (SolutionSpace.integer(4, 3), 0.5), (SolutionSpace.integer(3, 5), 0.2),
                                     (SolutionSpace.integer(3, 4), math.pi / 4)], ids=str)
def test_distance_phase_law_and_equal_magnitudes(space, t):
    mixer = make_mixer(space)
    u = index_to_solution(space, space.size // 3)
    rep = verify_phase_condition(mixer, t, u)
    assert rep.max_phase_deviation <= 1e-10
    assert rep.holds(mixer.name)
    psi = np.zeros(space.size, complex)
    psi[space.size // 3] = 1
    out = np.abs(mixer.apply(psi, t))
    h = distances_from(space, u)
    for d in range(space.diameter + 1):
        assert np.ptp(out[h == d]) <= 1e-12


def test_transposition_phase_condition_small_t():
    space = SolutionSpace.permutation(5)
    rep = verify_phase_condition(make_mixer(space), 0.15, [2, 0, 4, 1, 3])
    assert rep.max_phase_deviation < 1e-6
    assert rep.min_magnitude > 0
    assert rep.holds("transposition")


def test_transposition_self_amplitude_first_zero(adjacency):
    space = SolutionSpace.permutation(4)
    mixer = make_mixer(space)
    e = np.zeros(space.size, complex)
    e[0] = 1

    def self_amp(t):
        return mixer.apply(e, t)[0].real

    # positive throughout the two-term bound t < 2/n
    assert all(self_amp(t) > 0 for t in np.linspace(0.01, 2 / 4, 30))
    first = brentq(self_amp, 0.9, 1.0, xtol=1e-13)
    # frozen from a dense-exponential scan; the 2/n bound is sufficient, not tight
    assert first == pytest.approx(0.9445250015402459, abs=1e-9)
    ts = np.linspace(0.01, first - 1e-6, 200)
    assert all(self_amp(t) > 0 for t in ts)


def test_transposition_series_failure():
    space = SolutionSpace.permutation(5)
    psi = random_state(space.size, np.random.default_rng(0))
    with pytest.raises(SeriesError):
        TranspositionMixer(space, max_terms=5).apply(psi, 0.5)


def test_transposition_substeps_large_time(adjacency):
    space = SolutionSpace.permutation(5)
    A = adjacency(space)
    psi = random_state(space.size, np.random.default_rng(2))
    mixer = TranspositionMixer(space)
    got = mixer.apply(psi, 4.0)
    assert np.max(np.abs(got - expm(-4j * A) @ psi)) <= 1e-9


def test_state_checks():
    mixer = make_mixer(SolutionSpace.binary(3))
    with pytest.raises(ValueError):
        mixer.apply_inplace(np.zeros(4, complex), 0.1)
    with pytest.raises(TypeError):
        mixer.apply_inplace(np.zeros(8, np.complex64), 0.1)
    with pytest.raises(ValueError):
        apply_mixer(mixer, -0.1, np.zeros(8))
    with pytest.raises(ValueError):
        HypercubeMixer(SolutionSpace.integer(3, 3))


def test_polar_factor_examples():
    assert polar_factors(3, math.pi / 3).phi == pytest.approx(math.pi, abs=1e-12)
    for t in (0.1, 0.7, 1.5):
        assert polar_factors(2, t).phi == pytest.approx(math.pi / 2, abs=1e-12)
    assert polar_factors(5, 1e-7).phi == pytest.approx(math.pi / 2, abs=1e-6)
    deg = polar_factors(4, 0.0)
    assert deg.degenerate and deg.phi == math.pi / 2
    with pytest.raises(ValueError):
        polar_factors(3, 1.2)


@given(st.integers(3, 12), st.floats(1e-6, 1 - 1e-9))
def test_polar_factors_against_complex_arithmetic(k, frac):
    t = frac * math.pi / k
    pf = polar_factors(k, t)
    stay = np.exp(-1j * k * t) + k - 1
    move = np.exp(-1j * k * t) - 1
    assert pf.r1 == pytest.approx(abs(stay), rel=1e-9)
    assert pf.r2 == pytest.approx(abs(move), rel=1e-9)
    assert np.exp(1j * pf.phi1) == pytest.approx(stay / abs(stay), abs=1e-9)
    assert np.exp(1j * pf.phi2) == pytest.approx(move / abs(move), abs=1e-9)
    assert math.pi / 2 < pf.phi < math.pi
