from fractions import Fraction

import numpy as np
import pytest

from cayleyltc.codes import full_code, parity_code, repetition_code, square_code
from cayleyltc.complexes import build_complex
from cayleyltc.f2core import BitVector, DimensionBudgetError
from cayleyltc.groups import GeneratorSet, cyclic_group
from cayleyltc.ltc import (
    SquareCodeTester,
    TesterParams,
    check_far_diagnostics,
    dispute_counts,
    kappa_experiment,
    kappa_trial,
)
from cayleyltc.spectral import build_M, build_Mpar


def toy(n, a_gens, b_gens=None):
    g = cyclic_group(n)
    A = GeneratorSet(g, a_gens, side="left")
    B = GeneratorSet(g, b_gens if b_gens is not None else a_gens, side="right")
    return build_complex(g, A, B)


@pytest.fixture(scope="module")
def z5_instance():
    X = toy(5, (1, 4))
    C1 = repetition_code(2)
    code = square_code(X, C1)
    return X, C1, code, SquareCodeTester(X, C1, code)


@pytest.fixture(scope="module")
def z12_instance():
    X = toy(12, (1, 11), (5, 7))
    C1 = repetition_code(2)
    code = square_code(X, C1)
    return X, C1, code, SquareCodeTester(X, C1, code)


# -- tester -------------------------------------------------------------------


def test_completeness_random_codewords(z5_instance, z12_instance):
    for X, C1, code, tester in (z5_instance, z12_instance):
        rng = np.random.default_rng(0)
        for _ in range(200):
            c = code.random_codeword(rng)
            assert tester.reject_probability(c) == 0.0


def test_single_flip_tnc_complex_rejects_exactly_4(z12_instance):
    X, C1, code, tester = z12_instance
    assert X.check_conditions().tnc
    rng = np.random.default_rng(1)
    c = code.random_codeword(rng).to_bits()
    for s in range(X.n_squares):
        f = c.copy()
        f[s] ^= 1
        assert tester.reject_probability(f) == pytest.approx(4 / X.n_vertices)


def test_single_flip_z3_rejects_everywhere():
    X = toy(3, (1, 2))
    C1 = repetition_code(2)
    code = square_code(X, C1)
    tester = SquareCodeTester(X, C1, code)
    f = np.zeros(X.n_squares, dtype=np.uint8)
    f[0] = 1
    assert tester.reject_probability(f) == 1.0


def test_reject_probability_length_check(z5_instance):
    _, _, _, tester = z5_instance
    with pytest.raises(ValueError, match="length"):
        tester.reject_probability(np.zeros(3, dtype=np.uint8))


def test_sampled_mode_is_labeled(z5_instance):
    X, C1, code, tester = z5_instance
    f = np.zeros(X.n_squares, dtype=np.uint8)
    f[0] = 1
    rec = tester.reject_probability_sampled(f, samples=64, seed=2)
    assert rec["exact"] is False
    assert rec["samples"] == 64
    assert 0 <= rec["estimate"] <= 1


# -- decoder ------------------------------------------------------------------


def test_decode_codeword_zero_iterations(z5_instance):
    X, C1, code, tester = z5_instance
    rng = np.random.default_rng(3)
    c = code.random_codeword(rng)
    out = tester.decode(c)
    assert out.kind == "codeword"
    assert out.iterations == 0
    assert out.word == c


def test_decode_single_flip_recovers(z5_instance):
    X, C1, code, tester = z5_instance
    rng = np.random.default_rng(4)
    c = code.random_codeword(rng)
    for s in range(X.n_squares):
        f = c.to_bits().copy()
        f[s] ^= 1
        out = tester.decode(f)
        assert out.kind == "codeword"
        assert out.word == c


def test_decode_success_contract_random(z12_instance):
    X, C1, code, tester = z12_instance
    rng = np.random.default_rng(5)
    r = X.nA
    for _ in range(300):
        c = code.random_codeword(rng).to_bits()
        w = int(rng.integers(1, 4))
        e = np.zeros(X.n_squares, dtype=np.uint8)
        e[rng.choice(X.n_squares, size=w, replace=False)] = 1
        f = c ^ e
        D = tester.reject_probability(f)
        out = tester.decode(f)
        assert out.delta_initial <= 2 * D * X.n_edges + 1e-9
        assert out.iterations <= out.delta_initial
        if out.kind == "codeword":
            dist = (out.word.to_bits() != f).sum() / X.n_squares
            assert dist <= (4 + 8 * r) * D + 1e-9
            assert tester.accepts_everywhere(out.word)
        else:
            diag = check_far_diagnostics(X, out, 1, 1, 1, 1)  # delta1=1, sigma1=1
            assert diag["dispute_edge_bound_holds"]
            assert diag["link_bound_holds"]


def test_decode_monotone_delta_trace(z12_instance):
    X, C1, code, tester = z12_instance
    rng = np.random.default_rng(6)
    c = code.random_codeword(rng).to_bits()
    e = np.zeros(X.n_squares, dtype=np.uint8)
    e[rng.choice(X.n_squares, size=3, replace=False)] = 1
    out = tester.decode(c ^ e)
    trace = out.delta_trace
    assert all(trace[i + 1] < trace[i] for i in range(len(trace) - 1))


def test_decode_two_phase_cut_is_far():
    # two codeword phases glued across a sparse cut on a long cycle; no
    # single-vertex move reduces Delta, so the decoder must answer far
    X = toy(20, (1, 19))
    C1 = repetition_code(2)
    code = square_code(X, C1)
    tester = SquareCodeTester(X, C1, code)
    f = np.zeros(X.n_squares, dtype=np.uint8)
    # squares of the toy cycle form one orbit s_g = [1, g, 1]; set an arc to 1
    for g in range(10):
        s = X.canonical_square(0, g, 0)
        f[s] = 1
    out = tester.decode(f)
    assert out.kind == "far"
    assert out.delta_final == 4
    diag = check_far_diagnostics(X, out, 1, 1, 1, 1)
    assert diag["dispute_edge_bound_holds"]
    assert diag["link_bound_holds"]


def test_decode_deterministic(z12_instance):
    X, C1, code, tester = z12_instance
    rng = np.random.default_rng(7)
    c = code.random_codeword(rng).to_bits()
    e = np.zeros(X.n_squares, dtype=np.uint8)
    e[rng.choice(X.n_squares, size=4, replace=False)] = 1
    f = c ^ e
    out1 = tester.decode(f)
    out2 = tester.decode(f)
    assert out1.kind == out2.kind
    assert out1.delta_trace == out2.delta_trace
    if out1.kind == "codeword":
        assert out1.word == out2.word


def test_nearest_codeword_tie_breaks_lexicographically(z12_instance):
    X, C1, code, tester = z12_instance
    # a view with exactly half the slots flipped ties 0000 against 1111;
    # the lexicographically least grid (all zeros) must win
    tester._ensure_tables()
    g = 0
    grid = X.squares_of_vertex(g)
    f = np.zeros(X.n_squares, dtype=np.uint8)
    f[grid[0, 0]] = 1
    f[grid[0, 1]] = 1
    ci = tester.nearest_local_codeword(f, g)
    assert not tester._cand_flat[ci].any()


def test_decode_budget_refusal():
    X = toy(13, (1, 12, 2, 11, 3, 10))
    C1 = parity_code(6)          # k1^2 = 25 > 20
    tester = SquareCodeTester(X, C1)
    f = np.zeros(X.n_squares, dtype=np.uint8)
    with pytest.raises(DimensionBudgetError, match="budget"):
        tester.decode(f)


def test_full_space_always_accepts():
    X = toy(5, (1, 4))
    tester = SquareCodeTester(X, full_code(2))
    rng = np.random.default_rng(8)
    for _ in range(20):
        f = rng.integers(0, 2, size=X.n_squares, dtype=np.uint8)
        assert tester.reject_probability(f) == 0.0


# -- counting diagnostics -----------------------------------------------------


def test_counts_empty_R(z5_instance):
    X, _, _, _ = z5_instance
    counts = dispute_counts(X, np.array([], dtype=np.int64))
    for v in counts.values():
        assert (v == 0).all()


def test_counting_identities_match_operators(z5_instance):
    X, _, _, _ = z5_instance
    r = X.nA
    M = build_M(X)
    Mpar = build_Mpar(X)
    rng = np.random.default_rng(9)
    for _ in range(100):
        size = int(rng.integers(1, X.n_edges + 1))
        R = rng.choice(X.n_edges, size=size, replace=False)
        ind = np.zeros(X.n_edges)
        ind[R] = 1.0
        counts = dispute_counts(X, R)
        assert np.abs(counts["npar_edge"] - r * Mpar.matvec(ind)).max() < 1e-9
        assert np.abs(counts["n2_edge"] - 8 * r * r * M.matvec(ind)).max() < 1e-9


def test_n2_dominates_n2prime(z12_instance):
    X, _, _, _ = z12_instance
    rng = np.random.default_rng(10)
    R = rng.choice(X.n_edges, size=8, replace=False)
    counts = dispute_counts(X, R)
    assert (counts["n2_vertex"] >= counts["n2prime_vertex"]).all()


def test_local_counts_single_edge(z5_instance):
    from cayleyltc.ltc import local_counts

    X, _, _, _ = z5_instance
    R = np.array([0, 3, 7])
    rec = local_counts(X, R, e=0)
    counts = dispute_counts(X, R)
    assert rec["n1"] == counts["n1_edge"][0]
    assert rec["npar"] == counts["npar_edge"][0]
    assert rec["n2"] == counts["n2_edge"][0]
    u, v = X.edge_endpoints(0)
    assert set(rec["n2prime"]) == {u, v}


def test_local_assignment_glued_codewords():
    from cayleyltc.ltc import LocalAssignment

    # two codeword phases glued across a cut: every local view is valid but
    # Delta > 0, exactly the far-but-locally-consistent configuration
    X = toy(20, (1, 19))
    C1 = repetition_code(2)
    code = square_code(X, C1)
    tester = SquareCodeTester(X, C1, code)
    words = [np.ones((2, 2), np.uint8) if 1 <= g <= 10 else np.zeros((2, 2), np.uint8)
             for g in range(20)]
    W = LocalAssignment.from_vertex_words(tester, words)
    assert W.delta() == 4
    assert len(W.disputed_edges()) == 4
    assert all(W.local_view_valid(g) for g in range(20))


def test_local_assignment_rejects_invalid_views(z5_instance):
    from cayleyltc.ltc import LocalAssignment

    X, C1, code, tester = z5_instance
    bad = np.zeros((2, 5, 2), dtype=np.uint8)
    bad[0, 0, 0] = 1           # not fiber-constant / not a tensor codeword
    with pytest.raises(ValueError, match="W_0"):
        LocalAssignment(tester, bad)


def test_local_assignment_from_nearest_matches_decoder_start(z12_instance):
    from cayleyltc.ltc import LocalAssignment

    X, C1, code, tester = z12_instance
    rng = np.random.default_rng(21)
    c = code.random_codeword(rng).to_bits()
    e = np.zeros(X.n_squares, dtype=np.uint8)
    e[rng.choice(X.n_squares, size=2, replace=False)] = 1
    f = c ^ e
    W = LocalAssignment.from_nearest(tester, f)
    out = tester.decode(f)
    assert out.delta_initial == W.delta()


# -- tester params and kappa experiments -------------------------------------


def test_tester_params_bounds():
    p = TesterParams(r=6, delta1=0.5, sigma1=0.5, lam=0.01)
    assert p.query_count == 36
    expected = (0.5 * 0.5 / 16.5 - 0.01) / 24
    assert p.kappa_proof == pytest.approx(expected)
    assert p.kappa_statement > p.kappa_proof
    assert p.hypotheses_hold


def test_kappa_trial_membership_check(z5_instance):
    X, C1, code, tester = z5_instance
    rec = kappa_trial(tester, code, seed=11, trial_index=0, weight=1,
                      certified_radius=5.0)
    assert rec["certified"]
    assert rec["D"] > 0
    assert not rec["in_code"]


def test_kappa_experiment_z5_exhaustive_flips(z5_instance):
    X, C1, code, tester = z5_instance
    lam = float(np.cos(2 * np.pi / 5))
    params = TesterParams(r=2, delta1=1.0, sigma1=1.0, lam=lam)
    report = kappa_experiment(tester, code, params, trials=50, weights=(1, 1),
                              seed=12)
    # every weight-1 corruption flips one square seen by exactly 3 vertices
    assert report["kappa_hat"] == pytest.approx(3.0)
    assert report["radius_kind"] == "exact"
    assert report["n_certified"] == 50
    # direct oracle: min over squares of (#rejecting vertices)/|V| * |S|
    best = min(
        tester.reject_probability(np.eye(X.n_squares, dtype=np.uint8)[s]) * X.n_squares
        for s in range(X.n_squares))
    assert report["kappa_hat"] == pytest.approx(best)


def test_kappa_experiment_deterministic_across_workers(z5_instance):
    X, C1, code, tester = z5_instance
    params = TesterParams(r=2, delta1=1.0, sigma1=1.0, lam=0.9)
    a = kappa_experiment(tester, code, params, trials=24, weights=(1, 2),
                         seed=13, workers=1)
    b = kappa_experiment(tester, code, params, trials=24, weights=(1, 2),
                         seed=13, workers=8)
    assert a["rows"] == b["rows"]


def test_kappa_experiment_rejects_bad_weights(z5_instance):
    X, C1, code, tester = z5_instance
    params = TesterParams(r=2, delta1=1.0, sigma1=1.0, lam=0.9)
    with pytest.raises(ValueError):
        kappa_experiment(tester, code, params, trials=1, weights=(0, 1), seed=0)


def test_kappa_experiment_bound_relative_radius(p13_instance):
    # the psl2(13) square code has k = 1096, far beyond the exhaustive
    # distance budget, so certification falls back to the distance
    # proposition bound and is labeled accordingly
    X, C1, code, tester, lam = p13_instance
    params = TesterParams(r=4, delta1=0.5, sigma1=0.5, lam=lam)
    report = kappa_experiment(tester, code, params, trials=4, weights=(1, 2),
                              seed=14)
    assert report["radius_kind"] == "bound-relative"
    # delta1 = 0.5 < lambda makes the bound radius 0: trials uncertified
    assert report["n_certified"] == 0
    assert report["kappa_hat"] is None
