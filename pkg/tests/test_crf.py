import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixtag.corpus import LabeledCorpus, Utterance
from mixtag.crf import (MODEL_HEADER, FeatureIndex, Lattice, TrainConfig, backward_log_z,
                        build_feature_index, forward_backward, load_model, logsumexp,
                        nll_and_gradient, posterior_marginals, save_model, score_lattice, train,
                        viterbi, viterbi_decode, zero_model)
from mixtag.errors import FormatError, LayoutError
from mixtag.features import build_observation_matrix
from mixtag.lexicons import ResourceBundle
from mixtag.templates import parse_templates

import oracles

EMPTY = ResourceBundle.empty()
U00_B = parse_templates("U00:%x[0,0]\nB")


def test_logsumexp_stable():
    a = np.array([1000.0, 1000.0])
    assert logsumexp(a, axis=0) == pytest.approx(1000 + math.log(2))
    assert logsumexp(np.array([-np.inf, -np.inf]), axis=0) == -np.inf
    assert logsumexp(np.array([-1e4, 0.0]), axis=0) == pytest.approx(0.0)


# --- feature index --------------------------------------------------------

def test_index_single_token():
    c = LabeledCorpus.from_lists([["a"]], [["en"]])
    idx = build_feature_index(c, U00_B, EMPTY, labels=("en", "bn"))
    assert idx.num_weights == 2


def test_index_two_identical_tokens():
    # by hand: unigram strings {"U00:a"} x 2 labels = 2; bigram strings {"B"} (one site, t=1) x 4 pairs = 4
    c = LabeledCorpus.from_lists([["a", "a"]], [["en", "bn"]])
    idx = build_feature_index(c, U00_B, EMPTY)
    assert idx.unigram_strings == ("U00:a",)
    assert idx.bigram_strings == ("B",)
    assert idx.num_weights == 6


def test_index_cutoff():
    c = LabeledCorpus.from_lists([["a"]], [["en"]])
    with pytest.raises(ValueError, match="no features"):
        build_feature_index(c, U00_B, EMPTY, min_count=2, labels=("en", "bn"))


def test_index_contiguous_and_injective():
    c = LabeledCorpus.from_lists([["b", "a", "c"], ["a"]], [["en", "bn", "hi"], ["en"]])
    idx = build_feature_index(c, U00_B, EMPTY)
    ids = list(idx.unigram_map.values()) + list(idx.bigram_map.values())
    assert sorted(ids) == list(range(idx.num_weights))
    assert idx.labels == ("en", "bn", "hi")
    assert list(idx.unigram_strings) == sorted(idx.unigram_strings)


def test_index_needs_two_labels():
    c = LabeledCorpus.from_lists([["a"]], [["en"]])
    with pytest.raises(ValueError, match="2 labels"):
        build_feature_index(c, U00_B, EMPTY)


# --- lattice scoring ------------------------------------------------------

def _model(words, golds, templates=U00_B, labels=None):
    c = LabeledCorpus.from_lists(words, golds)
    idx = build_feature_index(c, templates, EMPTY, labels=labels)
    return c, zero_model(idx, templates)


def _matrix(words):
    return build_observation_matrix(Utterance.from_words(words), EMPTY)


def test_zero_weights_zero_scores():
    _, m = _model([["a", "b"]], [["en", "bn"]])
    lat = score_lattice(m, _matrix(["a", "b", "a"]))
    assert lat.node.shape == (3, 2) and lat.edge.shape == (2, 2, 2)
    assert not lat.node.any() and not lat.edge.any()


def test_single_feature_fires():
    _, m = _model([["a", "b"]], [["en", "bn"]])
    w = np.zeros(m.index.num_weights)
    w[m.index.unigram_index("U00:a", "bn")] = 1.5
    lat = score_lattice(m.with_weights(w), _matrix(["a"]))
    assert lat.node.tolist() == [[0.0, 1.5]]


def test_unseen_token_contributes_zero():
    _, m = _model([["a", "b"]], [["en", "bn"]])
    m = m.with_weights(np.ones(m.index.num_weights))
    lat = score_lattice(m, _matrix(["zzz"]))
    assert not lat.node.any()


def test_layout_mismatch():
    _, m = _model([["a", "b"]], [["en", "bn"]])
    from dataclasses import replace
    bad = replace(m, templates=parse_templates("U00:%x[0,40]\nB"))
    with pytest.raises(LayoutError):
        score_lattice(bad, _matrix(["a"]))


# --- forward-backward -----------------------------------------------------

def test_uniform_log_z():
    lat = Lattice(np.zeros((3, 4)), np.zeros((2, 4, 4)))
    _, _, log_z = forward_backward(lat)
    assert log_z == pytest.approx(3 * math.log(4), abs=1e-12)
    assert log_z == pytest.approx(4.15888, abs=1e-5)


def test_single_position_log_z():
    a, b = 0.3, -1.7
    _, _, log_z = forward_backward(Lattice(np.array([[a, b]]), np.zeros((0, 2, 2))))
    assert log_z == pytest.approx(math.log(math.exp(a) + math.exp(b)), abs=1e-12)


def test_log_z_matches_enumeration():
    rng = np.random.default_rng(7)
    node, edge = oracles.random_lattice_arrays(rng, 4, 3)
    _, _, log_z = forward_backward(Lattice(node, edge))
    assert abs(log_z - oracles.brute_log_z(node, edge)) < 1e-9


def test_large_scores_no_overflow():
    node = np.full((5, 3), 800.0)
    edge = np.full((4, 3, 3), 900.0)
    _, _, log_z = forward_backward(Lattice(node, edge))
    assert math.isfinite(log_z)
    assert log_z == pytest.approx(5 * 800 + 4 * 900 + 5 * math.log(3))


def test_uniform_marginals():
    unary, pair = posterior_marginals(Lattice(np.zeros((3, 4)), np.zeros((2, 4, 4))))
    np.testing.assert_allclose(unary, 0.25, atol=1e-12)
    np.testing.assert_allclose(pair, 1 / 16, atol=1e-12)


def test_single_position_marginals_softmax():
    node = np.array([[0.1, 2.0, -1.0]])
    unary, _ = posterior_marginals(Lattice(node, np.zeros((0, 3, 3))))
    soft = np.exp(node[0]) / np.exp(node[0]).sum()
    np.testing.assert_allclose(unary[0], soft, atol=1e-12)


def test_marginals_match_enumeration():
    rng = np.random.default_rng(11)
    node, edge = oracles.random_lattice_arrays(rng, 3, 3)
    unary, pair = posterior_marginals(Lattice(node, edge))
    bu, bp = oracles.brute_marginals(node, edge)
    np.testing.assert_allclose(unary, bu, atol=1e-9, rtol=0)
    np.testing.assert_allclose(pair, bp, atol=1e-9, rtol=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_forward_backward_consistency(T, L, seed):
    rng = np.random.default_rng(seed)
    node, edge = oracles.random_lattice_arrays(rng, T, L)
    lat = Lattice(node, edge)
    alpha, beta, log_z = forward_backward(lat)
    assert abs(log_z - backward_log_z(lat, beta)) < 1e-9
    unary, pair = posterior_marginals(lat)
    np.testing.assert_allclose(unary.sum(axis=1), 1.0, atol=1e-9, rtol=0)
    if T > 1:
        np.testing.assert_allclose(pair.sum(axis=2), unary[:-1], atol=1e-9, rtol=0)
        np.testing.assert_allclose(pair.sum(axis=1), unary[1:], atol=1e-9, rtol=0)


# --- objective ------------------------------------------------------------

def test_nll_uniform():
    c, m = _model([["a", "b", "c"], ["a", "a"]], [["en", "bn", "hi"], ["hi", "en"]])
    value, _ = nll_and_gradient(m, c, EMPTY, l2=0.0)
    assert value == pytest.approx(5 * math.log(3), abs=1e-12)


def test_nll_matches_enumeration_and_gradient_matches_fd():
    rng = np.random.default_rng(3)
    for _ in range(5):
        corpus, bundle, model, seqs = oracles.random_instance(rng)
        value, grad = nll_and_gradient(model, corpus, bundle, l2=0.3)
        assert value == pytest.approx(oracles.brute_nll(model.index, model.weights, seqs, 0.3), abs=1e-9)
        table = oracles.path_feature_table(model.index, seqs)
        num = oracles.central_differences(lambda w: oracles.table_nll(table, w, 0.3), model.weights)
        assert oracles.relative_errors(grad, num).max() <= 1e-6


def test_gradient_at_zero_weights_by_fd():
    # feature firing on every token: empirical count c, expected count N/L per label
    c, m = _model([["a", "a", "a"], ["a"]], [["en", "bn", "en"], ["en"]])
    _, grad = nll_and_gradient(m, c, EMPTY, l2=0.0)
    seqs = [(oracles.sequence_features(m.templates, _matrix(u.surfaces)),
             [m.labels.index(y) for y in u.gold]) for u in c]
    table = oracles.path_feature_table(m.index, seqs)
    num = oracles.central_differences(lambda w: oracles.table_nll(table, w, 0.0), m.weights)
    assert oracles.relative_errors(grad, num).max() <= 1e-6
    k_en = m.index.unigram_index("U00:a", "en")
    assert grad[k_en] == pytest.approx(4 / 2 - 3)


def test_l2_term_is_linear():
    rng = np.random.default_rng(5)
    corpus, bundle, model, _ = oracles.random_instance(rng)
    _, g0 = nll_and_gradient(model, corpus, bundle, l2=0.0)
    _, g1 = nll_and_gradient(model, corpus, bundle, l2=0.7)
    np.testing.assert_allclose(g1 - g0, 0.7 * model.weights, atol=1e-12, rtol=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99), st.sampled_from([0.0, 0.5]))
def test_nll_convex(seed, lam, l2):
    rng = np.random.default_rng(seed)
    corpus, bundle, model, _ = oracles.random_instance(rng)
    w1 = rng.normal(0, 2, model.index.num_weights)
    w2 = rng.normal(0, 2, model.index.num_weights)
    f = lambda w: nll_and_gradient(model.with_weights(w), corpus, bundle, l2)[0]
    assert f(lam * w1 + (1 - lam) * w2) <= lam * f(w1) + (1 - lam) * f(w2) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gold_path_probability(seed):
    rng = np.random.default_rng(seed)
    corpus, bundle, model, _ = oracles.random_instance(rng)
    for utt in corpus:
        lat = score_lattice(model, model.matrix(utt, bundle))
        _, _, log_z = forward_backward(lat)
        p = math.exp(lat.path_score([model.labels.index(y) for y in utt.gold]) - log_z)
        assert 0 < p <= 1


# --- viterbi --------------------------------------------------------------

def test_viterbi_ties_pick_first_label():
    path, score = viterbi(Lattice(np.zeros((4, 3)), np.zeros((3, 3, 3))))
    assert path == [0, 0, 0, 0] and score == 0.0
    _, m = _model([["a", "b"]], [["en", "bn"]])
    assert viterbi_decode(m, _matrix(["a", "b", "a"])) == ["en", "en", "en"]


def test_viterbi_dominant_label():
    node = np.tile([0.0, 5.0, 1.0], (4, 1))
    path, _ = viterbi(Lattice(node, np.zeros((3, 3, 3))))
    assert path == [1, 1, 1, 1]


def test_viterbi_matches_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(30):
        T, L = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        node, edge = oracles.random_lattice_arrays(rng, T, L)
        lat = Lattice(node, edge)
        path, score = viterbi(lat)
        best = oracles.brute_max(node, edge)
        assert score == best
        assert oracles.path_score(node, edge, path) == best


# --- training -------------------------------------------------------------

def _separable():
    words = [["a", "b", "x", "y"], ["x", "a"], ["y", "y", "b"], ["a"]]
    golds = [["en" if w in "ab" else "bn" for w in u] for u in words]
    return LabeledCorpus.from_lists(words, golds)


def test_train_separable():
    c = _separable()
    m = train(c, U00_B, EMPTY, TrainConfig(l2=0.1))
    assert m.tag(c, EMPTY) == c.gold()
    zero = zero_model(m.index, m.templates)
    z, _ = nll_and_gradient(zero, c, EMPTY, l2=0.1)
    assert m.objective <= z
    assert np.all(np.isfinite(m.weights))


def test_train_deterministic():
    c = _separable()
    a = save_model(train(c, U00_B, EMPTY))
    b = save_model(train(c, U00_B, EMPTY))
    assert a == b


def test_train_max_iters_flag():
    m = train(_separable(), U00_B, EMPTY, TrainConfig(max_iters=1, tol=1e-12))
    assert m.iterations == 1 and not m.converged


def test_train_objective_monotone(monkeypatch):
    import mixtag.crf as crf
    accepted = []
    real = crf._lbfgs

    def spy(fun, x0, max_iters, tol, memory=10, callback=None):
        accepted.append(fun(x0)[0])
        return real(fun, x0, max_iters, tol, memory, callback=lambda it, f: accepted.append(f))

    monkeypatch.setattr(crf, "_lbfgs", spy)
    m = train(_separable(), U00_B, EMPTY, TrainConfig(l2=0.01, tol=1e-9))
    assert len(accepted) > 3
    assert all(b <= a for a, b in zip(accepted, accepted[1:]))
    assert accepted[-1] == m.objective


# --- persistence ----------------------------------------------------------

def test_save_load_fixed_point():
    m = train(_separable(), U00_B, EMPTY)
    text = save_model(m)
    assert text.startswith(MODEL_HEADER + "\n")
    m2 = load_model(text)
    assert save_model(m2) == text
    np.testing.assert_array_equal(m2.weights, m.weights)
    for words in (["a", "y"], ["zzz", "b", "x"]):
        assert viterbi_decode(m2, _matrix(words)) == viterbi_decode(m, _matrix(words))


def test_load_bad_version():
    text = save_model(train(_separable(), U00_B, EMPTY))
    with pytest.raises(FormatError) as exc:
        load_model(text.replace("MIXTAG-CRF v1", "MIXTAG-CRF v0"))
    assert exc.value.line == 1


def test_load_nan_weight():
    text = save_model(train(_separable(), U00_B, EMPTY))
    lines = text.split("\n")
    k = next(i for i, l in enumerate(lines) if l.startswith("U00:a\t"))
    parts = lines[k].split("\t")
    lines[k] = "\t".join(parts[:-1] + ["NaN"])
    with pytest.raises(FormatError) as exc:
        load_model("\n".join(lines))
    assert exc.value.line == k + 1


def test_load_malformed_line():
    text = save_model(train(_separable(), U00_B, EMPTY)) + "garbage\n"
    with pytest.raises(FormatError):
        load_model(text)
