"""Independent reference computations for the CRF tests.

Everything here enumerates label paths explicitly; nothing calls the
dynamic-programming code it is used to check.
"""
import itertools
import math

import numpy as np

from mixtag.corpus import DEFAULT_LABELS, LabeledCorpus
from mixtag.crf import FeatureIndex, build_feature_index, zero_model
from mixtag.features import build_observation_matrix
from mixtag.lexicons import ResourceBundle
from mixtag.templates import expand, parse_templates


def path_score(node, edge, path):
    s = node[0, path[0]]
    for t in range(1, len(path)):
        s = s + edge[t - 1, path[t - 1], path[t]] + node[t, path[t]]
    return s


def all_paths(T, L):
    return itertools.product(range(L), repeat=T)


def brute_log_z(node, edge):
    T, L = node.shape
    scores = [path_score(node, edge, p) for p in all_paths(T, L)]
    m = max(scores)
    return m + math.log(math.fsum(math.exp(s - m) for s in scores))


def brute_max(node, edge):
    T, L = node.shape
    return max(path_score(node, edge, p) for p in all_paths(T, L))


def brute_marginals(node, edge):
    T, L = node.shape
    log_z = brute_log_z(node, edge)
    unary = np.zeros((T, L))
    pair = np.zeros((max(T - 1, 0), L, L))
    for p in all_paths(T, L):
        prob = math.exp(path_score(node, edge, p) - log_z)
        for t in range(T):
            unary[t, p[t]] += prob
        for t in range(1, T):
            pair[t - 1, p[t - 1], p[t]] += prob
    return unary, pair


def random_lattice_arrays(rng, T, L, scale=2.0):
    return rng.normal(0, scale, (T, L)), rng.normal(0, scale, (max(T - 1, 0), L, L))


# ---------------------------------------------------------------------------
# feature-level oracle: scores computed straight from expanded strings

def sequence_features(templates, matrix):
    out = []
    for t in range(len(matrix)):
        uni = [expand(tpl, matrix, t) for tpl in templates.unigrams]
        if matrix.extras:
            uni += list(matrix.extras[t])
        bi = [expand(tpl, matrix, t) for tpl in templates.bigrams] if t else []
        out.append((uni, bi))
    return out


def feature_path_score(index: FeatureIndex, w, feats, path):
    labels = index.labels
    s = 0.0
    for t, (uni, bi) in enumerate(feats):
        for f in uni:
            if f in index.unigram_ids:
                s += w[index.unigram_index(f, labels[path[t]])]
        for f in bi:
            if f in index.bigram_ids:
                s += w[index.bigram_index(f, labels[path[t - 1]], labels[path[t]])]
    return s


def brute_nll(index: FeatureIndex, w, seqs, l2):
    """seqs: list of (features, gold label ids)."""
    total = 0.0
    L = index.num_labels
    for feats, gold in seqs:
        scores = [feature_path_score(index, w, feats, p) for p in all_paths(len(feats), L)]
        m = max(scores)
        log_z = m + math.log(math.fsum(math.exp(s - m) for s in scores))
        total += log_z - feature_path_score(index, w, feats, gold)
    return total + 0.5 * l2 * float(np.dot(w, w))


def path_feature_table(index: FeatureIndex, seqs):
    """Per sequence: (feature-count matrix over every label path, row of the gold path).

    Path scores are linear in the weights, so row i dotted with w is the
    score of path i.  Entries are exact small integers stored in extended
    precision.
    """
    L = index.num_labels
    out = []
    for feats, gold in seqs:
        paths = list(all_paths(len(feats), L))
        phi = np.zeros((len(paths), index.num_weights), dtype=np.longdouble)
        for i, p in enumerate(paths):
            for t, (uni, bi) in enumerate(feats):
                for f in uni:
                    if f in index.unigram_ids:
                        phi[i, index.unigram_index(f, index.labels[p[t]])] += 1
                for f in bi:
                    if f in index.bigram_ids:
                        phi[i, index.bigram_index(f, index.labels[p[t - 1]], index.labels[p[t]])] += 1
        out.append((phi, paths.index(tuple(gold))))
    return out


def table_nll(table, w, l2):
    """Regularised NLL in extended precision from a path feature table."""
    w = np.asarray(w, dtype=np.longdouble)
    total = np.longdouble(0)
    for phi, gold in table:
        s = phi @ w
        m = s.max()
        total += m + np.log(np.exp(s - m).sum()) - s[gold]
    return total + np.longdouble(l2) / 2 * (w @ w)


def central_differences(f, w, h=1e-5):
    """Central differences evaluated in extended precision.

    Keeps the roundoff term (eps * |f| / h) far below the truncation term so
    small gradient coordinates can be checked at a tight relative tolerance.
    """
    w = np.asarray(w, dtype=np.longdouble)
    h = np.longdouble(h)
    g = np.zeros(len(w), dtype=np.longdouble)
    for k in range(len(w)):
        e = np.zeros_like(w)
        e[k] = h
        g[k] = (f(w + e) - f(w - e)) / (2 * h)
    return g.astype(float)


def relative_errors(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    denom = np.maximum(np.abs(a), np.abs(b))
    return np.where(denom > 0, np.abs(a - b) / np.where(denom > 0, denom, 1), 0.0)


TINY_TEMPLATES = "U00:%x[0,0]\nU01:%x[-1,0]\nB\n"


def random_instance(rng, max_T=5, max_L=4, max_weights=30, templates=TINY_TEMPLATES):
    """A random small labeled corpus, its model (random weights) and oracle inputs."""
    tpl = parse_templates(templates)
    bundle = ResourceBundle.empty()
    while True:
        L = int(rng.integers(2, max_L + 1))
        labels = DEFAULT_LABELS[:L]
        vocab = ["a", "b", "c"][: int(rng.integers(1, 4))]
        n_utts = int(rng.integers(1, 3))
        words, golds = [], []
        for _ in range(n_utts):
            T = int(rng.integers(1, max_T + 1))
            words.append([vocab[i] for i in rng.integers(0, len(vocab), T)])
            golds.append([labels[i] for i in rng.integers(0, L, T)])
        corpus = LabeledCorpus.from_lists(words, golds)
        index = build_feature_index(corpus, tpl, bundle, labels=labels)
        if index.num_weights <= max_weights:
            break
    model = zero_model(index, tpl).with_weights(rng.normal(0, 1, index.num_weights))
    seqs = []
    for utt in corpus:
        m = build_observation_matrix(utt, bundle)
        seqs.append((sequence_features(tpl, m), [labels.index(y) for y in utt.gold]))
    return corpus, bundle, model, seqs
