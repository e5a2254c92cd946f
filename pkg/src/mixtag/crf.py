"""Linear-chain conditional random field.

Features follow the usual template expansion: every unigram feature string
is paired with every label, every bigram feature string with every
(previous label, label) pair.  Weights live in one flat vector laid out as::

    [ unigram block: num_unigram_strings x L | bigram block: num_bigram_strings x L x L ]

with strings in sorted order.  Inference is exact (forward-backward in the
log domain, Viterbi for decoding); training minimises the L2-regularised
negative log-likelihood with L-BFGS and a backtracking line search.
"""
from __future__ import annotations

import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from .corpus import DEFAULT_LABELS, Label, LabeledCorpus
from .errors import FormatError, LayoutError, NumericError
from .features import FeatureOptions, ObservationMatrix, build_observation_matrix
from .lexicons import ResourceBundle
from .templates import TemplateSet, expand, parse_templates

logger = logging.getLogger(__name__)

MODEL_HEADER = "MIXTAG-CRF v1"


# --------------------------------------------------------------------------
# log-domain helpers

def logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    """Max-shifted log-sum-exp; all -inf slices give -inf."""
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


# --------------------------------------------------------------------------
# feature indexing

class FeatureIndex:
    """Map (feature string, label[s]) to positions in the weight vector."""

    def __init__(self, labels: Sequence[Label], unigram_strings: Iterable[str],
                 bigram_strings: Iterable[str]):
        self.labels = tuple(labels)
        self.unigram_strings = tuple(sorted(set(unigram_strings)))
        self.bigram_strings = tuple(sorted(set(bigram_strings)))
        self.unigram_ids = {s: i for i, s in enumerate(self.unigram_strings)}
        self.bigram_ids = {s: i for i, s in enumerate(self.bigram_strings)}
        self.label_ids = {y: i for i, y in enumerate(self.labels)}

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def num_unigram_weights(self) -> int:
        return len(self.unigram_strings) * self.num_labels

    @property
    def num_weights(self) -> int:
        L = self.num_labels
        return self.num_unigram_weights + len(self.bigram_strings) * L * L

    def unigram_index(self, s: str, label: Label) -> int:
        return self.unigram_ids[s] * self.num_labels + self.label_ids[label]

    def bigram_index(self, s: str, prev: Label, label: Label) -> int:
        L = self.num_labels
        return (self.num_unigram_weights + self.bigram_ids[s] * L * L
                + self.label_ids[prev] * L + self.label_ids[label])

    @property
    def unigram_map(self) -> dict:
        return {(s, y): self.unigram_index(s, y) for s in self.unigram_strings for y in self.labels}

    @property
    def bigram_map(self) -> dict:
        return {(s, yp, y): self.bigram_index(s, yp, y)
                for s in self.bigram_strings for yp in self.labels for y in self.labels}

    def __eq__(self, other):
        return (isinstance(other, FeatureIndex) and self.labels == other.labels
                and self.unigram_strings == other.unigram_strings
                and self.bigram_strings == other.bigram_strings)


def _position_strings(templates: TemplateSet, matrix: ObservationMatrix):
    """Yield (unigram strings, bigram strings) for every position of one matrix."""
    uni, bi = templates.unigrams, templates.bigrams
    for t in range(len(matrix)):
        u = [expand(tpl, matrix, t) for tpl in uni]
        if matrix.extras:
            u.extend(matrix.extras[t])
        b = [expand(tpl, matrix, t) for tpl in bi] if t > 0 else []
        yield u, b


def _ordered_labels(observed: Iterable[Label]) -> tuple[Label, ...]:
    observed = set(observed)
    known = [y for y in DEFAULT_LABELS if y in observed]
    return tuple(known + sorted(observed - set(known)))


def _matrices(corpus: LabeledCorpus, bundle: ResourceBundle, options: FeatureOptions):
    return [build_observation_matrix(utt, bundle, options) for utt in corpus]


def build_feature_index(corpus: LabeledCorpus, templates: TemplateSet, bundle: ResourceBundle,
                        min_count: int = 1, labels: Optional[Sequence[Label]] = None,
                        feature_options: FeatureOptions = FeatureOptions(),
                        matrices: Optional[list[ObservationMatrix]] = None) -> FeatureIndex:
    """Collect every feature string seen at least ``min_count`` times.

    ``labels`` defaults to the labels present in the corpus, in the
    configured label order.
    """
    if not corpus.labeled:
        raise ValueError("feature index needs a labeled corpus")
    if not corpus.utterances:
        raise ValueError("empty corpus")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if labels is None:
        labels = _ordered_labels(tok.gold for utt in corpus for tok in utt)
    if len(labels) < 2:
        raise ValueError(f"need at least 2 labels, got {list(labels)}")
    templates.validate()
    if matrices is None:
        matrices = _matrices(corpus, bundle, feature_options)
    uni_counts: Counter = Counter()
    bi_counts: Counter = Counter()
    for matrix in matrices:
        for u, b in _position_strings(templates, matrix):
            uni_counts.update(u)
            bi_counts.update(b)
    index = FeatureIndex(
        labels,
        (s for s, c in uni_counts.items() if c >= min_count),
        (s for s, c in bi_counts.items() if c >= min_count),
    )
    if index.num_weights == 0:
        raise ValueError("no features")
    return index


# --------------------------------------------------------------------------
# model

@dataclass(frozen=True)
class TrainConfig:
    l2: float = 1.0
    max_iters: int = 200
    tol: float = 1e-5
    min_count: int = 1

    def __post_init__(self):
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")


@dataclass(frozen=True, eq=False)
class CrfModel:
    labels: tuple[Label, ...]
    templates: TemplateSet
    index: FeatureIndex
    weights: np.ndarray
    config: TrainConfig = field(default_factory=TrainConfig)
    feature_options: FeatureOptions = field(default_factory=FeatureOptions)
    iterations: int = 0
    objective: float = float("nan")
    converged: bool = False

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ValueError("model needs at least 2 labels")
        if self.weights.shape != (self.index.num_weights,):
            raise ValueError("weight vector does not match feature index")
        if not np.all(np.isfinite(self.weights)):
            raise NumericError("non-finite model weight")

    def with_weights(self, weights) -> "CrfModel":
        return replace(self, weights=np.asarray(weights, dtype=float))

    def matrix(self, utt, bundle: ResourceBundle) -> ObservationMatrix:
        return build_observation_matrix(utt, bundle, self.feature_options)

    def tag(self, corpus: LabeledCorpus, bundle: ResourceBundle) -> list[list[Label]]:
        return [viterbi_decode(self, self.matrix(utt, bundle)) for utt in corpus]


def zero_model(index: FeatureIndex, templates: TemplateSet, **kw) -> CrfModel:
    return CrfModel(index.labels, templates, index, np.zeros(index.num_weights), **kw)


# --------------------------------------------------------------------------
# compiled design matrices

@dataclass
class _Compiled:
    lengths: np.ndarray
    offsets: np.ndarray
    uni: sparse.csr_matrix      # positions x unigram strings
    bi: sparse.csr_matrix       # positions x bigram strings (rows at t=0 empty)
    gold: Optional[np.ndarray]  # label id per position

    @property
    def num_positions(self) -> int:
        return int(self.lengths.sum())


def _compile(index: FeatureIndex, templates: TemplateSet, matrices: Sequence[ObservationMatrix],
             gold: Optional[Sequence[Sequence[Label]]] = None) -> _Compiled:
    uni_rows, uni_cols, bi_rows, bi_cols = [], [], [], []
    lengths = []
    p = 0
    for matrix in matrices:
        if not len(matrix):
            raise ValueError("empty observation matrix")
        lengths.append(len(matrix))
        for u, b in _position_strings(templates, matrix):
            for s in u:
                j = index.unigram_ids.get(s)
                if j is not None:
                    uni_rows.append(p)
                    uni_cols.append(j)
            for s in b:
                j = index.bigram_ids.get(s)
                if j is not None:
                    bi_rows.append(p)
                    bi_cols.append(j)
            p += 1
    n = p
    uni = sparse.csr_matrix((np.ones(len(uni_rows)), (uni_rows, uni_cols)),
                            shape=(n, len(index.unigram_strings)))
    bi = sparse.csr_matrix((np.ones(len(bi_rows)), (bi_rows, bi_cols)),
                           shape=(n, len(index.bigram_strings)))
    lengths = np.asarray(lengths, dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(lengths)[:-1])).astype(np.int64)
    gold_ids = None
    if gold is not None:
        gold_ids = np.asarray([index.label_ids[y] for seq in gold for y in seq], dtype=np.int64)
        if len(gold_ids) != n:
            raise ValueError("gold labels do not match the observation matrices")
    return _Compiled(lengths, offsets, uni, bi, gold_ids)


def _scores(index: FeatureIndex, weights: np.ndarray, data: _Compiled):
    """Node scores (N, L) and edge scores (N, L, L) for every position."""
    L = index.num_labels
    nu = index.num_unigram_weights
    wu = weights[:nu].reshape(-1, L)
    wb = weights[nu:].reshape(-1, L * L)
    node = np.asarray(data.uni @ wu).reshape(-1, L)
    edge = np.asarray(data.bi @ wb).reshape(-1, L, L)
    return node, edge


# --------------------------------------------------------------------------
# lattice inference

@dataclass(frozen=True, eq=False)
class Lattice:
    """Log-domain scores for one sequence: node (T, L), edge (T-1, L, L).

    ``edge[t-1, i, j]`` scores the transition label i at t-1 to label j at t.
    """
    node: np.ndarray
    edge: np.ndarray

    def __post_init__(self):
        T, L = self.node.shape
        if self.edge.shape != (max(T - 1, 0), L, L):
            raise ValueError(f"edge scores must have shape {(T - 1, L, L)}, got {self.edge.shape}")

    @property
    def length(self) -> int:
        return self.node.shape[0]

    @property
    def num_labels(self) -> int:
        return self.node.shape[1]

    def path_score(self, path: Sequence[int]) -> float:
        score = self.node[0, path[0]]
        for t in range(1, len(path)):
            score = score + self.edge[t - 1, path[t - 1], path[t]] + self.node[t, path[t]]
        return float(score)


def _forward(node: np.ndarray, edge: np.ndarray) -> np.ndarray:
    # node (n, T, L), edge (n, T-1, L, L)
    alpha = np.empty_like(node)
    alpha[:, 0] = node[:, 0]
    for t in range(1, node.shape[1]):
        alpha[:, t] = logsumexp(alpha[:, t - 1, :, None] + edge[:, t - 1], axis=1) + node[:, t]
    return alpha


def _backward(node: np.ndarray, edge: np.ndarray) -> np.ndarray:
    T = node.shape[1]
    beta = np.empty_like(node)
    beta[:, T - 1] = 0.0
    for t in range(T - 2, -1, -1):
        beta[:, t] = logsumexp(edge[:, t] + (node[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
    return beta


def _marginals(node, edge, alpha, beta, log_z):
    unary = np.exp(alpha + beta - log_z[:, None, None])
    pair = np.exp(alpha[:, :-1, :, None] + edge + (node[:, 1:] + beta[:, 1:])[:, :, None, :]
                  - log_z[:, None, None, None])
    return unary, pair


def forward_backward(lat: Lattice) -> tuple[np.ndarray, np.ndarray, float]:
    node, edge = lat.node[None], lat.edge[None]
    alpha = _forward(node, edge)
    beta = _backward(node, edge)
    log_z = float(logsumexp(alpha[0, -1], axis=0))
    return alpha[0], beta[0], log_z


def backward_log_z(lat: Lattice, beta: np.ndarray) -> float:
    return float(logsumexp(lat.node[0] + beta[0], axis=0))


def posterior_marginals(lat: Lattice) -> tuple[np.ndarray, np.ndarray]:
    """P(y_t = j) as (T, L) and P(y_{t-1} = i, y_t = j) as (T-1, L, L)."""
    alpha, beta, log_z = forward_backward(lat)
    unary, pair = _marginals(lat.node[None], lat.edge[None], alpha[None], beta[None],
                             np.array([log_z]))
    return unary[0], pair[0]


def viterbi(lat: Lattice) -> tuple[list[int], float]:
    """Best label path and its score; ties go to the lower label index."""
    T, L = lat.node.shape
    delta = lat.node[0].copy()
    back = np.zeros((T, L), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, None] + lat.edge[t - 1]
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(L)] + lat.node[t]
    best = int(np.argmax(delta))
    path = [best]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path, float(delta[best])


def score_lattice(model: CrfModel, matrix: ObservationMatrix) -> Lattice:
    model.templates.validate(matrix.num_columns)
    data = _compile(model.index, model.templates, [matrix])
    node, edge = _scores(model.index, model.weights, data)
    return Lattice(node, edge[1:])


def viterbi_decode(model: CrfModel, matrix: ObservationMatrix) -> list[Label]:
    path, _ = viterbi(score_lattice(model, matrix))
    return [model.labels[i] for i in path]


# --------------------------------------------------------------------------
# objective

def _objective(index: FeatureIndex, weights: np.ndarray, data: _Compiled, l2: float):
    L = index.num_labels
    node, edge = _scores(index, weights, data)
    gold = data.gold
    n_utts = len(data.lengths)
    log_z = np.empty(n_utts)
    unary_marg = np.zeros_like(node)
    pair_marg = np.zeros_like(edge)
    for T in np.unique(data.lengths):
        utts = np.flatnonzero(data.lengths == T)
        pos = data.offsets[utts][:, None] + np.arange(T)
        nd = node[pos]
        ed = edge[pos[:, 1:]]
        alpha = _forward(nd, ed)
        beta = _backward(nd, ed)
        lz = logsumexp(alpha[:, -1], axis=1)
        log_z[utts] = lz
        un, pr = _marginals(nd, ed, alpha, beta, lz)
        unary_marg[pos] = un
        pair_marg[pos[:, 1:]] = pr

    positions = np.arange(len(gold))
    starts = np.zeros(len(gold), dtype=bool)
    starts[data.offsets] = True
    inner = positions[~starts]
    gold_score = node[positions, gold].sum() + edge[inner, gold[inner - 1], gold[inner]].sum()
    value = float(log_z.sum() - gold_score + 0.5 * l2 * weights.dot(weights))

    unary_marg[positions, gold] -= 1.0
    pair_marg[inner, gold[inner - 1], gold[inner]] -= 1.0
    grad_u = np.asarray(data.uni.T @ unary_marg).ravel()
    grad_b = np.asarray(data.bi.T @ pair_marg.reshape(-1, L * L)).ravel()
    grad = np.concatenate((grad_u, grad_b)) + l2 * weights
    if not (math.isfinite(value) and np.all(np.isfinite(grad))):
        raise NumericError("numeric overflow")
    return value, grad


def nll_and_gradient(model: CrfModel, corpus: LabeledCorpus, bundle: ResourceBundle,
                     l2: float = 0.0) -> tuple[float, np.ndarray]:
    """Regularised negative log-likelihood of ``corpus`` and its gradient."""
    if not corpus.labeled:
        raise ValueError("likelihood needs a labeled corpus")
    if l2 < 0:
        raise ValueError("l2 must be >= 0")
    matrices = [model.matrix(utt, bundle) for utt in corpus]
    data = _compile(model.index, model.templates, matrices, corpus.gold())
    return _objective(model.index, model.weights, data, l2)


# --------------------------------------------------------------------------
# optimisation

def _lbfgs(fun, x0: np.ndarray, max_iters: int, tol: float, memory: int = 10, callback=None):
    """Minimise ``fun`` (returning value, gradient) from ``x0``.

    Accepted steps satisfy the Armijo condition, so the objective never
    increases.  Returns (x, value, iterations, converged).
    """
    x = x0.copy()
    f, g = fun(x)
    hist: deque = deque(maxlen=memory)
    for it in range(1, max_iters + 1):
        q = -g
        alphas = []
        for s, y, rho in reversed(hist):
            a = rho * s.dot(q)
            alphas.append(a)
            q = q - a * y
        if hist:
            s, y, _ = hist[-1]
            q = q * (s.dot(y) / y.dot(y))
        for (s, y, rho), a in zip(hist, reversed(alphas)):
            b = rho * y.dot(q)
            q = q + (a - b) * s
        d = q
        slope = g.dot(d)
        if slope >= 0:
            hist.clear()
            d = -g
            slope = -g.dot(g)
        if slope == 0:
            return x, f, it - 1, True
        step = 1.0 if hist else min(1.0, 1.0 / math.sqrt(-slope))
        for _ in range(50):
            x_new = x + step * d
            f_new, g_new = fun(x_new)
            if f_new <= f + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            logger.warning("line search failed at iteration %d", it)
            return x, f, it - 1, False
        s, y = x_new - x, g_new - g
        sy = s.dot(y)
        if sy > 1e-12:
            hist.append((s, y, 1.0 / sy))
        change = abs(f - f_new) / max(abs(f_new), 1e-300)
        x, f, g = x_new, f_new, g_new
        logger.debug("iter %d objective %.6f", it, f)
        if callback is not None:
            callback(it, f)
        if change < tol:
            return x, f, it, True
    return x, f, max_iters, False


def train(corpus: LabeledCorpus, templates: TemplateSet, bundle: ResourceBundle,
          config: TrainConfig = TrainConfig(), feature_options: FeatureOptions = FeatureOptions(),
          labels: Optional[Sequence[Label]] = None) -> CrfModel:
    matrices = _matrices(corpus, bundle, feature_options)
    index = build_feature_index(corpus, templates, bundle, config.min_count, labels,
                                feature_options, matrices)
    data = _compile(index, templates, matrices, corpus.gold())
    logger.info("training: %d utterances, %d labels, %d weights",
                len(corpus), index.num_labels, index.num_weights)

    def fun(w):
        return _objective(index, w, data, config.l2)

    w, value, iters, converged = _lbfgs(fun, np.zeros(index.num_weights), config.max_iters, config.tol)
    if not converged:
        logger.warning("training stopped after %d iterations without converging", iters)
    return CrfModel(index.labels, templates, index, w, config, feature_options,
                    iterations=iters, objective=value, converged=converged)


# --------------------------------------------------------------------------
# persistence

def save_model(model: CrfModel) -> str:
    cfg, opt = model.config, model.feature_options
    lines = [
        MODEL_HEADER,
        "labels\t" + "\t".join(model.labels),
        f"config\tl2={cfg.l2!r}\tmax_iters={cfg.max_iters}\ttol={cfg.tol!r}\tmin_count={cfg.min_count}",
        f"features\tngram_max={opt.ngram_max}\tascii_only={int(opt.ascii_only)}",
        f"result\titerations={model.iterations}\tobjective={model.objective!r}\tconverged={int(model.converged)}",
        f"templates\t{len(model.templates)}",
    ]
    lines.extend(t.to_line() for t in model.templates)
    idx = model.index
    lines.append(f"weights\t{idx.num_weights}")
    w = model.weights
    k = 0
    for s in idx.unigram_strings:
        for y in idx.labels:
            lines.append(f"{s}\t{y}\t{float(w[k])!r}")
            k += 1
    for s in idx.bigram_strings:
        for yp in idx.labels:
            for y in idx.labels:
                lines.append(f"{s}\t{yp}\t{y}\t{float(w[k])!r}")
                k += 1
    return "\n".join(lines) + "\n"


def _kv(fields: list[str], lineno: int) -> dict:
    out = {}
    for f in fields:
        key, sep, value = f.partition("=")
        if not sep:
            raise FormatError(f"expected key=value, got {f!r}", line=lineno)
        out[key] = value
    return out


def load_model(text: str) -> CrfModel:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != MODEL_HEADER:
        got = lines[0] if lines else ""
        raise FormatError(f"unsupported model version {got!r}, expected {MODEL_HEADER!r}", line=1)

    def section(i: int, name: str) -> list[str]:
        if i >= len(lines):
            raise FormatError(f"missing {name} section", line=i + 1)
        fields = lines[i].split("\t")
        if fields[0] != name:
            raise FormatError(f"expected {name} section, got {fields[0]!r}", line=i + 1)
        return fields[1:]

    try:
        labels = tuple(section(1, "labels"))
        c = _kv(section(2, "config"), 3)
        config = TrainConfig(float(c["l2"]), int(c["max_iters"]), float(c["tol"]), int(c["min_count"]))
        f = _kv(section(3, "features"), 4)
        options = FeatureOptions(int(f["ngram_max"]), bool(int(f["ascii_only"])))
        r = _kv(section(4, "result"), 5)
        iterations, objective, converged = int(r["iterations"]), float(r["objective"]), bool(int(r["converged"]))
        n_tpl = int(section(5, "templates")[0])
    except FormatError:
        raise
    except (KeyError, ValueError, IndexError) as exc:
        raise FormatError(f"malformed model header: {exc}") from exc
    tpl_end = 6 + n_tpl
    try:
        templates = parse_templates("\n".join(lines[6:tpl_end]))
    except FormatError as exc:
        raise FormatError(exc.message, line=6 + (exc.line or 1)) from exc
    if len(templates) != n_tpl:
        raise FormatError("template count mismatch", line=6)
    fields = section(tpl_end, "weights")
    try:
        n_weights = int(fields[0])
    except (IndexError, ValueError):
        raise FormatError("malformed weight count", line=tpl_end + 1)

    label_set = set(labels)
    uni: dict = {}
    bi: dict = {}
    for i in range(tpl_end + 1, len(lines)):
        lineno = i + 1
        parts = lines[i].split("\t")
        try:
            w = float(parts[-1])
        except ValueError:
            raise FormatError(f"malformed weight {parts[-1]!r}", line=lineno)
        if not math.isfinite(w):
            raise FormatError(f"non-finite weight {parts[-1]!r}", line=lineno)
        if any(p not in label_set for p in parts[1:-1]):
            raise FormatError("unknown label in weight line", line=lineno)
        if len(parts) == 3:
            uni[(parts[0], parts[1])] = w
        elif len(parts) == 4:
            bi[(parts[0], parts[1], parts[2])] = w
        else:
            raise FormatError("malformed weight line", line=lineno)
    if len(uni) + len(bi) != n_weights:
        raise FormatError(f"expected {n_weights} weights, found {len(uni) + len(bi)}",
                          line=tpl_end + 1)
    index = FeatureIndex(labels, (s for s, _ in uni), (s for s, _, _ in bi))
    if index.num_weights != n_weights:
        raise FormatError("incomplete weight table", line=tpl_end + 1)
    weights = np.zeros(n_weights)
    for (s, y), w in uni.items():
        weights[index.unigram_index(s, y)] = w
    for (s, yp, y), w in bi.items():
        weights[index.bigram_index(s, yp, y)] = w
    return CrfModel(labels, templates, index, weights, config, options,
                    iterations=iterations, objective=objective, converged=converged)
