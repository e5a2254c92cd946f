"""Column-oriented token corpora and raw queries.

A corpus file holds one token per line, blank lines between utterances::

    ami     bn
    take    NE=0    bn
    boli    bn

    hello   en

The token comes first and the gold label last.  An optional ``NE=0``/``NE=1``
column may sit between them to carry an external named-entity annotation.
Columns are separated by tabs or runs of spaces; output always uses tabs.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import FormatError, ShapeError

Label = str

LANGUAGES: tuple[Label, ...] = ("en", "bn", "hi", "gu", "kn", "ml", "mr", "ta", "te")
DEFAULT_LABELS: tuple[Label, ...] = LANGUAGES + ("NE", "MIX", "X")

_WS = re.compile(r"\s")
_COLUMN_SPLIT = re.compile(r"[ \t]+")


@dataclass(frozen=True)
class Token:
    surface: str
    gold: Optional[Label] = None
    external_ne: Optional[bool] = None

    def __post_init__(self):
        if not self.surface or _WS.search(self.surface):
            raise ValueError(f"invalid token surface {self.surface!r}")


@dataclass(frozen=True)
class Utterance:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("utterance must contain at least one token")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    @property
    def surfaces(self) -> list[str]:
        return [tok.surface for tok in self.tokens]

    @property
    def gold(self) -> list[Label]:
        return [tok.gold for tok in self.tokens]

    @classmethod
    def from_words(cls, words: Iterable[str], labels: Optional[Iterable[Label]] = None) -> "Utterance":
        words = list(words)
        if labels is None:
            return cls(tuple(Token(w) for w in words))
        labels = list(labels)
        if len(labels) != len(words):
            raise ShapeError("words and labels differ in length")
        return cls(tuple(Token(w, g) for w, g in zip(words, labels)))


@dataclass(frozen=True)
class LabeledCorpus:
    utterances: tuple[Utterance, ...]
    labeled: bool

    def __post_init__(self):
        for utt in self.utterances:
            for tok in utt.tokens:
                if (tok.gold is not None) != self.labeled:
                    raise ValueError("corpus must be labeled all-or-nothing")

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    @property
    def num_tokens(self) -> int:
        return sum(len(u) for u in self.utterances)

    def gold(self) -> list[list[Label]]:
        if not self.labeled:
            raise ValueError("corpus is unlabeled")
        return [u.gold for u in self.utterances]

    def strip_labels(self) -> "LabeledCorpus":
        utts = tuple(
            Utterance(tuple(Token(t.surface, None, t.external_ne) for t in u.tokens))
            for u in self.utterances
        )
        return LabeledCorpus(utts, labeled=False)

    @classmethod
    def from_lists(cls, words: Sequence[Sequence[str]], labels: Optional[Sequence[Sequence[Label]]] = None):
        if labels is None:
            return cls(tuple(Utterance.from_words(w) for w in words), labeled=False)
        if len(words) != len(labels):
            raise ShapeError("words and labels differ in utterance count")
        return cls(tuple(Utterance.from_words(w, l) for w, l in zip(words, labels)), labeled=True)


def _parse_ne_column(col: str) -> Optional[bool]:
    if col == "NE=1":
        return True
    if col == "NE=0":
        return False
    return None


def parse_corpus(text: str, expect_labels: bool = True,
                 label_set: Iterable[Label] = DEFAULT_LABELS) -> LabeledCorpus:
    """Parse a column corpus.

    Consecutive blank lines are tolerated (the empty utterance is skipped).
    Errors raise :class:`FormatError` carrying the 1-based line number.
    """
    labels = frozenset(label_set)
    utterances: list[Utterance] = []
    current: list[Token] = []

    def flush():
        if current:
            utterances.append(Utterance(tuple(current)))
            current.clear()

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line[0] in " \t":
            raise FormatError("token column missing", line=lineno)
        cols = _COLUMN_SPLIT.split(line.rstrip(" \t"))
        surface = cols[0]
        gold = None
        if expect_labels:
            if len(cols) < 2:
                raise FormatError("missing label column", line=lineno)
            gold = cols[-1]
            if gold not in labels:
                raise FormatError(f"unknown label {gold}", line=lineno)
            middle = cols[1:-1]
        else:
            middle = cols[1:]
        if len(middle) > 1:
            raise FormatError(f"too many columns ({len(cols)})", line=lineno)
        external_ne = None
        if middle:
            external_ne = _parse_ne_column(middle[0])
            if external_ne is None:
                raise FormatError(f"unknown column {middle[0]!r}", line=lineno)
        current.append(Token(surface, gold, external_ne))
    flush()
    return LabeledCorpus(tuple(utterances), labeled=expect_labels)


def tokenize_query(raw: str) -> Utterance:
    words = raw.split()
    if not words:
        raise ValueError("empty query")
    return Utterance.from_words(words)


def write_tagged(corpus: LabeledCorpus, predictions: Sequence[Sequence[Label]]) -> str:
    """Render ``surface<TAB>label`` lines, one blank line between utterances.

    Tokens carrying an external NE flag keep it as a middle ``NE=x`` column so
    the output re-parses to the same corpus.
    """
    if len(predictions) != len(corpus.utterances):
        raise ShapeError(
            f"predictions cover {len(predictions)} utterances, corpus has {len(corpus.utterances)}",
            index=min(len(predictions), len(corpus.utterances)),
        )
    blocks = []
    for i, (utt, pred) in enumerate(zip(corpus.utterances, predictions)):
        if len(pred) != len(utt):
            raise ShapeError(f"utterance {i}: {len(pred)} predictions for {len(utt)} tokens", index=i)
        lines = []
        for tok, label in zip(utt.tokens, pred):
            if tok.external_ne is None:
                lines.append(f"{tok.surface}\t{label}")
            else:
                lines.append(f"{tok.surface}\tNE={int(tok.external_ne)}\t{label}")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)
