"""Synthetic code-mixed corpora for testing and demonstrations.

Two pseudo-languages are generated from disjoint syllable inventories.
Pseudo-Bengali words are longer (6-9 characters) than pseudo-English words
(3-5 characters).
"""
from __future__ import annotations

import random
from typing import Mapping, Optional, Sequence

from .corpus import Label, LabeledCorpus, Token, Utterance

_SYLLABLES = {
    "bn": ("bha", "kho", "cho", "ro", "ni", "da", "ke", "bo", "li", "mo", "ja", "shi", "pa", "gho", "tu"),
    "en": ("th", "st", "we", "ay", "ow", "fl", "er", "ing", "ck", "sw", "ea", "ght", "wh", "oy"),
}
_LENGTHS = {"bn": (6, 9), "en": (3, 5)}


def _word(rng: random.Random, syllables: Sequence[str], lo: int, hi: int) -> str:
    target = rng.randint(lo, hi)
    w = ""
    while len(w) < target:
        w += rng.choice(syllables)
    return w[:target]


def pseudo_vocabularies(size: int = 200, seed: int = 0,
                        languages: Sequence[Label] = ("bn", "en")) -> dict[Label, list[str]]:
    """``size`` distinct words per language; no word is shared between languages."""
    rng = random.Random(seed)
    taken: set[str] = set()
    vocab: dict[Label, list[str]] = {}
    for lang in languages:
        lo, hi = _LENGTHS[lang]
        words: list[str] = []
        while len(words) < size:
            w = _word(rng, _SYLLABLES[lang], lo, hi)
            if w not in taken:
                taken.add(w)
                words.append(w)
        vocab[lang] = words
    return vocab


def code_mixed_corpus(vocab: Mapping[Label, Sequence[str]], n_utterances: int, seed: int = 0,
                      min_len: int = 3, max_len: int = 8, switch_prob: float = 0.2) -> LabeledCorpus:
    """Queries that start in one language and switch with probability ``switch_prob`` per token."""
    rng = random.Random(seed)
    langs = sorted(vocab)
    utts = []
    for _ in range(n_utterances):
        lang = rng.choice(langs)
        tokens = []
        for _ in range(rng.randint(min_len, max_len)):
            if rng.random() < switch_prob:
                lang = rng.choice([l for l in langs if l != lang])
            tokens.append(Token(rng.choice(vocab[lang]), lang))
        utts.append(Utterance(tuple(tokens)))
    return LabeledCorpus(tuple(utts), labeled=True)


def shared_word_corpus(vocab: Mapping[Label, Sequence[str]], shared: str, n_utterances: int,
                       seed: int = 0, context: int = 3,
                       languages: Optional[Sequence[Label]] = None) -> LabeledCorpus:
    """Utterances with ``shared`` in the middle of a monolingual window of ``context`` words per side.

    The shared word takes the label of its surrounding language; languages
    alternate so both readings are equally frequent.
    """
    rng = random.Random(seed)
    langs = list(languages or sorted(vocab))
    utts = []
    for i in range(n_utterances):
        lang = langs[i % len(langs)]
        left = [rng.choice(vocab[lang]) for _ in range(context)]
        right = [rng.choice(vocab[lang]) for _ in range(context)]
        words = left + [shared] + right
        utts.append(Utterance(tuple(Token(w, lang) for w in words)))
    return LabeledCorpus(tuple(utts), labeled=True)


def concat(*corpora: LabeledCorpus) -> LabeledCorpus:
    utts = tuple(u for c in corpora for u in c.utterances)
    return LabeledCorpus(utts, labeled=all(c.labeled for c in corpora))
