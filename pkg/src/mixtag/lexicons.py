"""Dictionary resources: per-language wordlists, the emoticon list and the NE gazetteer.

Three file formats are understood, all UTF-8:

* frequency list -- ``word<TAB>count`` per line
* pair list -- ``roman<TAB>native`` per line (transliteration pairs)
* line list -- one entry per line

Lookups into language lexicons and the gazetteer are case-folded; emoticons
are matched exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Optional

from .corpus import LANGUAGES, Label, LabeledCorpus
from .errors import EmptyLexiconError, FormatError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Lexicon:
    name: str
    entries: frozenset
    case_folded: bool = True

    def __contains__(self, word: str) -> bool:
        return contains(self, word)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def empty(cls, name: str, case_folded: bool = True) -> "Lexicon":
        return cls(name, frozenset(), case_folded)

    def to_text(self) -> str:
        """Line-list serialization, sorted for reproducible files."""
        return "".join(f"{e}\n" for e in sorted(self.entries))


def contains(lex: Lexicon, word: str) -> bool:
    if lex.case_folded:
        word = word.lower()
    return word in lex.entries


def _nonempty(name: str, entries: set, case_folded: bool) -> Lexicon:
    if not entries:
        raise EmptyLexiconError("empty lexicon")
    return Lexicon(name, frozenset(entries), case_folded)


def _lines(text: str):
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if line.strip():
            yield lineno, line


def load_frequency_list(text: str, name: str = "freq", min_frequency: int = 1,
                        case_folded: bool = True) -> Lexicon:
    counts: dict[str, int] = {}
    for lineno, line in _lines(text):
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError("expected word<TAB>count", line=lineno)
        word, count = parts[0].strip(), parts[1].strip()
        if not word or not count.isdigit():
            raise FormatError(f"malformed count {count!r}", line=lineno)
        if case_folded:
            word = word.lower()
        counts[word] = max(counts.get(word, 0), int(count))
    kept = {w for w, c in counts.items() if c >= min_frequency}
    return _nonempty(name, kept, case_folded)


def load_pair_list(text: str, name: str = "pairs", case_folded: bool = True) -> Lexicon:
    entries = set()
    for lineno, line in _lines(text):
        roman, sep, native = line.partition("\t")
        roman = roman.strip()
        if not sep or not roman:
            raise FormatError("expected roman<TAB>native", line=lineno)
        entries.add(roman.lower() if case_folded else roman)
    return _nonempty(name, entries, case_folded)


def load_line_list(text: str, case_folded: bool, name: str = "list") -> Lexicon:
    entries = set()
    for _, line in _lines(text):
        entry = line.strip()
        entries.add(entry.lower() if case_folded else entry)
    return _nonempty(name, entries, case_folded)


def build_wordlists_from_corpus(corpus: LabeledCorpus,
                                languages=LANGUAGES) -> dict[Label, Lexicon]:
    """One case-folded lexicon per language from the gold labels of a corpus.

    Languages absent from the corpus get empty lexicons.  Tokens labelled NE,
    MIX or X feed no wordlist.
    """
    if not corpus.labeled:
        raise ValueError("wordlists can only be built from a labeled corpus")
    if not corpus.utterances:
        raise ValueError("empty corpus")
    words: dict[Label, set] = {lang: set() for lang in languages}
    for utt in corpus:
        for tok in utt:
            if tok.gold in words:
                words[tok.gold].add(tok.surface.lower())
    return {lang: Lexicon(lang, frozenset(w), True) for lang, w in words.items()}


def build_gazetteer_from_corpus(corpus: LabeledCorpus, ne_label: Label = "NE") -> Lexicon:
    if not corpus.labeled:
        raise ValueError("gazetteer can only be built from a labeled corpus")
    names = {tok.surface.lower() for utt in corpus for tok in utt if tok.gold == ne_label}
    return Lexicon("gazetteer", frozenset(names), True)


def default_emoticons() -> Lexicon:
    """Small emoticon list bundled with the package."""
    text = resources.files("mixtag").joinpath("data/emoticons.txt").read_text(encoding="utf-8")
    return load_line_list(text, case_folded=False, name="emoticons")


@dataclass(frozen=True)
class ResourceBundle:
    per_language: Mapping[Label, Lexicon]
    emoticons: Lexicon = field(default_factory=lambda: Lexicon.empty("emoticons", False))
    gazetteer: Lexicon = field(default_factory=lambda: Lexicon.empty("gazetteer"))
    languages: tuple[Label, ...] = LANGUAGES

    def __post_init__(self):
        missing = [lang for lang in self.languages if lang not in self.per_language]
        extra = [lang for lang in self.per_language if lang not in self.languages]
        if missing or extra:
            raise ValueError(f"bundle needs exactly one lexicon per language (missing {missing}, unexpected {extra})")
        if self.emoticons.case_folded:
            raise ValueError("emoticon lexicon must be exact-match")

    @classmethod
    def from_parts(cls, per_language: Optional[Mapping[Label, Lexicon]] = None,
                   emoticons: Optional[Lexicon] = None, gazetteer: Optional[Lexicon] = None,
                   languages=LANGUAGES) -> "ResourceBundle":
        """Fill gaps with empty lexicons, logging one warning naming them."""
        per_language = dict(per_language or {})
        missing = [lang for lang in languages if lang not in per_language]
        if missing:
            logger.warning("no lexicon for %s; dictionary flags will be constant 0", ", ".join(missing))
        for lang in missing:
            per_language[lang] = Lexicon.empty(lang)
        return cls(
            per_language,
            emoticons if emoticons is not None else Lexicon.empty("emoticons", False),
            gazetteer if gazetteer is not None else Lexicon.empty("gazetteer"),
            tuple(languages),
        )

    @classmethod
    def empty(cls, languages=LANGUAGES) -> "ResourceBundle":
        return cls({lang: Lexicon.empty(lang) for lang in languages}, languages=tuple(languages))
