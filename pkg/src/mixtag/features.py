"""Per-token feature battery and the observation matrix that templates index.

Column layout (all values are strings, flags are "0"/"1")::

    0      token surface
    1      token length in characters
    2-4    CAP1 first char upper, CAP2 any upper, CAP3 all letters upper
    5-11   CHR1 '#', CHR2 '@', CHR3 'http', CHR4 emoticon, CHR5 symbol,
           CHR6 has digit, CHR7 is number
    12-20  dictionary flags in order en bn hi gu kn ml mr ta te
    21     NE1 gazetteer hit
    22     NE2 external NE annotation
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .corpus import LANGUAGES, Token, Utterance
from .errors import ConfigError
from .lexicons import Lexicon, ResourceBundle, contains

COL_TOKEN = 0
COL_LENGTH = 1
COL_CAP = 2
COL_CHR = 5
COL_LEX = 12
COL_NE = 21
NUM_COLUMNS = 23

COLUMN_NAMES: tuple[str, ...] = (
    ("TOKEN", "LENGTH", "CAP1", "CAP2", "CAP3")
    + tuple(f"CHR{i}" for i in range(1, 8))
    + tuple(f"LEX_{lang}" for lang in LANGUAGES)
    + ("NE1", "NE2")
)

MAX_NGRAM = 5


@dataclass(frozen=True)
class FeatureOptions:
    """``ngram_max`` = 0 disables character n-grams."""

    ngram_max: int = 0
    ascii_only: bool = False

    def __post_init__(self):
        if self.ngram_max and not 1 <= self.ngram_max <= MAX_NGRAM:
            raise ConfigError(f"ngram_max must be in 1..{MAX_NGRAM}, got {self.ngram_max}")


@dataclass(frozen=True)
class ObservationMatrix:
    rows: tuple[tuple[str, ...], ...]
    # additional attribute strings per row (character n-grams); not template-addressable
    extras: tuple[tuple[str, ...], ...] = ()

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def num_columns(self) -> int:
        return len(self.rows[0]) if self.rows else NUM_COLUMNS

    def to_tsv(self, gold: Optional[list] = None) -> str:
        lines = []
        for i, row in enumerate(self.rows):
            cols = list(row) + ([gold[i]] if gold is not None else [])
            lines.append("\t".join(cols))
        return "\n".join(lines) + "\n"


def _is_letter(ch: str, ascii_only: bool) -> bool:
    if ascii_only:
        return "A" <= ch <= "Z" or "a" <= ch <= "z"
    return ch.isalpha()


def _is_upper(ch: str, ascii_only: bool) -> bool:
    if ascii_only:
        return "A" <= ch <= "Z"
    return ch.isalpha() and ch.isupper()


def _is_digit(ch: str, ascii_only: bool) -> bool:
    if ascii_only:
        return "0" <= ch <= "9"
    return ch.isdecimal()


def capitalization_flags(token: str, ascii_only: bool = False) -> tuple[int, int, int]:
    cap1 = int(_is_upper(token[0], ascii_only))
    cap2 = int(any(_is_upper(c, ascii_only) for c in token))
    letters = [c for c in token if _is_letter(c, ascii_only)]
    cap3 = int(bool(letters) and all(_is_upper(c, ascii_only) for c in letters))
    return cap1, cap2, cap3


def character_flags(token: str, emoticons: Lexicon, ascii_only: bool = False) -> tuple[int, ...]:
    """CHR1..CHR7 for one token.

    The symbol flag (CHR5) is masked for hashtags, mentions, URLs and
    emoticons so it only reports word-internal punctuation.
    """
    hashtag = token.startswith("#")
    mention = token.startswith("@")
    url = token.lower().startswith("http")
    emoticon = contains(emoticons, token)
    structural = hashtag or mention or url or emoticon
    symbol = not structural and any(
        not (_is_letter(c, ascii_only) or _is_digit(c, ascii_only)) for c in token
    )
    has_digit = any(_is_digit(c, ascii_only) for c in token)
    number = all(_is_digit(c, ascii_only) for c in token)
    return tuple(int(v) for v in (hashtag, mention, url, emoticon, symbol, has_digit, number))


def dictionary_flags(token: str, bundle: ResourceBundle) -> tuple[int, ...]:
    return tuple(int(contains(bundle.per_language[lang], token)) for lang in bundle.languages)


def ne_flags(token: Token, gazetteer: Lexicon) -> tuple[int, int]:
    return int(contains(gazetteer, token.surface)), int(bool(token.external_ne))


def char_ngrams(token: str, n_max: int) -> list[str]:
    if not 1 <= n_max <= MAX_NGRAM:
        raise ConfigError(f"n_max must be in 1..{MAX_NGRAM}, got {n_max}")
    return [f"NG{n}:{token[i:i + n]}"
            for n in range(1, n_max + 1)
            for i in range(len(token) - n + 1)]


def token_row(token: Token, bundle: ResourceBundle, options: FeatureOptions = FeatureOptions()) -> tuple[str, ...]:
    surface = token.surface
    flags = (
        capitalization_flags(surface, options.ascii_only)
        + character_flags(surface, bundle.emoticons, options.ascii_only)
        + dictionary_flags(surface, bundle)
        + ne_flags(token, bundle.gazetteer)
    )
    return (surface, str(len(surface))) + tuple(str(f) for f in flags)


def build_observation_matrix(utt: Utterance, bundle: ResourceBundle,
                             options: FeatureOptions = FeatureOptions()) -> ObservationMatrix:
    rows = tuple(token_row(tok, bundle, options) for tok in utt.tokens)
    extras = ()
    if options.ngram_max:
        extras = tuple(tuple(char_ngrams(tok.surface, options.ngram_max)) for tok in utt.tokens)
    return ObservationMatrix(rows, extras)
