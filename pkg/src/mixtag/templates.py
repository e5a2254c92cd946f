"""Feature template macro language.

One template per line::

    # comment
    U00:%x[-1,0]
    U1:%x[0,12]/%x[0,13]
    B

``%x[row,col]`` is replaced by the observation at relative row ``row`` and
column ``col``.  Rows outside the utterance become ``_B-k`` (k positions
before the start) or ``_B+k`` (k past the end).  Lines starting with ``U``
produce unigram features, lines starting with ``B`` label-bigram features.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable

from .errors import FormatError, LayoutError
from .features import COL_LEX, COL_NE, NUM_COLUMNS, ObservationMatrix


class Kind(Enum):
    UNIGRAM = "U"
    BIGRAM = "B"


_MACRO = re.compile(r"%x\[\s*(-?\d+)\s*,\s*(\d+)\s*\]")


@dataclass(frozen=True)
class Template:
    id: str
    kind: Kind
    macros: tuple[tuple[int, int], ...]
    literal_parts: tuple[str, ...]  # len(macros) + 1 pieces around the macro sites
    has_body: bool = True

    def __post_init__(self):
        if len(self.literal_parts) != len(self.macros) + 1:
            raise ValueError("literal_parts must surround every macro")

    @property
    def max_column(self) -> int:
        return max((c for _, c in self.macros), default=-1)

    def to_line(self) -> str:
        if not self.has_body:
            return self.id
        body = self.literal_parts[0]
        for (row, col), lit in zip(self.macros, self.literal_parts[1:]):
            body += f"%x[{row},{col}]{lit}"
        return f"{self.id}:{body}"


@dataclass(frozen=True)
class TemplateSet:
    templates: tuple[Template, ...]

    def __iter__(self):
        return iter(self.templates)

    def __len__(self) -> int:
        return len(self.templates)

    @property
    def unigrams(self) -> tuple[Template, ...]:
        return tuple(t for t in self.templates if t.kind is Kind.UNIGRAM)

    @property
    def bigrams(self) -> tuple[Template, ...]:
        return tuple(t for t in self.templates if t.kind is Kind.BIGRAM)

    def to_text(self) -> str:
        return "".join(t.to_line() + "\n" for t in self.templates)

    def validate(self, num_columns: int = NUM_COLUMNS) -> None:
        """Reject templates addressing columns the layout lacks, or sets with no unigram."""
        for t in self.templates:
            if t.max_column >= num_columns:
                raise LayoutError(
                    f"template {t.id} references column {t.max_column}, "
                    f"observation layout has {num_columns} columns"
                )
        if not self.unigrams:
            raise LayoutError("template set has no unigram template")


def _parse_line(line: str, lineno: int) -> Template:
    if "\t" in line:
        raise FormatError("tab inside template", line=lineno)
    ident, colon, body = line.partition(":")
    ident = ident.strip()
    if not ident or ident[0] not in "UB":
        raise FormatError(f"template id must start with U or B: {ident!r}", line=lineno)
    if not colon:
        if "%" in ident or " " in ident:
            raise FormatError(f"malformed template {line!r}", line=lineno)
        return Template(ident, Kind(ident[0]), (), ("",), has_body=False)
    macros = []
    literals = []
    pos = 0
    for m in _MACRO.finditer(body):
        literals.append(body[pos:m.start()])
        macros.append((int(m.group(1)), int(m.group(2))))
        pos = m.end()
    literals.append(body[pos:])
    for lit in literals:
        if "%" in lit:
            raise FormatError(f"malformed or unsupported macro in {line!r}", line=lineno)
    return Template(ident, Kind(ident[0]), tuple(macros), tuple(literals))


def parse_templates(text: str) -> TemplateSet:
    templates = []
    seen = set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r").strip()
        if not line or line.startswith("#"):
            continue
        tpl = _parse_line(line, lineno)
        if tpl.id in seen:
            raise FormatError(f"duplicate template id {tpl.id}", line=lineno)
        seen.add(tpl.id)
        templates.append(tpl)
    return TemplateSet(tuple(templates))


def _cell(matrix: ObservationMatrix, t: int, row: int, col: int) -> str:
    i = t + row
    if i < 0:
        return f"_B{i}"
    n = len(matrix.rows)
    if i >= n:
        return f"_B+{i - n + 1}"
    return matrix.rows[i][col]


def expand(tpl: Template, matrix: ObservationMatrix, t: int) -> str:
    if not tpl.has_body:
        return tpl.id
    if tpl.max_column >= matrix.num_columns:
        raise LayoutError(f"template {tpl.id} references column {tpl.max_column}, "
                          f"matrix has {matrix.num_columns}")
    parts = [tpl.id, ":", tpl.literal_parts[0]]
    for (row, col), lit in zip(tpl.macros, tpl.literal_parts[1:]):
        parts.append(_cell(matrix, t, row, col))
        parts.append(lit)
    return "".join(parts)


def expand_all(templates: Iterable[Template], matrix: ObservationMatrix, t: int) -> list[str]:
    return [expand(tpl, matrix, t) for tpl in templates]


def default_template_text() -> str:
    return resources.files("mixtag").joinpath("data/default.tpl").read_text(encoding="utf-8")


def default_template_set() -> TemplateSet:
    return parse_templates(default_template_text())


def generate_default_template_text() -> str:
    """Source of ``data/default.tpl``; kept so the shipped file can be regenerated and checked."""
    lex_cols = list(range(COL_LEX, COL_LEX + 9))
    out = ["# Default feature templates for word-level language identification.",
           "# Column layout: see mixtag.features.", ""]
    n = 0

    def add(body: str) -> None:
        nonlocal n
        out.append(f"U{n:02d}:{body}")
        n += 1

    out.append("# token window, previous 3 to next 3")
    for r in range(-3, 4):
        add(f"%x[{r},0]")
    out.append("# token length")
    add("%x[0,1]")
    out.append("# capitalization, character and dictionary flags, NE flags")
    for c in range(2, NUM_COLUMNS):
        add(f"%x[0,{c}]")
    out.append("# relational dictionary features over every pair of languages")
    for i, a in enumerate(lex_cols):
        for b in lex_cols[i + 1:]:
            add(f"%x[0,{a}]/%x[0,{b}]")
    out.append("# relational NE feature: gazetteer / external tagger")
    add(f"%x[0,{COL_NE}]/%x[0,{COL_NE + 1}]")
    out.append("# dictionary signature of the neighbouring tokens")
    for r in (-1, 1):
        add("/".join(f"%x[{r},{c}]" for c in lex_cols))
    out.append("")
    out.append("# label bigram")
    out.append("B")
    return "\n".join(out) + "\n"
