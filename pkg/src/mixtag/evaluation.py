"""Token-level evaluation: confusion matrix, per-label P/R/F and aggregate scores.

Matching is strict: a token counts as correct only if its predicted label
equals the gold label exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import DEFAULT_LABELS, Label
from .errors import ShapeError


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    labels: tuple[Label, ...]
    counts: np.ndarray  # counts[gold, predicted]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, key: tuple[Label, Label]) -> int:
        g, p = key
        return int(self.counts[self.labels.index(g), self.labels.index(p)])


@dataclass(frozen=True)
class LabelScore:
    precision: float
    recall: float
    f_measure: float
    support: int


@dataclass(frozen=True, eq=False)
class EvalReport:
    per_label: Mapping[Label, LabelScore]
    token_accuracy: float
    utterance_accuracy: float
    macro_f: float
    weighted_f: float
    confusion: ConfusionMatrix

    @property
    def active_labels(self) -> list[Label]:
        """Labels occurring in gold or predictions, in configured order."""
        cm = self.confusion
        rows, cols = cm.counts.sum(axis=1), cm.counts.sum(axis=0)
        return [y for i, y in enumerate(cm.labels) if rows[i] + cols[i] > 0]


def _check_shapes(gold: Sequence[Sequence[Label]], pred: Sequence[Sequence[Label]]) -> None:
    if len(gold) != len(pred):
        raise ShapeError(f"gold has {len(gold)} utterances, predictions have {len(pred)}")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ShapeError(f"utterance {i}: {len(g)} gold tokens, {len(p)} predicted", index=i)


def confusion_matrix(gold: Sequence[Sequence[Label]], pred: Sequence[Sequence[Label]],
                     labels: Sequence[Label] = DEFAULT_LABELS) -> ConfusionMatrix:
    _check_shapes(gold, pred)
    labels = tuple(labels)
    ids = {y: i for i, y in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g_seq, p_seq in zip(gold, pred):
        for g, p in zip(g_seq, p_seq):
            try:
                counts[ids[g], ids[p]] += 1
            except KeyError as exc:
                raise ValueError(f"label {exc.args[0]!r} not in label set") from None
    return ConfusionMatrix(labels, counts)


def per_label_prf(cm: ConfusionMatrix) -> dict[Label, LabelScore]:
    rows = cm.counts.sum(axis=1)
    cols = cm.counts.sum(axis=0)
    out = {}
    for i, y in enumerate(cm.labels):
        tp = cm.counts[i, i]
        p = tp / cols[i] if cols[i] else 0.0
        r = tp / rows[i] if rows[i] else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        out[y] = LabelScore(float(p), float(r), float(f), int(rows[i]))
    return out


def aggregate(cm: ConfusionMatrix, gold: Sequence[Sequence[Label]],
              pred: Sequence[Sequence[Label]]) -> EvalReport:
    _check_shapes(gold, pred)
    total = cm.total
    if total == 0:
        raise ValueError("empty evaluation")
    scores = per_label_prf(cm)
    rows = cm.counts.sum(axis=1)
    cols = cm.counts.sum(axis=0)
    active = [y for i, y in enumerate(cm.labels) if rows[i] + cols[i] > 0]
    macro_f = sum(scores[y].f_measure for y in active) / len(active)
    weighted_f = sum(scores[y].support * scores[y].f_measure for y in cm.labels) / total
    utt_ok = sum(list(g) == list(p) for g, p in zip(gold, pred))
    return EvalReport(
        per_label=scores,
        token_accuracy=float(np.trace(cm.counts)) / total,
        utterance_accuracy=utt_ok / len(gold),
        macro_f=float(macro_f),
        weighted_f=float(weighted_f),
        confusion=cm,
    )


def evaluate(gold: Sequence[Sequence[Label]], pred: Sequence[Sequence[Label]],
             labels: Sequence[Label] = DEFAULT_LABELS) -> EvalReport:
    return aggregate(confusion_matrix(gold, pred, labels), gold, pred)


AGGREGATE_ROWS = ("Tokens Accuracy (in %)", "Utterances Accuracy (in %)",
                  "Average F-Measure", "Weighted F-Measure")


def _aggregate_values(report: EvalReport) -> list[str]:
    return [f"{100 * report.token_accuracy:.4f}", f"{100 * report.utterance_accuracy:.4f}",
            f"{report.macro_f:.6f}", f"{report.weighted_f:.6f}"]


def render_report(report: EvalReport, format: str = "text") -> str:
    if format == "text":
        return _render_text(report)
    if format == "csv":
        return _render_csv(report)
    raise ValueError(f"unknown report format {format!r}")


def _render_text(report: EvalReport) -> str:
    labels = report.active_labels
    width = max([len("Language")] + [len(y) for y in labels])
    out = [f"{'Language':<{width}}  Precision  Recall     F-Measure  Support"]
    for y in labels:
        s = report.per_label[y]
        out.append(f"{y:<{width}}  {s.precision:<9.4f}  {s.recall:<9.4f}  {s.f_measure:<9.4f}  {s.support}")
    out.append("")
    name_w = max(len(n) for n in AGGREGATE_ROWS)
    for name, value in zip(AGGREGATE_ROWS, _aggregate_values(report)):
        out.append(f"{name:<{name_w}}  {value}")
    out.append("")
    cm = report.confusion
    idx = [cm.labels.index(y) for y in labels]
    cells = [[str(cm.counts[i, j]) for j in idx] for i in idx]
    cw = max([width] + [len(c) for row in cells for c in row] + [len(y) for y in labels])
    out.append("gold\\pred " + " ".join(f"{y:>{cw}}" for y in labels))
    for y, row in zip(labels, cells):
        out.append(f"{y:<9} " + " ".join(f"{c:>{cw}}" for c in row))
    return "\n".join(out) + "\n"


def _render_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "precision", "recall", "f_measure", "support"])
    for y in report.confusion.labels:
        s = report.per_label[y]
        w.writerow([y, f"{s.precision:.6f}", f"{s.recall:.6f}", f"{s.f_measure:.6f}", s.support])
    buf.write("\n")
    w.writerow(["metric", "value"])
    for name, value in zip(AGGREGATE_ROWS, _aggregate_values(report)):
        w.writerow([name, value])
    buf.write("\n")
    cm = report.confusion
    w.writerow(["gold\\pred"] + list(cm.labels))
    for y, row in zip(cm.labels, cm.counts):
        w.writerow([y] + [int(c) for c in row])
    return buf.getvalue()
