"""Scoring predictions: per-label precision/recall/F, accuracies and the confusion matrix.

Run:  python3 demos/04_evaluation.py
"""
from mixtag.evaluation import evaluate, render_report

gold = [["en", "en", "bn", "hi"], ["bn", "bn", "NE"]]
pred = [["en", "bn", "bn", "hi"], ["bn", "bn", "NE"]]

report = evaluate(gold, pred)
print(render_report(report))

# Numbers are also available directly.
print("token accuracy:", report.token_accuracy)
print("utterances fully correct:", report.utterance_accuracy)
print("en F:", report.per_label["en"].f_measure)
print("confusion[en -> bn]:", report.confusion["en", "bn"])

print("\nCSV form (first lines):")
print("\n".join(render_report(report, "csv").splitlines()[:6]))
