"""Command-line front end: build-lexicons, features, train, tag, eval.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import crf
from .corpus import DEFAULT_LABELS, LANGUAGES, LabeledCorpus, parse_corpus, write_tagged
from .errors import (ConfigError, EmptyLexiconError, FormatError, LayoutError, MixtagError,
                     NumericError, ShapeError)
from .evaluation import evaluate, render_report
from .features import FeatureOptions, build_observation_matrix
from .lexicons import (Lexicon, ResourceBundle, build_gazetteer_from_corpus,
                       build_wordlists_from_corpus, default_emoticons, load_frequency_list,
                       load_line_list, load_pair_list)
from .templates import default_template_set, parse_templates

logger = logging.getLogger("mixtag")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# defaults for options that may also come from a --config file
DEFAULTS = {
    "resources": None,
    "lexicon": [],
    "emoticons": None,
    "gazetteer": None,
    "min_frequency": 1,
    "template": "default",
    "l2": 1.0,
    "max_iters": 200,
    "tol": 1e-5,
    "min_count": 1,
    "ngrams": 0,
    "ascii_only": False,
    "labels": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FormatError("no such file", path=path) from None
    except UnicodeDecodeError as exc:
        raise FormatError(f"not valid UTF-8 ({exc.reason})", path=path) from None


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _with_path(fn, path, *args, **kw):
    try:
        return fn(_read(path), *args, **kw)
    except FormatError as exc:
        raise exc.with_path(path) from None
    except EmptyLexiconError as exc:
        raise FormatError(str(exc), path=path) from None


def _merge_config(args) -> argparse.Namespace:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(_read(args.config))
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=args.config) from None
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) in (None, []):
            setattr(args, key, cfg.get(key, default))
    return args


def _label_set(args) -> tuple[str, ...]:
    if args.labels:
        labels = args.labels if isinstance(args.labels, list) else args.labels.split(",")
        return tuple(l.strip() for l in labels if l.strip())
    return DEFAULT_LABELS


def _load_lexicon(spec: str, min_frequency: int) -> tuple[str, Lexicon]:
    lang, sep, rest = spec.partition("=")
    if not sep or lang not in LANGUAGES:
        raise ConfigError(f"--lexicon expects LANG=[FORMAT:]PATH with LANG in {','.join(LANGUAGES)}, got {spec!r}")
    fmt, sep, path = rest.partition(":")
    if not sep or fmt not in ("freq", "pairs", "lines"):
        fmt, path = "lines", rest
    if fmt == "freq":
        lex = _with_path(load_frequency_list, path, name=lang, min_frequency=min_frequency)
    elif fmt == "pairs":
        lex = _with_path(load_pair_list, path, name=lang)
    else:
        lex = _with_path(load_line_list, path, True, name=lang)
    return lang, lex


def _load_bundle(args) -> ResourceBundle:
    per_language: dict[str, Lexicon] = {}
    emoticons = gazetteer = None
    if args.resources:
        root = Path(args.resources)
        if not root.is_dir():
            raise FormatError("resource directory not found", path=str(root))
        for lang in LANGUAGES:
            p = root / f"{lang}.txt"
            if p.exists():
                per_language[lang] = _with_path(load_line_list, str(p), True, name=lang)
        if (root / "gazetteer.txt").exists():
            gazetteer = _with_path(load_line_list, str(root / "gazetteer.txt"), True, name="gazetteer")
        if (root / "emoticons.txt").exists():
            emoticons = _with_path(load_line_list, str(root / "emoticons.txt"), False, name="emoticons")
    for spec in args.lexicon or []:
        lang, lex = _load_lexicon(spec, args.min_frequency)
        if lang in per_language:
            lex = Lexicon(lang, per_language[lang].entries | lex.entries, True)
        per_language[lang] = lex
    if args.gazetteer:
        gazetteer = _with_path(load_line_list, args.gazetteer, True, name="gazetteer")
    if args.emoticons:
        emoticons = _with_path(load_line_list, args.emoticons, False, name="emoticons")
    if emoticons is None:
        emoticons = default_emoticons()
    if gazetteer is None:
        logger.warning("no gazetteer; NE1 will be constant 0")
    return ResourceBundle.from_parts(per_language, emoticons, gazetteer)


def _load_corpus(path: str, expect_labels: bool, labels) -> LabeledCorpus:
    corpus = _with_path(parse_corpus, path, expect_labels, labels)
    if not corpus.utterances:
        raise FormatError("corpus contains no utterances", path=path)
    return corpus


# --------------------------------------------------------------------------
# subcommands

def cmd_build_lexicons(args) -> int:
    corpus = _load_corpus(args.corpus, True, _label_set(args))
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    skipped = []
    for lang, lex in build_wordlists_from_corpus(corpus).items():
        if len(lex):
            (out / f"{lang}.txt").write_text(lex.to_text(), encoding="utf-8")
            print(f"{lang}\t{len(lex)} words")
        else:
            skipped.append(lang)
    if skipped:
        logger.warning("no tokens for %s in %s; wordlists not written", ", ".join(skipped), args.corpus)
    gaz = build_gazetteer_from_corpus(corpus)
    if len(gaz):
        (out / "gazetteer.txt").write_text(gaz.to_text(), encoding="utf-8")
        print(f"gazetteer\t{len(gaz)} names")
    else:
        logger.warning("no NE tokens in %s; gazetteer not written", args.corpus)
    return EXIT_OK


def _feature_options(args) -> FeatureOptions:
    return FeatureOptions(ngram_max=int(args.ngrams), ascii_only=bool(args.ascii_only))


def cmd_features(args) -> int:
    corpus = _load_corpus(args.corpus, args.labeled, _label_set(args))
    bundle = _load_bundle(args)
    options = _feature_options(args)
    blocks = []
    for utt in corpus:
        matrix = build_observation_matrix(utt, bundle, options)
        blocks.append(matrix.to_tsv(utt.gold if corpus.labeled else None))
    _write(args.output, "\n".join(blocks))
    return EXIT_OK


def _load_templates(name: str):
    if name == "default":
        return default_template_set()
    return _with_path(parse_templates, name)


def cmd_train(args) -> int:
    corpus = _load_corpus(args.corpus, True, _label_set(args))
    bundle = _load_bundle(args)
    templates = _load_templates(args.template)
    templates.validate()
    config = crf.TrainConfig(l2=float(args.l2), max_iters=int(args.max_iters),
                             tol=float(args.tol), min_count=int(args.min_count))
    model = crf.train(corpus, templates, bundle, config, _feature_options(args))
    _write(args.output, crf.save_model(model))
    print(f"final objective {model.objective:.6f}, iterations {model.iterations}"
          + ("" if model.converged else " (not converged)"))
    return EXIT_OK


def cmd_tag(args) -> int:
    model = _with_path(crf.load_model, args.model)
    model.templates.validate()
    corpus = _load_corpus(args.corpus, args.gold_column, _label_set(args))
    if corpus.labeled:
        corpus = corpus.strip_labels()
    bundle = _load_bundle(args)
    predictions = model.tag(corpus, bundle)
    _write(args.output, write_tagged(corpus, predictions))
    return EXIT_OK


def cmd_eval(args) -> int:
    labels = _label_set(args)
    gold = _load_corpus(args.gold, True, labels)
    pred = _load_corpus(args.predicted, True, labels)
    for i, (g, p) in enumerate(zip(gold, pred)):
        if g.surfaces != p.surfaces:
            raise ShapeError(f"utterance {i}: token mismatch between gold and predicted files", index=i)
    report = evaluate(gold.gold(), pred.gold(), labels)
    _write(args.output, render_report(report, "csv" if args.csv else "text"))
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing

def _add_resource_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("resources")
    g.add_argument("--resources", metavar="DIR",
                   help="directory with <lang>.txt wordlists, gazetteer.txt, emoticons.txt")
    g.add_argument("--lexicon", action="append", metavar="LANG=[FORMAT:]PATH",
                   help="extra lexicon; FORMAT is freq, pairs or lines (default)")
    g.add_argument("--emoticons", metavar="PATH")
    g.add_argument("--gazetteer", metavar="PATH")
    g.add_argument("--min-frequency", type=int, help="cutoff for frequency lists (default 1)")


def _add_feature_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ngrams", type=int, metavar="N", help="add character n-grams up to N (off by default)")
    p.add_argument("--ascii-only", action="store_true", default=None,
                   help="ASCII-only letter and case tests")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixtag", description="Word-level language identification for code-mixed queries.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", metavar="FILE", help="JSON file of option defaults; flags win")
        p.add_argument("--labels", help="comma-separated label set")
        p.add_argument("--seed", type=int, help="accepted for compatibility; training is deterministic")

    p = sub.add_parser("build-lexicons", help="derive wordlists and gazetteer from a labeled corpus")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True, metavar="DIR")
    common(p)
    p.set_defaults(func=cmd_build_lexicons)

    p = sub.add_parser("features", help="dump observation matrices as TSV")
    p.add_argument("corpus")
    p.add_argument("-o", "--output")
    p.add_argument("--labeled", action="store_true", help="input has a gold column; append it")
    common(p)
    _add_resource_args(p)
    _add_feature_args(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a CRF model")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True, metavar="MODEL")
    p.add_argument("--template", metavar="PATH", help="template file or 'default'")
    p.add_argument("--l2", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--min-count", type=int)
    common(p)
    _add_resource_args(p)
    _add_feature_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="tag a corpus with a trained model")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("-o", "--output")
    p.add_argument("--gold-column", action="store_true", help="input carries gold labels; ignore them")
    common(p)
    _add_resource_args(p)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("gold")
    p.add_argument("predicted")
    p.add_argument("--csv", action="store_true")
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(func=cmd_eval)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        args = _merge_config(args)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"mixtag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"mixtag: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MixtagError, ValueError) as exc:
        print(f"mixtag: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"mixtag: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
