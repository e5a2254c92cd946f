"""Word-level language identification for Roman-script code-mixed queries.

Lexicon-driven features feed a linear-chain CRF; see the submodules:

- :mod:`mixtag.corpus` -- corpus and query I/O
- :mod:`mixtag.lexicons` -- wordlists, emoticons, gazetteer
- :mod:`mixtag.features` -- per-token observation matrix
- :mod:`mixtag.templates` -- feature template language
- :mod:`mixtag.crf` -- training, inference, model files
- :mod:`mixtag.evaluation` -- shared-task metrics
"""
from .corpus import DEFAULT_LABELS, LANGUAGES, LabeledCorpus, Token, Utterance, parse_corpus, tokenize_query, write_tagged
from .crf import CrfModel, TrainConfig, load_model, save_model, train, viterbi_decode
from .evaluation import evaluate, render_report
from .features import FeatureOptions, build_observation_matrix
from .lexicons import Lexicon, ResourceBundle, build_wordlists_from_corpus
from .templates import default_template_set, parse_templates

__version__ = "0.1.0"
