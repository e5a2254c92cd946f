"""The 23-column observation matrix and how templates turn it into feature strings.

Run:  python3 demos/02_features_and_templates.py
"""
from mixtag.corpus import Token, Utterance
from mixtag.features import COLUMN_NAMES, FeatureOptions, build_observation_matrix
from mixtag.lexicons import Lexicon, ResourceBundle, default_emoticons
from mixtag.templates import default_template_set, expand, parse_templates

bundle = ResourceBundle.from_parts(
    {"en": Lexicon("en", frozenset({"take", "this"})), "bn": Lexicon("bn", frozenset({"ami", "take"}))},
    default_emoticons(),
    Lexicon("gazetteer", frozenset({"kolkata"})),
)
utt = Utterance((Token("Ami"), Token("take"), Token("#aapsweep"), Token(":)"),
                 Token("Kolkata", external_ne=True)))
matrix = build_observation_matrix(utt, bundle)

print("columns:", " ".join(COLUMN_NAMES))
print(matrix.to_tsv())

# A hand-written template file: current word, previous word, a relational
# pair of the en/bn dictionary flags, and the label bigram.
templates = parse_templates("U00:%x[0,0]\nU01:%x[-1,0]\nU02:%x[0,12]/%x[0,13]\nB\n")
for t in range(len(matrix)):
    print(utt.surfaces[t].ljust(10), [expand(tpl, matrix, t) for tpl in templates.unigrams])

print(f"\nshipped default set: {len(default_template_set())} templates, first lines:")
print("\n".join(default_template_set().to_text().splitlines()[:4]))

# Character n-grams are optional and travel alongside the 23 columns.
with_ngrams = build_observation_matrix(utt, bundle, FeatureOptions(ngram_max=2))
print("\nn-gram attributes of 'take':", with_ngrams.extras[1][:6], "...")
