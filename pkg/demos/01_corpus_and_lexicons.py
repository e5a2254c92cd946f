"""Reading a tagged corpus and building dictionary resources from it.

Run:  python3 demos/01_corpus_and_lexicons.py
"""
from mixtag.corpus import parse_corpus, write_tagged
from mixtag.lexicons import (ResourceBundle, build_gazetteer_from_corpus,
                             build_wordlists_from_corpus, default_emoticons, load_frequency_list)

TEXT = """\
Ami\tbn
take\ten
Kolkata\tNE
jabo\tbn

this\ten
song\ten
is\ten
valo\tbn
"""

corpus = parse_corpus(TEXT)
print(f"{len(corpus.utterances)} utterances, {corpus.num_tokens} tokens")
for utt in corpus:
    print("  ", list(zip(utt.surfaces, utt.gold)))

# Wordlists come straight from gold labels; NE tokens feed the gazetteer.
wordlists = build_wordlists_from_corpus(corpus)
gazetteer = build_gazetteer_from_corpus(corpus)
print("bn wordlist:", sorted(wordlists["bn"].entries))
print("gazetteer:  ", sorted(gazetteer.entries))

# External frequency lists can be mixed in; the cutoff drops rare entries.
hindi = load_frequency_list("pyaar\t12\nhai\t40\nzindagi\t1\n", name="hi", min_frequency=2)
wordlists["hi"] = hindi
print("hi after cutoff:", sorted(hindi.entries))

bundle = ResourceBundle.from_parts(wordlists, default_emoticons(), gazetteer)
print("'KOLKATA' in gazetteer (case-folded):", "KOLKATA" in bundle.gazetteer)
print("':)' is an emoticon:", ":)" in bundle.emoticons)

# Writing back gives the same text.
assert parse_corpus(write_tagged(corpus, corpus.gold())) == corpus
print(write_tagged(corpus, corpus.gold()))
