"""Training the CRF on a synthetic code-mixed corpus and tagging new queries.

Two invented languages with disjoint vocabularies stand in for Bengali and
English.  A word shared by both ("take") is resolved from its neighbours.

Run:  python3 demos/03_train_and_tag.py
"""
import time

from mixtag.corpus import LabeledCorpus, Utterance, tokenize_query
from mixtag.crf import TrainConfig, load_model, save_model, train
from mixtag.lexicons import ResourceBundle, build_gazetteer_from_corpus, build_wordlists_from_corpus
from mixtag.synthetic import code_mixed_corpus, concat, pseudo_vocabularies, shared_word_corpus
from mixtag.templates import default_template_set

vocab = pseudo_vocabularies(200, seed=1)
train_set = concat(code_mixed_corpus(vocab, 200, seed=2), shared_word_corpus(vocab, "take", 40, seed=4))
bundle = ResourceBundle.from_parts(build_wordlists_from_corpus(train_set),
                                   gazetteer=build_gazetteer_from_corpus(train_set))

start = time.perf_counter()
model = train(train_set, default_template_set(), bundle, TrainConfig(l2=1.0))
print(f"trained in {time.perf_counter() - start:.2f}s: {model.iterations} iterations, "
      f"objective {model.objective:.4f}, {model.index.num_weights} weights")

bn, en = vocab["bn"], vocab["en"]
queries = [
    f"{bn[0]} {bn[1]} {bn[2]} take {bn[3]} {bn[4]}",
    f"{en[0]} {en[1]} {en[2]} take {en[3]} {en[4]}",
    f"{en[5]} {en[6]} {bn[7]} {bn[8]}",
]
corpus = LabeledCorpus(tuple(tokenize_query(q) for q in queries), labeled=False)
for utt, labels in zip(corpus, model.tag(corpus, bundle)):
    print("  ".join(f"{w}/{y}" for w, y in zip(utt.surfaces, labels)))

# The model file is plain text and round-trips exactly.
text = save_model(model)
assert save_model(load_model(text)) == text
print("\nmodel file head:")
print("\n".join(text.splitlines()[:6]))
