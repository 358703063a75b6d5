"""
Keywords, language models and rule filtering
============================================

Score keywords as chi2 * frequency * part-of-speech * position, then use
two bigram models to veto rule hits that read like benign text.
"""

import math

from vtdetect.keywords import PosLexicon, extract_keywords
from vtdetect.lm_rules import constrain_with_lm, match_rules, match_score, parse_rules, sentence_logprob, train_lm

from toy_data import toy_corpus

corpus = toy_corpus()
lexicon = PosLexicon({"idiot": "noun", "nazi": "noun", "scum": "noun", "trash": "noun",
                      "kill": "verb", "destroy": "verb", "die": "verb", "hate": "verb",
                      "stupid": "adjective", "filthy": "adjective"})
for s in extract_keywords(corpus, corpus.labels.id_of("1"), k=5, lexicon=lexicon):
    print(f"{s.term:8s} chi2={s.chi2:7.3f} fre={s.fre:.3f} nom={s.nom} pos={s.pos:.3f} -> {s.product:.4f}")

# the toy bigram example: P(the cat sat) = 1 * 1 * 0.5 * 1
toy = train_lm([("the", "cat", "sat"), ("the", "cat", "ran")], n=2, k=0)
print("log P(the cat sat) =", sentence_logprob(toy, ["the", "cat", "sat"]), "=", math.log(0.5))

violent = train_lm(corpus.with_documents([d for d in corpus if d.label == 1]), n=2, k=0.1)
benign = train_lm(corpus.with_documents([d for d in corpus if d.label == 0]), n=2, k=0.1)

rules = parse_rules("insult\tkw:you;any:2;kw:idiot|trash|scum|love\n")
for text in ("you are a idiot", "you are so love", "proves you all scum"):
    for m in match_rules(rules, text.split()):
        kept = constrain_with_lm([m], violent, benign, threshold=0.0)
        print(f"{' '.join(m.tokens):20s} score={match_score(m, violent, benign):+.3f}",
              "kept" if kept else "dropped")
