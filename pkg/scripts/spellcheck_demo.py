"""Compare frequency-only and LM-reranked spelling correction on the shipped fixture."""

import argparse

from gecforge.lexicon import default_lexicon
from gecforge.lm import extract_capital_words, train_lm
from gecforge.spellcheck import SpellConfig, Vocab, candidates, correct, detect, fixture_corpus, top_candidate

DEFAULT = [
    "This is an esay about my favorite sport .",
    "We flew to paris last summer .",
]


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("sentences", nargs="*", default=DEFAULT)
    p.add_argument("--lm-weight", type=float, default=1.0)
    args = p.parse_args()

    corpus = [line.split() for line in fixture_corpus()]
    lm = train_lm(corpus)
    vocab = Vocab.from_sentences(corpus, default_lexicon().known_words)
    caps = extract_capital_words(corpus)
    config = SpellConfig(lm_weight=args.lm_weight)
    for line in args.sentences:
        src = tuple(line.split())
        print(f"input : {line}")
        for i in detect(src, vocab):
            print(f"  flagged {src[i]!r}: candidates {candidates(src[i], vocab, config)}")
            print(f"  frequency-only choice: {top_candidate(src[i], vocab, config)!r}")
        fixed, edits = correct(src, lm, vocab, caps, config)
        print(f"output: {' '.join(fixed)}")
        for e in edits:
            print(f"  {e.category} {e.span_start}-{e.span_end} -> {' '.join(e.replacement)}")


if __name__ == "__main__":
    main()
