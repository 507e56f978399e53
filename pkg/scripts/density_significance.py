"""Edit density per corpus and permutation-test p-values against the first one.

With no arguments, two synthetic M2 corpora are generated: one at 0.0922
edits per token and a denser one.
"""

import argparse
import random

from gecforge.corpus import AnnotatedPair, Edit, read_m2_file
from gecforge.evalstats import edit_density, permutation_test, sentence_densities


def synthetic(counts, length, seed):
    rng = random.Random(seed)
    rng.shuffle(counts)
    return [
        AnnotatedPair(("w",) * length, ((0, tuple(Edit(i, i + 1, ("v",)) for i in sorted(rng.sample(range(length), k)))),))
        for k in counts
    ]


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("m2", nargs="*")
    p.add_argument("--rounds", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    if args.m2:
        groups = [(path, read_m2_file(path)) for path in args.m2]
    else:
        groups = [
            ("sparse", synthetic([4] * 39 + [5] * 61, 50, 0)),
            ("dense", synthetic([6] * 50 + [7] * 50, 50, 1)),
        ]
    base = sentence_densities(groups[0][1])
    for i, (name, pairs) in enumerate(groups):
        line = f"{name:<12} sentences={len(pairs):<6} density={edit_density(pairs):.4f}"
        if i:
            line += f"  p={permutation_test(base, sentence_densities(pairs), args.rounds, args.seed):.4g}"
        print(line)


if __name__ == "__main__":
    main()
