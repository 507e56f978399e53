"""Time the noising CLI on a synthetic corpus and check worker-count determinism."""

import argparse
import hashlib
import random
import tempfile
import time
from pathlib import Path

from gecforge.cli import main
from gecforge.noise import EditDictionary

WORDS = "for the a an is are cat cats dog dogs go goes went in on at to of with house houses big red .".split()


def write_corpus(path: Path, lines: int, seed: int) -> None:
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(lines):
            fh.write(" ".join(rng.choices(WORDS, k=rng.randint(3, 12))) + "\n")


def run(args) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        corpus, dict_path = tmp / "corpus.txt", tmp / "dict.json"
        write_corpus(corpus, args.lines, args.seed)
        EditDictionary({"for": (("for", 5), ("four", 4)), "the": (("the", 6), ("a", 4))}).save(dict_path)
        digests = set()
        for workers in args.workers:
            out = tmp / "out.tsv"
            start = time.perf_counter()
            rc = main(["noise", "--corpus", str(corpus), "--dict", str(dict_path), "--out", str(out),
                       "--seed", str(args.seed), "--workers", str(workers), "--reps", str(args.reps)])
            elapsed = time.perf_counter() - start
            if rc:
                raise SystemExit(rc)
            digest = hashlib.sha256(out.read_bytes()).hexdigest()
            digests.add(digest)
            print(f"workers={workers:<3} {args.lines / elapsed:>12,.0f} lines/s  sha256={digest[:16]}")
        print("identical output" if len(digests) == 1 else "OUTPUTS DIFFER")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lines", type=int, default=1_000_000)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--workers", type=int, nargs="+", default=[1, 4, 8])
    p.add_argument("--seed", type=int, default=0)
    run(p.parse_args())
