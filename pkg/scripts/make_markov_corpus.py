#!/usr/bin/env python3
"""Write a clean corpus sampled from the seeded order-2 Markov source.

    python scripts/make_markov_corpus.py --n 1000 --seed 1 --out clean.txt [--confusion conf.tsv]
"""

import argparse

from detcor.core import write_lines
from detcor.corrector import write_confusion
from detcor.desk import markov_corpus, markov_vocabulary, random_confusion


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--vocab-size", type=int, default=50)
    ap.add_argument("--out", required=True)
    ap.add_argument("--confusion", help="also write a random confusion set here")
    args = ap.parse_args()
    write_lines(markov_corpus(args.n, args.seed, args.vocab_size), args.out)
    if args.confusion:
        write_confusion(random_confusion(markov_vocabulary(args.vocab_size), seed=args.seed),
                        args.confusion)


if __name__ == "__main__":
    main()
