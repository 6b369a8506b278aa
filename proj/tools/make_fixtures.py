#!/usr/bin/env python3
"""Regenerate the small data/ fixtures: a 12-word text vector file, its
binary subword-bucket companion (u64 LE B, u64 LE m, then B*m f32 LE), and a
tiny corpus covered exactly by those words. Deterministic."""

import random
import struct

WORDS = ["the", "cat", "dog", "sat", "ran", "on", "mat", "rug", "a", "and", "big", "small"]
DIM = 6
BUCKETS = 64

CORPUS = """\
the cat sat on the mat
the dog ran on the rug
a big cat and a small dog
the small dog sat and the big cat ran
a cat ran on a rug
the dog and the cat sat on a mat
"""


def main() -> None:
    rng = random.Random(1729)

    with open("data/tiny_vectors.txt", "w", encoding="utf-8") as f:
        f.write(f"{len(WORDS)} {DIM}\n")
        for w in WORDS:
            vals = [round(rng.uniform(-1, 1), 3) for _ in range(DIM)]
            f.write(w + " " + " ".join(repr(v) for v in vals) + "\n")

    scale = 1.0 / DIM ** 0.5
    with open("data/tiny_vectors.buckets", "wb") as f:
        f.write(struct.pack("<QQ", BUCKETS, DIM))
        for _ in range(BUCKETS * DIM):
            f.write(struct.pack("<f", rng.gauss(0.0, scale)))

    with open("data/tiny_corpus.txt", "w", encoding="utf-8") as f:
        f.write(CORPUS)

    print(f"{len(WORDS)} vectors (dim {DIM}), {BUCKETS} buckets, corpus written")


if __name__ == "__main__":
    main()
