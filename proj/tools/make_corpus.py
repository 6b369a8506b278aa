#!/usr/bin/env python3
"""Regenerate data/corpus_100k.txt: ~100K tokens, Zipf-shaped frequencies,
one document per line, with a guaranteed long tail of hapax words. Fully
deterministic — rerunning produces the identical file."""

import random

OUT = "data/corpus_100k.txt"
BASE_TYPES = 2500
HAPAX = 1500
TARGET_TOKENS = 98_500
ZIPF_S = 1.07

ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
          "br", "dr", "gr", "kr", "pl", "st", "tr"]
VOWELS = ["a", "e", "i", "o", "u", "ai", "ei", "ou"]
CODAS = ["", "n", "r", "s", "t", "l", "k", "m"]


def word_for(i: int) -> str:
    """Pronounceable synthetic word, unique per index."""
    parts = []
    n = i
    for _ in range(2 + (i % 3)):
        parts.append(ONSETS[n % len(ONSETS)])
        n //= len(ONSETS)
        parts.append(VOWELS[n % len(VOWELS)])
        n //= len(VOWELS)
    parts.append(CODAS[i % len(CODAS)])
    return "".join(parts) + str(i % 97)


def main() -> None:
    rng = random.Random(20240817)
    vocab = [word_for(i) for i in range(BASE_TYPES)]
    weights = [1.0 / (r + 2.7) ** ZIPF_S for r in range(BASE_TYPES)]

    tokens = rng.choices(vocab, weights=weights, k=TARGET_TOKENS)
    # Hapax tail: each of these appears exactly once in the whole corpus.
    hapax = ["xq" + word_for(BASE_TYPES + i) for i in range(HAPAX)]
    for w in hapax:
        tokens.insert(rng.randrange(len(tokens) + 1), w)

    lines = []
    i = 0
    while i < len(tokens):
        n = rng.randint(10, 18)
        lines.append(" ".join(tokens[i:i + n]))
        i += n

    with open(OUT, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")

    types = len(set(tokens))
    print(f"{len(tokens)} tokens, {types} types, {len(lines)} lines -> {OUT}")


if __name__ == "__main__":
    main()
