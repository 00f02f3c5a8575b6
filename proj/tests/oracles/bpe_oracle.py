#!/usr/bin/env python3
"""Reference byte-pair-encoding learner used to produce golden model files.

Written independently of the C++ code: each step recounts adjacent pairs
from scratch and picks the most frequent one, resolving ties with the
smallest (left, right) pair. The vocabulary is the count of every emitted
subword after segmenting each word type with the learned merges.

usage: bpe_oracle.py CORPUS NUM_MERGES > MODEL
"""
import sys
from collections import Counter

EOW = "</w>"
JOIN = "@@"
RESERVED = ["_BREAK_"]
RESERVED_PREFIX = "cc_"


def reserved(tok):
    return tok in RESERVED or tok.startswith(RESERVED_PREFIX)


def word_counts(lines):
    counts = Counter()
    for line in lines:
        for tok in line.split(" "):
            if tok and not reserved(tok):
                counts[tok] += 1
    return counts


def initial(word):
    syms = list(word)
    syms[-1] += EOW
    return syms


def merge_word(syms, pair):
    out, i = [], 0
    while i < len(syms):
        if i + 1 < len(syms) and (syms[i], syms[i + 1]) == pair:
            out.append(syms[i] + syms[i + 1])
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def key(pair):
    return (pair[0].encode("utf-8"), pair[1].encode("utf-8"))


def learn(counts, num_merges):
    words = {w: initial(w) for w in counts}
    merges = []
    for _ in range(num_merges):
        pairs = Counter()
        for w, syms in words.items():
            for a, b in zip(syms, syms[1:]):
                pairs[(a, b)] += counts[w]
        if not pairs:
            break
        top = max(pairs.values())
        best = min((p for p, c in pairs.items() if c == top), key=key)
        merges.append(best)
        words = {w: merge_word(s, best) for w, s in words.items()}
    return merges


def segment(word, merges):
    ranks = {p: r for r, p in enumerate(merges)}
    syms = initial(word)
    while len(syms) > 1:
        cands = [ranks[p] for p in zip(syms, syms[1:]) if p in ranks]
        if not cands:
            break
        syms = merge_word(syms, merges[min(cands)])
    out = []
    for i, s in enumerate(syms):
        if i + 1 == len(syms):
            out.append(s[: -len(EOW)] if s.endswith(EOW) else s)
        else:
            out.append(s + JOIN)
    return out


def main():
    path, n = sys.argv[1], int(sys.argv[2])
    with open(path, encoding="utf-8") as f:
        lines = [l.rstrip("\n") for l in f]
    counts = word_counts(lines)
    merges = learn(counts, n)
    vocab = Counter()
    for w, c in counts.items():
        for piece in segment(w, merges):
            vocab[piece] += c
    out = sys.stdout.buffer
    header = "#ctxnmt-bpe version=1 eow=%s join=%s reserved=%s reserved_prefix=%s merges=%d vocab=%d\n" % (
        EOW, JOIN, ",".join(RESERVED), RESERVED_PREFIX, len(merges), len(vocab))
    out.write(header.encode("utf-8"))
    for a, b in merges:
        out.write(("%s %s\n" % (a, b)).encode("utf-8"))
    for piece in sorted(vocab, key=lambda s: s.encode("utf-8")):
        out.write(("%s\t%d\n" % (piece, vocab[piece])).encode("utf-8"))


if __name__ == "__main__":
    main()
