#!/usr/bin/env python3
"""Brute-force BLEU and chrF reference values for committed sentence pairs.

Counts every n-gram by enumerating all windows and compares them with
explicit loops. Prints one "metric<TAB>value" line per quantity with 17
significant digits.

usage: metrics_oracle.py HYP REF [DOCS]
"""
import math
import sys


def read(path):
    with open(path, encoding="utf-8") as f:
        return [l.rstrip("\n").split(" ") if l.strip("\n") else [] for l in f]


def grams(seq, n):
    return [tuple(seq[i:i + n]) for i in range(len(seq) - n + 1)]


def clipped(h, r):
    used = {}
    m = 0
    for g in h:
        avail = sum(1 for x in r if x == g)
        if used.get(g, 0) < avail:
            used[g] = used.get(g, 0) + 1
            m += 1
    return m


def bleu(hyps, refs):
    matches, totals = [0] * 4, [0] * 4
    hl = rl = 0
    for h, r in zip(hyps, refs):
        hl += len(h)
        rl += len(r)
        for n in range(1, 5):
            hg, rg = grams(h, n), grams(r, n)
            matches[n - 1] += clipped(hg, rg)
            totals[n - 1] += len(hg)
    precs = [m / t if t else 0.0 for m, t in zip(matches, totals)]
    if hl == 0:
        bp = 0.0
    elif hl >= rl:
        bp = 1.0
    else:
        bp = math.exp(1 - rl / hl)
    score = 0.0 if min(precs) == 0 else bp * math.exp(sum(math.log(p) for p in precs) / 4)
    return score, precs, bp


def chrf(hyps, refs, beta=3.0, max_n=6):
    m, ht, rt = [0] * max_n, [0] * max_n, [0] * max_n
    for h, r in zip(hyps, refs):
        hc, rc = list(" ".join(h)), list(" ".join(r))
        for n in range(1, max_n + 1):
            hg, rg = grams(hc, n), grams(rc, n)
            m[n - 1] += clipped(hg, rg)
            ht[n - 1] += len(hg)
            rt[n - 1] += len(rg)
    ps, rs = [], []
    for n in range(max_n):
        if ht[n] == 0 and rt[n] == 0:
            continue
        ps.append(m[n] / ht[n] if ht[n] else 0.0)
        rs.append(m[n] / rt[n] if rt[n] else 0.0)
    if not ps:
        return 0.0, 0.0, 0.0
    p, r = sum(ps) / len(ps), sum(rs) / len(rs)
    b2 = beta * beta
    f = (1 + b2) * p * r / (b2 * p + r) if b2 * p + r > 0 else 0.0
    return f, p, r


def extended(units, docs):
    out = []
    for i, u in enumerate(units):
        seg = list(u)
        if i > 0 and docs[i] == docs[i - 1]:
            seg = list(units[i - 1]) + seg
        out.append([t for t in seg if t != "_BREAK_"])
    return out


def emit(prefix, hyps, refs):
    score, precs, bp = bleu(hyps, refs)
    print("%sbleu\t%.17g" % (prefix, score))
    for n, p in enumerate(precs, 1):
        print("%sbleu_p%d\t%.17g" % (prefix, n, p))
    print("%sbleu_bp\t%.17g" % (prefix, bp))
    f, p, r = chrf(hyps, refs)
    print("%schrf\t%.17g" % (prefix, f))
    print("%schrf_precision\t%.17g" % (prefix, p))
    print("%schrf_recall\t%.17g" % (prefix, r))


def main():
    hyps, refs = read(sys.argv[1]), read(sys.argv[2])
    assert len(hyps) == len(refs)
    emit("", hyps, refs)
    if len(sys.argv) > 3:
        with open(sys.argv[3], encoding="utf-8") as f:
            docs = [l.rstrip("\n") for l in f]
        emit("extended_", extended(hyps, docs), extended(refs, docs))


if __name__ == "__main__":
    main()
