#!/usr/bin/env python3
"""Regenerates the oracle-derived fixtures and fails if a committed copy differs."""
import pathlib
import subprocess
import sys

here = pathlib.Path(__file__).resolve().parent
data = pathlib.Path(sys.argv[1])

jobs = [
    (["bpe_oracle.py", "bpe_corpus.txt", "40"], "bpe_golden_40.model"),
    (["bpe_oracle.py", "bpe_corpus.txt", "200"], "bpe_golden_200.model"),
    (["bpe_oracle.py", "bpe_corpus_en.txt", "80"], "bpe_golden_en_80.model"),
    (["metrics_oracle.py", "metric_pairs.hyp", "metric_pairs.ref", "metric_pairs.docs"], "metric_values.tsv"),
]
failed = 0
for args, golden in jobs:
    cmd = [sys.executable, str(here / args[0])] + [a if a.isdigit() else str(data / a) for a in args[1:]]
    produced = subprocess.run(cmd, check=True, capture_output=True).stdout
    if produced != (data / golden).read_bytes():
        print("MISMATCH", golden)
        failed += 1
    else:
        print("ok", golden)
sys.exit(1 if failed else 0)
