"""Measure constraint-violation rates of masked decoding on random toy specs.

For each random spec, runs seeded mock decodes under three vocabulary styles
(single characters, two-character merges, boundary-spanning tokens) and checks
every emission against the spec. Expected result: 0.00% on every constraint.
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import genutil

from apicheck.constraints import check, format_summary, violation_rates
from apicheck.decode import mock_decode


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--specs", type=int, default=10, help="number of random specs")
    parser.add_argument("--runs-per-vocab", type=int, default=34)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--max-string-len", type=int, default=8)
    parser.add_argument("--max-depth", type=int, default=3)
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    reports = []
    start = time.perf_counter()
    for spec_idx in range(args.specs):
        spec, _calls = genutil.random_corpus_spec(rng, n_calls=12)
        styles = {
            "char": genutil.char_vocab(spec),
            "merge": genutil.merge_vocab(spec, rng),
            "span": genutil.spanning_vocab(spec, rng),
        }
        for style, vocab in styles.items():
            for seed in range(args.runs_per_vocab):
                text = mock_decode(
                    spec, vocab, seed,
                    max_steps=6000,
                    max_string_len=args.max_string_len,
                    max_depth=args.max_depth,
                )
                report = check(text, spec)
                reports.append(report)
                if report.signature.as_tuple() != (1, 1, 1, 1):
                    print(f"VIOLATION spec={spec_idx} style={style} seed={seed}: {text}")
    elapsed = time.perf_counter() - start
    print(f"runs: {len(reports)}  elapsed: {elapsed:.2f}s")
    print(format_summary(violation_rates(reports)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
