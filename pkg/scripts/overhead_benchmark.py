"""Benchmark per-step cost of masked decoding against unconstrained sampling.

Reports the one-time session build cost separately from the steady-state
per-step cost, and the ratio of constrained to unconstrained step time.
"""

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import genutil

from apicheck.decode import overhead_report


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=17)
    parser.add_argument("--vocab-style", choices=["char", "merge", "span"], default="char")
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    spec, _calls = genutil.random_corpus_spec(rng, n_calls=12)
    vocab = {
        "char": genutil.char_vocab(spec),
        "merge": genutil.merge_vocab(spec, rng),
        "span": genutil.spanning_vocab(spec, rng),
    }[args.vocab_style]

    report = overhead_report(spec, vocab, n_steps=args.steps, seed=args.seed)
    print(f"vocab style: {args.vocab_style} ({len(vocab.tokens)} tokens)")
    print(f"steps: {report.n_steps}")
    print(f"session build time: {report.build_time_s * 1e3:.3f} ms")
    print(f"constrained per-step: {report.constrained_per_step_s * 1e6:.3f} us")
    print(f"baseline per-step:    {report.baseline_per_step_s * 1e6:.3f} us")
    print(f"ratio: {report.ratio:.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
