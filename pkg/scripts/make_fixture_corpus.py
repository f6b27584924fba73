"""Write a synthetic corpus (manifest, JSONL records, rendered PNGs) for trying the CLI.

    python scripts/make_fixture_corpus.py out/demo --screenshots 8 --seed 1
    python scripts/make_fixture_corpus.py out/dups --dedup
"""

import argparse
import json

from groundkit import synthetic


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", help="output directory")
    ap.add_argument("--screenshots", type=int, default=5)
    ap.add_argument("--min-elements", type=int, default=10)
    ap.add_argument("--max-elements", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-images", action="store_true", help="skip rendering PNGs")
    ap.add_argument("--dedup", action="store_true", help="write the 100-element near-duplicate fixture instead")
    args = ap.parse_args()

    if args.dedup:
        corpus, truth = synthetic.dedup_fixture(args.out, seed=args.seed)
        with open(f"{args.out}/truth.json", "w", encoding="utf-8") as fh:
            json.dump(truth, fh, indent=2, sort_keys=True)
    else:
        corpus = synthetic.random_corpus(
            args.out,
            n_screenshots=args.screenshots,
            elements=(args.min_elements, args.max_elements),
            seed=args.seed,
            images=not args.no_images,
        )
    print(f"{args.out}: {len(corpus.screenshots)} screenshots, {len(corpus.elements)} elements")


if __name__ == "__main__":
    main()
