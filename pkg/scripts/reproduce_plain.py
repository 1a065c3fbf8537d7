"""Reproduce the plain-graph protocol: structure embeddings only (no node
attributes), random label splits at increasing labeled fractions, mean test
accuracy per fraction.

Run:
    python3 scripts/reproduce_plain.py --datasets cora --ratios 0.1 0.3 0.5

Works on attributed datasets too (attributes are simply unused); the protocol
needs every node labeled, which holds for the standard citation benchmarks.
"""

import argparse

import numpy as np

from common import dataset_dir, load_dataset, plain_inputs
from ggnn.model import plain_split_experiment
from ggnn.presets import train_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-root", default="data")
    ap.add_argument("--datasets", nargs="+", default=["cora"])
    ap.add_argument("--kernel", default="gcn")
    ap.add_argument("--ratios", nargs="+", type=float,
                    default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    ap.add_argument("--splits", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    for name in args.datasets:
        path = dataset_dir(args.data_root, name)
        graph = load_dataset(path)
        inputs = plain_inputs(path, graph, workers=args.workers)
        cfg = train_preset(args.kernel, mode="plain")
        table = plain_split_experiment(graph, args.ratios, args.splits, cfg, inputs)
        print(f"{name} ({args.kernel}, {args.splits} splits per ratio)")
        for ratio in args.ratios:
            accs = table[ratio]
            print(f"  labeled {100 * ratio:>4.0f}%: mean {100 * np.mean(accs):.2f}, "
                  f"min {100 * min(accs):.2f}, max {100 * max(accs):.2f}")


if __name__ == "__main__":
    main()
