"""Reproduce the attributed-graph benchmark table: per kernel, baseline test
accuracy vs the fused model at sweep-selected fusion weights, 10 seeds each.

Run:
    python3 scripts/reproduce_attributed.py --datasets cora citeseer pubmed

Expects imported dataset directories under --data-root (see README).
Pretraining runs once per dataset and is cached next to the data; pass
--workers N to speed it up (cached embeddings are reused afterwards, but
parallel pretraining itself is not bit-reproducible).
"""

import argparse
from dataclasses import replace

import numpy as np

from common import attributed_inputs, dataset_dir, fmt_accs, load_dataset
from ggnn.model import ggnn_train, prepare_fusion_inputs, sweep_alpha_beta
from ggnn.presets import DEFAULT_GRID, train_preset


def seed_accs(inputs, graph, cfg, seeds):
    return [ggnn_train(inputs, graph, replace(cfg, seed=s)).test_acc
            for s in range(seeds)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-root", default="data")
    ap.add_argument("--datasets", nargs="+", default=["cora"])
    ap.add_argument("--kernels", nargs="+", default=["gcn", "sage", "appnp"])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    rows = []
    for name in args.datasets:
        path = dataset_dir(args.data_root, name)
        graph = load_dataset(path)
        print(f"{name}: n={graph.n}, attributes={graph.num_attributes}, "
              f"classes={graph.num_classes}", flush=True)
        raw = prepare_fusion_inputs(graph)
        fused = attributed_inputs(path, graph, workers=args.workers)
        for kernel in args.kernels:
            base = seed_accs(raw, graph, train_preset(kernel), args.seeds)
            print(f"  {kernel} baseline: {fmt_accs(base)}", flush=True)
            sweep = sweep_alpha_beta(fused, graph, train_preset(kernel),
                                     list(DEFAULT_GRID))
            cfg = train_preset(kernel, alpha=sweep.best.alpha, beta=sweep.best.beta)
            acc = seed_accs(fused, graph, cfg, args.seeds)
            print(f"  g-{kernel} (alpha={sweep.best.alpha}, beta={sweep.best.beta}): "
                  f"{fmt_accs(acc)}", flush=True)
            rows.append((name, kernel, base, acc, sweep.best.alpha, sweep.best.beta))

    print(f"\n{'dataset':<10} {'kernel':<7} {'baseline':<16} {'fused':<16} alpha  beta")
    for name, kernel, base, acc, a, b in rows:
        print(f"{name:<10} {kernel:<7} {fmt_accs(base):<16} {fmt_accs(acc):<16} "
              f"{a:<6g} {b:g}")
        delta = 100 * (np.mean(acc) - np.mean(base))
        print(f"{'':<18} delta {delta:+.2f}")


if __name__ == "__main__":
    main()
