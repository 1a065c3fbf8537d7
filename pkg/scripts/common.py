"""Shared plumbing for the reproduction scripts: dataset discovery and
cached pretraining (same file layout and seed derivation as `ggnn pretrain`,
so the CLI and these scripts can reuse each other's embeddings)."""

import os
import sys
from dataclasses import replace

import numpy as np

from ggnn.graph import load_graph
from ggnn.model import prepare_fusion_inputs
from ggnn.presets import PLAIN_STRUCT_DIM, pretrain_preset
from ggnn.pretrain import (export_embeddings, extract_context_attributes,
                           extract_pairs, generate_walks, import_embeddings,
                           train_attribute_embeddings, train_structure_embeddings)

DATA_FILES = ("edges.tsv", "labels.tsv", "splits.tsv")


def dataset_dir(root, name):
    path = os.path.join(root, name)
    if all(os.path.exists(os.path.join(path, f)) for f in DATA_FILES):
        return path
    sys.exit(f"dataset {name!r} not found under {root}; run `ggnn import` "
             f"first (see README) or pass --data-root")


def load_dataset(path):
    feat = os.path.join(path, "features.tsv")
    return load_graph(os.path.join(path, "edges.tsv"),
                      feat if os.path.exists(feat) else None,
                      os.path.join(path, "labels.tsv"),
                      os.path.join(path, "splits.tsv"))


def _walk_corpus(graph, walk_cfg):
    print(f"  walking: {walk_cfg.walks_per_node} walks/node, "
          f"length {walk_cfg.walk_length}", flush=True)
    return generate_walks(graph, walk_cfg)


def attributed_inputs(path, graph, workers=1, seed=0):
    """Raw + structure + attribute fusion inputs, pretraining on demand."""
    spath, apath = os.path.join(path, "structure.emb"), os.path.join(path, "attribute.emb")
    if not (os.path.exists(spath) and os.path.exists(apath)):
        walk_cfg, sgns_cfg = pretrain_preset(seed=seed)
        sgns_cfg = replace(sgns_cfg, workers=workers)
        stage = np.random.SeedSequence(seed).generate_state(3)
        corpus = _walk_corpus(graph, walk_cfg)
        pairs = extract_pairs(corpus, walk_cfg.window)
        print(f"  structure sgns: {pairs.count()} pairs", flush=True)
        export_embeddings(train_structure_embeddings(
            pairs, graph.n, replace(sgns_cfg, seed=int(stage[0]))), spath)
        attr_pairs = extract_context_attributes(corpus, graph, walk_cfg.window,
                                                seed=int(stage[2]))
        print(f"  attribute sgns: {attr_pairs.count()} pairs", flush=True)
        export_embeddings(train_attribute_embeddings(
            attr_pairs, graph.n, graph.num_attributes,
            replace(sgns_cfg, seed=int(stage[1]))), apath)
    return prepare_fusion_inputs(graph, import_embeddings(spath),
                                 import_embeddings(apath))


def plain_inputs(path, graph, workers=1, seed=0):
    """Structure-only inputs at the plain-graph embedding width."""
    epath = os.path.join(path, f"structure_plain{PLAIN_STRUCT_DIM}.emb")
    if not os.path.exists(epath):
        walk_cfg, sgns_cfg = pretrain_preset(plain=True, seed=seed)
        sgns_cfg = replace(sgns_cfg, workers=workers)
        corpus = _walk_corpus(graph, walk_cfg)
        pairs = extract_pairs(corpus, walk_cfg.window)
        print(f"  structure sgns (dim {PLAIN_STRUCT_DIM}): {pairs.count()} pairs",
              flush=True)
        export_embeddings(train_structure_embeddings(pairs, graph.n, sgns_cfg), epath)
    return prepare_fusion_inputs(graph, import_embeddings(epath), None,
                                 include_raw=False)


def fmt_accs(accs):
    return f"{100 * np.mean(accs):.2f} +- {100 * (max(accs) - min(accs)) / 2:.2f}"
