"""Converters from the two common public citation-benchmark layouts into the
package's text formats, plus dataset checksums and count validation.

Layout A ("planetoid"): pickled files ind.<name>.x / .tx / .allx / .y / .ty /
.ally / .graph plus the plain-text ind.<name>.test.index. Node order is
train block, then the remaining non-test nodes, then the (reindexed) test
block; the test index file maps test rows back to global ids.

Layout B ("raw"): <name>.content lines `id feat_1 .. feat_f label` and
<name>.cites lines `cited citing` with arbitrary string ids. Splits are
drawn here (seeded): a fixed number of train nodes per class, then
validation and test pools from the remainder.
"""

from __future__ import annotations

import hashlib
import os
import pickle
import warnings

import numpy as np
import scipy.sparse as sp

from .errors import FormatError
from .graph import Graph, write_graph_files

# Table-style expected statistics used for drift warnings after import:
# nodes, undirected edge lines in the original archives, attribute count,
# classes, train/valid/test sizes.
EXPECTED_STATS = {
    "cora": {"nodes": 2708, "edges": 5429, "attributes": 1433, "classes": 7,
             "train": 140, "valid": 500, "test": 1000},
    "citeseer": {"nodes": 3327, "edges": 4732, "attributes": 3703, "classes": 6,
                 "train": 120, "valid": 500, "test": 1000},
    "pubmed": {"nodes": 19717, "edges": 44338, "attributes": 500, "classes": 3,
               "train": 60, "valid": 500, "test": 1000},
}

PLANETOID_PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph")


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class _RenamingUnpickler(pickle.Unpickler):
    """Legacy pickles reference module paths that moved in modern numpy and
    scipy (scipy.sparse.csr -> scipy.sparse._csr and so on); resolve the
    class by name from the parent package instead."""

    def find_class(self, module, name):
        if module.split(".")[0] == "scipy":
            return getattr(sp, name)
        if module.startswith("numpy.core") or module.startswith("numpy._core"):
            import numpy.core.multiarray as multiarray
            if hasattr(multiarray, name):
                return getattr(multiarray, name)
            return getattr(np, name)
        return super().find_class(module, name)


def _load_pickle(path: str):
    with open(path, "rb") as fh:
        u = _RenamingUnpickler(fh, encoding="latin1")
        try:
            return u.load()
        except Exception as exc:
            raise FormatError(f"{path}: could not unpickle ({exc})") from exc


def _load_test_index(path: str) -> np.ndarray:
    idx = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.strip()
            if not tok:
                continue
            try:
                idx.append(int(tok))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: test index must be an integer") from exc
    if not idx:
        raise FormatError(f"{path}: empty test index")
    return np.asarray(idx, dtype=np.int64)


def _dense_labels(onehot: np.ndarray) -> np.ndarray:
    onehot = np.asarray(onehot)
    out = np.full(onehot.shape[0], -1, dtype=np.int64)
    rows = onehot.sum(axis=1) > 0  # all-zero rows stay unlabeled
    out[rows] = np.argmax(onehot[rows], axis=1)
    return out


def convert_planetoid(source_dir: str, name: str, out_dir: str) -> dict:
    """Convert planetoid pickles into the package's text files. Returns a
    summary dict with counts, written paths, source checksums, and any drift
    warnings."""
    paths = {p: os.path.join(source_dir, f"ind.{name}.{p}") for p in PLANETOID_PARTS}
    paths["test.index"] = os.path.join(source_dir, f"ind.{name}.test.index")
    missing = [p for p in paths.values() if not os.path.exists(p)]
    if missing:
        raise FormatError(f"missing planetoid files: {', '.join(sorted(missing))}")

    objs = {p: _load_pickle(paths[p]) for p in PLANETOID_PARTS}
    test_idx = _load_test_index(paths["test.index"])

    x, tx, allx = (sp.csr_matrix(objs[k]) for k in ("x", "tx", "allx"))
    y, ty, ally = (np.asarray(objs[k]) for k in ("y", "ty", "ally"))

    lo, hi = int(test_idx.min()), int(test_idx.max())
    full_range = np.arange(lo, hi + 1)
    if full_range.size != test_idx.size:
        # citeseer: some test ids are absent; pad those rows with zero
        # features and no label so ids stay contiguous
        tx_full = sp.lil_matrix((full_range.size, tx.shape[1]), dtype=np.float64)
        ty_full = np.zeros((full_range.size, ty.shape[1]))
        pos = test_idx - lo
        tx_full[pos] = tx
        ty_full[pos] = ty
        tx, ty = sp.csr_matrix(tx_full), ty_full

    features = sp.vstack([allx, tx], format="csr").astype(np.float64)
    labels_1hot = np.vstack([ally, ty])
    n = features.shape[0]
    if hi + 1 != n:
        raise FormatError(
            f"test index range ends at {hi} but the feature stack has {n} rows")

    # rows allx.shape[0]..n-1 are in test-index order; restore global order
    order = np.arange(n)
    order[full_range] = allx.shape[0] + (full_range - lo)
    features = features[order]
    labels = _dense_labels(labels_1hot[order])

    graph_dict = objs["graph"]
    pairs = set()
    for u, nbrs in graph_dict.items():
        for v in nbrs:
            u_i, v_i = int(u), int(v)
            if not (0 <= u_i < n and 0 <= v_i < n):
                raise FormatError(f"graph dict references node {max(u_i, v_i)} outside [0, {n})")
            if u_i != v_i:
                pairs.add((min(u_i, v_i), max(u_i, v_i)))
            else:
                pairs.add((u_i, v_i))
    rows = np.fromiter((p[0] for p in sorted(pairs)), dtype=np.int64, count=len(pairs))
    cols = np.fromiter((p[1] for p in sorted(pairs)), dtype=np.int64, count=len(pairs))
    vals = np.ones(rows.size)
    upper = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    off_diag = rows != cols
    lower = sp.coo_matrix((vals[off_diag], (cols[off_diag], rows[off_diag])), shape=(n, n))
    adjacency = (upper + lower).tocsr()

    train_mask = np.zeros(n, dtype=bool)
    valid_mask = np.zeros(n, dtype=bool)
    test_mask = np.zeros(n, dtype=bool)
    train_mask[:y.shape[0]] = True
    test_mask[np.sort(test_idx)] = True
    valid_mask[y.shape[0]:y.shape[0] + 500] = True
    # real archives keep the 500-node validation window clear of the test
    # range and fully labeled; small archives may not
    valid_mask &= ~test_mask & (labels >= 0)
    # padded citeseer rows have no label and cannot be evaluated
    test_mask &= labels >= 0

    g = Graph(adjacency=adjacency, attributes=features, labels=labels,
              train_mask=train_mask, valid_mask=valid_mask, test_mask=test_mask)
    g.validate()
    os.makedirs(out_dir, exist_ok=True)
    written = write_graph_files(g, out_dir)

    summary = _summarize(name, g, len(pairs), written)
    summary["source_checksums"] = {os.path.basename(p): file_sha256(p)
                                   for p in paths.values()}
    return summary


def convert_raw_citation(content_path: str, cites_path: str, out_dir: str,
                         name: str = "", seed: int = 0, train_per_class: int = 20,
                         valid_count: int = 500, test_count: int = 1000,
                         plain: bool = False) -> dict:
    """Convert `.content`/`.cites` files. Splits are drawn with the given
    seed: train_per_class random nodes per class, then validation and test
    pools from the remaining nodes."""
    ids: dict[str, int] = {}
    feat_rows = []
    label_names = []
    with open(content_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise FormatError(f"{content_path}:{lineno}: expected `id features... label`")
            node_id, feats, label = parts[0], parts[1:-1], parts[-1]
            if node_id in ids:
                raise FormatError(f"{content_path}:{lineno}: duplicate node id {node_id!r}")
            ids[node_id] = len(ids)
            try:
                feat_rows.append([float(v) for v in feats])
            except ValueError as exc:
                raise FormatError(f"{content_path}:{lineno}: non-numeric feature value") from exc
            label_names.append(label)
    if not ids:
        raise FormatError(f"{content_path}: no records")
    widths = {len(r) for r in feat_rows}
    if len(widths) != 1:
        raise FormatError(f"{content_path}: inconsistent feature widths {sorted(widths)}")

    n = len(ids)
    classes = sorted(set(label_names))
    labels = np.asarray([classes.index(l) for l in label_names], dtype=np.int64)
    features = None if plain else sp.csr_matrix(np.asarray(feat_rows, dtype=np.float64))

    pairs = set()
    skipped = 0
    with open(cites_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise FormatError(f"{cites_path}:{lineno}: expected `cited citing`")
            a, b = parts
            if a not in ids or b not in ids:
                skipped += 1
                continue
            u, v = ids[a], ids[b]
            if u != v:
                pairs.add((min(u, v), max(u, v)))
    if skipped:
        warnings.warn(f"{cites_path}: skipped {skipped} citation lines whose "
                      f"endpoints are not in {content_path}")
    rows = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
    cols = np.fromiter((p[1] for p in pairs), dtype=np.int64, count=len(pairs))
    data = np.ones(rows.size)
    adjacency = sp.coo_matrix((np.concatenate([data, data]),
                               (np.concatenate([rows, cols]),
                                np.concatenate([cols, rows]))), shape=(n, n)).tocsr()

    rng = np.random.default_rng(seed)
    train_ids = []
    for c in range(len(classes)):
        members = np.flatnonzero(labels == c)
        if members.size < train_per_class:
            raise FormatError(
                f"class {classes[c]!r} has only {members.size} nodes, "
                f"need {train_per_class} for the train split")
        train_ids.extend(rng.choice(members, size=train_per_class, replace=False))
    train_ids = np.asarray(train_ids)
    rest = np.setdiff1d(np.arange(n), train_ids)
    rest = rng.permutation(rest)
    if rest.size < valid_count + test_count:
        raise FormatError(f"{content_path}: not enough nodes for "
                          f"{valid_count} valid + {test_count} test after train selection")
    masks = {}
    for key, idx in (("train", train_ids), ("valid", rest[:valid_count]),
                     ("test", rest[valid_count:valid_count + test_count])):
        m = np.zeros(n, dtype=bool)
        m[idx] = True
        masks[key] = m

    g = Graph(adjacency=adjacency, attributes=features, labels=labels,
              train_mask=masks["train"], valid_mask=masks["valid"], test_mask=masks["test"])
    g.validate()
    os.makedirs(out_dir, exist_ok=True)
    written = write_graph_files(g, out_dir)

    summary = _summarize(name, g, len(pairs), written)
    summary["source_checksums"] = {os.path.basename(p): file_sha256(p)
                                   for p in (content_path, cites_path)}
    return summary


def _summarize(name: str, g: Graph, edge_lines: int, written: dict) -> dict:
    summary = {
        "name": name,
        "nodes": g.n,
        "edges": edge_lines,
        "attributes": g.num_attributes,
        "classes": g.num_classes,
        "train": int(g.train_mask.sum()),
        "valid": int(g.valid_mask.sum()),
        "test": int(g.test_mask.sum()),
        "files": written,
        "warnings": [],
    }
    expected = EXPECTED_STATS.get(name)
    if expected:
        for key, want in expected.items():
            if key == "edges":
                continue  # archives count raw citation lines; unique pairs differ
            got = summary[key]
            if got != want:
                msg = f"{name}: {key} = {got}, expected {want}"
                summary["warnings"].append(msg)
                warnings.warn(msg)
    return summary
