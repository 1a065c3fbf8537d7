"""Graph data model, text-file loaders, and adjacency normalization.

File formats (all UTF-8, whitespace-separated fields, `#` starts a comment line):

  edges    one edge per line: ``src dst [weight]``, weight defaults to 1.0
  features first line ``n f``, then sparse triplets ``node feat value``
  labels   ``node label_id``; nodes absent from the file get label -1
  splits   ``node {train|valid|test}``

Node ids are dense integers ``0..n-1``. Directed input edges are symmetrized
on load and duplicate edges have their weights summed, so loading is
order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import FormatError, ValidationError

ROLES = ("train", "valid", "test")


@dataclass(eq=False)
class Graph:
    """Immutable-by-convention bundle of adjacency, attributes, labels, masks.

    Do not mutate the arrays after construction; normalized adjacencies are
    cached on the instance and shared by every kernel.
    """

    adjacency: sp.csr_matrix
    attributes: sp.csr_matrix | None
    labels: np.ndarray
    train_mask: np.ndarray
    valid_mask: np.ndarray
    test_mask: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_attributes(self) -> int:
        return 0 if self.attributes is None else self.attributes.shape[1]

    @property
    def num_classes(self) -> int:
        known = self.labels[self.labels >= 0]
        return 0 if known.size == 0 else int(known.max()) + 1

    def validate(self) -> "Graph":
        n = self.adjacency.shape[0]
        if self.adjacency.shape != (n, n):
            raise ValidationError(f"adjacency must be square, got {self.adjacency.shape}")
        if self.adjacency.nnz and self.adjacency.data.min() < 0:
            raise ValidationError("adjacency has negative edge weights")
        if self.attributes is not None:
            if self.attributes.shape[0] != n:
                raise ValidationError(
                    f"attribute rows {self.attributes.shape[0]} != node count {n}"
                )
            if not np.all(np.isfinite(self.attributes.data)):
                raise ValidationError("attribute values must be finite")
        for name, vec in (("labels", self.labels),):
            if vec.shape != (n,):
                raise ValidationError(f"{name} must have length {n}")
        if self.labels.min(initial=-1) < -1:
            raise ValidationError("labels must be >= -1")
        for role, mask in zip(ROLES, (self.train_mask, self.valid_mask, self.test_mask)):
            if mask.shape != (n,) or mask.dtype != np.bool_:
                raise ValidationError(f"{role} mask must be a boolean vector of length {n}")
        overlap = (
            self.train_mask.astype(int) + self.valid_mask.astype(int) + self.test_mask.astype(int)
        )
        if overlap.max(initial=0) > 1:
            raise ValidationError("train/valid/test masks overlap")
        if np.any(self.labels[self.train_mask] < 0):
            raise ValidationError("every train node needs a known label")
        return self

    def with_masks(self, train, valid, test) -> "Graph":
        """New view sharing adjacency/attributes (and their cached normalizations)."""
        g = Graph(
            adjacency=self.adjacency,
            attributes=self.attributes,
            labels=self.labels,
            train_mask=np.asarray(train, dtype=bool),
            valid_mask=np.asarray(valid, dtype=bool),
            test_mask=np.asarray(test, dtype=bool),
        )
        g._cache = self._cache
        return g.validate()


def _records(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


def _parse_int(tok, path, lineno, what):
    try:
        value = int(tok)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: {what} is not an integer: {tok!r}") from None
    if value < 0:
        raise FormatError(f"{path}:{lineno}: {what} must be nonnegative, got {value}")
    return value


def _parse_float(tok, path, lineno, what):
    try:
        value = float(tok)
    except ValueError:
        raise FormatError(f"{path}:{lineno}: {what} is not a number: {tok!r}") from None
    if not np.isfinite(value):
        raise FormatError(f"{path}:{lineno}: {what} must be finite, got {tok}")
    return value


def _parse_edges(path):
    edges = []
    for lineno, toks in _records(path):
        if len(toks) not in (2, 3):
            raise FormatError(f"{path}:{lineno}: expected 'src dst [weight]', got {len(toks)} fields")
        u = _parse_int(toks[0], path, lineno, "src")
        v = _parse_int(toks[1], path, lineno, "dst")
        w = _parse_float(toks[2], path, lineno, "weight") if len(toks) == 3 else 1.0
        if w < 0:
            raise ValidationError(f"{path}:{lineno}: negative edge weight {w}")
        edges.append((u, v, w))
    return edges


def _parse_features(path):
    rec = _records(path)
    try:
        lineno, toks = next(rec)
    except StopIteration:
        raise FormatError(f"{path}: missing 'n f' header line") from None
    if len(toks) != 2:
        raise FormatError(f"{path}:{lineno}: header must be 'n f'")
    n = _parse_int(toks[0], path, lineno, "node count")
    f = _parse_int(toks[1], path, lineno, "attribute count")
    triplets = []
    for lineno, toks in rec:
        if len(toks) != 3:
            raise FormatError(f"{path}:{lineno}: expected 'node feat value'")
        node = _parse_int(toks[0], path, lineno, "node id")
        feat = _parse_int(toks[1], path, lineno, "attribute id")
        value = _parse_float(toks[2], path, lineno, "value")
        if node >= n:
            raise FormatError(f"{path}:{lineno}: node id {node} out of bounds (n={n})")
        if feat >= f:
            raise FormatError(f"{path}:{lineno}: attribute id {feat} out of bounds (f={f})")
        triplets.append((node, feat, value))
    return n, f, triplets


def _parse_labels(path):
    out = {}
    for lineno, toks in _records(path):
        if len(toks) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'node label_id'")
        node = _parse_int(toks[0], path, lineno, "node id")
        label = _parse_int(toks[1], path, lineno, "label id")
        if node in out and out[node] != label:
            raise ValidationError(f"{path}:{lineno}: conflicting labels for node {node}")
        out[node] = label
    return out


def _parse_splits(path):
    out = {}
    for lineno, toks in _records(path):
        if len(toks) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'node role'")
        node = _parse_int(toks[0], path, lineno, "node id")
        role = toks[1]
        if role not in ROLES:
            raise FormatError(f"{path}:{lineno}: unknown split role {role!r}")
        if node in out:
            raise ValidationError(f"{path}:{lineno}: node {node} assigned to more than one split")
        out[node] = role
    return out


def load_graph(edge_path, feature_path, label_path, split_path) -> Graph:
    """Load and validate a graph from its four text files.

    Node count is the feature-file header when attributes are present,
    otherwise one plus the largest node id seen in any file.
    """
    edges = _parse_edges(edge_path)
    labels_map = _parse_labels(label_path)
    splits_map = _parse_splits(split_path)
    feat = _parse_features(feature_path) if feature_path is not None else None

    max_id = -1
    for u, v, _ in edges:
        max_id = max(max_id, u, v)
    for m in (labels_map, splits_map):
        if m:
            max_id = max(max_id, max(m))

    if feat is not None:
        n = feat[0]
        if max_id >= n:
            raise FormatError(
                f"node id {max_id} out of bounds (feature header declares n={n})"
            )
    else:
        if max_id < 0:
            raise FormatError("cannot infer node count: all input files are empty")
        n = max_id + 1

    rows, cols, vals = [], [], []
    for u, v, w in edges:
        if w == 0.0:
            continue
        rows.append(u)
        cols.append(v)
        vals.append(w)
        if u != v:  # add the reverse direction once; self-loops stay single
            rows.append(v)
            cols.append(u)
            vals.append(w)
    adjacency = sp.coo_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, n)
    ).tocsr()
    adjacency.sum_duplicates()
    adjacency.sort_indices()

    attributes = None
    if feat is not None:
        _, f, triplets = feat
        if triplets:
            r, c, v = zip(*triplets)
        else:
            r, c, v = (), (), ()
        attributes = sp.coo_matrix(
            (np.asarray(v, dtype=np.float64), (list(r), list(c))), shape=(n, f)
        ).tocsr()
        attributes.sum_duplicates()
        attributes.sort_indices()

    labels = np.full(n, -1, dtype=np.int64)
    for node, label in labels_map.items():
        labels[node] = label

    masks = {role: np.zeros(n, dtype=bool) for role in ROLES}
    for node, role in splits_map.items():
        masks[role][node] = True

    g = Graph(
        adjacency=adjacency,
        attributes=attributes,
        labels=labels,
        train_mask=masks["train"],
        valid_mask=masks["valid"],
        test_mask=masks["test"],
    )
    return g.validate()


def write_graph_files(g: Graph, out_dir) -> dict:
    """Serialize a graph into the four-file layout; returns the written paths.

    The adjacency must be symmetric (loaders guarantee this); only the upper
    triangle plus diagonal is written so a reload reproduces the same matrix.
    """
    import os

    if (g.adjacency != g.adjacency.T).nnz != 0:
        raise ValidationError("write_graph_files requires a symmetric adjacency")
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "edges": os.path.join(out_dir, "edges.tsv"),
        "features": os.path.join(out_dir, "features.tsv") if g.attributes is not None else None,
        "labels": os.path.join(out_dir, "labels.tsv"),
        "splits": os.path.join(out_dir, "splits.tsv"),
    }

    upper = sp.triu(g.adjacency, k=0).tocoo()
    with open(paths["edges"], "w", encoding="utf-8") as fh:
        for u, v, w in zip(upper.row, upper.col, upper.data):
            fh.write(f"{u}\t{v}\t{w:.17g}\n")

    if g.attributes is not None:
        coo = g.attributes.tocoo()
        with open(paths["features"], "w", encoding="utf-8") as fh:
            fh.write(f"{g.n} {g.num_attributes}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r}\t{c}\t{v:.17g}\n")

    with open(paths["labels"], "w", encoding="utf-8") as fh:
        for node in np.flatnonzero(g.labels >= 0):
            fh.write(f"{node}\t{g.labels[node]}\n")

    with open(paths["splits"], "w", encoding="utf-8") as fh:
        for role, mask in zip(ROLES, (g.train_mask, g.valid_mask, g.test_mask)):
            for node in np.flatnonzero(mask):
                fh.write(f"{node}\t{role}\n")
    return paths


def normalize_adjacency(g: Graph) -> sp.csr_matrix:
    """Symmetric propagation operator: D^-1/2 (A + I) D^-1/2, cached on g.

    Self-loops are added before computing degrees, so every degree is >= 1
    and no division can hit zero.
    """
    cached = g._cache.get("norm")
    if cached is not None:
        return cached
    a_hat = (g.adjacency + sp.identity(g.n, format="csr", dtype=np.float64)).tocsr()
    deg = np.asarray(a_hat.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    result = sp.diags(inv_sqrt) @ a_hat @ sp.diags(inv_sqrt)
    result = result.tocsr()
    result.sort_indices()
    g._cache["norm"] = result
    return result


def row_normalize_adjacency(g: Graph) -> sp.csr_matrix:
    """Row-stochastic operator D^-1 (A + I): mean over neighborhood plus self."""
    cached = g._cache.get("rw")
    if cached is not None:
        return cached
    a_hat = (g.adjacency + sp.identity(g.n, format="csr", dtype=np.float64)).tocsr()
    deg = np.asarray(a_hat.sum(axis=1)).ravel()
    result = (sp.diags(1.0 / deg) @ a_hat).tocsr()
    result.sort_indices()
    g._cache["rw"] = result
    g._cache["rw_T"] = result.T.tocsr()
    return result


def row_normalize_adjacency_t(g: Graph) -> sp.csr_matrix:
    """Transpose of the row-stochastic operator, cached for backward passes."""
    if "rw_T" not in g._cache:
        row_normalize_adjacency(g)
    return g._cache["rw_T"]
