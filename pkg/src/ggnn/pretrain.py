"""Unsupervised pretraining: truncated random walks plus skip-gram with
negative sampling, producing global structure embeddings (node predicts
co-walk node) and global attribute embeddings (node predicts an attribute
sampled from co-walk nodes).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _fast
from .errors import ConfigError, FormatError, ValidationError
from .graph import Graph

_NONZERO_FALLBACK = np.uint64(0x9E3779B97F4A7C15)


def _u64_seeds(seed_seq: np.random.SeedSequence, k: int) -> np.ndarray:
    out = seed_seq.generate_state(k, dtype=np.uint64)
    out[out == 0] = _NONZERO_FALLBACK  # xorshift64 must not start at 0
    return out


@dataclass
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 100
    window: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise ConfigError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ConfigError("walk_length must be >= 2")
        if self.window < 1:
            raise ConfigError("window must be >= 1")


@dataclass
class SgnsConfig:
    dim: int = 8
    negatives: int = 64
    learning_rate: float = 0.025
    epochs: int = 5
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.negatives < 1:
            raise ConfigError("negatives must be >= 1")
        if not (self.learning_rate >= 0 and np.isfinite(self.learning_rate)):
            raise ConfigError("learning_rate must be a nonnegative finite number")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass
class WalkCorpus:
    """Concatenated walks stored as one flat int32 token array with int64
    offsets; walk k is tokens[offsets[k]:offsets[k+1]]."""

    tokens: np.ndarray
    offsets: np.ndarray
    num_nodes: int

    def __post_init__(self):
        self.tokens = np.ascontiguousarray(self.tokens, dtype=np.int32)
        self.offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        if self.offsets.ndim != 1 or self.offsets.size < 1 or self.offsets[0] != 0:
            raise ValidationError("offsets must be 1-D and start at 0")
        if self.offsets[-1] != self.tokens.size:
            raise ValidationError("offsets must end at the token count")
        if np.any(np.diff(self.offsets) < 1):
            raise ValidationError("every walk must contain at least one node")
        if self.tokens.size and (self.tokens.min() < 0 or self.tokens.max() >= self.num_nodes):
            raise ValidationError("walk tokens must be node ids in [0, num_nodes)")

    def __len__(self) -> int:
        return self.offsets.size - 1

    def walks(self):
        for k in range(len(self)):
            yield self.tokens[self.offsets[k]:self.offsets[k + 1]]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for walk in self.walks():
                fh.write(" ".join(str(int(t)) for t in walk))
                fh.write("\n")

    @classmethod
    def load(cls, path: str, num_nodes: int | None = None) -> "WalkCorpus":
        tokens: list[int] = []
        offsets = [0]
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.split()
                if not parts:
                    continue
                try:
                    walk = [int(p) for p in parts]
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: walk tokens must be integers") from exc
                tokens.extend(walk)
                offsets.append(len(tokens))
        if len(offsets) == 1:
            raise FormatError(f"{path}: walk file contains no walks")
        arr = np.asarray(tokens, dtype=np.int32)
        if num_nodes is None:
            num_nodes = int(arr.max()) + 1
        return cls(arr, np.asarray(offsets, dtype=np.int64), num_nodes)


def generate_walks(graph: Graph, config: WalkConfig) -> WalkCorpus:
    """walks_per_node weighted random walks from every node. Start order is a
    fresh node permutation per round, so consecutive walks spread across the
    graph the way the streaming trainer expects."""
    a = graph.adjacency
    seed_seq = np.random.SeedSequence(config.seed)
    perm_rng = np.random.default_rng(seed_seq.spawn(1)[0])
    starts = np.concatenate([
        perm_rng.permutation(graph.n).astype(np.int64)
        for _ in range(config.walks_per_node)
    ])
    cum = _fast._row_cumsum(a.indptr.astype(np.int64), a.data.astype(np.float64))
    step_seed = _u64_seeds(seed_seq, 1)[0]
    tokens, offsets = _fast.random_walks(
        a.indptr.astype(np.int64), a.indices.astype(np.int64), cum,
        starts, config.walk_length, step_seed)
    return WalkCorpus(tokens, offsets, graph.n)


def _pairs_in_walk(length: int, window: int) -> int:
    # sum over positions of the window size on each side, closed form
    if length <= window + 1:
        half = length * (length - 1) // 2
    else:
        half = window * (window + 1) // 2 + (length - 1 - window) * window
    return 2 * half


class PairStream:
    """Re-iterable stream of (source, context) node pairs: for every walk
    position i, all positions j != i with |i - j| <= window. Nothing is
    materialized unless asked."""

    def __init__(self, corpus: WalkCorpus, window: int):
        if window < 1:
            raise ConfigError("window must be >= 1")
        self.corpus = corpus
        self.window = window

    def count(self) -> int:
        lengths = np.diff(self.corpus.offsets)
        total = 0
        for length in lengths:
            total += _pairs_in_walk(int(length), self.window)
        return total

    def __iter__(self):
        tokens = self.corpus.tokens
        offsets = self.corpus.offsets
        w = self.window
        for k in range(len(self.corpus)):
            s = int(offsets[k])
            e = int(offsets[k + 1])
            for i in range(s, e):
                lo = max(s, i - w)
                hi = min(e - 1, i + w)
                for j in range(lo, hi + 1):
                    if j != i:
                        yield int(tokens[i]), int(tokens[j])

    def materialize(self) -> np.ndarray:
        out = np.empty((self.count(), 2), dtype=np.int64)
        for k, (s, c) in enumerate(self):
            out[k, 0] = s
            out[k, 1] = c
        return out


def extract_pairs(corpus: WalkCorpus, window: int) -> PairStream:
    return PairStream(corpus, window)


class AttrPairStream:
    """Re-iterable stream of (source node, attribute id) pairs. For each
    window pair, one attribute is sampled from the context node's nonzero
    attribute values (proportional to value); pairs whose context node has an
    all-zero row are dropped without consuming randomness. The sample stream
    is a pure function of the seed, so every iteration and every training
    epoch sees the same pair set."""

    def __init__(self, corpus: WalkCorpus, attributes: sp.csr_matrix, window: int, seed: int):
        if window < 1:
            raise ConfigError("window must be >= 1")
        attributes = sp.csr_matrix(attributes)
        if attributes.shape[0] != corpus.num_nodes:
            raise ValidationError("attribute matrix row count must match the corpus node count")
        if attributes.nnz and attributes.data.min() < 0:
            raise ValidationError("attribute sampling requires nonnegative attribute values")
        self.corpus = corpus
        self.window = window
        self.num_attributes = attributes.shape[1]
        self._indptr = attributes.indptr.astype(np.int64)
        self._indices = attributes.indices.astype(np.int64)
        self._cum = _fast._row_cumsum(self._indptr, attributes.data.astype(np.float64))
        self.seed = np.uint64(_fast.splitmix64_py(int(seed)))
        self._scan = None
        self._pairs = None

    def _scan_result(self):
        if self._scan is None:
            self._scan = _fast.scan_attr_pairs(
                self.corpus.tokens, self.corpus.offsets, self.window,
                self._indptr, self._indices, self._cum,
                self.num_attributes, self.seed)
        return self._scan

    def count(self) -> int:
        return int(self._scan_result()[1])

    def attribute_counts(self) -> np.ndarray:
        """How often each attribute id appears in the stream (noise counts)."""
        return self._scan_result()[0].copy()

    def materialize(self) -> np.ndarray:
        if self._pairs is None:
            self._pairs = _fast.collect_attr_pairs(
                self.corpus.tokens, self.corpus.offsets, self.window,
                self._indptr, self._indices, self._cum,
                self.count(), self.seed)
        return self._pairs

    def __iter__(self):
        for s, a in self.materialize():
            yield int(s), int(a)


def extract_context_attributes(corpus: WalkCorpus, attributes, window: int,
                               seed: int = 0) -> AttrPairStream:
    if isinstance(attributes, Graph):
        attributes = attributes.attributes
    return AttrPairStream(corpus, attributes, window, seed)


@dataclass
class NoiseSampler:
    """Categorical sampler over counts**power, alias method."""

    prob: np.ndarray
    alias: np.ndarray

    def sample(self, n_draws: int, seed: int = 0) -> np.ndarray:
        return _fast.alias_draws(self.prob, self.alias,
                                 n_draws, np.uint64(_fast.splitmix64_py(int(seed))))


def build_noise_sampler(counts: np.ndarray, power: float = 0.75) -> NoiseSampler:
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size == 0:
        raise ConfigError("noise counts must be a nonempty 1-D array")
    if counts.min() < 0 or counts.sum() <= 0:
        raise ConfigError("noise counts must be nonnegative with a positive total")
    prob, alias = _fast.build_alias(counts**power)
    return NoiseSampler(prob, alias)


@dataclass
class EmbeddingTable:
    """Learned embedding vectors, one row per node, float64."""

    vectors: np.ndarray
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValidationError("embedding vectors must be a 2-D array")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def export_embeddings(table: EmbeddingTable, path: str) -> None:
    """Text format: header line `n dim`, then one `node_id v_1 .. v_dim` line
    per node. Values use 17 significant digits, so a float64 round-trips
    exactly."""
    if table.n == 0 or table.dim == 0:
        raise ConfigError("refusing to export an empty embedding table")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{table.n} {table.dim}\n")
        for i in range(table.n):
            row = " ".join("%.17g" % v for v in table.vectors[i])
            fh.write(f"{i} {row}\n")


def import_embeddings(path: str) -> EmbeddingTable:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}:1: expected header `n dim`")
        try:
            n, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise FormatError(f"{path}:1: expected integer header `n dim`") from exc
        if n < 1 or dim < 1:
            raise FormatError(f"{path}:1: header dimensions must be positive")
        vectors = np.empty((n, dim))
        seen = np.zeros(n, dtype=bool)
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise FormatError(f"{path}:{lineno}: expected node id plus {dim} values")
            try:
                node = int(parts[0])
                vals = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: malformed embedding row") from exc
            if not 0 <= node < n:
                raise FormatError(f"{path}:{lineno}: node id {node} outside [0, {n})")
            if seen[node]:
                raise FormatError(f"{path}:{lineno}: duplicate row for node {node}")
            if not all(np.isfinite(v) for v in vals):
                raise FormatError(f"{path}:{lineno}: non-finite embedding value")
            seen[node] = True
            vectors[node] = vals
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise FormatError(f"{path}: missing embedding row for node {missing}")
    return EmbeddingTable(vectors)


def _init_tables(num_rows: int, num_ctx_rows: int, dim: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # word2vec convention: small uniform input table, zero output table
    emb = rng.uniform(-0.5 / dim, 0.5 / dim, size=num_rows * dim)
    ctx = np.zeros(num_ctx_rows * dim)
    return emb, ctx


def _run_epochs(kernel_args_fn, emb, ctx, total_pairs, config, neg_seeds,
                track_loss) -> list[float]:
    lr_start = config.learning_rate
    lr_end = config.learning_rate * 1e-4
    done = 0
    losses = []
    for epoch in range(config.epochs):
        loss_sum, n_done = kernel_args_fn(
            emb, ctx, lr_start, lr_end, done, total_pairs,
            neg_seeds[epoch], track_loss)
        done += n_done
        if track_loss and n_done:
            losses.append(float(loss_sum) / n_done)
    return losses


def train_structure_embeddings(pairs, num_nodes: int, config: SgnsConfig,
                               track_loss: bool = False) -> EmbeddingTable:
    """Skip-gram over node co-occurrence pairs; the noise distribution is the
    corpus unigram frequency raised to 0.75. Accepts a PairStream (streamed,
    no materialization) or an explicit (m, 2) int array."""
    if num_nodes < 2:
        raise ConfigError("structure training needs at least 2 nodes")
    seed_seq = np.random.SeedSequence(config.seed)
    init_rng = np.random.default_rng(seed_seq.spawn(1)[0])
    neg_seeds = _u64_seeds(seed_seq, config.epochs)
    emb, ctx = _init_tables(num_nodes, num_nodes, config.dim, init_rng)

    if isinstance(pairs, PairStream):
        counts = np.bincount(pairs.corpus.tokens, minlength=num_nodes).astype(np.float64)
        n_pairs = pairs.count()
        if n_pairs == 0:
            raise ConfigError("the pair stream is empty; nothing to train on")
        prob, alias = _fast.build_alias(counts**0.75)
        tokens, offsets, window = pairs.corpus.tokens, pairs.corpus.offsets, pairs.window
        total = n_pairs * config.epochs
        if config.workers > 1:
            lengths = np.diff(offsets)
            per_walk = np.asarray([_pairs_in_walk(int(l), window) for l in lengths],
                                  dtype=np.int64)
            prefix = np.concatenate([[0], np.cumsum(per_walk)[:-1]])

            def run(emb, ctx, lr0, lr1, done, tot, seed, want):
                loss = _fast.sgns_corpus_epoch_parallel(
                    tokens, offsets, window, emb, ctx, config.dim, config.negatives,
                    prob, alias, lr0, lr1, done, tot, prefix, seed, want)
                return loss, n_pairs
        else:
            def run(emb, ctx, lr0, lr1, done, tot, seed, want):
                return _fast.sgns_corpus_epoch(
                    tokens, offsets, window, emb, ctx, config.dim, config.negatives,
                    prob, alias, lr0, lr1, done, tot, seed, want)
    else:
        arr = np.ascontiguousarray(pairs, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ConfigError("explicit pairs must be an (m, 2) integer array")
        if arr.shape[0] == 0:
            raise ConfigError("the pair array is empty; nothing to train on")
        if arr.min() < 0 or arr.max() >= num_nodes:
            raise ValidationError("pair entries must be node ids in [0, num_nodes)")
        counts = np.bincount(arr[:, 1], minlength=num_nodes).astype(np.float64)
        prob, alias = _fast.build_alias(counts**0.75)
        total = arr.shape[0] * config.epochs

        def run(emb, ctx, lr0, lr1, done, tot, seed, want):
            return _fast.sgns_pairs_epoch(
                arr, emb, ctx, config.dim, config.negatives,
                prob, alias, lr0, lr1, done, tot, seed, want)

    losses = _run_epochs(run, emb, ctx, total, config, neg_seeds, track_loss)
    return EmbeddingTable(emb.reshape(num_nodes, config.dim), losses)


def train_attribute_embeddings(attr_pairs, num_nodes: int, num_attributes: int,
                               config: SgnsConfig, track_loss: bool = False,
                               return_output_table: bool = False):
    """Skip-gram where nodes predict sampled context attributes against an
    attribute output table of shape (num_attributes, dim). The node input
    table is the learned attribute embedding."""
    if num_nodes < 1:
        raise ConfigError("attribute training needs at least 1 node")
    if num_attributes < 2:
        raise ConfigError("attribute training needs at least 2 attributes "
                          "(negative sampling over a single attribute is degenerate)")
    seed_seq = np.random.SeedSequence(config.seed)
    init_rng = np.random.default_rng(seed_seq.spawn(1)[0])
    neg_seeds = _u64_seeds(seed_seq, config.epochs)
    emb, ctx = _init_tables(num_nodes, num_attributes, config.dim, init_rng)

    if isinstance(attr_pairs, AttrPairStream):
        if attr_pairs.num_attributes != num_attributes:
            raise ConfigError("num_attributes does not match the attribute stream")
        counts = attr_pairs.attribute_counts().astype(np.float64)
        n_pairs = attr_pairs.count()
        if n_pairs == 0:
            raise ConfigError("the attribute pair stream is empty; nothing to train on")
        prob, alias = _fast.build_alias(counts**0.75)
        c = attr_pairs
        total = n_pairs * config.epochs

        def run(emb, ctx, lr0, lr1, done, tot, seed, want):
            return _fast.sgns_attr_corpus_epoch(
                c.corpus.tokens, c.corpus.offsets, c.window, emb, ctx,
                config.dim, config.negatives, prob, alias,
                c._indptr, c._indices, c._cum,
                lr0, lr1, done, tot, c.seed, seed, want)
    else:
        arr = np.ascontiguousarray(attr_pairs, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ConfigError("explicit attribute pairs must be an (m, 2) integer array")
        if arr.shape[0] == 0:
            raise ConfigError("the attribute pair array is empty; nothing to train on")
        if arr[:, 0].min() < 0 or arr[:, 0].max() >= num_nodes:
            raise ValidationError("pair sources must be node ids in [0, num_nodes)")
        if arr[:, 1].min() < 0 or arr[:, 1].max() >= num_attributes:
            raise ValidationError("pair targets must be attribute ids in [0, num_attributes)")
        counts = np.bincount(arr[:, 1], minlength=num_attributes).astype(np.float64)
        prob, alias = _fast.build_alias(counts**0.75)
        total = arr.shape[0] * config.epochs

        def run(emb, ctx, lr0, lr1, done, tot, seed, want):
            return _fast.sgns_pairs_epoch(
                arr, emb, ctx, config.dim, config.negatives,
                prob, alias, lr0, lr1, done, tot, seed, want)

    losses = _run_epochs(run, emb, ctx, total, config, neg_seeds, track_loss)
    table = EmbeddingTable(emb.reshape(num_nodes, config.dim), losses)
    if return_output_table:
        return table, EmbeddingTable(ctx.reshape(num_attributes, config.dim))
    return table
