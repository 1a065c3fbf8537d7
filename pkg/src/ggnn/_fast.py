"""Numba-compiled inner loops: random-walk generation and skip-gram training
with negative sampling.

All randomness uses an explicit xorshift64 state threaded through the loops,
so results are bit-reproducible for a fixed seed in single-threaded mode.
Negative draws use the alias method over tables of size n (one uniform per
draw, two small-table reads). Embedding tables are passed as flat 1-D
float64 buffers with row stride `dim`.

Update order per (source, target) pair follows the classic skip-gram
convention: the source row is read-only while the positive and the K
negative samples update their context rows in sequence, and the accumulated
source-row update is applied once at the end of the pair.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

U7 = np.uint64(7)
U11 = np.uint64(11)
U13 = np.uint64(13)
U17 = np.uint64(17)
U30 = np.uint64(30)
U27 = np.uint64(27)
U31 = np.uint64(31)
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
INV53 = 2.0**-53
MASK64 = (1 << 64) - 1


def splitmix64_py(x: int) -> int:
    """Python-side seed derivation matching the compiled _splitmix64."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return z if z != 0 else 0x9E3779B97F4A7C15


@njit(cache=True)
def _splitmix64(x):
    x = x + GOLDEN
    z = x
    z = (z ^ (z >> U30)) * MIX1
    z = (z ^ (z >> U27)) * MIX2
    z = z ^ (z >> U31)
    if z == np.uint64(0):
        z = GOLDEN
    return z


@njit(cache=True)
def _row_cumsum(indptr, data):
    """Cumulative weights within each CSR row, for weighted sampling."""
    out = np.empty_like(data)
    for r in range(indptr.shape[0] - 1):
        acc = 0.0
        for k in range(indptr[r], indptr[r + 1]):
            acc += data[k]
            out[k] = acc
    return out


@njit(cache=True)
def _first_greater(arr, lo, hi, r):
    # leftmost index in [lo, hi) with arr[idx] > r
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] > r:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def random_walks(indptr, indices, cum_weights, starts, walk_length, seed):
    """Weighted random walks from each start node; a walk truncates early when
    it reaches a node with no outgoing edges. Returns (tokens, offsets)."""
    n_walks = starts.shape[0]
    tokens = np.empty(n_walks * walk_length, dtype=np.int32)
    offsets = np.empty(n_walks + 1, dtype=np.int64)
    offsets[0] = 0
    state = seed
    pos = 0
    for k in range(n_walks):
        cur = np.int64(starts[k])
        tokens[pos] = cur
        pos += 1
        steps = 1
        while steps < walk_length:
            lo = indptr[cur]
            hi = indptr[cur + 1]
            if hi == lo:
                break
            total = cum_weights[hi - 1]
            state ^= state << U13
            state ^= state >> U7
            state ^= state << U17
            r = float(state >> U11) * INV53 * total
            j = _first_greater(cum_weights, lo, hi, r)
            if j >= hi:
                j = hi - 1
            cur = np.int64(indices[j])
            tokens[pos] = cur
            pos += 1
            steps += 1
        offsets[k + 1] = pos
    return tokens[:pos].copy(), offsets


@njit(cache=True, fastmath=True)
def _pair_update(emb, ctx, work, dim, src, tgt, negatives,
                 alias_prob, alias_idx, lr, state, want_loss):
    """One positive pair plus `negatives` noise samples. Returns the advanced
    RNG state and (when requested) the per-pair loss computed from the
    pre-update activations."""
    sbase = src * dim
    n_noise = alias_idx.shape[0]
    loss = 0.0
    for j in range(dim):
        work[j] = 0.0
    for k in range(negatives + 1):
        if k == 0:
            t = np.int64(tgt)
            label = 1.0
        else:
            state ^= state << U13
            state ^= state >> U7
            state ^= state << U17
            u = float(state >> U11) * INV53 * n_noise
            cell = np.int64(u)
            if cell >= n_noise:
                cell = n_noise - 1
            if u - cell < alias_prob[cell]:
                t = cell
            else:
                t = alias_idx[cell]
            label = 0.0
        tbase = t * dim
        dot = 0.0
        for j in range(dim):
            dot += emb[sbase + j] * ctx[tbase + j]
        if dot > 36.0:
            dot = 36.0
        elif dot < -36.0:
            dot = -36.0
        sg = 1.0 / (1.0 + np.exp(-dot))
        if want_loss:
            if k == 0:
                loss -= np.log(sg)
            else:
                loss -= np.log(1.0 - sg)
        g = (label - sg) * lr
        for j in range(dim):
            work[j] += g * ctx[tbase + j]
            ctx[tbase + j] += g * emb[sbase + j]
    for j in range(dim):
        emb[sbase + j] += work[j]
    return state, loss


@njit(cache=True, fastmath=True)
def sgns_corpus_epoch(tokens, offsets, window, emb, ctx, dim, negatives,
                      alias_prob, alias_idx, lr_start, lr_end,
                      done_before, total_pairs, seed, want_loss):
    """One pass over all window pairs of the walk corpus, in corpus order.
    The learning rate decays linearly across the whole training run (all
    epochs), driven by the global pair counter."""
    state = seed
    work = np.empty(dim)
    done = done_before
    loss_sum = 0.0
    span = float(total_pairs) if total_pairs > 0 else 1.0
    for w in range(offsets.shape[0] - 1):
        s = offsets[w]
        e = offsets[w + 1]
        for i in range(s, e):
            src = np.int64(tokens[i])
            lo = i - window
            if lo < s:
                lo = s
            hi = i + window
            if hi > e - 1:
                hi = e - 1
            for jpos in range(lo, hi + 1):
                if jpos == i:
                    continue
                lr = lr_start + (lr_end - lr_start) * (done / span)
                state, pair_loss = _pair_update(
                    emb, ctx, work, dim, src, np.int64(tokens[jpos]),
                    negatives, alias_prob, alias_idx, lr, state, want_loss)
                loss_sum += pair_loss
                done += 1
    return loss_sum, done - done_before


@njit(cache=True, fastmath=True, parallel=True)
def sgns_corpus_epoch_parallel(tokens, offsets, window, emb, ctx, dim, negatives,
                               alias_prob, alias_idx, lr_start, lr_end,
                               done_before, total_pairs, pair_prefix, seed, want_loss):
    """Lock-free parallel variant: walks are distributed across threads and
    embedding rows are updated without synchronization (races tolerated,
    results not bit-reproducible). Learning-rate positions stay exact via
    the per-walk pair prefix counts."""
    n_walks = offsets.shape[0] - 1
    span = float(total_pairs) if total_pairs > 0 else 1.0
    losses = np.zeros(n_walks)
    for w in prange(n_walks):
        state = _splitmix64(seed + np.uint64(w))
        work = np.empty(dim)
        done = done_before + pair_prefix[w]
        s = offsets[w]
        e = offsets[w + 1]
        loss_local = 0.0
        for i in range(s, e):
            src = np.int64(tokens[i])
            lo = i - window
            if lo < s:
                lo = s
            hi = i + window
            if hi > e - 1:
                hi = e - 1
            for jpos in range(lo, hi + 1):
                if jpos == i:
                    continue
                lr = lr_start + (lr_end - lr_start) * (done / span)
                state, pair_loss = _pair_update(
                    emb, ctx, work, dim, src, np.int64(tokens[jpos]),
                    negatives, alias_prob, alias_idx, lr, state, want_loss)
                loss_local += pair_loss
                done += 1
        losses[w] = loss_local
    return losses.sum()


@njit(cache=True, fastmath=True)
def sgns_pairs_epoch(pairs, emb, ctx, dim, negatives, alias_prob, alias_idx,
                     lr_start, lr_end, done_before, total_pairs, seed, want_loss):
    """One pass over an explicit (m, 2) array of (source, target) pairs."""
    state = seed
    work = np.empty(dim)
    done = done_before
    loss_sum = 0.0
    span = float(total_pairs) if total_pairs > 0 else 1.0
    for i in range(pairs.shape[0]):
        lr = lr_start + (lr_end - lr_start) * (done / span)
        state, pair_loss = _pair_update(
            emb, ctx, work, dim, pairs[i, 0], pairs[i, 1],
            negatives, alias_prob, alias_idx, lr, state, want_loss)
        loss_sum += pair_loss
        done += 1
    return loss_sum, done - done_before


@njit(cache=True)
def _sample_attr(attr_indptr, attr_indices, attr_cum, node, state):
    """Draw one attribute id from a node's nonzero attributes, proportional
    to value. Returns (state, attr_id) with attr_id = -1 for empty rows
    (no RNG draw is consumed in that case)."""
    lo = attr_indptr[node]
    hi = attr_indptr[node + 1]
    if hi == lo:
        return state, np.int64(-1)
    state ^= state << U13
    state ^= state >> U7
    state ^= state << U17
    r = float(state >> U11) * INV53 * attr_cum[hi - 1]
    j = _first_greater(attr_cum, lo, hi, r)
    if j >= hi:
        j = hi - 1
    return state, np.int64(attr_indices[j])


@njit(cache=True)
def scan_attr_pairs(tokens, offsets, window, attr_indptr, attr_indices, attr_cum,
                    num_attrs, seed):
    """Pre-pass over the corpus replaying the attribute sampling stream.
    Returns (counts per attribute id, total emitted pairs); pairs whose
    context node has an all-zero attribute row are skipped."""
    state = seed
    counts = np.zeros(num_attrs, dtype=np.int64)
    n_pairs = 0
    for w in range(offsets.shape[0] - 1):
        s = offsets[w]
        e = offsets[w + 1]
        for i in range(s, e):
            lo = i - window
            if lo < s:
                lo = s
            hi = i + window
            if hi > e - 1:
                hi = e - 1
            for jpos in range(lo, hi + 1):
                if jpos == i:
                    continue
                state, attr = _sample_attr(
                    attr_indptr, attr_indices, attr_cum, np.int64(tokens[jpos]), state)
                if attr >= 0:
                    counts[attr] += 1
                    n_pairs += 1
    return counts, n_pairs


@njit(cache=True)
def collect_attr_pairs(tokens, offsets, window, attr_indptr, attr_indices, attr_cum,
                       n_pairs, seed):
    """Materialize the (source node, attribute id) stream; the RNG replay is
    identical to scan_attr_pairs and the training epoch."""
    state = seed
    out = np.empty((n_pairs, 2), dtype=np.int64)
    k = 0
    for w in range(offsets.shape[0] - 1):
        s = offsets[w]
        e = offsets[w + 1]
        for i in range(s, e):
            lo = i - window
            if lo < s:
                lo = s
            hi = i + window
            if hi > e - 1:
                hi = e - 1
            for jpos in range(lo, hi + 1):
                if jpos == i:
                    continue
                state, attr = _sample_attr(
                    attr_indptr, attr_indices, attr_cum, np.int64(tokens[jpos]), state)
                if attr >= 0:
                    out[k, 0] = tokens[i]
                    out[k, 1] = attr
                    k += 1
    return out[:k]


@njit(cache=True, fastmath=True)
def sgns_attr_corpus_epoch(tokens, offsets, window, emb, ctx, dim, negatives,
                           alias_prob, alias_idx, attr_indptr, attr_indices, attr_cum,
                           lr_start, lr_end, done_before, total_pairs,
                           attr_seed, neg_seed, want_loss):
    """Attribute-prediction epoch: per window pair, one attribute is sampled
    from the context node (fixed stream: attr_seed is identical every epoch)
    and trained against the attribute output table with negative sampling."""
    attr_state = attr_seed
    state = neg_seed
    work = np.empty(dim)
    done = done_before
    loss_sum = 0.0
    span = float(total_pairs) if total_pairs > 0 else 1.0
    for w in range(offsets.shape[0] - 1):
        s = offsets[w]
        e = offsets[w + 1]
        for i in range(s, e):
            src = np.int64(tokens[i])
            lo = i - window
            if lo < s:
                lo = s
            hi = i + window
            if hi > e - 1:
                hi = e - 1
            for jpos in range(lo, hi + 1):
                if jpos == i:
                    continue
                attr_state, attr = _sample_attr(
                    attr_indptr, attr_indices, attr_cum, np.int64(tokens[jpos]), attr_state)
                if attr < 0:
                    continue
                lr = lr_start + (lr_end - lr_start) * (done / span)
                state, pair_loss = _pair_update(
                    emb, ctx, work, dim, src, attr,
                    negatives, alias_prob, alias_idx, lr, state, want_loss)
                loss_sum += pair_loss
                done += 1
    return loss_sum, done - done_before


@njit(cache=True)
def alias_draws(alias_prob, alias_idx, n_draws, seed):
    """Sample category indices from an alias table; exposed for tests of the
    noise distribution."""
    state = seed
    n = alias_idx.shape[0]
    out = np.empty(n_draws, dtype=np.int64)
    for i in range(n_draws):
        state ^= state << U13
        state ^= state >> U7
        state ^= state << U17
        u = float(state >> U11) * INV53 * n
        cell = np.int64(u)
        if cell >= n:
            cell = n - 1
        if u - cell < alias_prob[cell]:
            out[i] = cell
        else:
            out[i] = alias_idx[cell]
    return out


def build_alias(weights: np.ndarray):
    """Vose alias tables for O(1) categorical sampling.

    Zero-weight categories get probability zero; the total weight must be
    positive. Pure numpy, runs once per training call.
    """
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if w.ndim != 1 or w.size == 0 or total <= 0 or w.min() < 0:
        raise ValueError("alias table needs a nonempty nonnegative weight vector with positive sum")
    n = w.size
    scaled = w * (n / total)
    prob = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    for i in large:
        prob[i] = 1.0
    for i in small:  # only reachable through rounding; treat as certain
        prob[i] = 1.0
    return prob, alias
