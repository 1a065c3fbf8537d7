"""The composite model: up to three parallel kernels over pretrained structure
features, pretrained attribute features, and raw attributes, fused as

    H = alpha * H_struct + beta * H_attr + H_raw        (attributed mode)
    H = H_struct                                        (plain mode)

with masked cross-entropy training, best-validation parameter snapshotting,
an alpha/beta grid sweep, feature ablations, and the plain-graph random-split
protocol.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from functools import partial

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, FormatError, GGNNError
from .graph import Graph
from .kernels import KernelConfig, KernelState, init_kernel_state, kernel_apply, kernel_backward
from .nn import AdamConfig, Parameter, adam_step, masked_cross_entropy, row_standardize, softmax_rows
from .pretrain import EmbeddingTable

MODES = ("attributed", "plain")
# fixed branch order; each branch owns one child seed stream, and the fourth
# stream drives dropout, so runs that share a branch layout share its draws
BRANCHES = ("structure", "attribute", "raw")


@dataclass
class TrainConfig:
    kernel: KernelConfig
    alpha: float = 0.0
    beta: float = 0.0
    epochs: int = 300
    adam: AdamConfig = field(default_factory=lambda: AdamConfig(weight_decay=5e-4))
    seed: int = 0
    mode: str = "attributed"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ConfigError("alpha and beta must be finite")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be nonnegative")
        if self.mode == "plain" and (self.alpha != 0 or self.beta != 0):
            raise ConfigError("plain mode uses the structure branch alone; set alpha=beta=0")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")


@dataclass
class FusionInputs:
    """Model inputs. x_struct and x_attr are pretrained embeddings already
    row-standardized (once, at preparation time); x_raw is the raw attribute
    matrix, left unstandardized."""

    x_struct: np.ndarray | None = None
    x_attr: np.ndarray | None = None
    x_raw: object = None  # (n, f) dense array or scipy sparse matrix


def prepare_fusion_inputs(graph: Graph,
                          struct_table: EmbeddingTable | None = None,
                          attr_table: EmbeddingTable | None = None,
                          include_raw: bool = True) -> FusionInputs:
    """Row-standardize the pretrained tables and bundle them with the graph's
    raw attributes."""
    def standardized(table, label):
        if table is None:
            return None
        if table.n != graph.n:
            raise ConfigError(f"{label} embeddings have {table.n} rows but the graph has {graph.n} nodes")
        return row_standardize(table.vectors)

    x_raw = graph.attributes if include_raw else None
    return FusionInputs(x_struct=standardized(struct_table, "structure"),
                        x_attr=standardized(attr_table, "attribute"),
                        x_raw=x_raw)


def _branch_plan(inputs: FusionInputs, cfg: TrainConfig):
    """Ordered (name, weight, features) triples for the branches this config
    instantiates. Zero-weight branches are omitted entirely, so a run with
    alpha=beta=0 is bit-identical to the single-kernel baseline."""
    if cfg.mode == "plain":
        if inputs.x_struct is None:
            raise ConfigError("plain mode requires pretrained structure embeddings")
        return [("structure", 1.0, inputs.x_struct)]
    plan = []
    if cfg.alpha != 0:
        if inputs.x_struct is None:
            raise ConfigError("alpha > 0 requires pretrained structure embeddings")
        plan.append(("structure", cfg.alpha, inputs.x_struct))
    if cfg.beta != 0:
        if inputs.x_attr is None:
            raise ConfigError("beta > 0 requires pretrained attribute embeddings")
        plan.append(("attribute", cfg.beta, inputs.x_attr))
    if inputs.x_raw is None:
        raise ConfigError("attributed mode requires the raw attribute matrix")
    plan.append(("raw", 1.0, inputs.x_raw))
    return plan


def _init_branches(graph: Graph, inputs: FusionInputs, cfg: TrainConfig):
    plan = _branch_plan(inputs, cfg)
    children = np.random.SeedSequence(cfg.seed).spawn(len(BRANCHES) + 1)
    states: dict[str, KernelState] = {}
    for name, _, x in plan:
        rng = np.random.default_rng(children[BRANCHES.index(name)])
        kcfg = replace(cfg.kernel, input_dim=x.shape[1], output_dim=graph.num_classes)
        states[name] = init_kernel_state(kcfg, rng)
    dropout_rng = np.random.default_rng(children[len(BRANCHES)])
    return plan, states, dropout_rng


def _branch_weight(name: str, cfg: TrainConfig) -> float:
    if cfg.mode == "plain":
        return 1.0
    return {"structure": cfg.alpha, "attribute": cfg.beta, "raw": 1.0}[name]


def ggnn_forward(inputs: FusionInputs, graph: Graph, states: dict[str, KernelState],
                 cfg: TrainConfig, training: bool = False,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Weighted sum of the branch kernel outputs, shape (n, c). Every branch
    present in `states` is evaluated in fixed order."""
    feats = {"structure": inputs.x_struct, "attribute": inputs.x_attr, "raw": inputs.x_raw}
    h = None
    for name in BRANCHES:
        if name not in states:
            continue
        x = feats[name]
        if x is None:
            raise ConfigError(f"branch {name!r} is instantiated but its input is missing")
        out = _branch_weight(name, cfg) * kernel_apply(states[name], graph, x, training, rng)
        h = out if h is None else h + out
    if h is None:
        raise ConfigError("no branches to evaluate")
    return h


def ggnn_backward(states: dict[str, KernelState], cfg: TrainConfig,
                  upstream: np.ndarray) -> None:
    for name in BRANCHES:
        if name in states:
            kernel_backward(states[name], _branch_weight(name, cfg) * upstream)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    valid_acc: float
    test_acc: float


@dataclass
class TrainResult:
    states: dict[str, KernelState]
    config: TrainConfig
    history: list[EpochStats]
    best_epoch: int
    best_valid_acc: float
    test_acc: float


def _accuracy(h: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    if not mask.any():
        raise ConfigError("cannot compute accuracy over an empty mask")
    preds = np.argmax(softmax_rows(h), axis=1)
    return float(np.mean(preds[mask] == labels[mask]))


def _resolve_mask(graph: Graph, mask) -> np.ndarray:
    if isinstance(mask, str):
        try:
            return {"train": graph.train_mask, "valid": graph.valid_mask,
                    "test": graph.test_mask}[mask]
        except KeyError:
            raise ConfigError(f"unknown mask name {mask!r}") from None
    return np.asarray(mask, dtype=bool)


def evaluate(states: dict[str, KernelState], inputs: FusionInputs, graph: Graph,
             cfg: TrainConfig, mask) -> float:
    """Accuracy of argmax(softmax(H)) against labels on the chosen mask
    ("train"/"valid"/"test" or an explicit boolean vector)."""
    h = ggnn_forward(inputs, graph, states, cfg, training=False)
    return _accuracy(h, graph.labels, _resolve_mask(graph, mask))


def _snapshot(states: dict[str, KernelState]) -> dict[str, dict[str, np.ndarray]]:
    return {b: {k: p.value.copy() for k, p in st.params.items()} for b, st in states.items()}


def _restore(states: dict[str, KernelState], snap) -> None:
    for b, st in states.items():
        for k, p in st.params.items():
            p.value = snap[b][k].copy()


def ggnn_train(inputs: FusionInputs, graph: Graph, cfg: TrainConfig) -> TrainResult:
    """Full-batch training with Adam. Per epoch: one dropout forward pass,
    cross-entropy on the train mask, manual backward through every branch,
    Adam step, then a clean forward for validation/test accuracy. Parameters
    are restored to the best-validation epoch before returning, and the
    reported test accuracy is the one observed at that epoch."""
    graph.validate()
    if not graph.valid_mask.any():
        raise ConfigError("training requires a nonempty validation mask")
    if not graph.test_mask.any():
        raise ConfigError("training requires a nonempty test mask")
    plan, states, dropout_rng = _init_branches(graph, inputs, cfg)

    history: list[EpochStats] = []
    best_snap = _snapshot(states)
    h0 = ggnn_forward(inputs, graph, states, cfg, training=False)
    best_valid = _accuracy(h0, graph.labels, graph.valid_mask)
    best_test = _accuracy(h0, graph.labels, graph.test_mask)
    best_epoch = 0

    for epoch in range(1, cfg.epochs + 1):
        for st in states.values():
            st.zero_grads()
        h = ggnn_forward(inputs, graph, states, cfg, training=True, rng=dropout_rng)
        z = softmax_rows(h)
        loss, dlogits = masked_cross_entropy(z, graph.labels, graph.train_mask)
        ggnn_backward(states, cfg, dlogits)
        for st in states.values():
            for p in st.params.values():
                adam_step(p, cfg.adam)

        h_eval = ggnn_forward(inputs, graph, states, cfg, training=False)
        valid_acc = _accuracy(h_eval, graph.labels, graph.valid_mask)
        test_acc = _accuracy(h_eval, graph.labels, graph.test_mask)
        history.append(EpochStats(epoch, float(loss), valid_acc, test_acc))
        if valid_acc > best_valid:
            best_valid = valid_acc
            best_test = test_acc
            best_epoch = epoch
            best_snap = _snapshot(states)

    _restore(states, best_snap)
    return TrainResult(states=states, config=cfg, history=history,
                       best_epoch=best_epoch, best_valid_acc=best_valid,
                       test_acc=best_test)


@dataclass
class SweepPoint:
    alpha: float
    beta: float
    valid_acc: float
    test_acc: float
    best_epoch: int
    seed: int


@dataclass
class SweepResult:
    points: list[SweepPoint]
    best: SweepPoint


def _derived_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence(base_seed, spawn_key=(index,)).generate_state(1)[0])


def _sweep_eval(inputs: FusionInputs, graph: Graph, cfg: TrainConfig) -> SweepPoint:
    res = ggnn_train(inputs, graph, cfg)
    return SweepPoint(cfg.alpha, cfg.beta, res.best_valid_acc, res.test_acc,
                      res.best_epoch, cfg.seed)


def sweep_alpha_beta(inputs: FusionInputs, graph: Graph, base_cfg: TrainConfig,
                     grid, map_fn=None) -> SweepResult:
    """Train one model per (alpha, beta) grid point with a point-derived seed,
    select by validation accuracy, and report the test accuracy at the
    selected point. Ties go to the smaller alpha, then the smaller beta.
    map_fn lets callers distribute the independent points (for example over a
    process pool); the reduction is order-independent."""
    grid = sorted((float(a), float(b)) for a, b in grid)
    if not grid:
        raise ConfigError("the sweep grid must be nonempty")
    cfgs = [replace(base_cfg, alpha=a, beta=b, seed=_derived_seed(base_cfg.seed, idx))
            for idx, (a, b) in enumerate(grid)]
    run = partial(_sweep_eval, inputs, graph)
    points = list((map_fn or map)(run, cfgs))
    best = None
    for point in sorted(points, key=lambda p: (p.alpha, p.beta)):
        if best is None or point.valid_acc > best.valid_acc:
            best = point
    return SweepResult(points=points, best=best)


ABLATION_SUBSETS = ("X", "X+Xs", "X+Xa", "X+Xs+Xa", "concat")


def _concat_features(inputs: FusionInputs):
    parts = [inputs.x_raw, inputs.x_struct, inputs.x_attr]
    if any(p is None for p in parts):
        raise ConfigError("concat ablation requires raw, structure, and attribute inputs")
    if sp.issparse(inputs.x_raw):
        return sp.hstack([inputs.x_raw, sp.csr_matrix(inputs.x_struct),
                          sp.csr_matrix(inputs.x_attr)], format="csr")
    return np.hstack([np.asarray(inputs.x_raw), inputs.x_struct, inputs.x_attr])


def ablate(inputs: FusionInputs, graph: Graph, cfg: TrainConfig, subset: str) -> float:
    """Test accuracy for a feature subset. Omitted branches get weight zero
    and are never instantiated; `concat` feeds the column-concatenated
    features to a single kernel."""
    if cfg.mode == "plain":
        raise ConfigError("ablation applies to attributed mode only")
    if subset == "X":
        cfg2 = replace(cfg, alpha=0.0, beta=0.0)
        inputs2 = inputs
    elif subset == "X+Xs":
        cfg2 = replace(cfg, beta=0.0)
        inputs2 = inputs
    elif subset == "X+Xa":
        cfg2 = replace(cfg, alpha=0.0)
        inputs2 = inputs
    elif subset == "X+Xs+Xa":
        cfg2 = cfg
        inputs2 = inputs
    elif subset == "concat":
        cfg2 = replace(cfg, alpha=0.0, beta=0.0)
        inputs2 = FusionInputs(x_raw=_concat_features(inputs))
    else:
        raise ConfigError(f"unknown ablation subset {subset!r}, expected one of {ABLATION_SUBSETS}")
    return ggnn_train(inputs2, graph, cfg2).test_acc


def plain_split_experiment(graph: Graph, ratios, seeds: int, cfg: TrainConfig,
                           inputs: FusionInputs, max_retries: int = 10) -> dict[float, list[float]]:
    """Random-split protocol for plain graphs: for each label ratio, draw
    `seeds` unstratified splits, train in plain mode, and report accuracy on
    the held-out nodes. The labeled fraction is split 90/10 into train and
    validation so model selection never sees held-out labels. A draw that
    leaves some class without a train node is retried up to max_retries
    times."""
    if cfg.mode != "plain":
        raise ConfigError("plain_split_experiment requires a plain-mode config")
    if seeds < 1:
        raise ConfigError("seeds must be >= 1")
    if np.any(graph.labels < 0):
        raise ConfigError("the plain-graph protocol needs labels for every node")
    ratios = [float(r) for r in ratios]
    for r in ratios:
        if not 0.0 < r < 1.0:
            raise ConfigError(f"label ratio must be in (0, 1), got {r}")

    num_classes = graph.num_classes
    results: dict[float, list[float]] = {r: [] for r in ratios}
    for r in ratios:
        for s in range(seeds):
            rng = np.random.default_rng(
                np.random.SeedSequence(cfg.seed, spawn_key=(int(r * 1e6), s)))
            for attempt in range(max_retries + 1):
                perm = rng.permutation(graph.n)
                n_label = max(int(round(r * graph.n)), 2)
                labeled, heldout = perm[:n_label], perm[n_label:]
                n_valid = max(n_label // 10, 1)
                valid_ids, train_ids = labeled[:n_valid], labeled[n_valid:]
                train_classes = np.unique(graph.labels[train_ids])
                if train_classes.size == num_classes and heldout.size > 0:
                    break
            else:
                raise ConfigError(
                    f"could not draw a split with every class present at ratio {r} "
                    f"after {max_retries} retries")
            masks = {}
            for key, ids in (("train", train_ids), ("valid", valid_ids), ("test", heldout)):
                m = np.zeros(graph.n, dtype=bool)
                m[ids] = True
                masks[key] = m
            g2 = graph.with_masks(masks["train"], masks["valid"], masks["test"])
            run_cfg = replace(cfg, seed=_derived_seed(cfg.seed, s))
            res = ggnn_train(inputs, g2, run_cfg)
            results[r].append(res.test_acc)
    return results


def save_model(result: TrainResult, path: str) -> None:
    """Checkpoint the trained branch parameters plus enough config to rebuild
    the kernels for evaluation."""
    meta = {
        "mode": result.config.mode,
        "alpha": result.config.alpha,
        "beta": result.config.beta,
        "best_epoch": result.best_epoch,
        "best_valid_acc": result.best_valid_acc,
        "test_acc": result.test_acc,
        "kernels": {b: asdict(st.config) for b, st in result.states.items()},
    }
    arrays = {f"{b}__{name}": p.value
              for b, st in result.states.items() for name, p in st.params.items()}
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_model(path: str):
    """Rebuild (states, cfg_fields) from a checkpoint written by save_model.
    Returns (states, meta dict)."""
    try:
        data = np.load(path)
    except OSError:
        raise
    except Exception as exc:
        raise FormatError(f"{path}: unreadable checkpoint: {exc}") from exc
    if not isinstance(data, np.lib.npyio.NpzFile):
        raise FormatError(f"{path}: not a checkpoint archive")
    with data:
        try:
            meta = json.loads(bytes(data["meta"]).decode())
            states: dict[str, KernelState] = {}
            for branch, kcfg_dict in meta["kernels"].items():
                kcfg = KernelConfig(**kcfg_dict)
                params = {}
                for key in data.files:
                    if key.startswith(branch + "__"):
                        name = key[len(branch) + 2:]
                        params[name] = Parameter(np.array(data[key]), name)
                states[branch] = KernelState(kcfg, params)
        except GGNNError:
            raise
        except Exception as exc:
            raise FormatError(f"{path}: malformed checkpoint: {exc}") from exc
    return states, meta
