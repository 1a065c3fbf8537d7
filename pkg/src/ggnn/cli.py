"""Command-line front end.

Commands: import, pretrain, train, eval, sweep, ablate, plain. Every
experiment command reads a dataset directory (the four text files written by
`import`), resolves its configuration with precedence

    built-in preset < config file (--config, `key = value` lines)
    < environment (GGNN_<KEY>) < command-line flag

and writes line-delimited metric records plus a JSON run manifest into the
output directory. Manifests carry the full config snapshot, dataset
checksums, and artifact paths; reruns with identical inputs reproduce the
files byte for byte, and writing a different manifest over an existing one
is refused.

Exit codes: 0 success, 2 configuration errors, 3 file-format errors,
4 other runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace
from multiprocessing import Pool

import numpy as np

from . import __version__
from .datasets import convert_planetoid, convert_raw_citation, file_sha256
from .errors import ConfigError, GGNNError
from .graph import Graph, load_graph
from .model import (ABLATION_SUBSETS, FusionInputs, TrainConfig, ablate, evaluate,
                    ggnn_train, load_model, plain_split_experiment,
                    prepare_fusion_inputs, save_model, sweep_alpha_beta)
from .presets import DEFAULT_GRID, KERNEL_PRESETS, PLAIN_STRUCT_DIM, pretrain_preset, train_preset
from .pretrain import (SgnsConfig, WalkConfig, export_embeddings, extract_context_attributes,
                       extract_pairs, generate_walks, import_embeddings,
                       train_attribute_embeddings, train_structure_embeddings)

DATA_FILES = ("edges.tsv", "features.tsv", "labels.tsv", "splits.tsv")
ENV_PREFIX = "GGNN_"


def _fmt(x: float) -> str:
    return "%.10g" % x


# ---------------------------------------------------------------- config


def load_config_file(path: str) -> dict[str, str]:
    """Flat `key = value` file; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`")
            key, value = line.split("=", 1)
            key = key.strip().lower()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out


class Resolver:
    """Config precedence: flag beats env beats config file beats default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_cfg = load_config_file(args.config) if getattr(args, "config", None) else {}

    def _cast(self, raw: str, cast, key: str, source: str):
        try:
            if cast is bool:
                low = raw.strip().lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(raw)
            return cast(raw)
        except ValueError:
            raise ConfigError(f"{source}: cannot parse {key}={raw!r} as {cast.__name__}") from None

    def get(self, key: str, cast, default):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        env_key = ENV_PREFIX + key.upper()
        if env_key in os.environ:
            return self._cast(os.environ[env_key], cast, key, f"environment {env_key}")
        if key in self.file_cfg:
            return self._cast(self.file_cfg[key], cast, key, "config file")
        return default


# ------------------------------------------------------------ data access


def dataset_paths(data_dir: str) -> dict[str, str | None]:
    paths = {name.split(".")[0]: os.path.join(data_dir, name) for name in DATA_FILES}
    for key in ("edges", "labels", "splits"):
        if not os.path.exists(paths[key]):
            raise ConfigError(
                f"dataset file {paths[key]} not found; run `ggnn import` into {data_dir} first")
    if not os.path.exists(paths["features"]):
        paths["features"] = None
    return paths


def load_dataset(data_dir: str) -> Graph:
    p = dataset_paths(data_dir)
    return load_graph(p["edges"], p["features"], p["labels"], p["splits"])


def dataset_checksums(data_dir: str) -> dict[str, str]:
    sums = {}
    for name in DATA_FILES:
        path = os.path.join(data_dir, name)
        if os.path.exists(path):
            sums[name] = file_sha256(path)
    return sums


def _embedding_path(data_dir: str, which: str) -> str:
    return os.path.join(data_dir, f"{which}.emb")


def load_embedding_table(data_dir: str, which: str, extra_flags: str = ""):
    path = _embedding_path(data_dir, which)
    if not os.path.exists(path):
        hint = f"ggnn pretrain --data {data_dir}" + (f" {extra_flags}" if extra_flags else "")
        raise ConfigError(f"{which} embeddings not found at {path}; run `{hint}` first")
    return import_embeddings(path)


# ------------------------------------------------------------- manifests


def write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def write_manifest(path: str, command: str, config: dict, data_dir: str | None,
                   seeds: list[int], artifacts: dict[str, str]) -> None:
    manifest = {
        "tool": {"name": "ggnn", "version": __version__},
        "command": command,
        "config": config,
        "dataset": None if data_dir is None else {
            "directory": os.path.abspath(data_dir),
            "checksums": dataset_checksums(data_dir),
        },
        "seeds": seeds,
        "artifacts": {k: os.path.abspath(v) for k, v in artifacts.items()},
    }
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            if fh.read() != text:
                raise ConfigError(
                    f"manifest {path} already exists with different contents; "
                    f"manifests are immutable, use a fresh --out directory")
        return
    write_text(path, text)


def _metric_lines_for_run(result) -> list[str]:
    lines = [f"epoch,{e.epoch},{_fmt(e.train_loss)},{_fmt(e.valid_acc)}"
             for e in result.history]
    lines.append("summary,%s,%d,%s,%s,%d" % (
        _fmt(result.test_acc), result.best_epoch, _fmt(result.config.alpha),
        _fmt(result.config.beta), result.config.seed))
    return lines


def _aggregate_line(accs: list[float]) -> str:
    mean = float(np.mean(accs))
    half_range = (max(accs) - min(accs)) / 2.0
    return f"aggregate,{_fmt(mean)},{_fmt(half_range)},{len(accs)}"


# ------------------------------------------------------------- commands


def _resolve_train_config(r: Resolver, mode: str) -> TrainConfig:
    kernel = r.get("kernel", str, "gcn")
    if kernel not in KERNEL_PRESETS:
        raise ConfigError(f"unknown kernel {kernel!r}, expected one of {tuple(KERNEL_PRESETS)}")
    cfg = train_preset(kernel, mode=mode,
                       alpha=r.get("alpha", float, 0.0),
                       beta=r.get("beta", float, 0.0),
                       seed=r.get("seed", int, 0))
    kcfg = cfg.kernel
    kcfg = replace(kcfg,
                   hidden_dim=r.get("hidden", int, kcfg.hidden_dim),
                   dropout_p=r.get("dropout", float, kcfg.dropout_p),
                   appnp_steps=r.get("appnp_steps", int, kcfg.appnp_steps),
                   appnp_teleport=r.get("appnp_teleport", float, kcfg.appnp_teleport))
    adam = replace(cfg.adam,
                   learning_rate=r.get("lr", float, cfg.adam.learning_rate),
                   weight_decay=r.get("weight_decay", float, cfg.adam.weight_decay))
    return replace(cfg, kernel=kcfg, adam=adam,
                   epochs=r.get("epochs", int, cfg.epochs))


def _gather_inputs(data_dir: str, graph: Graph, cfg: TrainConfig,
                   need_struct: bool, need_attr: bool) -> FusionInputs:
    struct = attr = None
    if need_struct:
        flags = f"--dim {PLAIN_STRUCT_DIM} --no-attr" if cfg.mode == "plain" else ""
        struct = load_embedding_table(data_dir, "structure", flags)
    if need_attr:
        attr = load_embedding_table(data_dir, "attribute")
    return prepare_fusion_inputs(graph, struct, attr,
                                 include_raw=cfg.mode == "attributed")


def cmd_import(args) -> int:
    r = Resolver(args)
    layout = r.get("layout", str, "planetoid")
    name = args.name
    if layout == "planetoid":
        if args.plain:
            raise ConfigError("--plain applies to the raw layout; planetoid archives "
                              "always carry features (drop features downstream instead)")
        summary = convert_planetoid(args.source, name, args.out)
    elif layout == "raw":
        content = os.path.join(args.source, f"{name}.content")
        cites = os.path.join(args.source, f"{name}.cites")
        summary = convert_raw_citation(content, cites, args.out, name=name,
                                       seed=r.get("seed", int, 0),
                                       train_per_class=r.get("train_per_class", int, 20),
                                       valid_count=r.get("valid_count", int, 500),
                                       test_count=r.get("test_count", int, 1000),
                                       plain=args.plain)
    else:
        raise ConfigError(f"unknown layout {layout!r}, expected planetoid or raw")

    config = {"source": os.path.abspath(args.source), "name": name, "layout": layout,
              "plain": bool(args.plain), "summary": {k: v for k, v in summary.items()
                                                     if k not in ("files",)}}
    write_manifest(os.path.join(args.out, "import.manifest.json"), "import",
                   config, args.out, [], {k: v for k, v in summary["files"].items() if v})
    print(f"imported {name}: n={summary['nodes']} edges={summary['edges']} "
          f"attributes={summary['attributes']} classes={summary['classes']} "
          f"train/valid/test={summary['train']}/{summary['valid']}/{summary['test']}")
    for msg in summary["warnings"]:
        print(f"warning: {msg}", file=sys.stderr)
    return 0


def cmd_pretrain(args) -> int:
    r = Resolver(args)
    graph = load_dataset(args.data)
    seed = r.get("seed", int, 0)
    walk_defaults, sgns_defaults = pretrain_preset(plain=False, seed=seed)
    walks = WalkConfig(walks_per_node=r.get("walks", int, walk_defaults.walks_per_node),
                       walk_length=r.get("walk_length", int, walk_defaults.walk_length),
                       window=r.get("window", int, walk_defaults.window),
                       seed=seed)
    dim = r.get("dim", int, sgns_defaults.dim)
    sgns_base = dict(dim=dim,
                     negatives=r.get("negatives", int, sgns_defaults.negatives),
                     learning_rate=r.get("sgns_lr", float, sgns_defaults.learning_rate),
                     epochs=r.get("sgns_epochs", int, sgns_defaults.epochs),
                     workers=r.get("workers", int, 1))
    # independent derived seeds per stage so adding --no-attr never changes
    # the structure table
    stage_seeds = np.random.SeedSequence(seed).generate_state(3)
    struct_cfg = SgnsConfig(seed=int(stage_seeds[0]), **sgns_base)

    print(f"generating walks: {walks.walks_per_node} per node, length {walks.walk_length}")
    corpus = generate_walks(graph, walks)
    pairs = extract_pairs(corpus, walks.window)
    print(f"training structure embeddings on {pairs.count()} pairs, dim {dim}")
    struct = train_structure_embeddings(pairs, graph.n, struct_cfg, track_loss=args.track_loss)
    struct_path = _embedding_path(args.data, "structure")
    export_embeddings(struct, struct_path)
    if args.track_loss:
        print("structure epoch losses: " + " ".join(_fmt(l) for l in struct.epoch_losses))

    artifacts = {"structure": struct_path}
    if not args.no_attr:
        if graph.attributes is None:
            raise ConfigError("this dataset has no attributes; pass --no-attr to "
                              "pretrain structure embeddings only")
        attr_cfg = SgnsConfig(seed=int(stage_seeds[1]), **sgns_base)
        attr_pairs = extract_context_attributes(corpus, graph, walks.window,
                                                seed=int(stage_seeds[2]))
        print(f"training attribute embeddings on {attr_pairs.count()} pairs, dim {dim}")
        attr = train_attribute_embeddings(attr_pairs, graph.n, graph.num_attributes,
                                          attr_cfg, track_loss=args.track_loss)
        attr_path = _embedding_path(args.data, "attribute")
        export_embeddings(attr, attr_path)
        artifacts["attribute"] = attr_path
        if args.track_loss:
            print("attribute epoch losses: " + " ".join(_fmt(l) for l in attr.epoch_losses))

    if args.save_walks:
        corpus.save(args.save_walks)
        artifacts["walks"] = args.save_walks

    config = {"walks": asdict(walks), "sgns": sgns_base, "seed": seed,
              "no_attr": bool(args.no_attr)}
    write_manifest(os.path.join(args.data, "pretrain.manifest.json"), "pretrain",
                   config, args.data, [seed], artifacts)
    print("wrote " + ", ".join(sorted(artifacts.values())))
    return 0


def cmd_train(args) -> int:
    r = Resolver(args)
    mode = r.get("mode", str, "attributed")
    cfg = _resolve_train_config(r, mode)
    num_seeds = r.get("seeds", int, 1)
    if num_seeds < 1:
        raise ConfigError("--seeds must be >= 1")
    graph = load_dataset(args.data)
    inputs = _gather_inputs(args.data, graph, cfg,
                            need_struct=mode == "plain" or cfg.alpha > 0,
                            need_attr=cfg.beta > 0)

    lines: list[str] = []
    accs: list[float] = []
    artifacts: dict[str, str] = {}
    seeds = [cfg.seed + i for i in range(num_seeds)]
    for i, seed in enumerate(seeds):
        result = ggnn_train(inputs, graph, replace(cfg, seed=seed))
        lines.extend(_metric_lines_for_run(result))
        accs.append(result.test_acc)
        print(f"seed {seed}: test_acc={_fmt(result.test_acc)} "
              f"valid_acc={_fmt(result.best_valid_acc)} best_epoch={result.best_epoch}")
        if args.save_model:
            path = args.save_model if num_seeds == 1 else \
                args.save_model.replace(".npz", "") + f".seed{seed}.npz"
            save_model(result, path)
            artifacts[f"model_seed{seed}"] = path
    lines.append(_aggregate_line(accs))
    print(f"mean test_acc={_fmt(float(np.mean(accs)))} over {num_seeds} seed(s), "
          f"half-range {_fmt((max(accs) - min(accs)) / 2.0)}")

    metrics_path = os.path.join(args.out, "metrics.csv")
    write_text(metrics_path, "\n".join(lines) + "\n")
    artifacts["metrics"] = metrics_path
    write_manifest(os.path.join(args.out, "manifest.json"), "train",
                   {"mode": mode, "train": asdict(cfg), "seeds_count": num_seeds},
                   args.data, seeds, artifacts)
    return 0


def cmd_eval(args) -> int:
    states, meta = load_model(args.model)
    graph = load_dataset(args.data)
    kcfg = next(iter(states.values())).config
    cfg = TrainConfig(kernel=kcfg, alpha=meta["alpha"], beta=meta["beta"],
                      epochs=0, mode=meta["mode"])
    inputs = _gather_inputs(args.data, graph, cfg,
                            need_struct="structure" in states,
                            need_attr="attribute" in states)
    acc = evaluate(states, inputs, graph, cfg, args.mask)
    print(f"accuracy,{args.mask},{_fmt(acc)}")
    return 0


def _parse_grid(r: Resolver) -> list[tuple[float, float]]:
    spec = r.get("grid", str, "default")
    if spec == "default":
        return list(DEFAULT_GRID)
    try:
        points = []
        for item in spec.split(";"):
            a, b = item.split(",")
            points.append((float(a), float(b)))
        return points
    except ValueError:
        raise ConfigError(f"cannot parse grid {spec!r}; use `default` or "
                          f"`a1,b1;a2,b2;...`") from None


def cmd_sweep(args) -> int:
    r = Resolver(args)
    cfg = _resolve_train_config(r, "attributed")
    grid = _parse_grid(r)
    graph = load_dataset(args.data)
    inputs = _gather_inputs(args.data, graph, cfg,
                            need_struct=any(a > 0 for a, _ in grid),
                            need_attr=any(b > 0 for _, b in grid))
    jobs = r.get("jobs", int, 1)
    if jobs > 1:
        with Pool(processes=jobs) as pool:
            result = sweep_alpha_beta(inputs, graph, cfg, grid, map_fn=pool.map)
    else:
        result = sweep_alpha_beta(inputs, graph, cfg, grid)

    lines = [f"point,{_fmt(p.alpha)},{_fmt(p.beta)},{_fmt(p.valid_acc)},"
             f"{_fmt(p.test_acc)},{p.best_epoch},{p.seed}"
             for p in sorted(result.points, key=lambda p: (p.alpha, p.beta))]
    b = result.best
    lines.append(f"best,{_fmt(b.alpha)},{_fmt(b.beta)},{_fmt(b.valid_acc)},{_fmt(b.test_acc)}")
    report_path = os.path.join(args.out, "sweep.csv")
    write_text(report_path, "\n".join(lines) + "\n")
    write_manifest(os.path.join(args.out, "manifest.json"), "sweep",
                   {"train": asdict(cfg), "grid": grid, "jobs": jobs},
                   args.data, [cfg.seed], {"report": report_path})
    print(f"best alpha={_fmt(b.alpha)} beta={_fmt(b.beta)} "
          f"valid_acc={_fmt(b.valid_acc)} test_acc={_fmt(b.test_acc)}")
    return 0


def cmd_ablate(args) -> int:
    r = Resolver(args)
    cfg = _resolve_train_config(r, "attributed")
    if cfg.alpha == 0 and cfg.beta == 0:
        cfg = replace(cfg, alpha=0.01, beta=0.01)  # mid-grid default weights
    subsets = r.get("subsets", str, "X,X+Xs,X+Xs+Xa,concat").split(",")
    for s in subsets:
        if s not in ABLATION_SUBSETS:
            raise ConfigError(f"unknown subset {s!r}, expected from {ABLATION_SUBSETS}")
    num_seeds = r.get("seeds", int, 1)
    graph = load_dataset(args.data)
    need_struct = any(s in ("X+Xs", "X+Xs+Xa", "concat") for s in subsets)
    need_attr = any(s in ("X+Xa", "X+Xs+Xa", "concat") for s in subsets)
    inputs = _gather_inputs(args.data, graph, cfg, need_struct, need_attr)

    lines = []
    for subset in subsets:
        accs = []
        for i in range(num_seeds):
            acc = ablate(inputs, graph, replace(cfg, seed=cfg.seed + i), subset)
            accs.append(acc)
            lines.append(f"ablate,{subset},{cfg.seed + i},{_fmt(acc)}")
        lines.append(f"aggregate,{subset},{_fmt(float(np.mean(accs)))},"
                     f"{_fmt((max(accs) - min(accs)) / 2.0)},{num_seeds}")
        print(f"{subset}: mean test_acc={_fmt(float(np.mean(accs)))} over {num_seeds} seed(s)")
    report_path = os.path.join(args.out, "ablation.csv")
    write_text(report_path, "\n".join(lines) + "\n")
    write_manifest(os.path.join(args.out, "manifest.json"), "ablate",
                   {"train": asdict(cfg), "subsets": subsets, "seeds_count": num_seeds},
                   args.data, [cfg.seed + i for i in range(num_seeds)],
                   {"report": report_path})
    return 0


def cmd_plain(args) -> int:
    r = Resolver(args)
    cfg = _resolve_train_config(r, "plain")
    ratios_spec = r.get("ratios", str, "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    try:
        ratios = [float(x) for x in ratios_spec.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse ratios {ratios_spec!r}") from None
    splits = r.get("splits", int, 10)
    graph = load_dataset(args.data)
    inputs = _gather_inputs(args.data, graph, cfg, need_struct=True, need_attr=False)

    table = plain_split_experiment(graph, ratios, splits, cfg, inputs)
    lines = []
    for ratio in ratios:
        accs = table[ratio]
        for k, acc in enumerate(accs):
            lines.append(f"split,{_fmt(ratio)},{k},{_fmt(acc)}")
        lines.append(f"ratio,{_fmt(ratio)},{_fmt(float(np.mean(accs)))},{len(accs)}")
        print(f"ratio {_fmt(ratio)}: mean acc {_fmt(float(np.mean(accs)))} "
              f"over {len(accs)} split(s)")
    report_path = os.path.join(args.out, "plain.csv")
    write_text(report_path, "\n".join(lines) + "\n")
    write_manifest(os.path.join(args.out, "manifest.json"), "plain",
                   {"train": asdict(cfg), "ratios": ratios, "splits": splits},
                   args.data, [cfg.seed], {"report": report_path})
    return 0


# ------------------------------------------------------------- arg parsing


def _add_common(p: argparse.ArgumentParser, data: bool = True, out: bool = False):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="base random seed")
    if data:
        p.add_argument("--data", required=True, help="dataset directory (from `ggnn import`)")
    if out:
        p.add_argument("--out", required=True, help="output directory for metrics and manifest")


def _add_train_flags(p: argparse.ArgumentParser):
    p.add_argument("--kernel", choices=sorted(KERNEL_PRESETS))
    p.add_argument("--alpha", type=float, help="structure-branch fusion weight")
    p.add_argument("--beta", type=float, help="attribute-branch fusion weight")
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden", type=int, help="hidden width override")
    p.add_argument("--dropout", type=float)
    p.add_argument("--lr", type=float, help="Adam learning rate")
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--appnp-steps", dest="appnp_steps", type=int)
    p.add_argument("--appnp-teleport", dest="appnp_teleport", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ggnn",
        description="Pretrained global structure/attribute features fused into "
                    "parallel GNN kernels for semi-supervised node classification.")
    parser.add_argument("--version", action="version", version=f"ggnn {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("import", help="convert a public citation benchmark to the text layout")
    p.add_argument("--source", required=True, help="directory with the original files")
    p.add_argument("--name", required=True, help="dataset name (cora, citeseer, pubmed, ...)")
    p.add_argument("--layout", choices=("planetoid", "raw"))
    p.add_argument("--plain", action="store_true", help="drop features (raw layout only)")
    p.add_argument("--train-per-class", dest="train_per_class", type=int,
                   help="raw layout: train nodes drawn per class")
    p.add_argument("--valid-count", dest="valid_count", type=int)
    p.add_argument("--test-count", dest="test_count", type=int)
    _add_common(p, data=False)
    p.add_argument("--out", required=True, help="dataset directory to write")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("pretrain", help="train global structure/attribute embeddings")
    _add_common(p)
    p.add_argument("--walks", type=int, help="walks per node")
    p.add_argument("--walk-length", dest="walk_length", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--dim", type=int, help="embedding dimension")
    p.add_argument("--negatives", type=int)
    p.add_argument("--sgns-lr", dest="sgns_lr", type=float)
    p.add_argument("--sgns-epochs", dest="sgns_epochs", type=int)
    p.add_argument("--workers", type=int, help=">1 enables lock-free parallel updates "
                                               "(not bit-reproducible)")
    p.add_argument("--no-attr", action="store_true", help="skip attribute embeddings")
    p.add_argument("--track-loss", action="store_true", help="report per-epoch mean loss")
    p.add_argument("--save-walks", help="also save the walk corpus to this path")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="train (G-)GNN models and report test accuracy")
    _add_common(p, out=True)
    _add_train_flags(p)
    p.add_argument("--mode", choices=("attributed", "plain"))
    p.add_argument("--seeds", type=int, help="number of consecutive seeds to run")
    p.add_argument("--save-model", dest="save_model", help="checkpoint path (.npz)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved checkpoint")
    _add_common(p)
    p.add_argument("--model", required=True, help="checkpoint from `ggnn train --save-model`")
    p.add_argument("--mask", choices=("train", "valid", "test"), default="test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid-search fusion weights alpha/beta")
    _add_common(p, out=True)
    _add_train_flags(p)
    p.add_argument("--grid", help="`default` or `a1,b1;a2,b2;...`")
    p.add_argument("--jobs", type=int, help="parallel grid points")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="feature-subset ablations")
    _add_common(p, out=True)
    _add_train_flags(p)
    p.add_argument("--subsets", help="comma list from: " + ",".join(ABLATION_SUBSETS))
    p.add_argument("--seeds", type=int)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("plain", help="plain-graph random-split label-ratio protocol")
    _add_common(p, out=True)
    _add_train_flags(p)
    p.add_argument("--ratios", help="comma list of label ratios in (0,1)")
    p.add_argument("--splits", type=int, help="random splits per ratio")
    p.set_defaults(func=cmd_plain)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GGNNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
