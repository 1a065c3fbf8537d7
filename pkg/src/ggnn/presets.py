"""Experiment presets: per-kernel hyperparameters, pretraining defaults, the
default alpha/beta search grid, and the plain-graph variant."""

from __future__ import annotations

from dataclasses import replace

from .errors import ConfigError
from .kernels import KernelConfig
from .model import TrainConfig
from .nn import AdamConfig
from .pretrain import SgnsConfig, WalkConfig

# input_dim/output_dim placeholders; the training entry points replace them
# with the actual feature width and class count per branch.
KERNEL_PRESETS = {
    "gcn": {"kernel": KernelConfig(kind="gcn", input_dim=1, hidden_dim=16,
                                   output_dim=1, dropout_p=0.5),
            "epochs": 300},
    "sage": {"kernel": KernelConfig(kind="sage", input_dim=1, hidden_dim=16,
                                    output_dim=1, dropout_p=0.5),
             "epochs": 200},
    "appnp": {"kernel": KernelConfig(kind="appnp", input_dim=1, hidden_dim=64,
                                     output_dim=1, dropout_p=0.5,
                                     appnp_steps=10, appnp_teleport=0.1),
              "epochs": 300},
}

GRID_VALUES = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05)
DEFAULT_GRID = tuple((a, b) for a in GRID_VALUES for b in GRID_VALUES)

DEFAULT_WALKS = WalkConfig(walks_per_node=10, walk_length=100, window=10)
DEFAULT_SGNS = SgnsConfig(dim=8, negatives=64, learning_rate=0.025, epochs=5)
PLAIN_STRUCT_DIM = 32


def train_preset(kernel: str, mode: str = "attributed", alpha: float = 0.0,
                 beta: float = 0.0, seed: int = 0) -> TrainConfig:
    """TrainConfig for one of the named kernels. Plain mode swaps in the
    plain-graph hyperparameters (hidden 256, no dropout)."""
    if kernel not in KERNEL_PRESETS:
        raise ConfigError(f"unknown kernel preset {kernel!r}, "
                          f"expected one of {tuple(KERNEL_PRESETS)}")
    preset = KERNEL_PRESETS[kernel]
    kcfg = preset["kernel"]
    if mode == "plain":
        kcfg = replace(kcfg, hidden_dim=256, dropout_p=0.0)
    return TrainConfig(kernel=kcfg, alpha=alpha, beta=beta,
                       epochs=preset["epochs"],
                       adam=AdamConfig(learning_rate=0.01, weight_decay=5e-4),
                       seed=seed, mode=mode)


def pretrain_preset(plain: bool = False, seed: int = 0) -> tuple[WalkConfig, SgnsConfig]:
    walks = replace(DEFAULT_WALKS, seed=seed)
    sgns = replace(DEFAULT_SGNS, seed=seed,
                   dim=PLAIN_STRUCT_DIM if plain else DEFAULT_SGNS.dim)
    return walks, sgns
