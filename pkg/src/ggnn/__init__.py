"""G-GNN: global structure/attribute features from random-walk skip-gram
pretraining, fused into parallel GNN kernels for semi-supervised node
classification on attributed and plain graphs."""

__version__ = "0.1.0"

from .errors import ConfigError, FormatError, GGNNError, ShapeError, StateError, ValidationError
from .graph import (Graph, load_graph, normalize_adjacency, row_normalize_adjacency,
                    write_graph_files)
from .kernels import (KernelConfig, KernelState, init_kernel_state, kernel_apply,
                      kernel_backward)
from .model import (FusionInputs, TrainConfig, TrainResult, ablate, evaluate,
                    ggnn_forward, ggnn_train, plain_split_experiment,
                    prepare_fusion_inputs, sweep_alpha_beta)
from .nn import (AdamConfig, Parameter, adam_step, dropout, finite_difference_check,
                 glorot_uniform, masked_cross_entropy, relu, row_standardize,
                 softmax_rows, spmm)
from .pretrain import (EmbeddingTable, SgnsConfig, WalkConfig, WalkCorpus,
                       export_embeddings, extract_context_attributes, extract_pairs,
                       generate_walks, import_embeddings, train_attribute_embeddings,
                       train_structure_embeddings)

__all__ = [name for name in dir() if not name.startswith("_")]
