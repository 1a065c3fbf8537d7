"""Three graph convolution kernels with hand-written backward passes:

- gcn:   H = A_sym ReLU(A_sym X W0) W1, A_sym = D^{-1/2}(A+I)D^{-1/2}
- sage:  per layer  h' = act((D^{-1}(A+I) h) W_neigh + h W_self),
         ReLU on the hidden layer, linear output layer
- appnp: H0 = MLP(X), then Z_{k+1} = (1-t) A_sym Z_k + t H0 for k steps

Inverted dropout is applied to the input features and between the two
layers when training. No layer uses a bias term. Forward passes cache the
intermediates the backward pass needs; parameter gradients accumulate into
Parameter.grad.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ShapeError, StateError
from .graph import Graph, normalize_adjacency, row_normalize_adjacency, row_normalize_adjacency_t
from .nn import Parameter, dropout, dropout_backward, glorot_uniform, relu, relu_backward

KERNEL_KINDS = ("gcn", "sage", "appnp")


@dataclass
class KernelConfig:
    kind: str
    input_dim: int
    hidden_dim: int
    output_dim: int
    num_layers: int = 2
    dropout_p: float = 0.5
    appnp_steps: int = 10
    appnp_teleport: float = 0.1

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel kind {self.kind!r}, expected one of {KERNEL_KINDS}")
        for name in ("input_dim", "hidden_dim", "output_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.num_layers != 2:
            raise ConfigError("only the 2-layer configuration is supported")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError("dropout_p must be in [0, 1)")
        if self.kind == "appnp":
            if self.appnp_steps < 0:
                raise ConfigError("appnp_steps must be >= 0")
            if not 0.0 < self.appnp_teleport <= 1.0:
                raise ConfigError("appnp_teleport must be in (0, 1]")


@dataclass(eq=False)
class KernelState:
    config: KernelConfig
    params: dict[str, Parameter]
    cache: dict = field(default_factory=dict)

    def zero_grads(self) -> None:
        for p in self.params.values():
            p.zero_grad()


def init_kernel_state(config: KernelConfig, rng: np.random.Generator) -> KernelState:
    f, h, c = config.input_dim, config.hidden_dim, config.output_dim
    if config.kind == "sage":
        params = {
            "w_neigh_0": Parameter(glorot_uniform(rng, f, h), "w_neigh_0"),
            "w_self_0": Parameter(glorot_uniform(rng, f, h), "w_self_0"),
            "w_neigh_1": Parameter(glorot_uniform(rng, h, c), "w_neigh_1"),
            "w_self_1": Parameter(glorot_uniform(rng, h, c), "w_self_1"),
        }
    else:
        params = {
            "w0": Parameter(glorot_uniform(rng, f, h), "w0"),
            "w1": Parameter(glorot_uniform(rng, h, c), "w1"),
        }
    return KernelState(config, params)


def _check_input(state: KernelState, x) -> None:
    if x.ndim != 2 or x.shape[1] != state.config.input_dim:
        raise ShapeError(
            f"kernel expects input with {state.config.input_dim} columns, got {x.shape}")


def _gcn_forward(state, graph, x, training, rng):
    a = normalize_adjacency(graph)
    p = state.config.dropout_p
    xd, mask0 = dropout(x, p, training, rng)
    pre = a @ (xd @ state.params["w0"].value)
    h1 = relu(pre)
    h1d, mask1 = dropout(h1, p, training, rng)
    out = a @ (h1d @ state.params["w1"].value)
    state.cache = {"a": a, "xd": xd, "mask0": mask0, "pre": pre,
                   "h1d": h1d, "mask1": mask1}
    return out


def _gcn_backward(state, upstream, need_input_grad):
    c = state.cache
    a = c["a"]  # symmetric, so a.T @ v == a @ v
    dq = a @ upstream
    state.params["w1"].grad += c["h1d"].T @ dq
    dh1d = dq @ state.params["w1"].value.T
    dh1 = dropout_backward(dh1d, c["mask1"])
    dpre = relu_backward(dh1, c["pre"])
    dp = a @ dpre
    state.params["w0"].grad += c["xd"].T @ dp
    if need_input_grad:
        dxd = dp @ state.params["w0"].value.T
        return dropout_backward(dxd, c["mask0"])
    return None


def _sage_forward(state, graph, x, training, rng):
    ar = row_normalize_adjacency(graph)
    p = state.config.dropout_p
    xd, mask0 = dropout(x, p, training, rng)
    n0 = ar @ xd
    pre = n0 @ state.params["w_neigh_0"].value + xd @ state.params["w_self_0"].value
    h1 = relu(pre)
    h1d, mask1 = dropout(h1, p, training, rng)
    n1 = ar @ h1d
    out = n1 @ state.params["w_neigh_1"].value + h1d @ state.params["w_self_1"].value
    state.cache = {"xd": xd, "mask0": mask0, "n0": n0, "pre": pre,
                   "h1d": h1d, "mask1": mask1, "n1": n1, "graph": graph}
    return out


def _sage_backward(state, upstream, need_input_grad):
    c = state.cache
    art = row_normalize_adjacency_t(c["graph"])
    state.params["w_neigh_1"].grad += c["n1"].T @ upstream
    state.params["w_self_1"].grad += c["h1d"].T @ upstream
    dh1d = (art @ upstream) @ state.params["w_neigh_1"].value.T \
        + upstream @ state.params["w_self_1"].value.T
    dh1 = dropout_backward(dh1d, c["mask1"])
    dpre = relu_backward(dh1, c["pre"])
    state.params["w_neigh_0"].grad += c["n0"].T @ dpre
    state.params["w_self_0"].grad += c["xd"].T @ dpre
    if need_input_grad:
        dxd = (art @ dpre) @ state.params["w_neigh_0"].value.T \
            + dpre @ state.params["w_self_0"].value.T
        return dropout_backward(dxd, c["mask0"])
    return None


def _appnp_forward(state, graph, x, training, rng):
    a = normalize_adjacency(graph)
    cfg = state.config
    xd, mask0 = dropout(x, cfg.dropout_p, training, rng)
    pre = xd @ state.params["w0"].value
    h1 = relu(pre)
    h1d, mask1 = dropout(h1, cfg.dropout_p, training, rng)
    h0 = h1d @ state.params["w1"].value
    t = cfg.appnp_teleport
    z = h0
    for _ in range(cfg.appnp_steps):
        z = (1.0 - t) * (a @ z) + t * h0
    state.cache = {"a": a, "xd": xd, "mask0": mask0, "pre": pre,
                   "h1d": h1d, "mask1": mask1}
    return z


def _appnp_backward(state, upstream, need_input_grad):
    c = state.cache
    a = c["a"]
    cfg = state.config
    t = cfg.appnp_teleport
    # adjoint of the propagation recurrence; a is symmetric
    dz = upstream
    dh0 = np.zeros_like(upstream)
    for _ in range(cfg.appnp_steps):
        dh0 += t * dz
        dz = (1.0 - t) * (a @ dz)
    dh0 += dz  # Z_0 = H0
    state.params["w1"].grad += c["h1d"].T @ dh0
    dh1d = dh0 @ state.params["w1"].value.T
    dh1 = dropout_backward(dh1d, c["mask1"])
    dpre = relu_backward(dh1, c["pre"])
    state.params["w0"].grad += c["xd"].T @ dpre
    if need_input_grad:
        dxd = dpre @ state.params["w0"].value.T
        return dropout_backward(dxd, c["mask0"])
    return None


_FORWARD = {"gcn": _gcn_forward, "sage": _sage_forward, "appnp": _appnp_forward}
_BACKWARD = {"gcn": _gcn_backward, "sage": _sage_backward, "appnp": _appnp_backward}


def kernel_apply(state: KernelState, graph: Graph, x, training: bool = False,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Forward pass; returns (n, output_dim) logits-scale features. With
    training=True, dropout is active and consumes draws from rng."""
    if sp.issparse(x):
        x = sp.csr_matrix(x)
    else:
        x = np.ascontiguousarray(x, dtype=np.float64)
    _check_input(state, x)
    if x.shape[0] != graph.n:
        raise ShapeError(f"input has {x.shape[0]} rows but the graph has {graph.n} nodes")
    return _FORWARD[state.config.kind](state, graph, x, training, rng)


def kernel_backward(state: KernelState, upstream: np.ndarray,
                    need_input_grad: bool = False):
    """Accumulate parameter gradients for the most recent forward pass.
    Returns the gradient with respect to the input when asked, else None."""
    if not state.cache:
        raise StateError("kernel_backward called before kernel_apply")
    upstream = np.asarray(upstream, dtype=np.float64)
    return _BACKWARD[state.config.kind](state, upstream, need_input_grad)
