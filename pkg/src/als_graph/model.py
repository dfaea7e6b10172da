"""Minimal trainable classifiers with hand-derived backpropagation.

Two architectures share one code path: ``gcn`` aggregates with the
symmetrically normalized self-loop operator before every affine layer, and
``mlp`` skips aggregation entirely. The optimizer is standard bias-corrected
adaptive moments over a flat list of parameter arrays, and the inception-style
precompute stacks powers of the normalized adjacency applied to the features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import CsrGraph, normalized_spmm
from .rng import stream
from .sampling import Batch

__all__ = [
    "ModelParams",
    "ForwardCache",
    "OptState",
    "init_model",
    "forward",
    "backward",
    "init_opt_state",
    "adam_step",
    "sign_precompute",
]


@dataclass
class ModelParams:
    arch: str
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout: float = 0.0

    def __post_init__(self) -> None:
        if self.arch not in ("gcn", "mlp"):
            raise ValueError(f"unknown architecture {self.arch!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix")
        for i in range(len(self.weights) - 1):
            if self.weights[i].shape[1] != self.weights[i + 1].shape[0]:
                raise ValueError("consecutive layer dimensions must chain")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[1]


def init_model(arch: str, dims, dropout: float, seed: int) -> ModelParams:
    """Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases."""
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise ValueError("need at least input and output widths")
    gen = stream(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(gen.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(arch, weights, biases, dropout)


@dataclass
class ForwardCache:
    params: ModelParams
    graphs: list[CsrGraph | None]
    layer_inputs: list[np.ndarray]
    preactivations: list[np.ndarray]
    dropout_masks: list[np.ndarray | None]


def _layer_graph(params: ModelParams, batch: Batch, layer: int) -> CsrGraph | None:
    if params.arch == "mlp":
        return None
    if batch.layer_graphs is not None:
        if len(batch.layer_graphs) != params.depth:
            raise ValueError("batch carries layered adjacencies for a different depth")
        return batch.layer_graphs[layer]
    return batch.subgraph


def forward(params: ModelParams, batch: Batch, features: np.ndarray,
            train_mode: bool, seed: int = 0) -> tuple[np.ndarray, ForwardCache]:
    """Logits for every batch node plus the cache needed by ``backward``.

    ``features`` must hold one row per batch node, aligned with
    ``batch.global_ids``. Dropout applies to hidden activations only and only
    in train mode, with inverted scaling baked into the stored masks.
    """
    h = np.asarray(features, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != batch.num_nodes:
        raise ValueError("feature rows must align with the batch nodes")
    if h.shape[1] != params.weights[0].shape[0]:
        raise ValueError(f"feature width {h.shape[1]} does not match the input layer "
                         f"({params.weights[0].shape[0]})")
    gen = stream(seed) if train_mode and params.dropout > 0 else None
    cache = ForwardCache(params, [], [], [], [])
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        g = _layer_graph(params, batch, layer)
        agg = h if g is None else normalized_spmm(g, h, "sym_norm_self_loops")
        z = agg @ w + b
        cache.graphs.append(g)
        cache.layer_inputs.append(agg)
        cache.preactivations.append(z)
        if layer < params.depth - 1:
            h = np.maximum(z, 0.0)
            mask = None
            if gen is not None:
                keep = gen.random(h.shape) >= params.dropout
                mask = keep / (1.0 - params.dropout)
                h = h * mask
            cache.dropout_masks.append(mask)
        else:
            cache.dropout_masks.append(None)
    return cache.preactivations[-1], cache


def backward(params: ModelParams, cache: ForwardCache,
             dlogits: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact reverse pass; returns (weight grads, bias grads).

    The aggregation operator is symmetric, so its transpose application
    reuses the forward kernel.
    """
    if cache.params is not params:
        raise ValueError("stale cache: it was produced by a different forward call")
    dlogits = np.asarray(dlogits, dtype=np.float64)
    if dlogits.shape != cache.preactivations[-1].shape:
        raise ValueError("dlogits shape does not match the cached logits")
    wgrads = [np.empty(0)] * params.depth
    bgrads = [np.empty(0)] * params.depth
    dh = dlogits
    for layer in range(params.depth - 1, -1, -1):
        if layer < params.depth - 1:
            mask = cache.dropout_masks[layer]
            if mask is not None:
                dh = dh * mask
            dz = dh * (cache.preactivations[layer] > 0)
        else:
            dz = dh
        wgrads[layer] = cache.layer_inputs[layer].T @ dz
        bgrads[layer] = dz.sum(axis=0)
        if layer:
            dagg = dz @ params.weights[layer].T
            g = cache.graphs[layer]
            dh = dagg if g is None else normalized_spmm(g, dagg, "sym_norm_self_loops")
    return wgrads, bgrads


@dataclass
class OptState:
    """Per-array first/second moment accumulators for adaptive updates."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_opt_state(values, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8) -> OptState:
    return OptState([np.zeros_like(x) for x in values], [np.zeros_like(x) for x in values],
                    0, lr, beta1, beta2, eps)


def adam_step(values, grads, state: OptState) -> tuple[list[np.ndarray], OptState]:
    """One bias-corrected adaptive-moment update over a flat parameter list."""
    if len(values) != len(grads) or len(values) != len(state.m):
        raise ValueError("parameter, gradient and state lists must align")
    for i, g in enumerate(grads):
        if not np.isfinite(g).all():
            raise ValueError(f"non-finite gradient in array {i} "
                             f"({int(np.sum(~np.isfinite(g)))} bad entries)")
    t = state.step + 1
    new_values, new_m, new_v = [], [], []
    for x, g, m, v in zip(values, grads, state.m, state.v):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        new_values.append(x - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_values, OptState(new_m, new_v, t, state.lr, state.beta1, state.beta2, state.eps)


def sign_precompute(g: CsrGraph, x: np.ndarray, hops: int) -> np.ndarray:
    """Stack [X | AX | ... | A^L X] with the normalized self-loop operator."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != g.num_nodes:
        raise ValueError("feature rows must match the node count")
    if hops < 0:
        raise ValueError("hop count must be nonnegative")
    blocks = [x]
    for _ in range(hops):
        blocks.append(normalized_spmm(g, blocks[-1], "sym_norm_self_loops"))
    return np.concatenate(blocks, axis=1)
