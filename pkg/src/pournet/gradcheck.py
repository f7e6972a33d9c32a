"""Finite-difference verification harness for the recurrent stack.

Builds a small random network and batch, runs exact BPTT against the
central-difference oracle, and reports the worst elementwise relative
error. This is the primary correctness check for the backward pass.
"""

from __future__ import annotations

import numpy as np

from .data import PaddedBatch
from .network import (NetworkConfig, init_params, network_backward,
                      network_forward, numerical_gradient, tree_leaves)
from .optim import mse_loss


def max_relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    """Worst |a - n| / max(|a|, |n|, floor) over all parameter entries."""
    worst = 0.0
    numeric_leaves = dict(tree_leaves(numeric))
    for path, a in tree_leaves(analytic):
        n = numeric_leaves[path]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def random_batch(rng, num_steps: int, batch_size: int, num_features: int,
                 lengths=None) -> PaddedBatch:
    """Random normalized-looking batch with a genuine padding pattern."""
    if lengths is None:
        lengths = rng.integers(max(1, num_steps - 2), num_steps + 1,
                               size=batch_size)
        lengths[rng.integers(batch_size)] = num_steps  # keep T_max honest
    lengths = np.asarray(lengths, dtype=np.int64)
    mask = (np.arange(num_steps)[:, None] < lengths[None, :]).astype(np.float64)
    inputs = rng.standard_normal((num_steps, batch_size, num_features))
    targets = rng.standard_normal((num_steps, batch_size))
    inputs *= mask[:, :, None]
    targets *= mask
    return PaddedBatch(inputs=inputs, targets=targets, mask=mask,
                       lengths=lengths)


def check_network_gradients(cell_kind, output_activation: str, seed: int,
                            epsilon: float = 1e-5, layer_widths=(3, 3),
                            num_steps: int = 4, batch_size: int = 2,
                            input_width: int = 3) -> float:
    """Max relative BPTT-vs-finite-difference error for one variant."""
    config = NetworkConfig(cell_kind=cell_kind, layer_widths=layer_widths,
                           dropout_rate=0.0, dropout_after_layers=(),
                           output_activation=output_activation,
                           input_width=input_width)
    rng = np.random.default_rng(seed)
    batch = random_batch(rng, num_steps, batch_size, input_width)
    params = init_params(config, seed)

    preds, cache = network_forward(params, config, batch, mode="eval")
    _, dpred = mse_loss(preds, batch.targets, batch.mask)
    analytic = network_backward(params, config, cache, dpred, batch.mask)
    numeric = numerical_gradient(
        params, config, batch,
        lambda p: mse_loss(p, batch.targets, batch.mask)[0], epsilon)
    return max_relative_error(analytic, numeric)
