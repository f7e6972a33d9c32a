"""End-to-end training: split, normalize, batch, optimize, evaluate.

The loop reproduces the fixed protocol: a 70/27/3 split, target scaling
matched to the output head, per-epoch reshuffling into mini-batches
padded to the batch maximum, Adam updates, and per-epoch train plus
validation losses. Validation always runs in eval mode.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import fit_normalization, pad_and_batch, split_dataset
from .network import (NetworkConfig, network_backward, network_forward,
                      init_params, tree_leaves, tree_map)
from .optim import adam_step, init_adam, mse_loss


class TrainingDivergedError(RuntimeError):
    """Training hit a non-finite loss or gradient; carries the epoch."""

    def __init__(self, epoch: int, message: str):
        super().__init__(message)
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters around a network architecture."""

    network: NetworkConfig
    epochs: int = 150
    lr: float = 0.01
    batch_size: int = 32
    seed: int = 0
    masked_loss: bool = True  # off = padding counts toward the loss
    keep_best_validation: bool = False
    data_path: str | None = None  # CLI convenience; train() takes sequences

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if not (np.isfinite(self.lr) and self.lr > 0.0):
            raise ValueError("learning rate must be positive and finite")


@dataclass
class TrainReport:
    """Per-epoch losses and timings plus the final internal-test loss."""

    train_losses: list
    val_losses: list
    epoch_seconds: list
    final_test_loss: float
    config: TrainConfig

    def __post_init__(self):
        epochs = self.config.epochs
        if not (len(self.train_losses) == len(self.val_losses)
                == len(self.epoch_seconds) == epochs):
            raise ValueError(f"report must carry exactly {epochs} epoch entries")
        values = [*self.train_losses, *self.val_losses, self.final_test_loss]
        if not np.isfinite(values).all():
            raise ValueError("report losses must be finite")


def _loss_mask(batch, masked: bool):
    return batch.mask if masked else np.ones_like(batch.mask)


def _eval_loss(params, net: NetworkConfig, batch, masked: bool) -> float:
    preds, _ = network_forward(params, net, batch, mode="eval")
    loss, _ = mse_loss(preds, batch.targets, _loss_mask(batch, masked))
    return loss


def train(dataset, config: TrainConfig):
    """Train on a dataset of pouring sequences.

    Returns (params, normalization spec, report). Parameters come from
    the final epoch unless keep_best_validation is set, in which case the
    epoch with the lowest validation loss wins.
    """
    train_seqs, val_seqs, test_seqs = split_dataset(dataset, config.seed)
    norm = fit_normalization(train_seqs, config.network.output_activation)

    init_ss, shuffle_ss, dropout_ss = np.random.SeedSequence(config.seed).spawn(3)
    params = init_params(config.network, init_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)
    adam = init_adam(params, lr=config.lr)
    val_batch = pad_and_batch(val_seqs, norm)

    train_losses, val_losses, epoch_seconds = [], [], []
    best = None
    for epoch in range(1, config.epochs + 1):
        tic = time.perf_counter()
        order = shuffle_rng.permutation(len(train_seqs))
        weighted_sum = 0.0
        weight = 0.0
        for start in range(0, len(order), config.batch_size):
            chunk = [train_seqs[k] for k in order[start:start + config.batch_size]]
            batch = pad_and_batch(chunk, norm)
            preds, cache = network_forward(params, config.network, batch,
                                           mode="train", rng=dropout_rng)
            mask = _loss_mask(batch, config.masked_loss)
            loss, dpred = mse_loss(preds, batch.targets, mask)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    epoch, f"non-finite training loss in epoch {epoch}")
            grads = network_backward(params, config.network, cache, dpred, mask)
            for path, g in tree_leaves(grads):
                if not np.isfinite(g).all():
                    raise TrainingDivergedError(
                        epoch, f"non-finite gradient at {path} in epoch {epoch}")
            adam, params = adam_step(adam, params, grads)
            n_real = float(mask.sum())
            weighted_sum += loss * n_real
            weight += n_real
        train_losses.append(weighted_sum / weight)

        val_loss = _eval_loss(params, config.network, val_batch, config.masked_loss)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(
                epoch, f"non-finite validation loss in epoch {epoch}")
        val_losses.append(val_loss)
        epoch_seconds.append(time.perf_counter() - tic)
        if config.keep_best_validation and (best is None or val_loss < best[0]):
            best = (val_loss, tree_map(np.copy, params))

    if best is not None:
        params = best[1]
    test_batch = pad_and_batch(test_seqs, norm)
    final_test_loss = _eval_loss(params, config.network, test_batch,
                                 config.masked_loss)
    report = TrainReport(train_losses=train_losses, val_losses=val_losses,
                         epoch_seconds=epoch_seconds,
                         final_test_loss=final_test_loss, config=config)
    return params, norm, report


def predict(params, net: NetworkConfig, norm, seq) -> np.ndarray:
    """Denormalized predicted weight curve for one sequence (lbf)."""
    batch = pad_and_batch([seq], norm)
    preds, _ = network_forward(params, net, batch, mode="eval")
    return norm.denormalize_targets(preds[:, 0])


def evaluate_model(params, net: NetworkConfig, norm, testset):
    """Predict every test sequence; returns (predicted, actual) pairs.

    Actual curves are the raw recorded weights, passed through untouched.
    """
    return [(predict(params, net, norm, seq), seq.weights())
            for seq in testset]


def export_loss_curve(report: TrainReport, path) -> None:
    """Write epoch,train_loss,val_loss rows, one per epoch."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,val_loss\n")
        rows = zip(report.train_losses, report.val_losses)
        for epoch, (train_loss, val_loss) in enumerate(rows, start=1):
            fh.write(f"{epoch},{train_loss!r},{val_loss!r}\n")


def export_prediction(seq, predicted, path) -> None:
    """Write t,theta,actual_f,predicted_f rows for one sequence."""
    predicted = np.asarray(predicted, dtype=np.float64)
    if predicted.shape != (len(seq),):
        raise ValueError("predicted curve length must match the sequence")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,theta,actual_f,predicted_f\n")
        for t, step in enumerate(seq.steps):
            fh.write(f"{t},{step.theta_deg!r},{step.f_lbf!r},"
                     f"{float(predicted[t])!r}\n")
