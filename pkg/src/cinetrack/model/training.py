"""Fine-tuning loop: decoupled-weight-decay Adam, linear warmup into cosine
annealing, strict-improvement early stopping, deterministic 9:1 split.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from typing import Sequence

import torch
from torch import nn

from .decoder import ToyMusicDecoder, set_trainable


@dataclass
class TrainConfig:
    lr: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 1e-2
    warmup_steps: int = 100
    batch_size: int = 1
    patience_epochs: int = 3
    max_epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("lr", "warmup_steps", "batch_size", "patience_epochs", "max_epochs"):
            if getattr(self, name) < 0 or (name != "warmup_steps" and getattr(self, name) == 0):
                raise ValueError(f"{name} must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")


@dataclass
class TrainingSample:
    """One paired example: token sequence plus its conditioning."""

    tokens: torch.Tensor  # (S,) int64
    z_t: torch.Tensor  # (T_t, m)
    z_v: torch.Tensor | None = None  # (T_v, n)


@dataclass
class HistoryRow:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class TrainResult:
    history: list[HistoryRow]
    best_val_loss: float
    epochs_run: int
    stopped_early: bool

    def write_history(self, path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "train_loss", "val_loss", "lr"])
            for row in self.history:
                writer.writerow([row.epoch, row.train_loss, row.val_loss, row.lr])


class WarmupCosine:
    """lr as a pure function of the optimizer-step index (1-based).

    Ramps linearly from 0 so that lr(warmup_steps) == base_lr exactly, then
    follows cosine annealing to 0 at total_steps.
    """

    def __init__(self, base_lr: float, warmup_steps: int, total_steps: int):
        if total_steps < warmup_steps:
            raise ValueError("total_steps must be >= warmup_steps")
        self.base_lr = base_lr
        self.warmup_steps = warmup_steps
        self.total_steps = total_steps

    def lr(self, step: int) -> float:
        if self.warmup_steps > 0 and step <= self.warmup_steps:
            return self.base_lr * step / self.warmup_steps
        if self.total_steps == self.warmup_steps:
            return self.base_lr
        progress = (step - self.warmup_steps) / (self.total_steps - self.warmup_steps)
        progress = min(max(progress, 0.0), 1.0)
        return self.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


class EarlyStopper:
    """Stop after ``patience`` consecutive epochs without a strictly lower value."""

    def __init__(self, patience: int):
        if patience <= 0:
            raise ValueError("patience must be positive")
        self.patience = patience
        self.best: float | None = None
        self.bad_epochs = 0

    def update(self, val_loss: float) -> bool:
        if self.best is None or val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        return self.bad_epochs >= self.patience


def split_dataset(n: int, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic 9:1 train/validation index split.

    Validation takes floor(n / 10) samples, at least one; training gets the
    rest. Requires n >= 2 so both sides are non-empty.
    """
    if n < 2:
        raise ValueError(f"need at least 2 samples to split, got {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    n_val = max(1, n // 10)
    return order[n_val:], order[:n_val]


def sequence_loss(model: ToyMusicDecoder, sample: TrainingSample) -> torch.Tensor:
    """Next-token cross-entropy over the sequence."""
    if sample.tokens.numel() < 2:
        raise ValueError("sequences must have at least 2 tokens")
    logits = model(sample.tokens, sample.z_t, sample.z_v)
    return nn.functional.cross_entropy(logits[:-1], sample.tokens[1:])


def evaluate(model: ToyMusicDecoder, samples: Sequence[TrainingSample]) -> float:
    model.eval()
    with torch.no_grad():
        losses = [sequence_loss(model, s).item() for s in samples]
    model.train()
    return float(sum(losses) / len(losses))


def train(
    dataset: Sequence[TrainingSample],
    cfg: TrainConfig,
    mode: str,
    model: ToyMusicDecoder,
) -> TrainResult:
    """Fine-tune ``model`` in the given mode (adapter / lora / full).

    Only the mode's parameter set receives updates; everything else stays
    frozen. Training stops when validation loss fails to improve for
    ``patience_epochs`` consecutive epochs, or at ``max_epochs``.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    train_idx, val_idx = split_dataset(len(dataset), cfg.seed)
    train_samples = [dataset[i] for i in train_idx]
    val_samples = [dataset[i] for i in val_idx]

    params = set_trainable(model, mode)
    if not params:
        raise ValueError(f"mode {mode!r} selects no trainable parameters")
    optimizer = torch.optim.AdamW(
        params, lr=cfg.lr, betas=cfg.betas, weight_decay=cfg.weight_decay
    )
    steps_per_epoch = math.ceil(len(train_samples) / cfg.batch_size)
    # a warmup longer than the run simply never finishes ramping
    total_steps = max(cfg.max_epochs * steps_per_epoch, cfg.warmup_steps)
    schedule = WarmupCosine(cfg.lr, cfg.warmup_steps, total_steps)
    stopper = EarlyStopper(cfg.patience_epochs)
    shuffler = random.Random(cfg.seed + 1)

    history: list[HistoryRow] = []
    step = 0
    current_lr = schedule.lr(1)
    stopped_early = False
    model.train()
    for epoch in range(1, cfg.max_epochs + 1):
        order = list(range(len(train_samples)))
        shuffler.shuffle(order)
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_samples[i] for i in order[start : start + cfg.batch_size]]
            step += 1
            current_lr = schedule.lr(step)
            for group in optimizer.param_groups:
                group["lr"] = current_lr
            optimizer.zero_grad()
            loss = sum(sequence_loss(model, s) for s in batch) / len(batch)
            loss.backward()
            optimizer.step()
            epoch_losses.append(loss.item())

        train_loss = float(sum(epoch_losses) / len(epoch_losses))
        val_loss = evaluate(model, val_samples)
        history.append(HistoryRow(epoch, train_loss, val_loss, current_lr))
        if stopper.update(val_loss):
            stopped_early = True
            break

    return TrainResult(
        history=history,
        best_val_loss=stopper.best if stopper.best is not None else float("nan"),
        epochs_run=len(history),
        stopped_early=stopped_early,
    )
