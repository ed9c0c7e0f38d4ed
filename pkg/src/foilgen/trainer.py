"""DDPM training: epsilon-prediction MSE with classifier-free conditioning dropout."""
from __future__ import annotations

import hashlib
import math
import time
from collections import deque
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import torch

from .denoiser import NULL_SPEC, ConditioningSpec, Denoiser, DenoiserConfig
from .diffusion import NoiseSchedule, make_schedule
from .geometry import N_SURFACE


class TrainError(ValueError):
    pass


class EmptyBatch(TrainError):
    pass


class DatasetTooSmall(TrainError):
    pass


class NonFiniteLoss(TrainError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 500
    batch_size: int = 16
    learning_rate: float = 2e-4
    uncond_drop_prob: float = 0.1
    seed: int = 0
    checkpoint_every: int = 0
    window: int = 50
    holdout: float = 0.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.uncond_drop_prob <= 1.0:
            raise ValueError(f"uncond_drop_prob must lie in [0, 1], got {self.uncond_drop_prob}")
        if self.window < 1 or self.checkpoint_every < 0:
            raise ValueError("window must be >= 1 and checkpoint_every >= 0")
        if not 0.0 <= self.holdout < 1.0:
            raise ValueError(f"holdout must lie in [0, 1), got {self.holdout}")


@dataclass(frozen=True)
class TrainRecord:
    step: int
    loss: float
    window_mean: float
    elapsed: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrainingSet:
    """Canonical samples (n, 2, 100) with one conditioning value per sample.

    ``values`` is ``None`` when ``kind`` is ``"none"``.
    """

    samples: np.ndarray
    kind: str = "none"
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 3 or s.shape[1:] != (2, N_SURFACE):
            raise ValueError(f"samples must have shape (n, 2, {N_SURFACE}), got {s.shape}")
        object.__setattr__(self, "samples", s)
        if self.kind == "none":
            object.__setattr__(self, "values", None)
        else:
            if self.values is None:
                raise ValueError(f"kind {self.kind!r} needs per-sample values")
            v = np.asarray(self.values, dtype=float)
            if v.shape != (len(s),) or not np.all(np.isfinite(v)):
                raise ValueError("values must be finite with one entry per sample")
            object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.samples)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.kind.encode())
        h.update(np.ascontiguousarray(self.samples, dtype="<f8").tobytes())
        if self.values is not None:
            h.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return h.hexdigest()

    def subset(self, idx) -> "TrainingSet":
        return TrainingSet(self.samples[idx], self.kind, None if self.values is None else self.values[idx])


def condition_stats(values: np.ndarray) -> tuple[float, float]:
    """Mean and population std; a zero std falls back to 1 so z-scores stay finite."""
    mean = float(np.mean(values))
    std = float(np.std(values))
    return mean, (std if std > 0 else 1.0)


def training_loss(
    model: Denoiser,
    batch: np.ndarray,
    specs: Sequence[ConditioningSpec],
    rng: np.random.Generator,
    schedule: NoiseSchedule,
    drop_prob: float = 0.1,
    on_condition: Optional[Callable[[list], None]] = None,
) -> torch.Tensor:
    """Monte-Carlo epsilon-MSE for one batch.

    Per sample: t ~ U{1..T}, eps ~ N(0, I), y_t from the closed-form forward
    process, and the spec swapped for the null condition with probability
    ``drop_prob``. ``on_condition`` receives the specs actually fed to the
    network.
    """
    batch = np.asarray(batch, dtype=float)
    if len(batch) == 0:
        raise EmptyBatch("training batch is empty")
    if len(specs) != len(batch):
        raise ValueError(f"{len(specs)} specs for a batch of {len(batch)}")
    n = len(batch)
    t = rng.integers(1, schedule.total_steps + 1, size=n)
    eps = rng.standard_normal(batch.shape)
    drop = rng.random(n) < drop_prob
    used = [NULL_SPEC if d else s for s, d in zip(specs, drop)]
    if on_condition is not None:
        on_condition(used)
    abar = schedule.alpha_bar[t - 1][:, None, None]
    y_t = np.sqrt(abar) * batch + np.sqrt(1.0 - abar) * eps
    values, mask = model._spec_tensors(used)
    dtype = model.net.stem.weight.dtype
    pred = model.net(torch.as_tensor(y_t, dtype=dtype), torch.as_tensor(t), values, mask)
    loss = torch.mean((torch.as_tensor(eps, dtype=dtype) - pred) ** 2)
    if not torch.isfinite(loss):
        raise NonFiniteLoss(f"loss is {loss.item()} (t range {t.min()}..{t.max()})")
    return loss


def train(
    dataset: TrainingSet,
    config: TrainConfig = TrainConfig(),
    denoiser_config: DenoiserConfig = DenoiserConfig(),
    schedule: Optional[NoiseSchedule] = None,
    on_record: Optional[Callable[[TrainRecord], None]] = None,
    on_checkpoint: Optional[Callable[[int, Denoiser], None]] = None,
) -> Denoiser:
    """Train a fresh denoiser; the result carries ``training_meta`` for the checkpoint.

    Weight init uses ``config.seed``; every data draw (batch order, t, noise,
    dropout) comes from one NumPy generator seeded with ``config.seed``.
    """
    schedule = schedule or make_schedule()
    rng = np.random.default_rng(config.seed)
    if config.holdout > 0:
        order = rng.permutation(len(dataset))
        keep = len(dataset) - int(math.floor(config.holdout * len(dataset)))
        train_set = dataset.subset(np.sort(order[:keep]))
    else:
        train_set = dataset
    n = len(train_set)
    if n < config.batch_size:
        raise DatasetTooSmall(f"dataset has {n} samples, batch_size is {config.batch_size}")

    if train_set.kind == "none":
        mean, std = 0.0, 1.0
    else:
        mean, std = condition_stats(train_set.values)
    model = Denoiser(denoiser_config, schedule.params(), train_set.kind, mean, std, seed=config.seed)
    if train_set.kind == "none":
        specs = [NULL_SPEC] * n
    else:
        specs = [model.spec(v) for v in train_set.values]

    net = model.net
    net.train()
    opt = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    window: deque = deque(maxlen=config.window)
    order = rng.permutation(n)
    cursor = 0
    start = time.perf_counter()
    for step in range(1, config.steps + 1):
        if cursor + config.batch_size > n:
            order = rng.permutation(n)
            cursor = 0
        idx = order[cursor : cursor + config.batch_size]
        cursor += config.batch_size
        loss = training_loss(
            model, train_set.samples[idx], [specs[i] for i in idx], rng, schedule, config.uncond_drop_prob
        )
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        value = float(loss.item())
        window.append(value)
        record = TrainRecord(step, value, float(np.mean(window)), time.perf_counter() - start)
        if on_record is not None:
            on_record(record)
        if on_checkpoint is not None and config.checkpoint_every and step % config.checkpoint_every == 0:
            net.eval()
            on_checkpoint(step, model)
            net.train()
    net.eval()
    model.training_meta = {
        "steps": config.steps,
        "seed": config.seed,
        "batch_size": config.batch_size,
        "learning_rate": config.learning_rate,
        "uncond_drop_prob": config.uncond_drop_prob,
        "holdout": config.holdout,
        "dataset_size": len(dataset),
        "dataset_fingerprint": dataset.fingerprint(),
    }
    return model
