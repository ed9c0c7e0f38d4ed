"""DDPM forward/reverse process and the guided sampling loop.

Timesteps are 1-based as in the usual DDPM notation: ``t`` runs 1..T and the
schedule tables are stored 0-based, so ``beta[t - 1]`` is beta_t. The update
functions accept NumPy arrays or torch tensors alike.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import N_SURFACE


class DiffusionError(ValueError):
    pass


class InvalidRange(DiffusionError):
    pass


class ShapeMismatch(DiffusionError):
    pass


class ScheduleMismatch(DiffusionError):
    pass


@dataclass(frozen=True)
class NoiseSchedule:
    total_steps: int
    beta_start: float
    beta_end: float
    beta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    alpha_bar: np.ndarray = field(repr=False)

    def params(self) -> tuple[int, float, float]:
        return (self.total_steps, self.beta_start, self.beta_end)

    def check_step(self, t: int) -> None:
        if not 1 <= t <= self.total_steps:
            raise DiffusionError(f"timestep {t} outside [1, {self.total_steps}]")


def make_schedule(total_steps: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linear beta schedule with alpha = 1 - beta and alpha_bar its running product."""
    if total_steps < 1:
        raise InvalidRange(f"total_steps must be >= 1, got {total_steps}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise InvalidRange(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    beta = np.linspace(beta_start, beta_end, total_steps)
    alpha = 1.0 - beta
    # cumprod accumulates left to right, so alpha_bar[t] == alpha_bar[t-1] * alpha[t] exactly
    alpha_bar = np.cumprod(alpha)
    for arr in (beta, alpha, alpha_bar):
        arr.setflags(write=False)
    return NoiseSchedule(total_steps, float(beta_start), float(beta_end), beta, alpha, alpha_bar)


def _same_shape(a, b, what: str) -> None:
    if tuple(a.shape) != tuple(b.shape):
        raise ShapeMismatch(f"{what}: shapes {tuple(a.shape)} and {tuple(b.shape)} differ")


def forward_sample(y0, t: int, noise, schedule: NoiseSchedule):
    """Closed-form corruption y_t = sqrt(abar_t) y0 + sqrt(1 - abar_t) eps."""
    schedule.check_step(t)
    _same_shape(y0, noise, "forward_sample")
    abar = schedule.alpha_bar[t - 1]
    return math.sqrt(abar) * y0 + math.sqrt(1.0 - abar) * noise


def forward_step(y_prev, t: int, noise, schedule: NoiseSchedule):
    """One Markov step y_t = sqrt(1 - beta_t) y_{t-1} + sqrt(beta_t) eps."""
    schedule.check_step(t)
    _same_shape(y_prev, noise, "forward_step")
    beta = schedule.beta[t - 1]
    return math.sqrt(1.0 - beta) * y_prev + math.sqrt(beta) * noise


def reverse_step(y_t, t: int, eps_hat, fresh_noise, schedule: NoiseSchedule):
    """Ancestral step y_t -> y_{t-1} with fixed variance beta_t.

    ``fresh_noise`` is ignored at t = 1 so the last step returns the mean.
    """
    schedule.check_step(t)
    _same_shape(y_t, eps_hat, "reverse_step")
    if fresh_noise is not None:
        _same_shape(y_t, fresh_noise, "reverse_step")
    beta = schedule.beta[t - 1]
    alpha = schedule.alpha[t - 1]
    abar = schedule.alpha_bar[t - 1]
    mean = (y_t - (beta / math.sqrt(1.0 - abar)) * eps_hat) / math.sqrt(alpha)
    if t == 1 or fresh_noise is None:
        return mean
    return mean + math.sqrt(beta) * fresh_noise


def guided_epsilon(eps_cond, eps_uncond, scale: float):
    """Classifier-free guidance: eps_uncond + w (eps_cond - eps_uncond)."""
    _same_shape(eps_cond, eps_uncond, "guided_epsilon")
    if scale == 0.0:
        return eps_uncond
    if scale == 1.0:
        return eps_cond
    return eps_uncond + scale * (eps_cond - eps_uncond)


@dataclass(frozen=True)
class GuidanceConfig:
    scale: float = 2.0
    uncond_drop_prob: float = 0.1

    def __post_init__(self):
        if not self.scale >= 0.0:
            raise ValueError(f"guidance scale must be >= 0, got {self.scale}")
        if not 0.0 <= self.uncond_drop_prob <= 1.0:
            raise ValueError(f"drop probability must lie in [0, 1], got {self.uncond_drop_prob}")


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Per-sample generator; sample ``index`` is reproducible on its own."""
    return np.random.default_rng([int(seed), int(index)])


def sample(
    model,
    schedule: NoiseSchedule,
    targets: Optional[Sequence[float]] = None,
    guidance: GuidanceConfig = GuidanceConfig(),
    seed: int = 0,
    count: Optional[int] = None,
    batch_size: int = 256,
    progress=None,
) -> np.ndarray:
    """Generate ``count`` canonical samples by ancestral sampling from pure noise.

    ``model`` is a trained :class:`~foilgen.denoiser.Denoiser`. ``targets`` are
    raw (un-normalized) conditioning values, one per sample; ``None`` samples
    unconditionally. Returns an array of shape (count, 2, 100) clamped to
    [-1, 1]. Sample i only depends on ``(seed, i)`` and its target.
    """
    if tuple(model.schedule_params) != schedule.params():
        raise ScheduleMismatch(
            f"model trained with schedule {tuple(model.schedule_params)}, sampler has {schedule.params()}"
        )
    if targets is not None:
        targets = np.asarray(targets, dtype=float)
        if count is None:
            count = len(targets)
        elif len(targets) != count:
            raise ValueError(f"{len(targets)} targets for {count} samples")
    if count is None or count < 1:
        raise ValueError("count must be >= 1")

    out = np.empty((count, 2, N_SURFACE))
    for lo in range(0, count, batch_size):
        idx = range(lo, min(lo + batch_size, count))
        batch_targets = None if targets is None else targets[lo : lo + len(idx)]
        out[lo : lo + len(idx)] = _sample_batch(model, schedule, batch_targets, guidance, seed, idx, progress)
    return np.clip(out, -1.0, 1.0)


def _sample_batch(model, schedule, targets, guidance, seed, indices, progress):
    rngs = [sample_rng(seed, i) for i in indices]
    y = np.stack([r.standard_normal((2, N_SURFACE)) for r in rngs])
    conditional = targets is not None
    for t in range(schedule.total_steps, 0, -1):
        if not conditional:
            eps = model.predict_batch(y, t, None)
        elif guidance.scale == 1.0:
            eps = model.predict_batch(y, t, targets)
        else:
            eps_c, eps_u = model.predict_batch_pair(y, t, targets)
            eps = guided_epsilon(eps_c, eps_u, guidance.scale)
        fresh = np.stack([r.standard_normal((2, N_SURFACE)) for r in rngs]) if t > 1 else None
        y = reverse_step(y, t, eps, fresh, schedule)
        if progress is not None:
            progress(t)
    return y
