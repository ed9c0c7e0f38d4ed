"""Conditional 1D U-Net noise predictor.

The network sees a (batch, 2, 100) signal: channel 0 is the upper surface,
channel 1 the lower surface, both on the canonical cosine grid. A sinusoidal
timestep code and a conditioning embedding are fused by a bilinear layer; the
fused context is projected and added inside every residual block.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .geometry import N_SURFACE

CONDITION_KINDS = ("lift_coefficient", "drag_coefficient", "max_thickness", "max_camber", "none")
# 100 -> 104 so three halvings stay exact
PADDED_LENGTH = 104


class DenoiserError(ValueError):
    pass


class NonFiniteInput(DenoiserError):
    pass


class WidthMismatch(DenoiserError):
    pass


class ShapeMismatch(DenoiserError):
    pass


class ConfigMismatch(DenoiserError):
    pass


@dataclass(frozen=True)
class ConditioningSpec:
    kind: str = "none"
    raw_value: Optional[float] = None
    normalized_value: Optional[float] = None

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise ValueError(f"unknown conditioning kind {self.kind!r}")
        if self.kind == "none" and (self.raw_value is not None or self.normalized_value is not None):
            raise ValueError("kind 'none' carries no value")

    @property
    def is_null(self) -> bool:
        return self.kind == "none"

    @classmethod
    def from_raw(cls, kind: str, raw: float, mean: float, std: float) -> "ConditioningSpec":
        return cls(kind, float(raw), (float(raw) - mean) / std)


NULL_SPEC = ConditioningSpec()


@dataclass(frozen=True)
class DenoiserConfig:
    base_width: int = 64
    depth: int = 3
    time_embed_dim: int = 128
    cond_embed_dim: int = 128
    fused_dim: int = 128
    kernel_size: int = 3
    groups: int = 8

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if PADDED_LENGTH % (2**self.depth):
            raise ValueError(f"padded length {PADDED_LENGTH} not divisible by 2**{self.depth}")
        if self.time_embed_dim % 2:
            raise ValueError("time_embed_dim must be even")
        if self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        for name in ("base_width", "time_embed_dim", "cond_embed_dim", "fused_dim", "groups"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.base_width % self.groups:
            raise ValueError(f"base_width {self.base_width} not divisible by groups {self.groups}")

    def to_dict(self) -> dict:
        return asdict(self)


def sinusoidal_code(t, dim: int) -> torch.Tensor:
    """Raw timestep code, interleaved as [sin(t f_0), cos(t f_0), sin(t f_1), ...]
    with f_k = 10000^(-2k/dim). ``t`` may be a scalar or a 1-D tensor."""
    t = torch.as_tensor(t, dtype=torch.float64).reshape(-1)
    k = torch.arange(dim // 2, dtype=torch.float64)
    freqs = torch.exp(-math.log(10000.0) * 2.0 * k / dim)
    args = t[:, None] * freqs[None, :]
    code = torch.stack([torch.sin(args), torch.cos(args)], dim=-1).reshape(len(t), dim)
    return code


def _group_count(channels: int, groups: int) -> int:
    g = math.gcd(channels, groups)
    return max(g, 1)


class ResBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, ctx_dim: int, kernel: int, groups: int):
        super().__init__()
        pad = kernel // 2
        self.norm1 = nn.GroupNorm(_group_count(c_in, groups), c_in)
        self.conv1 = nn.Conv1d(c_in, c_out, kernel, padding=pad)
        self.ctx = nn.Linear(ctx_dim, c_out)
        self.norm2 = nn.GroupNorm(_group_count(c_out, groups), c_out)
        self.conv2 = nn.Conv1d(c_out, c_out, kernel, padding=pad)
        self.skip = nn.Conv1d(c_in, c_out, 1) if c_in != c_out else nn.Identity()

    def forward(self, x, ctx):
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.ctx(ctx)[:, :, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return h + self.skip(x)


class UNet1D(nn.Module):
    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        self.cfg = cfg
        k, g = cfg.kernel_size, cfg.groups
        widths = [cfg.base_width * 2**i for i in range(cfg.depth)]

        self.time_proj = nn.Linear(cfg.time_embed_dim, cfg.time_embed_dim)
        self.cond_in = nn.Linear(1, cfg.cond_embed_dim)
        self.cond_out = nn.Linear(cfg.cond_embed_dim, cfg.cond_embed_dim)
        self.null_embedding = nn.Parameter(torch.zeros(cfg.cond_embed_dim))
        self.fuse = nn.Bilinear(cfg.time_embed_dim, cfg.cond_embed_dim, cfg.fused_dim)

        ctx = cfg.fused_dim
        self.stem = nn.Conv1d(2, cfg.base_width, k, padding=k // 2)
        self.down_blocks = nn.ModuleList()
        self.downsamples = nn.ModuleList()
        c = cfg.base_width
        for w in widths:
            self.down_blocks.append(ResBlock(c, w, ctx, k, g))
            self.downsamples.append(nn.Conv1d(w, w, k, stride=2, padding=k // 2))
            c = w
        self.mid = ResBlock(c, c, ctx, k, g)
        self.upsamples = nn.ModuleList()
        self.up_blocks = nn.ModuleList()
        for w in reversed(widths):
            self.upsamples.append(nn.Conv1d(c, c, k, padding=k // 2))
            self.up_blocks.append(ResBlock(c + w, w, ctx, k, g))
            c = w
        self.head_norm = nn.GroupNorm(_group_count(c, g), c)
        self.head = nn.Conv1d(c, 2, k, padding=k // 2)

    # -- embeddings -------------------------------------------------------

    def embed_timestep(self, t: torch.Tensor) -> torch.Tensor:
        code = sinusoidal_code(t, self.cfg.time_embed_dim).to(self.time_proj.weight.dtype)
        return F.relu(self.time_proj(code))

    def embed_condition(self, values: torch.Tensor, null_mask: torch.Tensor) -> torch.Tensor:
        """``values`` (B,) normalized; rows with ``null_mask`` get the null embedding."""
        h = self.cond_out(F.relu(self.cond_in(values[:, None])))
        return torch.where(null_mask[:, None], self.null_embedding[None, :].expand_as(h), h)

    def context(self, t, values, null_mask):
        return self.fuse(self.embed_timestep(t), self.embed_condition(values, null_mask))

    # -- network ----------------------------------------------------------

    def forward(self, y, t, values, null_mask):
        ctx = self.context(t, values, null_mask)
        left = (PADDED_LENGTH - N_SURFACE) // 2
        h = F.pad(y, (left, PADDED_LENGTH - N_SURFACE - left))
        h = self.stem(h)
        skips = []
        for block, down in zip(self.down_blocks, self.downsamples):
            h = block(h, ctx)
            skips.append(h)
            h = down(h)
        h = self.mid(h, ctx)
        for up, block in zip(self.upsamples, self.up_blocks):
            h = up(F.interpolate(h, scale_factor=2, mode="nearest"))
            h = block(torch.cat([h, skips.pop()], dim=1), ctx)
        h = self.head(F.silu(self.head_norm(h)))
        return h[:, :, left : left + N_SURFACE]


def init_weights(net: nn.Module, seed: int) -> None:
    """Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), from ``seed``."""
    gen = torch.Generator().manual_seed(int(seed))
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, (nn.Linear, nn.Conv1d, nn.Bilinear)):
                w = module.weight
                if isinstance(module, nn.Bilinear):
                    fan_in = w.shape[1] * w.shape[2]
                else:
                    fan_in = w[0].numel()
                bound = 1.0 / math.sqrt(fan_in)
                w.copy_(torch.rand(w.shape, generator=gen, dtype=w.dtype) * 2 * bound - bound)
                if module.bias is not None:
                    b = module.bias
                    b.copy_(torch.rand(b.shape, generator=gen, dtype=b.dtype) * 2 * bound - bound)
            elif isinstance(module, nn.GroupNorm):
                module.weight.fill_(1.0)
                module.bias.zero_()
        net.null_embedding.copy_(torch.rand(net.null_embedding.shape, generator=gen) * 2 - 1)


class Denoiser:
    """A U-Net together with what is needed to use it: the schedule it was
    trained against and the conditioning kind with its normalization stats."""

    def __init__(
        self,
        config: DenoiserConfig = DenoiserConfig(),
        schedule_params: Sequence = (1000, 1e-4, 0.02),
        conditioning_kind: str = "none",
        cond_mean: float = 0.0,
        cond_std: float = 1.0,
        seed: int = 0,
        net: Optional[UNet1D] = None,
    ):
        if conditioning_kind not in CONDITION_KINDS:
            raise ValueError(f"unknown conditioning kind {conditioning_kind!r}")
        if not cond_std > 0:
            raise ValueError(f"conditioning std must be positive, got {cond_std}")
        self.config = config
        self.schedule_params = (int(schedule_params[0]), float(schedule_params[1]), float(schedule_params[2]))
        self.conditioning_kind = conditioning_kind
        self.cond_mean = float(cond_mean)
        self.cond_std = float(cond_std)
        if net is None:
            net = UNet1D(config)
            init_weights(net, seed)
        self.net = net
        self.net.eval()
        self.training_meta: dict = {}

    # -- conditioning ------------------------------------------------------

    def spec(self, raw: Optional[float]) -> ConditioningSpec:
        if raw is None or self.conditioning_kind == "none":
            return NULL_SPEC
        return ConditioningSpec.from_raw(self.conditioning_kind, raw, self.cond_mean, self.cond_std)

    def _spec_tensors(self, specs: Sequence[ConditioningSpec]):
        values = np.zeros(len(specs))
        mask = np.ones(len(specs), dtype=bool)
        for i, s in enumerate(specs):
            if s.is_null:
                continue
            if s.kind != self.conditioning_kind:
                raise ConfigMismatch(f"model conditions on {self.conditioning_kind!r}, got {s.kind!r}")
            if s.normalized_value is None or not math.isfinite(s.normalized_value):
                raise NonFiniteInput(f"conditioning value {s.normalized_value!r} is not finite")
            values[i] = s.normalized_value
            mask[i] = False
        dtype = self.net.stem.weight.dtype
        return torch.as_tensor(values, dtype=dtype), torch.as_tensor(mask)

    # -- single-item operations -------------------------------------------

    def embed_condition(self, spec: ConditioningSpec) -> np.ndarray:
        values, mask = self._spec_tensors([spec])
        with torch.no_grad():
            return self.net.embed_condition(values, mask)[0].numpy().copy()

    def embed_timestep(self, t: int) -> np.ndarray:
        self._check_t(t)
        with torch.no_grad():
            return self.net.embed_timestep(torch.tensor([t]))[0].numpy().copy()

    def fuse_embeddings(self, time_vec, cond_vec) -> np.ndarray:
        return fuse_embeddings(self.net, time_vec, cond_vec)

    def predict_noise(self, y_t, t: int, spec: ConditioningSpec = NULL_SPEC) -> np.ndarray:
        y = np.asarray(y_t, dtype=float)
        if y.shape != (2, N_SURFACE):
            raise ShapeMismatch(f"expected shape (2, {N_SURFACE}), got {y.shape}")
        self._check_t(t)
        values, mask = self._spec_tensors([spec])
        return self._run(y[None], np.array([t]), values, mask)[0]

    # -- batched paths used by the sampler ---------------------------------

    def predict_batch(self, y: np.ndarray, t: int, targets: Optional[np.ndarray]) -> np.ndarray:
        n = len(y)
        if targets is None or self.conditioning_kind == "none":
            specs = [NULL_SPEC] * n
        else:
            specs = [self.spec(v) for v in targets]
        values, mask = self._spec_tensors(specs)
        return self._run(y, np.full(n, t), values, mask)

    def predict_batch_pair(self, y: np.ndarray, t: int, targets: np.ndarray):
        """Conditional and unconditional predictions from one stacked forward pass."""
        n = len(y)
        specs = [self.spec(v) for v in targets] + [NULL_SPEC] * n
        values, mask = self._spec_tensors(specs)
        eps = self._run(np.concatenate([y, y]), np.full(2 * n, t), values, mask)
        return eps[:n], eps[n:]

    def _run(self, y, t, values, mask) -> np.ndarray:
        dtype = self.net.stem.weight.dtype
        with torch.no_grad():
            out = self.net(torch.as_tensor(y, dtype=dtype), torch.as_tensor(t), values, mask)
        return out.double().numpy()

    def _check_t(self, t: int) -> None:
        if not 0 <= t <= self.schedule_params[0]:
            raise ValueError(f"timestep {t} outside [0, {self.schedule_params[0]}]")


def fuse_embeddings(net: UNet1D, time_vec, cond_vec) -> np.ndarray:
    dtype = net.fuse.weight.dtype
    tv = torch.as_tensor(np.asarray(time_vec), dtype=dtype).reshape(-1)
    cv = torch.as_tensor(np.asarray(cond_vec), dtype=dtype).reshape(-1)
    if tv.numel() != net.fuse.in1_features or cv.numel() != net.fuse.in2_features:
        raise WidthMismatch(
            f"bilinear form expects ({net.fuse.in1_features}, {net.fuse.in2_features}), "
            f"got ({tv.numel()}, {cv.numel()})"
        )
    with torch.no_grad():
        return net.fuse(tv[None], cv[None])[0].numpy().copy()
