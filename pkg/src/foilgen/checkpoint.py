"""Save and load trained denoisers.

A checkpoint is a ``"checkpoint"`` container (see :mod:`foilgen.container`)
whose meta block holds the network config, schedule parameters, conditioning
kind and normalization stats, and training metadata. Weights are stored as
float32 arrays keyed by their parameter path (``down_blocks.0.conv1.weight``).
"""
from __future__ import annotations

from collections import OrderedDict
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from . import container
from .denoiser import Denoiser, DenoiserConfig, UNet1D

KIND = "checkpoint"


def to_bytes(model: Denoiser, training: Optional[dict] = None) -> bytes:
    meta = {
        "config": model.config.to_dict(),
        "schedule_params": list(model.schedule_params),
        "conditioning_kind": model.conditioning_kind,
        "cond_mean": model.cond_mean,
        "cond_std": model.cond_std,
        "training": training if training is not None else getattr(model, "training_meta", {}),
    }
    state = OrderedDict(
        (name, t.detach().to(torch.float32).numpy()) for name, t in model.net.state_dict().items()
    )
    return container.dumps(KIND, meta, state)


def from_bytes(data: bytes) -> Denoiser:
    _, meta, arrays = container.loads(data, KIND)
    cfg = DenoiserConfig(**meta["config"])
    net = UNet1D(cfg)
    expected = net.state_dict()
    if set(arrays) != set(expected):
        missing = sorted(set(expected) - set(arrays))
        extra = sorted(set(arrays) - set(expected))
        raise container.ContainerError(f"weight keys do not match config: missing {missing[:3]}, extra {extra[:3]}")
    state = OrderedDict()
    for name, ref in expected.items():
        arr = arrays[name]
        if tuple(arr.shape) != tuple(ref.shape):
            raise container.ContainerError(f"{name}: shape {arr.shape} != {tuple(ref.shape)}")
        state[name] = torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32))
    net.load_state_dict(state)
    model = Denoiser(
        cfg,
        meta["schedule_params"],
        meta["conditioning_kind"],
        meta["cond_mean"],
        meta["cond_std"],
        net=net,
    )
    model.training_meta = meta.get("training", {})
    return model


def save(model: Denoiser, path, training: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(to_bytes(model, training))
    return path


def load(path) -> Denoiser:
    return from_bytes(Path(path).read_bytes())
