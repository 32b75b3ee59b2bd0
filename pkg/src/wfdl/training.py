"""Training loop and run configuration shared by the CLI and the estimator."""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import batches
from .loss import LossConfig, loss_gradient, loss_value
from .model import ArchConfig, AutoencoderParams, backward, forward, init_params
from .optim import RAdamHyper, RAdamState, TrainingFault, radam_init, radam_step

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    image_size: int = 256
    epochs: int = 2000
    batch_size: int = 64
    loss: str = "wfdl"
    weight_mode: str = "centered"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 1e-4
    epsilon: float = 1e-8
    seed: int = 0
    checkpoint_path: str = "checkpoint.wfdl"
    metrics_path: str | None = None
    dataset_root: str | None = None
    category: str | None = None

    def __post_init__(self):
        for name in ("image_size", "epochs", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        self.loss_config  # validates loss/weight_mode
        self.hyper

    @property
    def loss_config(self) -> LossConfig:
        return LossConfig(self.loss, self.weight_mode)

    @property
    def hyper(self) -> RAdamHyper:
        return RAdamHyper(self.learning_rate, self.beta1, self.beta2,
                          self.weight_decay, self.epsilon)

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        """Read ``key = value`` lines (``#`` starts a comment); overrides win."""
        values = parse_config_text(Path(path).read_text())
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(values) - set(fields)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in values.items():
            kind = {"image_size": int, "epochs": int, "batch_size": int, "seed": int,
                    "learning_rate": float, "beta1": float, "beta2": float,
                    "weight_decay": float, "epsilon": float}.get(key, str)
            kwargs[key] = kind(value)
        return cls(**kwargs)


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def train_autoencoder(images, config: RunConfig, params: AutoencoderParams | None = None,
                      state: RAdamState | None = None, metrics_path=None,
                      timing_path=None, dtype=np.float32):
    """Fit the autoencoder on normal images.

    Each epoch draws a fresh seeded shuffle. When ``metrics_path`` is given,
    one ``epoch,mean_loss`` line is appended per epoch (wall-clock times go to
    ``timing_path`` so the metrics file stays reproducible).

    Returns ``(params, state, history)`` where ``history`` is a list of
    ``(epoch, mean_loss, seconds)`` tuples.
    """
    images = np.asarray(images)
    if params is None:
        params = init_params(config.seed, config=ArchConfig.for_size(config.image_size,
                                                                     images.shape[-1]),
                             dtype=dtype)
    if state is None:
        state = radam_init(params.tensors)
    loss_cfg, hyper = config.loss_config, config.hyper
    metrics = _open_log(metrics_path, "epoch,mean_loss\n")
    timing = _open_log(timing_path, "epoch,seconds\n")
    history = []
    start = time.perf_counter()
    try:
        for epoch in range(1, config.epochs + 1):
            total, count = 0.0, 0
            for batch in batches(images, config.batch_size, config.seed, epoch):
                batch = batch.astype(dtype, copy=False)
                out, cache = forward(params, batch)
                value = loss_value(batch, out, loss_cfg)
                if not np.isfinite(value):
                    raise TrainingFault(f"non-finite loss at epoch {epoch}")
                grad = loss_gradient(batch, out, loss_cfg)
                grads = backward(params, cache, grad)
                tensors, state = radam_step(state, params.tensors, grads, hyper)
                params = AutoencoderParams(params.config, tensors)
                total += value * len(batch)
                count += len(batch)
            mean = total / count
            seconds = time.perf_counter() - start
            history.append((epoch, mean, seconds))
            if metrics:
                metrics.write(f"{epoch},{mean!r}\n")
                metrics.flush()
            if timing:
                timing.write(f"{epoch},{seconds:.3f}\n")
                timing.flush()
            logger.info("epoch %d loss %.6g (%.1fs)", epoch, mean, seconds)
    finally:
        for fh in (metrics, timing):
            if fh:
                fh.close()
    return params, state, history


def _open_log(path, header):
    if path is None:
        return None
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    fh = path.open("a")
    if fresh:
        fh.write(header)
    return fh
