"""Reconstruction losses: spatial MSE and the weighted frequency-domain loss.

Images are ``(H, W)``, ``(H, W, C)`` or batches ``(B, H, W, C)``. Per-image
losses average over channels; batch losses average over images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import WEIGHT_MODES, _ifft2_complex, dft2, magnitude, weight_matrix

LOSS_KINDS = ("mse", "wfdl")

# Frequency-difference bins smaller than this fraction of the plane's largest
# bin are treated as exactly zero. Rounding in f + c leaves ~1e-16 residue in
# non-DC bins, which would otherwise receive unit-norm subgradients.
ZERO_BIN_RTOL = 1e-10


@dataclass(frozen=True)
class LossConfig:
    kind: str = "wfdl"
    weight_mode: str = "centered"
    channel_reduction: str = "mean"

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(
                f"unknown weight mode {self.weight_mode!r}; expected one of {WEIGHT_MODES}"
            )
        if self.channel_reduction != "mean":
            raise ValueError("only channel_reduction='mean' is supported")


def _as_planes(f, f_hat):
    """Return both inputs as float ``(B, C, H, W)`` stacks plus the batch flag."""
    f = np.asarray(f, dtype=float)
    f_hat = np.asarray(f_hat, dtype=float)
    if f.shape != f_hat.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {f_hat.shape}")
    if f.ndim == 2:
        planes = f[None, None], f_hat[None, None]
    elif f.ndim == 3:
        planes = f.transpose(2, 0, 1)[None], f_hat.transpose(2, 0, 1)[None]
    elif f.ndim == 4:
        planes = f.transpose(0, 3, 1, 2), f_hat.transpose(0, 3, 1, 2)
    else:
        raise ValueError(f"expected an image or batch of images, got shape {f.shape}")
    return planes


def _from_planes(grad: np.ndarray, ndim: int) -> np.ndarray:
    if ndim == 2:
        return grad[0, 0]
    if ndim == 3:
        return grad[0].transpose(1, 2, 0)
    return grad.transpose(0, 2, 3, 1)


def mse_loss(f, f_hat) -> float:
    """Sum of squared pixel differences, averaged over channels and batch."""
    x, y = _as_planes(f, f_hat)
    per_plane = ((x - y) ** 2).sum(axis=(-2, -1))
    return float(per_plane.mean(axis=1).mean())


def mse_gradient(f, f_hat) -> np.ndarray:
    """Gradient of :func:`mse_loss` with respect to ``f_hat``."""
    x, y = _as_planes(f, f_hat)
    b, c = x.shape[:2]
    grad = -2.0 * (x - y) / (b * c)
    return _from_planes(grad, np.ndim(f))


def frequency_distance(F, F_hat) -> float:
    """Mean complex-magnitude distance between two spectra."""
    F = np.asarray(F)
    F_hat = np.asarray(F_hat)
    if F.shape != F_hat.shape:
        raise ValueError(f"shape mismatch: {F.shape} vs {F_hat.shape}")
    return float(magnitude(F - F_hat).mean())


def _spectral_residual(x, y):
    diff = dft2(x - y)
    mag = magnitude(diff)
    peak = mag.max(axis=(-2, -1), keepdims=True)
    mag = np.where(mag <= ZERO_BIN_RTOL * peak, 0.0, mag)
    return diff, mag


def wfdl_loss(f, f_hat, config: LossConfig | None = None) -> float:
    """Weighted frequency-domain loss between images and reconstructions.

    Each channel contributes ``mean(w * |F - F_hat|)`` over all DFT bins.
    """
    config = config or LossConfig()
    x, y = _as_planes(f, f_hat)
    _, mag = _spectral_residual(x, y)
    w = weight_matrix(*x.shape[-2:], mode=config.weight_mode)
    per_plane = (w * mag).mean(axis=(-2, -1))
    return float(per_plane.mean(axis=1).mean())


def wfdl_gradient(f, f_hat, config: LossConfig | None = None) -> np.ndarray:
    """Analytic gradient of :func:`wfdl_loss` with respect to ``f_hat``.

    With ``D = dft2(f - f_hat)`` the per-plane gradient is
    ``-Re(idft(w * D / |D|))``; bins with ``|D| = 0`` contribute nothing.
    """
    config = config or LossConfig()
    x, y = _as_planes(f, f_hat)
    b, c = x.shape[:2]
    diff, mag = _spectral_residual(x, y)
    w = weight_matrix(*x.shape[-2:], mode=config.weight_mode)
    safe = np.where(mag > 0, mag, 1.0)
    phase = np.where(mag > 0, diff / safe, 0.0)
    grad = -_ifft2_complex(w * phase).real / (b * c)
    return _from_planes(grad, np.ndim(f))


def _pixels(f) -> int:
    shape = np.shape(f)
    return shape[0] * shape[1] if len(shape) <= 3 else shape[1] * shape[2]


def loss_value(f, f_hat, config: LossConfig) -> float:
    """Training objective selected by ``config``.

    The MSE objective is the per-pixel mean (``mse_loss / (H * W)``). RAdam's
    first steps are unnormalised SGD, and the pixel-summed loss moves the
    output bias far enough to saturate the sigmoid.
    """
    if config.kind == "mse":
        return mse_loss(f, f_hat) / _pixels(f)
    return wfdl_loss(f, f_hat, config)


def loss_gradient(f, f_hat, config: LossConfig) -> np.ndarray:
    """Gradient of :func:`loss_value` with respect to ``f_hat``."""
    if config.kind == "mse":
        return mse_gradient(f, f_hat) / _pixels(f)
    return wfdl_gradient(f, f_hat, config)
