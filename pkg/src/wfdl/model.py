"""Residual convolutional autoencoder with explicit reverse-mode gradients.

Activations use NHWC layout ``(batch, height, width, channels)``; kernels are
stored ``(out_channels, in_channels, kh, kw)``. The encoder is a stack of
residual blocks; the decoder mirrors it with nearest-neighbour upsampling in
front of every block that undoes a stride-2 downsample, followed by a 3x3
output convolution and a logistic squashing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Full encoder: (output channels, stride) per residual block, 256x256 input.
FULL_ENCODER = ((32, 2), (32, 2), (64, 2), (64, 2), (128, 2), (128, 2), (256, 2), (256, 1))
# Reduced-depth variant for 64x64 inputs: five downsamples to a 2x2x256 bottleneck.
DESK_ENCODER = ((32, 2), (64, 2), (64, 2), (128, 2), (256, 2), (256, 1))


@dataclass(frozen=True)
class ArchConfig:
    """Network shape: input size/channels and the encoder block ladder."""

    input_size: int = 256
    in_channels: int = 3
    encoder: tuple = FULL_ENCODER

    def __post_init__(self):
        object.__setattr__(self, "encoder", tuple(tuple(int(v) for v in b) for b in self.encoder))
        if not self.encoder:
            raise ValueError("encoder needs at least one block")
        for ch, stride in self.encoder:
            if ch < 1 or stride not in (1, 2):
                raise ValueError(f"invalid block spec ({ch}, {stride})")
        if self.in_channels < 1:
            raise ValueError("in_channels must be positive")
        factor = self.downsample_factor
        if self.input_size < factor or self.input_size % factor:
            raise ValueError(
                f"input_size {self.input_size} must be a positive multiple of {factor}"
            )

    @classmethod
    def full(cls) -> "ArchConfig":
        return cls(256, 3, FULL_ENCODER)

    @classmethod
    def desk(cls) -> "ArchConfig":
        return cls(64, 3, DESK_ENCODER)

    @classmethod
    def for_size(cls, input_size: int, in_channels: int = 3) -> "ArchConfig":
        """Full ladder for 256 px, reduced ladder for 64 px."""
        if input_size == 64:
            return cls(64, in_channels, DESK_ENCODER)
        return cls(input_size, in_channels, FULL_ENCODER)

    @property
    def downsample_factor(self) -> int:
        return 2 ** sum(1 for _, s in self.encoder if s == 2)

    def block_specs(self):
        """Yield ``(name, in_ch, out_ch, stride, upsample)`` for every block."""
        channels = [self.in_channels] + [c for c, _ in self.encoder]
        for i, (out_ch, stride) in enumerate(self.encoder):
            yield f"encoder.{i}", channels[i], out_ch, stride, False
        n = len(self.encoder)
        for j in range(n):
            k = n - 1 - j
            out_ch = channels[k] if k > 0 else channels[1]
            yield f"decoder.{j}", channels[k + 1], out_ch, 1, self.encoder[k][1] == 2

    def encoder_shapes(self):
        """Output ``(H, W, C)`` of every encoder block."""
        size = self.input_size
        shapes = []
        for ch, stride in self.encoder:
            size //= stride
            shapes.append((size, size, ch))
        return shapes

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "in_channels": self.in_channels,
            "encoder": [list(b) for b in self.encoder],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        return cls(int(d["input_size"]), int(d["in_channels"]), tuple(map(tuple, d["encoder"])))


@dataclass
class AutoencoderParams:
    """Architecture plus an ordered name -> tensor mapping of all parameters."""

    config: ArchConfig
    tensors: dict = field(default_factory=dict)

    def copy(self) -> "AutoencoderParams":
        return AutoencoderParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def __getitem__(self, name):
        return self.tensors[name]

    @property
    def n_parameters(self) -> int:
        return sum(v.size for v in self.tensors.values())


def _layer_names(config: ArchConfig):
    """Ordered ``(prefix, in_ch, out_ch, k)`` for every convolution."""
    for name, cin, cout, stride, _ in config.block_specs():
        yield f"{name}.conv_a", cin, cout, 3
        yield f"{name}.conv_b", cout, cout, 3
        if stride != 1 or cin != cout:
            yield f"{name}.proj", cin, cout, 1
    last_ch = config.encoder[0][0]
    yield "output", last_ch, config.in_channels, 3


def init_params(seed: int = 0, input_size: int | None = None, config: ArchConfig | None = None,
                dtype=np.float32) -> AutoencoderParams:
    """Draw He-normal kernels and zero biases, deterministically from ``seed``."""
    if config is None:
        config = ArchConfig.for_size(256 if input_size is None else input_size)
    elif input_size is not None and input_size != config.input_size:
        raise ValueError(f"input_size {input_size} disagrees with config {config.input_size}")
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, cin, cout, k in _layer_names(config):
        std = np.sqrt(2.0 / (cin * k * k))
        if name.endswith("conv_b"):
            # keeps the residual sum's variance from compounding with depth
            std *= 0.5
        tensors[f"{name}.kernel"] = (rng.standard_normal((cout, cin, k, k)) * std).astype(dtype)
        tensors[f"{name}.bias"] = np.zeros(cout, dtype=dtype)
    return AutoencoderParams(config, tensors)


# ---------------------------------------------------------------- primitives

def _im2col(x, k, stride, pad):
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    b, h, w, c = x.shape
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    win = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    # (B, Ho, Wo, C, k, k) -> rows ordered like kernel.reshape(O, C*k*k)
    return win[:, :ho, :wo].reshape(b * ho * wo, c * k * k), (b, ho, wo)


def conv_forward(x, kernel, bias, stride=1, keep_cols=False):
    """'Same'-padded convolution; optionally also return the im2col matrix."""
    cout, _, k, _ = kernel.shape
    cols, (b, ho, wo) = _im2col(x, k, stride, k // 2)
    out = cols @ kernel.reshape(cout, -1).T
    out += bias
    out = out.reshape(b, ho, wo, cout)
    return (out, cols) if keep_cols else out


def conv_backward(x, kernel, stride, dout, cols=None):
    """Return ``(dx, dkernel, dbias)`` for :func:`conv_forward`."""
    cout, cin, k, _ = kernel.shape
    pad = k // 2
    if cols is None:
        cols, _ = _im2col(x, k, stride, pad)
    b, ho, wo = dout.shape[:3]
    dmat = dout.reshape(-1, cout)
    dkernel = (dmat.T @ cols).reshape(kernel.shape)
    dbias = dmat.sum(axis=0)
    dcols = (dmat @ kernel.reshape(cout, -1)).reshape(b, ho, wo, cin, k, k)
    _, h, w, _ = x.shape
    dxp = np.zeros((b, h + 2 * pad, w + 2 * pad, cin), dtype=dcols.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + stride * ho:stride, j:j + stride * wo:stride] += dcols[..., i, j]
    dx = dxp[:, pad:pad + h, pad:pad + w] if pad else dxp
    return dx, dkernel, dbias


def upsample2(x):
    return x.repeat(2, axis=1).repeat(2, axis=2)


def upsample2_backward(dout):
    b, h, w, c = dout.shape
    return dout.reshape(b, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# -------------------------------------------------------------- full network

@dataclass
class ForwardCache:
    """Tensors retained by :func:`forward` for :func:`backward`."""

    inputs: np.ndarray
    blocks: list
    output_input: np.ndarray
    output: np.ndarray

    def shapes(self):
        return [blk["x"].shape for blk in self.blocks]


def _as_batch(batch, config: ArchConfig, dtype):
    arr = np.asarray(batch, dtype=dtype)
    if arr.ndim == 3:
        arr = arr[None]
    expected = (config.input_size, config.input_size, config.in_channels)
    if arr.ndim != 4 or arr.shape[1:] != expected or arr.shape[0] == 0:
        raise ValueError(f"expected a nonempty batch of {expected} images, got shape {arr.shape}")
    return arr


def _block_forward(params, name, stride, upsample, x):
    t = params.tensors
    if upsample:
        x = upsample2(x)
    z1, cols_a = conv_forward(
        x, t[f"{name}.conv_a.kernel"], t[f"{name}.conv_a.bias"], stride, keep_cols=True)
    a1 = np.maximum(z1, 0)
    z2, cols_b = conv_forward(
        a1, t[f"{name}.conv_b.kernel"], t[f"{name}.conv_b.bias"], 1, keep_cols=True)
    if f"{name}.proj.kernel" in t:
        skip = conv_forward(x, t[f"{name}.proj.kernel"], t[f"{name}.proj.bias"], stride)
    else:
        skip = x
    z = z2 + skip
    out = np.maximum(z, 0)
    return out, {"x": x, "a1": a1, "z": z, "cols_a": cols_a, "cols_b": cols_b}


def forward(params: AutoencoderParams, batch):
    """Run the autoencoder on ``(B, H, W, C)`` images.

    Returns the reconstructions (same shape, values in [0, 1]) and the cache
    needed by :func:`backward`.
    """
    config = params.config
    dtype = params.tensors["output.kernel"].dtype
    x = _as_batch(batch, config, dtype)
    inputs = x
    caches = []
    for name, _, _, stride, upsample in config.block_specs():
        x, blk = _block_forward(params, name, stride, upsample, x)
        blk["name"], blk["stride"], blk["upsample"] = name, stride, upsample
        blk["out_shape"] = x.shape
        caches.append(blk)
    logits = conv_forward(x, params["output.kernel"], params["output.bias"])
    out = _sigmoid(logits)
    return out, ForwardCache(inputs, caches, x, out)


def encode_shapes(params: AutoencoderParams, batch):
    """Per-block encoder output shapes ``(H, W, C)`` for one forward pass."""
    _, cache = forward(params, batch)
    n = len(params.config.encoder)
    return [blk["out_shape"][1:] for blk in cache.blocks[:n]]


def backward(params: AutoencoderParams, cache: ForwardCache, grad_reconstruction):
    """Parameter gradients given the loss gradient w.r.t. the reconstructions."""
    t = params.tensors
    dout = np.asarray(grad_reconstruction, dtype=cache.output.dtype)
    if dout.ndim == 3:
        dout = dout[None]
    if dout.shape != cache.output.shape:
        raise ValueError(f"gradient shape {dout.shape} does not match output {cache.output.shape}")
    grads = {}
    dlogits = dout * cache.output * (1 - cache.output)
    dx, grads["output.kernel"], grads["output.bias"] = conv_backward(
        cache.output_input, t["output.kernel"], 1, dlogits)
    for blk in reversed(cache.blocks):
        name, stride = blk["name"], blk["stride"]
        dz = dx * (blk["z"] > 0)
        if f"{name}.proj.kernel" in t:
            dskip, grads[f"{name}.proj.kernel"], grads[f"{name}.proj.bias"] = conv_backward(
                blk["x"], t[f"{name}.proj.kernel"], stride, dz)
        else:
            dskip = dz
        da1, grads[f"{name}.conv_b.kernel"], grads[f"{name}.conv_b.bias"] = conv_backward(
            blk["a1"], t[f"{name}.conv_b.kernel"], 1, dz, blk["cols_b"])
        dz1 = da1 * (blk["a1"] > 0)
        dxin, grads[f"{name}.conv_a.kernel"], grads[f"{name}.conv_a.bias"] = conv_backward(
            blk["x"], t[f"{name}.conv_a.kernel"], stride, dz1, blk["cols_a"])
        dx = dxin + dskip
        if blk["upsample"]:
            dx = upsample2_backward(dx)
    return {k: grads[k] for k in t}


def reconstruct(params: AutoencoderParams, image) -> np.ndarray:
    """Reconstruct a single ``(H, W, C)`` image."""
    image = np.asarray(image)
    if image.ndim != 3:
        raise ValueError(f"expected a single (H, W, C) image, got shape {image.shape}")
    out, _ = forward(params, image[None])
    return out[0]


def reconstruct_batch(params: AutoencoderParams, images, batch_size: int = 16) -> np.ndarray:
    images = np.asarray(images)
    parts = [forward(params, images[i:i + batch_size])[0]
             for i in range(0, len(images), batch_size)]
    return np.concatenate(parts)
