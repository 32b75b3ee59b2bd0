"""Dataset ingestion in the MVTec AD layout, preprocessing and a synthetic generator.

Layout::

    <root>/<category>/train/good/*.png
    <root>/<category>/test/good/*.png          (normal)
    <root>/<category>/test/<defect_kind>/*.png (anomalous)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")
BACKGROUNDS = ("flat", "gradient", "stripes")
DEFECTS = ("scratch", "blob", "missing_patch")


@dataclass
class TestSample:
    image: np.ndarray
    label: str
    defect_kind: str
    identifier: str
    # synthetic data only: defect-free counterpart and defect mask
    reference: np.ndarray | None = None
    mask: np.ndarray | None = None


@dataclass
class DatasetSplit:
    train_normal: list = field(default_factory=list)
    test: list = field(default_factory=list)
    train_ids: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def train_array(self) -> np.ndarray:
        return np.stack(self.train_normal)

    @property
    def test_array(self) -> np.ndarray:
        return np.stack([s.image for s in self.test])

    @property
    def test_labels(self) -> list:
        return [s.label for s in self.test]


# ------------------------------------------------------------ preprocessing

def _bilinear_axis(n_in: int, n_out: int):
    """Source indices and weights for half-pixel-centred linear resampling."""
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0, n_in - 1)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def bilinear_resize(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize an ``(H, W, C)`` float array with bilinear interpolation."""
    r0, r1, fr = _bilinear_axis(img.shape[0], height)
    c0, c1, fc = _bilinear_axis(img.shape[1], width)
    fr = fr[:, None, None]
    rows = img[r0] * (1 - fr) + img[r1] * fr
    fc = fc[None, :, None]
    return rows[:, c0] * (1 - fc) + rows[:, c1] * fc


def preprocess(raw, target_size: int) -> np.ndarray:
    """Scale to [0, 1], replicate grayscale to 3 channels, bilinear resize.

    Integer inputs are divided by their dtype's maximum; float inputs are
    taken as intensities already in [0, 1].
    """
    arr = np.asarray(raw)
    if arr.size == 0 or arr.ndim not in (2, 3):
        raise ValueError(f"cannot preprocess image of shape {arr.shape}")
    if np.issubdtype(arr.dtype, np.integer):
        arr = arr.astype(float) / np.iinfo(arr.dtype).max
    else:
        arr = arr.astype(float)
    if arr.ndim == 2:
        arr = arr[..., None]
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    elif arr.shape[2] == 4:
        arr = arr[..., :3]
    elif arr.shape[2] != 3:
        raise ValueError(f"unsupported channel count {arr.shape[2]}")
    if arr.shape[:2] != (target_size, target_size):
        arr = bilinear_resize(arr, target_size, target_size)
    return np.clip(arr, 0.0, 1.0)


def read_image(path) -> np.ndarray:
    """Decode an image file to a uint8 ``(H, W)`` or ``(H, W, 3)`` array."""
    with PILImage.open(path) as im:
        if im.mode in ("L", "RGB"):
            return np.asarray(im).copy()
        if im.mode in ("I;16", "I", "F", "1", "P", "LA"):
            return np.asarray(im.convert("L"))
        return np.asarray(im.convert("RGB"))


def write_image(path, image: np.ndarray) -> None:
    """Write a [0, 1] float image (``(H, W)`` or ``(H, W, C)``) as 8-bit PNG."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[..., 0]
    data = np.round(np.clip(arr, 0, 1) * 255).astype(np.uint8)
    PILImage.fromarray(data).save(path, format="PNG")


# --------------------------------------------------------------- loading

def _image_files(directory: Path):
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def load_dataset(root, category: str, image_size: int = 256) -> DatasetSplit:
    """Load one category in the MVTec AD directory layout.

    Unreadable files are logged and listed in ``split.skipped``; loading
    continues with the remaining files.
    """
    base = Path(root) / category
    train_dir = base / "train" / "good"
    test_dir = base / "test"
    for d in (train_dir, test_dir):
        if not d.is_dir():
            raise FileNotFoundError(f"missing dataset directory: {d}")

    split = DatasetSplit()

    def _load(path):
        try:
            return preprocess(read_image(path), image_size)
        except (OSError, ValueError) as exc:
            logger.warning("skipping unreadable image %s: %s", path, exc)
            split.skipped.append(str(path))
            return None

    for path in _image_files(train_dir):
        img = _load(path)
        if img is not None:
            split.train_normal.append(img)
            split.train_ids.append(f"train/good/{path.name}")
    for kind_dir in sorted(p for p in test_dir.iterdir() if p.is_dir()):
        kind = kind_dir.name
        label = "normal" if kind == "good" else "anomalous"
        for path in _image_files(kind_dir):
            img = _load(path)
            if img is not None:
                split.test.append(TestSample(img, label, kind, f"test/{kind}/{path.name}"))
    return split


# ------------------------------------------------------------- synthetic

@dataclass(frozen=True)
class SynthConfig:
    """Desk-scale stand-in for an MVTec category."""

    image_size: int = 64
    sample_counts: tuple = (32, 8, 8)
    background: str = "stripes"
    defect: str = "scratch"
    seed: int = 0
    noise: float = 0.02

    def __post_init__(self):
        if self.background not in BACKGROUNDS:
            raise ValueError(f"background must be one of {BACKGROUNDS}")
        if self.defect not in DEFECTS:
            raise ValueError(f"defect must be one of {DEFECTS}")
        if self.image_size < 8:
            raise ValueError("image_size must be at least 8")
        if len(self.sample_counts) != 3 or min(self.sample_counts) < 1:
            raise ValueError("sample_counts must be three positive counts")


def _background(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    n = config.image_size
    yy, xx = np.mgrid[0:n, 0:n] / n
    color = rng.uniform(0.35, 0.65, size=3)
    if config.background == "flat":
        base = np.ones((n, n, 1)) * color
    elif config.background == "gradient":
        angle = rng.uniform(0, 2 * np.pi)
        ramp = np.cos(angle) * xx + np.sin(angle) * yy
        ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12)
        base = color + 0.4 * (ramp[..., None] - 0.5)
    else:
        period = max(n // 8, 2)
        on = (np.arange(n) // (period // 2)) % 2
        base = color + 0.2 * (on[None, :, None] - 0.5) * np.ones((n, 1, 1))
    return np.clip(base, 0.05, 0.95)


def _scratch_mask(n, rng):
    length = rng.uniform(0.5, 0.8) * n
    angle = rng.uniform(0, np.pi)
    cy, cx = rng.uniform(0.3, 0.7, size=2) * n
    t = np.linspace(-0.5, 0.5, int(4 * length))
    ys = np.clip(np.round(cy + t * length * np.sin(angle)).astype(int), 0, n - 1)
    xs = np.clip(np.round(cx + t * length * np.cos(angle)).astype(int), 0, n - 1)
    mask = np.zeros((n, n), dtype=bool)
    mask[ys, xs] = True
    return mask


def _blob_mask(n, rng):
    r = rng.uniform(0.06, 0.12) * n
    cy, cx = rng.uniform(0.25, 0.75, size=2) * n
    yy, xx = np.mgrid[0:n, 0:n]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r


def _patch_mask(n, rng):
    s = max(int(rng.uniform(0.12, 0.2) * n), 2)
    y0, x0 = rng.integers(0, n - s, size=2)
    mask = np.zeros((n, n), dtype=bool)
    mask[y0:y0 + s, x0:x0 + s] = True
    return mask


def apply_defect(image: np.ndarray, kind: str, rng: np.random.Generator):
    """Return ``(defective_image, mask)``; pixels change only inside ``mask``."""
    n = image.shape[0]
    mask = {"scratch": _scratch_mask, "blob": _blob_mask, "missing_patch": _patch_mask}[kind](n, rng)
    out = image.copy()
    if kind == "missing_patch":
        out[mask] = 0.0
    else:
        # push defect pixels to the far end of the intensity range
        out[mask] = np.where(out[mask] < 0.5, 0.95, 0.05)
    return out, mask


def synth_dataset(config: SynthConfig) -> DatasetSplit:
    """Generate a reproducible dataset of normal and defective images."""
    rng = np.random.default_rng(config.seed)
    base = _background(config, rng)
    n_train, n_test_normal, n_test_anom = config.sample_counts

    def render():
        img = base + rng.normal(0.0, config.noise, size=base.shape)
        return np.clip(img, 0.0, 1.0)

    split = DatasetSplit()
    for i in range(n_train):
        split.train_normal.append(render())
        split.train_ids.append(f"train/good/{i:03d}.png")
    for i in range(n_test_normal):
        split.test.append(TestSample(render(), "normal", "good", f"test/good/{i:03d}.png"))
    for i in range(n_test_anom):
        clean = render()
        img, mask = apply_defect(clean, config.defect, rng)
        split.test.append(TestSample(img, "anomalous", config.defect,
                                     f"test/{config.defect}/{i:03d}.png", clean, mask))
    return split


def export_dataset(split: DatasetSplit, root, category: str) -> Path:
    """Write a split to disk in the MVTec layout and return the category path."""
    base = Path(root) / category
    for rel, img in zip(split.train_ids, split.train_normal):
        path = base / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        write_image(path, img)
    for sample in split.test:
        path = base / sample.identifier
        path.parent.mkdir(parents=True, exist_ok=True)
        write_image(path, sample.image)
    return base


# --------------------------------------------------------------- batching

def batches(split, batch_size: int, seed: int, epoch: int = 0):
    """Yield shuffled ``(B, H, W, C)`` batches covering every sample once.

    The order is a function of ``(seed, epoch)``; the last batch may be short.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    images = split.train_normal if isinstance(split, DatasetSplit) else split
    n = len(images)
    if n == 0:
        raise ValueError("cannot batch an empty split")
    order = np.random.default_rng([seed, epoch]).permutation(n)
    for start in range(0, n, batch_size):
        yield np.stack([images[i] for i in order[start:start + batch_size]])
