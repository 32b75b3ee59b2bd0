"""Command-line interface: ``train``, ``eval``, ``reconstruct``, ``filter``, ``synth``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import spectral
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (BACKGROUNDS, DEFECTS, SynthConfig, export_dataset, load_dataset, preprocess,
                   read_image, synth_dataset, write_image)
from .model import ArchConfig, init_params, reconstruct, reconstruct_batch
from .scoring import EvalReport, ScoredSample, anomaly_score, residual_map
from .training import RunConfig, train_autoencoder

logger = logging.getLogger("wfdl")

RECONSTRUCT_FILES = (
    "original.png",
    "original_spectrum.png",
    "reconstruction.png",
    "reconstruction_spectrum.png",
    "residual.png",
)


def _run_config(args) -> RunConfig:
    overrides = {
        "dataset_root": args.dataset_root, "category": args.category,
        "checkpoint_path": args.checkpoint, "seed": args.seed, "epochs": args.epochs,
        "batch_size": args.batch_size, "loss": args.loss, "weight_mode": args.weight_mode,
        "image_size": args.image_size, "metrics_path": args.out,
    }
    if args.config:
        return RunConfig.from_file(args.config, **overrides)
    return RunConfig.from_mapping({k: v for k, v in overrides.items() if v is not None})


def cmd_train(config: RunConfig) -> tuple[Path, Path]:
    """Train on ``<dataset_root>/<category>/train/good`` and write a checkpoint.

    Returns the checkpoint and metrics paths.
    """
    if not config.dataset_root or not config.category:
        raise ValueError("train needs a dataset root and a category")
    split = load_dataset(config.dataset_root, config.category, config.image_size)
    if not split.train_normal:
        raise ValueError(f"no readable training images for {config.category!r}")
    checkpoint = Path(config.checkpoint_path)
    metrics = Path(config.metrics_path or f"{checkpoint}.metrics.csv")
    timing = metrics.with_name(metrics.stem + ".timing.csv")
    for path in (metrics, timing):
        path.unlink(missing_ok=True)
    params = init_params(config.seed, config=ArchConfig.for_size(config.image_size))
    params, state, _ = train_autoencoder(split.train_array, config, params=params,
                                         metrics_path=metrics, timing_path=timing)
    save_checkpoint(checkpoint, params, state, config.loss_config, config.hyper, config.seed)
    return checkpoint, metrics


def cmd_eval(checkpoint, dataset_root, category, out=None) -> EvalReport:
    """Score every test image and write the ``identifier,score,label`` table."""
    params = load_checkpoint(checkpoint)["params"]
    split = load_dataset(dataset_root, category, params.config.input_size)
    if not split.test:
        raise ValueError(f"no readable test images for {category!r}")
    images = split.test_array
    recon = reconstruct_batch(params, images)
    report = EvalReport([
        ScoredSample(s.identifier, anomaly_score(s.image, r), s.label)
        for s, r in zip(split.test, recon)
    ])
    out = Path(out or f"{checkpoint}.eval.csv")
    out.write_text(report.to_csv())
    return report


def _gray(image):
    return np.asarray(image, dtype=float).mean(axis=-1)


def cmd_reconstruct(checkpoint, image, out_dir) -> list[Path]:
    """Write the five comparison panels for one image."""
    params = load_checkpoint(checkpoint)["params"]
    original = preprocess(read_image(image), params.config.input_size)
    recon = reconstruct(params, original).astype(float)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panels = (
        original,
        spectral.spectrum_image(spectral.dft2(_gray(original))),
        recon,
        spectral.spectrum_image(spectral.dft2(_gray(recon))),
        residual_map(original, recon, rescale=True),
    )
    paths = []
    for name, panel in zip(RECONSTRUCT_FILES, panels):
        write_image(out_dir / name, panel)
        paths.append(out_dir / name)
    return paths


def filter_image(image: np.ndarray, cutoff: float, mode: str) -> np.ndarray:
    """Radially filter every channel of an ``(H, W, C)`` image and clamp to [0, 1]."""
    planes = np.moveaxis(np.asarray(image, dtype=float), -1, 0)
    filtered = spectral.idft2(spectral.radial_filter(spectral.dft2(planes), cutoff, mode))
    return np.clip(np.moveaxis(filtered, 0, -1), 0.0, 1.0)


def cmd_filter(image, cutoff: float, mode: str, out) -> Path:
    raw = read_image(image)
    arr = raw.astype(float) / np.iinfo(raw.dtype).max
    if arr.ndim == 2:
        arr = arr[..., None]
    result = filter_image(arr, cutoff, {"low": "low_pass", "high": "high_pass"}.get(mode, mode))
    write_image(out, result)
    return Path(out)


def cmd_synth(config: SynthConfig, out_root, category: str = "synthetic") -> Path:
    return export_dataset(synth_dataset(config), out_root, category)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wfdl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train an autoencoder on normal images")
    train.add_argument("--config")
    train.add_argument("--dataset-root")
    train.add_argument("--category")
    train.add_argument("--checkpoint")
    train.add_argument("--seed", type=int)
    train.add_argument("--epochs", type=int)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--loss", choices=("mse", "wfdl"))
    train.add_argument("--weight-mode", choices=spectral.WEIGHT_MODES)
    train.add_argument("--image-size", type=int)
    train.add_argument("--out", help="metrics file (default: <checkpoint>.metrics.csv)")

    ev = sub.add_parser("eval", help="score test images and report AUROC")
    ev.add_argument("--config")
    ev.add_argument("--checkpoint")
    ev.add_argument("--dataset-root")
    ev.add_argument("--category")
    ev.add_argument("--out", help="report file (default: <checkpoint>.eval.csv)")

    rec = sub.add_parser("reconstruct", help="write reconstruction and spectrum panels")
    rec.add_argument("image")
    rec.add_argument("--checkpoint", required=True)
    rec.add_argument("--out", required=True, help="output directory")

    flt = sub.add_parser("filter", help="low- or high-pass filter an image")
    flt.add_argument("image")
    flt.add_argument("--cutoff", type=float, required=True)
    flt.add_argument("--mode", choices=("low", "high"), default="low")
    flt.add_argument("--out", required=True)

    syn = sub.add_parser("synth", help="generate a synthetic dataset in MVTec layout")
    syn.add_argument("--out", required=True, help="dataset root")
    syn.add_argument("--category", default="synthetic")
    syn.add_argument("--image-size", type=int, default=64)
    syn.add_argument("--counts", default="32,8,8", help="train,test_normal,test_anomalous")
    syn.add_argument("--background", choices=BACKGROUNDS, default="stripes")
    syn.add_argument("--defect", choices=DEFECTS, default="scratch")
    syn.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "train":
            ckpt, metrics = cmd_train(_run_config(args))
            print(f"checkpoint: {ckpt}\nmetrics: {metrics}")
        elif args.command == "eval":
            values = {}
            if args.config:
                values = RunConfig.from_file(args.config).__dict__
            checkpoint = args.checkpoint or values.get("checkpoint_path")
            root = args.dataset_root or values.get("dataset_root")
            category = args.category or values.get("category")
            if not (checkpoint and root and category):
                raise ValueError("eval needs --checkpoint, --dataset-root and --category")
            report = cmd_eval(checkpoint, root, category, args.out)
            n_norm, n_anom = report.counts
            print(f"auroc: {report.auroc:.4f} ({n_norm} normal, {n_anom} anomalous)")
        elif args.command == "reconstruct":
            for path in cmd_reconstruct(args.checkpoint, args.image, args.out):
                print(path)
        elif args.command == "filter":
            if args.cutoff < 0:
                raise ValueError("cutoff must be non-negative")
            print(cmd_filter(args.image, args.cutoff, args.mode, args.out))
        elif args.command == "synth":
            counts = tuple(int(c) for c in args.counts.split(","))
            config = SynthConfig(args.image_size, counts, args.background, args.defect, args.seed)
            print(cmd_synth(config, args.out, args.category))
    except (OSError, ValueError) as exc:
        print(f"wfdl {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
