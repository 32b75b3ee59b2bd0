"""Image-level anomaly scores, residual maps and AUROC evaluation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

LABELS = ("normal", "anomalous")


def _pair(f, f_hat):
    f = np.asarray(f, dtype=float)
    f_hat = np.asarray(f_hat, dtype=float)
    if f.shape != f_hat.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {f_hat.shape}")
    if f.ndim == 2:
        f, f_hat = f[..., None], f_hat[..., None]
    if f.ndim != 3:
        raise ValueError(f"expected a single (H, W[, C]) image, got shape {f.shape}")
    return f, f_hat


def anomaly_score(f, f_hat) -> float:
    """Total squared reconstruction error, summed over pixels and channels."""
    f, f_hat = _pair(f, f_hat)
    return float(((f - f_hat) ** 2).sum())


def residual_map(f, f_hat, rescale: bool = False) -> np.ndarray:
    """Per-pixel squared error averaged over channels.

    With ``rescale=True`` the map is divided by its maximum (when positive)
    for display.
    """
    f, f_hat = _pair(f, f_hat)
    res = ((f - f_hat) ** 2).mean(axis=-1)
    if rescale:
        peak = res.max()
        if peak > 0:
            res = res / peak
    return res


@dataclass(frozen=True)
class ScoredSample:
    identifier: str
    score: float
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if not self.score >= 0:
            raise ValueError(f"score must be non-negative, got {self.score}")


def auroc(samples) -> float:
    """Mann-Whitney AUROC: P(anomalous score > normal score), ties count half."""
    scores = np.array([s.score for s in samples], dtype=float)
    positive = np.array([s.label == "anomalous" for s in samples])
    return auroc_from_arrays(scores, positive)


def auroc_from_arrays(scores, positive) -> float:
    scores = np.asarray(scores, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs at least one normal and one anomalous sample")
    ranks = rankdata(scores)  # average ranks resolve ties as half-credit
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


@dataclass
class EvalReport:
    samples: list = field(default_factory=list)

    @property
    def counts(self) -> tuple:
        n_anom = sum(s.label == "anomalous" for s in self.samples)
        return len(self.samples) - n_anom, n_anom

    @property
    def auroc(self) -> float:
        return auroc(self.samples)

    def to_csv(self) -> str:
        """Score table ``identifier,score,label`` followed by a summary line."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["identifier", "score", "label"])
        for s in self.samples:
            writer.writerow([s.identifier, repr(float(s.score)), s.label])
        n_norm, n_anom = self.counts
        writer.writerow(["# auroc", repr(self.auroc), f"normal={n_norm};anomalous={n_anom}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EvalReport":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["identifier", "score", "label"]:
            raise ValueError("missing score table header")
        samples = [ScoredSample(r[0], float(r[1]), r[2])
                   for r in rows[1:] if r and not r[0].startswith("#")]
        return cls(samples)
