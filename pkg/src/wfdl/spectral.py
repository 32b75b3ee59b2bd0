"""Two-dimensional discrete Fourier analysis of image planes.

The forward transform carries no normalisation factor; ``idft2`` applies the
``1/(M*N)`` factor. All transforms act on the last two axes, so a stack of
planes of shape ``(..., M, N)`` is transformed plane by plane.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np

WEIGHT_MODES = ("centered", "raw", "none")
FILTER_MODES = ("low_pass", "high_pass")


@lru_cache(maxsize=None)
def _smallest_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    p = 3
    while p * p <= n:
        if n % p == 0:
            return p
        p += 2
    return n


@lru_cache(maxsize=None)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    # reduce the exponent modulo n before scaling to keep the phase exact
    return np.exp(-2j * np.pi * ((np.outer(k, k) % n) / n))


@lru_cache(maxsize=None)
def _twiddles(n: int, p: int) -> np.ndarray:
    r = np.arange(p)[:, None]
    k = np.arange(n)[None, :]
    return np.exp(-2j * np.pi * (((r * k) % n) / n))


def _fft_last(x: np.ndarray) -> np.ndarray:
    """Mixed-radix decimation-in-time DFT along the last axis."""
    n = x.shape[-1]
    if n == 1:
        return x.astype(complex)
    p = _smallest_factor(n)
    if p == n:
        # prime length: direct evaluation
        return x @ _dft_matrix(n).T
    m = n // p
    # sub[..., r, :] is the length-m transform of x[..., r::p]
    sub = _fft_last(np.stack([x[..., r::p] for r in range(p)], axis=-2))
    tiled = np.concatenate([sub] * p, axis=-1)
    return np.einsum("...rk,rk->...k", tiled, _twiddles(n, p))


def _fft2(x: np.ndarray) -> np.ndarray:
    out = _fft_last(np.asarray(x))
    out = _fft_last(np.swapaxes(out, -1, -2))
    return np.swapaxes(out, -1, -2)


def _ifft2_complex(spectrum: np.ndarray) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=complex)
    m, n = spectrum.shape[-2:]
    return np.conj(_fft2(np.conj(spectrum))) / (m * n)


def dft2(plane) -> np.ndarray:
    """Forward 2-D DFT over the last two axes, without normalisation.

    ``F[u, v] = sum_x sum_y f[x, y] * exp(-2j*pi*(u*x/M + v*y/N))``.
    """
    plane = np.asarray(plane)
    if plane.ndim < 2:
        raise ValueError(f"expected at least 2 dimensions, got shape {plane.shape}")
    return _fft2(plane)


def idft2(spectrum, imag_tol: float = 1e-3) -> np.ndarray:
    """Inverse 2-D DFT returning the real part.

    A ``RuntimeWarning`` is issued when the discarded imaginary part exceeds
    ``imag_tol`` times the largest real magnitude, which means the input was
    not the spectrum of a real plane.
    """
    spectrum = np.asarray(spectrum)
    if spectrum.ndim < 2:
        raise ValueError(f"expected at least 2 dimensions, got shape {spectrum.shape}")
    out = _ifft2_complex(spectrum)
    imag = np.max(np.abs(out.imag), initial=0.0)
    scale = max(np.max(np.abs(out.real), initial=0.0), 1.0)
    if imag > imag_tol * scale:
        warnings.warn(
            f"inverse DFT has imaginary residue {imag:.3g}; input is not conjugate-symmetric",
            RuntimeWarning,
            stacklevel=2,
        )
    return out.real


def magnitude(spectrum) -> np.ndarray:
    spectrum = np.asarray(spectrum)
    return np.sqrt(spectrum.real**2 + spectrum.imag**2)


def centered_indices(n: int) -> np.ndarray:
    """Signed-frequency magnitude ``min(k, n - k)`` for each DFT index."""
    k = np.arange(n)
    return np.minimum(k, n - k)


def radial_frequency(rows: int, cols: int) -> np.ndarray:
    """Centered radial frequency ``sqrt(u_c**2 + v_c**2)`` of every DFT bin."""
    u = centered_indices(rows).astype(float)[:, None]
    v = centered_indices(cols).astype(float)[None, :]
    return np.sqrt(u**2 + v**2)


def weight_matrix(rows: int, cols: int, mode: str = "centered") -> np.ndarray:
    """Frequency weights ``sqrt(u**2 + v**2)`` for an ``rows x cols`` spectrum.

    Parameters
    ----------
    mode : {'centered', 'raw', 'none'}
        ``raw`` uses DFT indices literally, ``centered`` folds them to the
        signed frequency so the weight grows with true spatial frequency, and
        ``none`` returns all ones.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix size must be positive, got {rows}x{cols}")
    if mode == "centered":
        return radial_frequency(rows, cols)
    if mode == "raw":
        u = np.arange(rows, dtype=float)[:, None]
        v = np.arange(cols, dtype=float)[None, :]
        return np.sqrt(u**2 + v**2)
    if mode == "none":
        return np.ones((rows, cols))
    raise ValueError(f"unknown weight mode {mode!r}; expected one of {WEIGHT_MODES}")


def shift_spectrum(spectrum) -> np.ndarray:
    """Move the DC bin to ``(M // 2, N // 2)`` by rolling both axes."""
    spectrum = np.asarray(spectrum)
    m, n = spectrum.shape[-2:]
    return np.roll(spectrum, (m // 2, n // 2), axis=(-2, -1))


def radial_filter(spectrum, cutoff: float, mode: str = "low_pass") -> np.ndarray:
    """Zero bins outside (low_pass) or inside (high_pass) a radial cutoff.

    Low-pass keeps bins with radius ``<= cutoff``; high-pass keeps the rest,
    so the two outputs at one cutoff always sum to the input.
    """
    if cutoff < 0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff}")
    spectrum = np.asarray(spectrum)
    radius = radial_frequency(*spectrum.shape[-2:])
    if mode == "low_pass":
        keep = radius <= cutoff
    elif mode == "high_pass":
        keep = radius > cutoff
    else:
        raise ValueError(f"unknown filter mode {mode!r}; expected one of {FILTER_MODES}")
    return np.where(keep, spectrum, 0)


def spectrum_image(spectrum) -> np.ndarray:
    """Shifted log-magnitude ``log(1 + |F|)`` rescaled to [0, 1] for display."""
    logmag = np.log1p(magnitude(shift_spectrum(spectrum)))
    lo, hi = logmag.min(), logmag.max()
    if hi - lo <= 0:
        return np.zeros_like(logmag)
    return (logmag - lo) / (hi - lo)


def band_energy_ratio(plane, cutoff: float | None = None) -> float:
    """Fraction of non-DC spectral energy above a radial cutoff.

    The cutoff defaults to a quarter of the smaller plane side. Planes may be
    stacked along leading axes; energies are pooled before the ratio.
    """
    plane = np.asarray(plane, dtype=float)
    m, n = plane.shape[-2:]
    if cutoff is None:
        cutoff = min(m, n) / 4
    power = magnitude(dft2(plane)) ** 2
    radius = radial_frequency(m, n)
    total = power[..., radius > 0].sum()
    # rounding residue of a constant plane is not structure
    if total <= 1e-20 * power.sum():
        return 0.0
    return float(power[..., radius > cutoff].sum() / total)
