"""Binned FFT magnitudes: the observation matrix X."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, InsufficientDataError


@dataclass(frozen=True)
class SpectralConfig:
    """Block length, number of coarse bins and minimum row count."""

    block_len_d: int = 2048
    n_bins: int = 32
    min_rows: int = 64

    def __post_init__(self):
        d, m, r = self.block_len_d, self.n_bins, self.min_rows
        if d < 2 or d & (d - 1):
            raise ConfigError(f"block_len_d must be a power of two >= 2, got {d}")
        if not 1 <= m <= d // 2:
            raise ConfigError(f"n_bins must lie in [1, {d // 2}], got {m}")
        if r <= m:
            raise ConfigError(f"min_rows ({r}) must exceed n_bins ({m})")

    @property
    def min_samples(self):
        return self.block_len_d * self.min_rows


@dataclass(frozen=True)
class ObservationMatrix:
    """Rows of binned magnitudes, one per block."""

    rows: np.ndarray
    config: SpectralConfig

    @property
    def shape(self):
        return self.rows.shape

    def __array__(self, dtype=None, copy=None):
        return self.rows if dtype is None else self.rows.astype(dtype)


def block_fft_magnitude(block):
    """|DFT| of one block at bins 1..d/2 (DC dropped).

    Parameters
    ----------
    block : array_like, shape (d,)

    Returns
    -------
    ndarray, shape (d // 2,)
    """
    x = np.asarray(block, dtype=np.float64)
    d = x.size
    if x.ndim != 1 or d < 2 or d % 2:
        raise DimensionError(f"block must be 1-d with even length, got shape {x.shape}")
    return np.abs(np.fft.rfft(x))[1:d // 2 + 1]


def bin_edges(n_fine, n_bins):
    """Start offsets of ``n_bins`` contiguous ranges covering ``n_fine`` entries.

    Range sizes differ by at most one; the larger ranges come first.
    """
    if not 1 <= n_bins <= n_fine:
        raise ConfigError(f"n_bins must lie in [1, {n_fine}], got {n_bins}")
    q, r = divmod(n_fine, n_bins)
    sizes = np.full(n_bins, q)
    sizes[:r] += 1
    return np.concatenate([[0], np.cumsum(sizes)[:-1]])


def bin_spectrum(mags, n_bins):
    """Sum fine magnitudes into ``n_bins`` contiguous coarse bins.

    Works on a single spectrum or on a stack of spectra (last axis).
    """
    mags = np.asarray(mags, dtype=np.float64)
    n_fine = mags.shape[-1]
    if n_bins > n_fine:
        raise ConfigError(f"n_bins ({n_bins}) exceeds the {n_fine} available magnitudes")
    return np.add.reduceat(mags, bin_edges(n_fine, n_bins), axis=-1)


def build_observation_matrix(buf, cfg=SpectralConfig()):
    """Split ``buf`` into blocks of d samples and bin each block's spectrum.

    The trailing partial block is dropped.
    """
    x = buf.samples if hasattr(buf, "samples") else np.asarray(buf, dtype=np.float64)
    d = cfg.block_len_d
    if x.size < cfg.min_samples:
        raise InsufficientDataError(
            f"need at least {cfg.min_samples} samples ({cfg.min_rows} blocks of {d}), got {x.size}"
        )
    n_rows = x.size // d
    blocks = x[:n_rows * d].reshape(n_rows, d)
    mags = np.abs(np.fft.rfft(blocks, axis=1))[:, 1:d // 2 + 1]
    return ObservationMatrix(bin_spectrum(mags, cfg.n_bins), cfg)
