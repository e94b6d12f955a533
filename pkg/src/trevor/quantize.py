"""Symbol quantizers (TREVOR and two baselines) and agreement metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import covariance, extract_basis
from .errors import ConfigError, DegenerateInputError, DimensionError, InsufficientDataError
from .spectral import SpectralConfig, build_observation_matrix

ORIGINS = ("trevor", "means", "schurmann_sigg")


@dataclass(frozen=True)
class SymbolSequence:
    """Quantized symbols; 2-bit for trevor, 1-bit for the baselines."""

    symbols: np.ndarray
    origin: str

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ConfigError(f"unknown origin {self.origin!r}")
        s = np.asarray(self.symbols, dtype=np.uint8).ravel()
        top = 4 if self.origin == "trevor" else 2
        if s.size and s.max() >= top:
            raise ConfigError(f"{self.origin} symbols must be < {top}")
        s.setflags(write=False)
        object.__setattr__(self, "symbols", s)

    def __len__(self):
        return self.symbols.size


@dataclass(frozen=True)
class BitSequence:
    """A bit string, stored unpacked (one 0/1 byte per bit)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8).ravel()
        if b.size and b.max() > 1:
            raise ConfigError("bits must be 0 or 1")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def bit_len(self):
        return self.bits.size

    def __len__(self):
        return self.bits.size

    def to_bytes(self, n_bytes=None):
        """Pack MSB-first; with ``n_bytes`` only the first 8·n_bytes bits."""
        b = self.bits if n_bytes is None else self.bits[:8 * n_bytes]
        return np.packbits(b).tobytes()

    @classmethod
    def from_bytes(cls, data, bit_len=None):
        b = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
        return cls(b if bit_len is None else b[:bit_len])


def trevor_quantize(basis):
    """Map the concatenated eigenvector components to 2-bit symbols.

    Four equal-width, right-open bins span [min(p), max(p)]; max(p) lands
    in the top bin.
    """
    p = np.asarray(basis.flatten() if hasattr(basis, "flatten") else basis, dtype=np.float64).ravel()
    if p.size == 0:
        raise DimensionError("empty basis")
    lo, hi = p.min(), p.max()
    if hi == lo:
        raise DegenerateInputError("all eigenvector components are equal; nothing to quantize")
    edges = lo + np.arange(1, 4) * (hi - lo) / 4
    return SymbolSequence(np.searchsorted(edges, p, side="right"), "trevor")


def means_quantize(buf, block=2048):
    """One bit per block: 1 if the block mean exceeds the median block mean."""
    x = buf.samples if hasattr(buf, "samples") else np.asarray(buf, dtype=np.float64)
    n = x.size // block
    if n < 2:
        raise InsufficientDataError(f"means quantizer needs at least 2 blocks of {block} samples, got {x.size}")
    means = x[:n * block].reshape(n, block).mean(axis=1)
    return SymbolSequence(means > np.median(means), "means")


def schurmann_sigg_quantize(X):
    """Sign of the time-and-frequency double difference of X, row-major."""
    x = np.asarray(getattr(X, "rows", X), dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise InsufficientDataError(f"need at least a 2x2 observation matrix, got shape {x.shape}")
    dd = np.diff(np.diff(x, axis=1), axis=0)
    return SymbolSequence((dd > 0).ravel(), "schurmann_sigg")


def to_bits(sym):
    """Expand symbols to bits: 2 per trevor symbol (MSB first), else 1."""
    s = sym.symbols
    if sym.origin == "trevor":
        return BitSequence(np.stack([s >> 1, s & 1], axis=1).ravel())
    return BitSequence(s)


def _bits(a):
    return a.bits if isinstance(a, BitSequence) else np.asarray(a, dtype=np.uint8).ravel()


def bit_error_rate(a, b):
    """Fraction of positions where ``a`` and ``b`` differ."""
    x, y = _bits(a), _bits(b)
    if x.size != y.size:
        raise DimensionError(f"bit lengths differ: {x.size} vs {y.size}")
    if x.size == 0:
        raise DimensionError("cannot compare empty bit sequences")
    return float(np.count_nonzero(x != y)) / x.size


def byte_error_rate(a, b):
    """Fraction of whole bytes (8-bit symbols) that differ anywhere."""
    x, y = _bits(a), _bits(b)
    if x.size != y.size:
        raise DimensionError(f"bit lengths differ: {x.size} vs {y.size}")
    n = x.size // 8
    if n == 0:
        raise DimensionError("need at least one full byte")
    diff = (x[:8 * n] != y[:8 * n]).reshape(n, 8)
    return float(np.count_nonzero(diff.any(axis=1))) / n


def trevor_symbols(buf, cfg=SpectralConfig(), k=4):
    """Full TREVOR front end: buffer -> X -> C -> basis -> symbols."""
    basis = extract_basis(covariance(build_observation_matrix(buf, cfg)), k)
    return trevor_quantize(basis)


def quantize_bits(buf, quantizer, cfg=SpectralConfig(), k=4):
    """Bits from any of the three quantizers, by name."""
    if quantizer == "trevor":
        return to_bits(trevor_symbols(buf, cfg, k))
    if quantizer == "means":
        return to_bits(means_quantize(buf, cfg.block_len_d))
    if quantizer in ("schurmann_sigg", "ss"):
        return to_bits(schurmann_sigg_quantize(build_observation_matrix(buf, cfg)))
    raise ConfigError(f"unknown quantizer {quantizer!r}")


def _representation(x, rep, cfg, k):
    if rep == "time":
        return x
    X = build_observation_matrix(x, cfg)
    if rep == "fft":
        return X.rows.ravel()
    if rep == "trevor_pc":
        return extract_basis(covariance(X), k).flatten()
    raise ConfigError(f"unknown representation {rep!r}")


def cosine_distance(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateInputError("cosine distance of a zero-norm vector")
    return float(1.0 - (a @ b) / (na * nb))


def mean_cosine_distance(ref, other, rep, max_shift, step, cfg=SpectralConfig(), k=4):
    """Mean cosine distance between ``ref`` and shifted copies of ``other``.

    Both buffers are cut to a common window of ``len - max_shift``
    samples; ``other`` is read from offset s for s = 0, step, ..., max_shift.
    """
    x = ref.samples if hasattr(ref, "samples") else np.asarray(ref, dtype=np.float64)
    y = other.samples if hasattr(other, "samples") else np.asarray(other, dtype=np.float64)
    if max_shift < 0 or (max_shift > 0 and step < 1):
        raise ConfigError("max_shift must be >= 0 and step >= 1")
    L = min(x.size, y.size) - max_shift
    if L < 1:
        raise InsufficientDataError(f"buffers too short for max_shift {max_shift}")
    base = _representation(x[:L], rep, cfg, k)
    shifts = range(0, max_shift + 1, step) if max_shift else [0]
    return float(np.mean([cosine_distance(base, _representation(y[s:s + L], rep, cfg, k)) for s in shifts]))
