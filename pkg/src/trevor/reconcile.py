"""Fuzzy commitment: E = RS(R) ⊕ S, published with SHA-256(R)."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError, InsufficientDataError
from .quantize import BitSequence
from .reedsolomon import RsParams, decode_batch, encode_batch, rs_decode, rs_encode

__all__ = ["RsParams", "FuzzyCommitment", "commit", "decommit", "rs_encode", "rs_decode", "digest"]

DIGEST_LEN = 32


def digest(key):
    return hashlib.sha256(bytes(key)).digest()


@dataclass(frozen=True)
class FuzzyCommitment:
    """The single public reconciliation message."""

    payload_e: bytes
    params: RsParams
    verify_digest: bytes

    def __post_init__(self):
        if len(self.payload_e) != self.params.n:
            raise DimensionError(f"payload must be {self.params.n} bytes, got {len(self.payload_e)}")
        if len(self.verify_digest) != DIGEST_LEN:
            raise DimensionError(f"digest must be {DIGEST_LEN} bytes")

    def to_bytes(self):
        """n ‖ k ‖ reserved ‖ payload ‖ digest."""
        return bytes([self.params.n, self.params.k, 0]) + bytes(self.payload_e) + bytes(self.verify_digest)

    @classmethod
    def from_bytes(cls, data):
        data = bytes(data)
        if len(data) < 3:
            raise FormatError("commitment shorter than its 3-byte header")
        n, k, reserved = data[0], data[1], data[2]
        if reserved != 0:
            raise FormatError(f"reserved commitment byte is {reserved}, expected 0")
        try:
            params = RsParams(n, k)
        except ValueError as exc:
            raise FormatError(f"bad commitment parameters: {exc}") from None
        if len(data) != 3 + n + DIGEST_LEN:
            raise FormatError(f"commitment is {len(data)} bytes, expected {3 + n + DIGEST_LEN}")
        return cls(data[3:3 + n], params, data[3 + n:])


def _mask(S_local, n):
    bits = S_local if isinstance(S_local, BitSequence) else BitSequence(S_local)
    if bits.bit_len < 8 * n:
        raise InsufficientDataError(f"need at least {8 * n} bits of local symbols, got {bits.bit_len}")
    return bits.to_bytes(n)


def _xor(a, b):
    return bytes(x ^ y for x, y in zip(a, b))


def commit(R, S_local, params=RsParams()):
    """Hide key ``R`` (k bytes) under the first n bytes of ``S_local``."""
    R = bytes(R)
    return FuzzyCommitment(_xor(rs_encode(R, params), _mask(S_local, params.n)), params, digest(R))


def decommit(c, S_local):
    """Recover the key with local symbols; None if decoding or the digest fails."""
    R = rs_decode(_xor(c.payload_e, _mask(S_local, c.params.n)), c.params)
    if R is None or digest(R) != c.verify_digest:
        return None
    return R


def decommit_many(c, masks):
    """Vectorized decommit of one commitment against many (B, n) byte masks.

    Returns a boolean array: True where decoding and the digest both pass.
    """
    words = np.frombuffer(c.payload_e, dtype=np.uint8)[None, :] ^ np.asarray(masks, dtype=np.uint8)
    data, ok = decode_batch(words, c.params)
    hits = np.zeros(len(words), dtype=bool)
    for i in np.flatnonzero(ok):
        hits[i] = digest(bytes(data[i].astype(np.uint8))) == c.verify_digest
    return hits


def encode_many(keys, params):
    """Codewords for a (B, k) array of keys."""
    return encode_batch(keys, params).astype(np.uint8)
