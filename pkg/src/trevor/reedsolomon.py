"""Systematic Reed–Solomon codes over GF(256), vectorized over codewords.

Field GF(2⁸) modulo x⁸+x⁴+x³+x²+1 (0x11D), primitive element α = 2,
generator roots α⁰ … α^(n−k−1). A codeword is the k data bytes followed
by n−k parity bytes; byte j is the coefficient of x^(n−1−j). Codes with
n < 255 are shortened (virtual leading zeros).

Decoding is Berlekamp–Massey, Chien search and Forney, run on a whole
batch of words at once, with a final syndrome check so a returned word
is always a valid codeword.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError

PRIM_POLY = 0x11D

# LOG[0] points into a zero-filled tail of EXP so products with 0 vanish
_ZERO_LOG = 510
EXP = np.zeros(2 * _ZERO_LOG + 1, dtype=np.int64)
LOG = np.zeros(256, dtype=np.int64)


def _build_tables():
    x = 1
    for i in range(255):
        EXP[i] = x
        LOG[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIM_POLY
    EXP[255:510] = EXP[:255]
    LOG[0] = _ZERO_LOG


_build_tables()


def gf_mul(a, b):
    """Elementwise product in GF(256)."""
    return EXP[LOG[a] + LOG[b]]


def gf_div(a, b):
    """Elementwise a / b; ``b`` must be nonzero."""
    return EXP[LOG[a] + 255 - LOG[b]]


def gf_pow_alpha(e):
    return EXP[np.mod(e, 255)]


@dataclass(frozen=True)
class RsParams:
    """Code length ``n``, data length ``k`` (bytes); corrects t = (n−k)/2."""

    n: int = 255
    k: int = 191

    def __post_init__(self):
        n, k = self.n, self.k
        if not (0 < k < n <= 255):
            raise ConfigError(f"need 0 < k < n <= 255, got n={n}, k={k}")
        if (n - k) % 2:
            raise ConfigError(f"n - k must be even, got {n - k}")

    @property
    def t(self):
        return (self.n - self.k) // 2

    @property
    def n_parity(self):
        return self.n - self.k


def generator_poly(n_parity):
    """Coefficients of ∏(x − αⁱ), i < n_parity, highest degree first."""
    g = np.array([1], dtype=np.int64)
    for i in range(n_parity):
        nxt = np.zeros(g.size + 1, dtype=np.int64)
        nxt[:-1] = g
        nxt[1:] ^= gf_mul(g, EXP[i])
        g = nxt
    return g


_GEN_CACHE = {}


def _gen(n_parity):
    if n_parity not in _GEN_CACHE:
        _GEN_CACHE[n_parity] = generator_poly(n_parity)
    return _GEN_CACHE[n_parity]


def encode_batch(data, params):
    """Encode each row of a (B, k) byte array into a (B, n) codeword array."""
    d = np.atleast_2d(np.asarray(data, dtype=np.int64))
    if d.shape[1] != params.k:
        raise DimensionError(f"data rows must have {params.k} bytes, got {d.shape[1]}")
    npar = params.n_parity
    g = _gen(npar)[1:]
    rem = np.zeros((d.shape[0], npar), dtype=np.int64)
    for j in range(params.k):
        fb = d[:, j] ^ rem[:, 0]
        rem[:, :-1] = rem[:, 1:]
        rem[:, -1] = 0
        rem ^= gf_mul(fb[:, None], g[None, :])
    return np.concatenate([d, rem], axis=1)


def syndromes(words, n_parity):
    """S_i = r(αⁱ) for i < n_parity, by Horner's rule over the bytes."""
    r = np.asarray(words, dtype=np.int64)
    s = np.zeros((r.shape[0], n_parity), dtype=np.int64)
    powers = np.arange(n_parity)
    for j in range(r.shape[1]):
        s = EXP[LOG[s] + powers] ^ r[:, j:j + 1]
    return s


def _poly_eval_points(coeffs, log_points):
    # coeffs (B, D) lowest degree first; evaluate at α^log_points (P,) -> (B, P)
    B, D = coeffs.shape
    val = np.zeros((B, log_points.size), dtype=np.int64)
    for i in range(D - 1, -1, -1):
        val = EXP[LOG[val] + log_points[None, :]] ^ coeffs[:, i:i + 1]
    return val


def _berlekamp_massey(s):
    B, two_t = s.shape
    lam = np.zeros((B, two_t + 1), dtype=np.int64)
    lam[:, 0] = 1
    prev = lam.copy()
    L = np.zeros(B, dtype=np.int64)
    for r in range(two_t):
        # discrepancy d = Σ Λ_i S_{r-i}
        terms = gf_mul(lam[:, :r + 1], s[:, r::-1])
        d = np.bitwise_xor.reduce(terms, axis=1)
        prev = np.roll(prev, 1, axis=1)
        prev[:, 0] = 0
        nz = d != 0
        if not nz.any():
            continue
        new = lam ^ gf_mul(d[:, None], prev)
        grow = nz & (2 * L <= r)
        if grow.any():
            prev[grow] = gf_div(lam[grow], d[grow, None])
            L[grow] = r + 1 - L[grow]
        lam[nz] = new[nz]
    return lam, L


def decode_batch(words, params):
    """Decode each row of a (B, n) array.

    Returns
    -------
    data : ndarray, shape (B, k)
        Decoded data bytes (meaningless where ``ok`` is False).
    ok : ndarray of bool, shape (B,)
        True where the word was within the correction radius.
    """
    r = np.atleast_2d(np.asarray(words, dtype=np.int64))
    n, npar = params.n, params.n_parity
    if r.shape[1] != n:
        raise DimensionError(f"words must have {n} bytes, got {r.shape[1]}")
    s = syndromes(r, npar)
    ok = ~s.any(axis=1)
    out = r.copy()
    bad = np.flatnonzero(~ok)
    if bad.size:
        fixed, good = _correct(r[bad], s[bad], params)
        out[bad[good]] = fixed[good]
        ok[bad[good]] = True
    return out[:, :params.k], ok


def _correct(r, s, params):
    n, npar = params.n, params.n_parity
    lam, L = _berlekamp_massey(s)
    deg = np.where(lam.any(axis=0))[0].max()
    lam = lam[:, :deg + 1]
    # byte j sits at power p = n-1-j; roots of Λ are X⁻¹ = α^(-p)
    p = n - 1 - np.arange(n)
    at_inv = _poly_eval_points(lam, (255 - p) % 255)
    is_root = at_inv == 0
    ok = (is_root.sum(axis=1) == L) & (L <= params.t)
    # Ω = S·Λ mod x^npar
    omega = np.zeros((r.shape[0], npar), dtype=np.int64)
    for i in range(lam.shape[1]):
        if i >= npar:
            break
        omega[:, i:] ^= gf_mul(lam[:, i:i + 1], s[:, :npar - i])
    dlam = lam[:, 1::2]
    # Λ'(x) = Σ_{odd i} Λ_i x^(i-1): evaluate as polynomial in x²
    om_val = _poly_eval_points(omega, (255 - p) % 255)
    dl_val = _poly_eval_points(dlam, (2 * (255 - p)) % 255)
    ok &= ~np.any(is_root & (dl_val == 0), axis=1)
    err = np.where(is_root, gf_mul(gf_div(om_val, np.where(dl_val == 0, 1, dl_val)), EXP[p % 255][None, :]), 0)
    fixed = r ^ err
    ok &= ~syndromes(fixed, npar).any(axis=1)
    return fixed, ok


def rs_encode(data, params=RsParams()):
    """Systematic codeword (bytes) for ``params.k`` data bytes."""
    data = bytes(data)
    if len(data) != params.k:
        raise DimensionError(f"rs_encode needs {params.k} data bytes, got {len(data)}")
    cw = encode_batch(np.frombuffer(data, dtype=np.uint8)[None, :], params)
    return bytes(cw[0].astype(np.uint8))


def rs_decode(word, params=RsParams()):
    """Decoded data bytes, or None when the word is beyond the radius."""
    word = bytes(word)
    if len(word) != params.n:
        raise DimensionError(f"rs_decode needs {params.n} bytes, got {len(word)}")
    data, ok = decode_batch(np.frombuffer(word, dtype=np.uint8)[None, :], params)
    return bytes(data[0].astype(np.uint8)) if ok[0] else None
