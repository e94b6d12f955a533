import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from trevor.errors import ConfigError
from trevor.reedsolomon import (
    RsParams,
    decode_batch,
    encode_batch,
    generator_poly,
    gf_div,
    gf_mul,
    rs_decode,
    rs_encode,
    syndromes,
)

SMALL = RsParams(15, 11)


def corrupt(word, positions, rng):
    w = bytearray(word)
    for p in positions:
        w[p] ^= int(rng.integers(1, 256))
    return bytes(w)


def test_field_tables_match_bitwise_multiply():
    a = np.arange(256).repeat(256)
    b = np.tile(np.arange(256), 256)
    want = np.array([oracles.gf_mul_bitwise(int(x), int(y)) for x, y in zip(a, b)])
    np.testing.assert_array_equal(gf_mul(a, b), want)


def test_division_inverts_multiplication():
    a = np.arange(256)
    for b in range(1, 256):
        np.testing.assert_array_equal(gf_div(gf_mul(a, b), b), a)


def test_generator_matches_oracle():
    for n_parity in (2, 4, 16, 64):
        np.testing.assert_array_equal(generator_poly(n_parity), oracles.generator(n_parity))


@pytest.mark.parametrize("params", [SMALL, RsParams(32, 16), RsParams()])
def test_encoder_matches_long_division(params):
    rng = np.random.default_rng(params.n)
    for _ in range(5):
        data = rng.integers(0, 256, params.k)
        assert list(rs_encode(bytes(data.astype(np.uint8)), params)) == oracles.rs_encode_scalar(data, params.n)


def test_codeword_roots():
    # every codeword vanishes at alpha^0 .. alpha^(n-k-1)
    rng = np.random.default_rng(1)
    cw = list(rs_encode(bytes(rng.integers(0, 256, 11).astype(np.uint8)), SMALL))
    for i in range(SMALL.n_parity):
        assert oracles.poly_eval(cw, oracles.gf_pow_bitwise(2, i)) == 0


def test_zero_data_zero_codeword():
    assert rs_encode(bytes(191)) == bytes(255)


def test_clean_round_trip():
    data = bytes(range(191))
    cw = rs_encode(data)
    assert cw[:191] == data
    assert rs_decode(cw) == data
    assert not syndromes(np.frombuffer(cw, np.uint8)[None, :], 64).any()


def test_every_single_error_position_small_code():
    rng = np.random.default_rng(2)
    data = bytes(rng.integers(0, 256, 11).astype(np.uint8))
    cw = rs_encode(data, SMALL)
    for pos in range(15):
        for val in range(1, 256):
            w = bytearray(cw)
            w[pos] ^= val
            assert rs_decode(bytes(w), SMALL) == data


def test_exactly_t_errors_large_code():
    rng = np.random.default_rng(3)
    params = RsParams()
    for _ in range(200):
        data = bytes(rng.integers(0, 256, 191).astype(np.uint8))
        w = corrupt(rs_encode(data, params), rng.choice(255, params.t, replace=False), rng)
        assert rs_decode(w, params) == data


def test_t_plus_one_never_returns_original():
    rng = np.random.default_rng(4)
    params = RsParams()
    data = rng.integers(0, 256, (500, 191)).astype(np.uint8)
    words = encode_batch(data, params)
    for row in words:
        pos = rng.choice(255, params.t + 1, replace=False)
        row[pos] ^= rng.integers(1, 256, pos.size).astype(np.uint8)
    out, ok = decode_batch(words, params)
    assert not np.any(ok & np.all(out == data, axis=1))


def test_batch_matches_single():
    rng = np.random.default_rng(5)
    data = rng.integers(0, 256, (20, 11)).astype(np.uint8)
    words = encode_batch(data, SMALL)
    words[:, 3] ^= 7
    out, ok = decode_batch(words, SMALL)
    assert ok.all()
    for row, d in zip(words, data):
        assert rs_decode(bytes(row.astype(np.uint8)), SMALL) == bytes(d)


def test_params_validation():
    with pytest.raises(ConfigError):
        RsParams(256, 200)
    with pytest.raises(ConfigError):
        RsParams(10, 10)
    with pytest.raises(ConfigError):
        RsParams(10, 0)
    assert RsParams().t == 32


def test_wrong_lengths():
    with pytest.raises(ValueError):
        rs_encode(bytes(10), SMALL)
    with pytest.raises(ValueError):
        rs_decode(bytes(14), SMALL)


@settings(max_examples=40, deadline=None)
@given(data=st.binary(min_size=11, max_size=11), a=st.binary(min_size=11, max_size=11))
def test_code_is_linear(data, a):
    x = np.frombuffer(rs_encode(data, SMALL), np.uint8) ^ np.frombuffer(rs_encode(a, SMALL), np.uint8)
    y = np.frombuffer(rs_encode(bytes(p ^ q for p, q in zip(data, a)), SMALL), np.uint8)
    np.testing.assert_array_equal(x, y)


@settings(max_examples=60, deadline=None)
@given(half=st.integers(1, 10), k=st.integers(1, 40), seed=st.integers(0, 2 ** 32 - 1), data=st.data())
def test_up_to_t_errors_always_decode(half, k, seed, data):
    params = RsParams(k + 2 * half, k)
    rng = np.random.default_rng(seed)
    msg = bytes(rng.integers(0, 256, k).astype(np.uint8))
    e = data.draw(st.integers(0, params.t))
    w = corrupt(rs_encode(msg, params), rng.choice(params.n, e, replace=False), rng)
    assert rs_decode(w, params) == msg


def test_exhaustive_two_errors_one_position_pair():
    # full value sweep for a single position pair; the acceptance run covers all pairs
    rng = np.random.default_rng(6)
    data = rng.integers(0, 256, (1, 11)).astype(np.uint8)
    cw = encode_batch(data, SMALL)[0]
    vals = np.array(list(itertools.product(range(1, 256), repeat=2)), dtype=np.uint8)
    words = np.repeat(cw[None], len(vals), axis=0)
    words[:, 0] ^= vals[:, 0]
    words[:, 14] ^= vals[:, 1]
    out, ok = decode_batch(words, SMALL)
    assert ok.all() and (out == data).all()
