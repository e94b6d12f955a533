import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from trevor import randomness as rnd
from trevor.errors import InsufficientDataError
from trevor.quantize import BitSequence

EPS = np.array([int(c) for c in oracles.EPSILON_100])


def test_published_worked_examples():
    assert rnd.test_frequency(EPS)[1] == pytest.approx(oracles.PUBLISHED["frequency"], abs=1e-6)
    assert rnd._block_frequency(EPS, 10)[1] == pytest.approx(oracles.PUBLISHED["block_frequency_M10"], abs=1e-6)
    assert rnd.test_runs(EPS)[1] == pytest.approx(oracles.PUBLISHED["runs"], abs=1e-6)
    assert rnd.test_cumulative_sums(EPS)[1] == pytest.approx(oracles.PUBLISHED["cusum_forward"], abs=1e-6)
    assert rnd.test_cumulative_sums(EPS, "backward")[1] == pytest.approx(oracles.PUBLISHED["cusum_backward"], abs=1e-6)
    assert rnd.test_approximate_entropy(EPS)[1] == pytest.approx(oracles.PUBLISHED["approximate_entropy_m2"], abs=1e-6)


def test_standalone_oracle_reproduces_published_values():
    eps = list(EPS)
    assert oracles.frequency(eps) == pytest.approx(oracles.PUBLISHED["frequency"], abs=1e-6)
    assert oracles.block_frequency(eps, 10) == pytest.approx(oracles.PUBLISHED["block_frequency_M10"], abs=1e-6)
    assert oracles.runs(eps) == pytest.approx(oracles.PUBLISHED["runs"], abs=1e-6)
    assert oracles.cusum(eps) == pytest.approx(oracles.PUBLISHED["cusum_forward"], abs=1e-6)
    assert oracles.cusum(eps, True) == pytest.approx(oracles.PUBLISHED["cusum_backward"], abs=1e-6)
    assert oracles.approximate_entropy(eps, 2) == pytest.approx(oracles.PUBLISHED["approximate_entropy_m2"], abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.integers(100, 400), elements=st.integers(0, 1)))
def test_matches_standalone_oracle(x):
    eps = [int(b) for b in x]
    assert rnd.test_frequency(x)[1] == pytest.approx(oracles.frequency(eps), abs=1e-9)
    assert rnd._block_frequency(x, 10)[1] == pytest.approx(oracles.block_frequency(eps, 10), abs=1e-9)
    assert rnd.test_runs(x)[1] == pytest.approx(oracles.runs(eps), abs=1e-9)
    assert rnd.test_cumulative_sums(x)[1] == pytest.approx(oracles.cusum(eps), abs=1e-9)
    assert rnd.test_cumulative_sums(x, "backward")[1] == pytest.approx(oracles.cusum(eps, True), abs=1e-9)
    assert rnd.test_approximate_entropy(x)[1] == pytest.approx(oracles.approximate_entropy(eps, 2), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint8, st.integers(100, 600), elements=st.integers(0, 1)))
def test_p_values_in_unit_interval_and_deterministic(x):
    r1, r2 = rnd.run_tests(x), rnd.run_tests(x.copy())
    assert r1.per_test == r2.per_test
    for _, p, _ in r1.per_test.values():
        assert 0.0 <= p <= 1.0


def test_length_guards():
    with pytest.raises(InsufficientDataError):
        rnd.test_frequency(np.ones(50, dtype=np.uint8))
    with pytest.raises(InsufficientDataError):
        rnd.test_block_frequency(np.ones(256, dtype=np.uint8), block=128)


def test_default_block():
    assert rnd.default_block(256) == 12
    assert rnd.default_block(10 ** 6) == 128


def test_uniform_keys_pass():
    rng = np.random.default_rng(0)
    rep = rnd.run_suite([BitSequence(rng.integers(0, 2, 256)) for _ in range(100)])
    assert rep.passed
    assert all(f >= 0.9 for f in rep.pass_fraction.values())


def test_identical_biased_keys_flagged():
    key = BitSequence(np.r_[np.ones(200), np.zeros(56)].astype(np.uint8))
    rep = rnd.run_suite([key] * 100)
    assert rep.pass_fraction["frequency"] in (0.0, 1.0)
    assert rep.flags
    assert "identical" in rep.to_table()


def test_report_serializations():
    rng = np.random.default_rng(1)
    rep = rnd.run_suite([rng.integers(0, 2, 256) for _ in range(5)])
    doc = json.loads(rep.to_json())
    assert set(doc["pass_fraction"]) == set(rnd.TESTS)
    assert doc["block_frequency_block"] == 12
    assert rep.to_table().count("\n") == len(rnd.TESTS) + 3


def test_empty_suite():
    with pytest.raises(InsufficientDataError):
        rnd.run_suite([])
