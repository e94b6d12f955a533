"""Five statistical tests from NIST SP 800-22 and a suite runner.

Frequency (monobit), block frequency, runs, cumulative sums and
approximate entropy are the tests that stay meaningful on a 256-bit key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, gammaincc, ndtr

from .errors import InsufficientDataError
from .quantize import BitSequence

ALPHA = 0.01
SUITE_THRESHOLD = 0.8
TESTS = ("frequency", "block_frequency", "runs", "cumulative_sums", "approximate_entropy")


def _bits(b):
    x = b.bits if isinstance(b, BitSequence) else np.asarray(b)
    return x.astype(np.int64).ravel()


def _need(n, minimum, test):
    if n < minimum:
        raise InsufficientDataError(f"{test} needs at least {minimum} bits, got {n}")


def _clip(p):
    return float(min(max(p, 0.0), 1.0))


def test_frequency(bits):
    """Monobit test. Returns (s_obs, p)."""
    x = _bits(bits)
    _need(x.size, 100, "frequency test")
    s_obs = abs(int(np.sum(2 * x - 1))) / math.sqrt(x.size)
    return s_obs, _clip(erfc(s_obs / math.sqrt(2)))


def test_block_frequency(bits, block=128):
    """Proportion of ones in non-overlapping blocks. Returns (chi2, p)."""
    x = _bits(bits)
    _need(x.size, 20 * block, f"block frequency test (block {block})")
    return _block_frequency(x, block)


def _block_frequency(x, block):
    n_blocks = x.size // block
    pi = x[:n_blocks * block].reshape(n_blocks, block).mean(axis=1)
    chi2 = 4.0 * block * float(np.sum((pi - 0.5) ** 2))
    return chi2, _clip(gammaincc(n_blocks / 2.0, chi2 / 2.0))


def test_runs(bits):
    """Number of runs given the observed proportion of ones. Returns (V_obs, p).

    If the frequency prerequisite fails the p-value is 0.
    """
    x = _bits(bits)
    n = x.size
    _need(n, 100, "runs test")
    pi = x.mean()
    v_obs = 1 + int(np.count_nonzero(x[1:] != x[:-1]))
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return float(v_obs), 0.0
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return float(v_obs), _clip(erfc(num / den))


def test_cumulative_sums(bits, mode="forward"):
    """Maximal excursion of the ±1 random walk. Returns (z, p)."""
    x = _bits(bits)
    n = x.size
    _need(n, 100, "cumulative sums test")
    walk = np.cumsum(2 * x - 1 if mode == "forward" else (2 * x - 1)[::-1])
    z = int(np.max(np.abs(walk)))
    sq = math.sqrt(n)
    # summation limits truncate toward zero, as in the reference code
    total = 1.0
    k = int((-n / z + 1) / 4)
    while k <= (n / z - 1) / 4:
        total -= ndtr((4 * k + 1) * z / sq) - ndtr((4 * k - 1) * z / sq)
        k += 1
    k = int((-n / z - 3) / 4)
    while k <= (n / z - 1) / 4:
        total += ndtr((4 * k + 3) * z / sq) - ndtr((4 * k + 1) * z / sq)
        k += 1
    return float(z), _clip(total)


def _phi(x, m):
    if m == 0:
        return 0.0
    n = x.size
    ext = np.concatenate([x, x[:m - 1]])
    codes = np.zeros(n, dtype=np.int64)
    for i in range(m):
        codes = (codes << 1) | ext[i:i + n]
    counts = np.bincount(codes, minlength=1 << m)
    c = counts[counts > 0] / n
    return float(np.sum(c * np.log(c)))


def test_approximate_entropy(bits, m=2):
    """Frequency of overlapping m- and (m+1)-bit patterns. Returns (chi2, p)."""
    x = _bits(bits)
    n = x.size
    _need(n, 100, "approximate entropy test")
    apen = _phi(x, m) - _phi(x, m + 1)
    chi2 = 2.0 * n * (math.log(2) - apen)
    return chi2, _clip(gammaincc(2 ** (m - 1), chi2 / 2.0))


@dataclass
class RandTestReport:
    """Statistic, p-value and pass flag for each test on one sequence."""

    per_test: dict
    bit_len: int

    @property
    def passed(self):
        return {name: r[2] for name, r in self.per_test.items()}


def default_block(bit_len):
    """Block size for the block frequency test: 128 when possible, else n // 20."""
    return 128 if bit_len >= 20 * 128 else max(1, bit_len // 20)


def run_tests(bits, block=None, alpha=ALPHA):
    x = _bits(bits)
    block = block or default_block(x.size)
    results = {
        "frequency": test_frequency(x),
        "block_frequency": test_block_frequency(x, block),
        "runs": test_runs(x),
        "cumulative_sums": test_cumulative_sums(x),
        "approximate_entropy": test_approximate_entropy(x),
    }
    return RandTestReport({k: (float(s), float(p), bool(p >= alpha)) for k, (s, p) in results.items()}, x.size)


@dataclass
class SuiteReport:
    pass_fraction: dict
    n_keys: int
    bit_len: int
    block: int
    alpha: float = ALPHA
    threshold: float = SUITE_THRESHOLD
    flags: list = field(default_factory=list)
    reports: list = field(default_factory=list, repr=False)

    @property
    def passed(self):
        return all(f >= self.threshold for f in self.pass_fraction.values())

    def to_dict(self):
        return {
            "n_keys": self.n_keys,
            "bit_len": self.bit_len,
            "block_frequency_block": self.block,
            "alpha": self.alpha,
            "threshold": self.threshold,
            "pass_fraction": self.pass_fraction,
            "suite_passed": self.passed,
            "flags": self.flags,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self):
        lines = [
            f"# {self.n_keys} keys x {self.bit_len} bits, alpha={self.alpha}, "
            f"block frequency block={self.block}, pass threshold {self.threshold}",
            f"{'test':<22}{'pass fraction':>14}  result",
        ]
        for name in TESTS:
            f = self.pass_fraction[name]
            lines.append(f"{name:<22}{f:>14.2f}  {'✓' if f >= self.threshold else '✗'}")
        lines.append(f"{'suite':<22}{'':>14}  {'✓' if self.passed else '✗'}")
        for flag in self.flags:
            lines.append(f"! {flag}")
        return "\n".join(lines) + "\n"


def run_suite(keys, block=None, alpha=ALPHA):
    """Per-test pass fraction over ``keys``; the suite passes if each is ≥ 0.8."""
    keys = [_bits(k) for k in keys]
    if not keys:
        raise InsufficientDataError("run_suite needs at least one key")
    bit_len = min(k.size for k in keys)
    block = block or default_block(bit_len)
    reports = [run_tests(k, block, alpha) for k in keys]
    frac = {name: float(np.mean([r.per_test[name][2] for r in reports])) for name in TESTS}
    flags = []
    if len(keys) > 1 and len({k.tobytes() for k in keys}) == 1:
        flags.append("all keys identical: pass fractions are degenerate (0 or 1)")
    return SuiteReport(frac, len(keys), bit_len, block, alpha, SUITE_THRESHOLD, flags, reports)
