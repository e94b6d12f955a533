"""Walk through one TREVOR pairing step by step.

Two devices in the same room hear the same music-like source. Each turns
its own recording into 256 bits; the initiator hides a random key under
its bits and the responder opens it with its own bits. An adversary
behind a wall hears a muffled, noisy version and cannot.
"""

import numpy as np

from trevor.eigen import covariance, extract_basis
from trevor.experiments import standard_env
from trevor.ingest import synthesize_environment
from trevor.protocol import PairingConfig, pair_loopback, seeded_key_source
from trevor.quantize import bit_error_rate, byte_error_rate, to_bits, trevor_quantize
from trevor.spectral import build_observation_matrix

cfg = PairingConfig()
n = cfg.n_samples(48000)
shift = 2400  # the initiator starts recording 50 ms after the responder

env = standard_env(seed=1, duration_s=(n + shift) / 48000)
room = synthesize_environment(env)
print("devices:", ", ".join(room))

# Observation matrix: one row of 32 binned FFT magnitudes per 2048-sample block
a = room["reference"].samples[shift:shift + n]
X = build_observation_matrix(a, cfg.spectral)
print("X shape:", X.shape)

# Gram matrix and its four dominant eigenvectors
C = covariance(X)
basis = extract_basis(C, k=4)
print("eigenvalues:", np.array2string(basis.values, precision=3))

# 128 eigenvector components -> 2-bit symbols -> 256 bits
sym = trevor_quantize(basis)
bits = to_bits(sym)
print("first 32 bits:", "".join(map(str, bits.bits[:32])))

# The same pipeline on each other device, 50 ms earlier
for name in ("legitimate", "medium", "adversary"):
    other = to_bits(trevor_quantize(extract_basis(covariance(
        build_observation_matrix(room[name].samples[:n], cfg.spectral)), 4)))
    print(f"{name:<11} bit errors {bit_error_rate(bits, other):.3f}  byte errors {byte_error_rate(bits, other):.3f}")

# Full protocol over an in-process pipe: INIT, INIT, COMMIT, RESULT
for name in ("legitimate", "adversary"):
    s_i, s_r = pair_loopback(cfg, room["reference"].window(shift, n), room[name].window(0, n), seeded_key_source(1))
    print(f"\npairing with {name}: initiator {s_i.state.value}, responder {s_r.state.value}")
    for line in s_i.summaries():
        print("  ", line)
    if s_i.verified:
        print("   shared key:", s_i.derived_key.hex())
