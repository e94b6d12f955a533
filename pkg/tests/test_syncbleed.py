import json

import numpy as np
import pytest
from scipy import signal as sps

from trevor.errors import ConfigError, InsufficientDataError
from trevor.experiments import attack_env, legit_channel, lowpass_taps
from trevor.ingest import ChannelModel, EnvironmentSpec, latent_source, synthesize_environment
from trevor.protocol import MsgType, PairingConfig, pair_loopback, seeded_key_source
from trevor.quantize import BitSequence
from trevor.reconcile import RsParams, commit
from trevor.syncbleed import (
    TransferEstimate,
    apply_inverse,
    fit_transfer,
    local_reconciliation_check,
    run_attack,
    snooped_commitment,
    snooped_snippets,
)

FS = 48000


def noise_snippets(count, length, seed):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal(length) for _ in range(count)]


def test_identity_wall_gives_unit_response():
    leg = noise_snippets(64, 4096, 0)
    est = fit_transfer(leg, leg)
    np.testing.assert_allclose(np.abs(est.gains[1:-1]), 1.0, atol=2e-3)


def test_known_fir_magnitude_recovered():
    h = np.array(lowpass_taps(6000, FS, 31))
    leg = noise_snippets(1024, 4096, 1)
    adv = [sps.lfilter(h, [1.0], x) for x in leg]
    est = fit_transfer(leg, adv)
    want = np.abs(np.fft.rfft(h, 2048))
    strong = want > 10 ** (-10 / 20)
    rel = np.abs(np.abs(est.gains[strong]) - want[strong]) / want[strong]
    assert rel.max() < 0.05


def test_fit_guards():
    leg = noise_snippets(1, 4096, 2)
    with pytest.raises(ConfigError):
        fit_transfer(leg, leg, eps=0.0)
    with pytest.raises(InsufficientDataError):
        fit_transfer([], [])
    with pytest.raises(ConfigError):
        fit_transfer(leg, leg + leg)
    with pytest.raises(ConfigError):
        TransferEstimate(np.ones(5), 2048, 1e-3, 1)


def test_unit_inverse_is_identity():
    x = latent_source("filtered_noise", 20000, FS, 3)
    est = TransferEstimate(np.ones(1025), 2048, 1e-12, 1)
    y = apply_inverse(est, x)
    assert y.shape == x.shape
    assert np.sqrt(np.mean((y - x) ** 2)) < 1e-6


def test_zero_in_zero_out():
    est = TransferEstimate(np.full(1025, 0.5), 2048, 1e-3, 1)
    assert not apply_inverse(est, np.zeros(5000)).any()


def test_inverse_reconstructs_through_known_filter():
    h = lowpass_taps(8000, FS, 31)
    env = EnvironmentSpec("filtered_noise", 30.0, FS, 4,
                          (("in", ChannelModel(snr_db=200.0)), ("out", ChannelModel(fir_taps=h, snr_db=20.0))))
    bufs = synthesize_environment(env)
    x, m = bufs["in"].samples, bufs["out"].samples
    seg = FS // 4
    train = range(0, 25 * FS, seg)
    est = fit_transfer([x[s:s + seg] for s in train], [m[s:s + seg] for s in train])
    y = apply_inverse(est, m[25 * FS:])
    assert np.corrcoef(y, x[25 * FS:])[0, 1] >= 0.9


def test_snooping_reads_the_transcript():
    env = EnvironmentSpec("ar_process", 3.1, FS, 1, (("a", ChannelModel(snr_db=60.0)), ("b", ChannelModel(snr_db=60.0))))
    bufs = synthesize_environment(env)
    n = 3 * FS
    s_i, _ = pair_loopback(PairingConfig(protocol_kind="sync_baseline"), bufs["a"].window(2400, n),
                           bufs["b"].window(0, n + 2400), seeded_key_source(0))
    raw = s_i.transcript_bytes()
    snips = snooped_snippets(raw)
    assert len(snips) == 1
    np.testing.assert_allclose(snips[0], bufs["a"].samples[2400:2400 + 12000], atol=1e-7)
    assert snooped_commitment(raw).params == RsParams(255, 191)


def test_reconciliation_check():
    rng = np.random.default_rng(5)
    params = RsParams(255, 191)
    S = BitSequence(rng.integers(0, 2, 8 * 255))
    c = commit(bytes(rng.integers(0, 256, 191).astype(np.uint8)), S, params)
    assert local_reconciliation_check(S, c)
    assert not local_reconciliation_check(BitSequence(rng.integers(0, 2, 8 * 255)), c)
    # 28% bit errors touch nearly every byte, far beyond t = 32
    noisy = S.bits ^ (rng.random(S.bit_len) < 0.28)
    assert not local_reconciliation_check(BitSequence(noisy), c)


def test_brute_force_flips_unreliable_bits():
    rng = np.random.default_rng(6)
    params = RsParams(32, 16)
    S = BitSequence(rng.integers(0, 2, 256))
    c = commit(bytes(16), S, params)
    bad = S.bits.copy()
    errs = np.arange(0, 80, 8)  # 10 byte errors, t = 8
    bad[errs] ^= 1
    reliability = np.ones(256)
    reliability[errs] = 0.0
    assert not local_reconciliation_check(BitSequence(bad), c)
    assert local_reconciliation_check(BitSequence(bad), c, radius=2, reliability=reliability)


def test_attack_needs_adversary():
    env = EnvironmentSpec("filtered_noise", 3.1, FS, 0, (("a", legit_channel()), ("b", legit_channel())))
    with pytest.raises(ConfigError):
        run_attack(env, 2, 2)


def test_attack_on_trevor_has_nothing_to_train_on():
    with pytest.raises(InsufficientDataError):
        run_attack(attack_env(0), 4, 2, cfg=PairingConfig())


def test_attacker_inside_room_gains_nothing():
    env = attack_env(1)
    env = env.replace(devices=env.devices[:2] + (("adversary", legit_channel()),))
    rep = run_attack(env, 8, 6, seed=1)
    legit = np.mean([r["legit_ber"] for r in rep.per_trial])
    assert abs(rep.ber_with_attack - rep.ber_without_attack) < 0.05
    assert abs(rep.ber_without_attack - legit) < 0.05


def test_report_outputs():
    rep = run_attack(attack_env(2), 4, 3, seed=2)
    doc = json.loads(rep.to_json())
    assert doc["trials"] == 3 and doc["training_pairs"] == 4
    lines = rep.to_csv().strip().split("\n")
    assert lines[0] == "trial,ber_without_attack,ber_with_attack,legit_ber,reconciled"
    assert len(lines) == 4


def test_more_training_does_not_hurt():
    env = attack_env(3)
    bers = [run_attack(env, r, 10, seed=3).ber_with_attack for r in (16, 64, 256)]
    assert bers[1] <= bers[0] + 0.02 and bers[2] <= bers[1] + 0.02
