"""Experiment harness shared by the CLI, the demos and the acceptance tests.

Every experiment is a pure function of its arguments; per-trial seeds
are ``seed ^ trial`` so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import io

import numpy as np
from scipy import signal as sps

from .errors import ConfigError
from .ingest import ChannelModel, EnvironmentSpec, synthesize_environment
from .protocol import PairingConfig, pair_loopback, seeded_key_source
from .quantize import bit_error_rate, byte_error_rate, mean_cosine_distance, quantize_bits
from .reconcile import commit, decommit
from .randomness import run_suite

FS = 48000
QUANTIZERS = ("trevor", "means", "schurmann_sigg")


def lowpass_taps(cutoff_hz, fs=FS, numtaps=129):
    """Windowed-sinc FIR lowpass (Hamming), unit DC gain."""
    return tuple(float(t) for t in sps.firwin(numtaps, cutoff_hz, fs=fs))


def legit_channel(snr_db=20.0):
    return ChannelModel(snr_db=snr_db)


def medium_channel(snr_db=15.0, fs=FS):
    return ChannelModel(fir_taps=lowpass_taps(8000, fs, 31), snr_db=snr_db)


def adversary_channel(snr_db=5.0, fs=FS):
    return ChannelModel(fir_taps=lowpass_taps(2000, fs, 129), snr_db=snr_db)


def standard_env(seed, source_kind="harmonic_mixture", duration_s=3.0, fs=FS, adversary_snr_db=5.0):
    """Reference, legitimate (identity, 20 dB), medium (8 kHz lowpass, 15 dB)
    and adversary (2 kHz lowpass) devices around one shared source."""
    return EnvironmentSpec(
        source_kind=source_kind,
        duration_s=duration_s,
        sample_rate_hz=fs,
        seed=seed,
        devices=(
            ("reference", legit_channel()),
            ("legitimate", legit_channel()),
            ("medium", medium_channel(fs=fs)),
            ("adversary", adversary_channel(adversary_snr_db, fs)),
        ),
    )


def attack_env(seed, source_kind="harmonic_mixture", duration_s=3.1, fs=FS, wall_snr_db=10.0):
    """Two legitimate devices and an adversary behind a 2 kHz lowpass wall."""
    return EnvironmentSpec(
        source_kind=source_kind,
        duration_s=duration_s,
        sample_rate_hz=fs,
        seed=seed,
        devices=(
            ("reference", legit_channel()),
            ("legitimate", legit_channel()),
            ("adversary", adversary_channel(wall_snr_db, fs)),
        ),
    )


def trial_seed(seed, trial):
    return (int(seed) ^ int(trial)) & (2 ** 64 - 1)


def _reference(env):
    return env.devices[0][0]


def _others(env):
    return [name for name, _ in env.devices[1:]]


def shift_sweep(env, shifts, trials, quantizers=QUANTIZERS, cfg=PairingConfig()):
    """Mean BER between the reference and every other device vs. relative shift.

    For each trial a fresh environment (seed ^ trial) is rendered long
    enough for the largest shift; the reference uses the window starting
    at 0 and the other device the window starting at the shift.

    Returns
    -------
    list of dict
        Keys: shift_samples, quantizer, role_pair, ber (mean over trials).
    """
    for q in quantizers:
        if q not in QUANTIZERS:
            raise ConfigError(f"unknown quantizer {q!r}")
    shifts = [int(s) for s in shifts]
    n = cfg.n_samples(env.sample_rate_hz)
    need = (n + max(shifts)) / env.sample_rate_hz
    env = env.replace(duration_s=max(env.duration_s, need))
    ref_name, others = _reference(env), _others(env)
    acc = {}
    for t in range(trials):
        bufs = synthesize_environment(env.replace(seed=trial_seed(env.seed, t)))
        ref = bufs[ref_name].samples[:n]
        ref_bits = {q: quantize_bits(ref, q, cfg.spectral, cfg.k_eigenvectors) for q in quantizers}
        for other in others:
            y = bufs[other].samples
            for s in shifts:
                for q in quantizers:
                    b = quantize_bits(y[s:s + n], q, cfg.spectral, cfg.k_eigenvectors)
                    acc.setdefault((s, q, f"{ref_name}-{other}"), []).append(bit_error_rate(ref_bits[q], b))
    return [
        {"shift_samples": s, "quantizer": q, "role_pair": rp, "ber": float(np.mean(v))}
        for (s, q, rp), v in sorted(acc.items(), key=lambda kv: (kv[0][2], kv[0][1], kv[0][0]))
    ]


def pairing_trials(env, trials, shift, responders=None, cfg=PairingConfig(), seed=None):
    """End-to-end loopback pairings: reference initiates, each responder answers.

    The initiator's window starts ``shift`` samples after the responder's.
    """
    seed = env.seed if seed is None else seed
    n = cfg.n_samples(env.sample_rate_hz)
    env = env.replace(duration_s=max(env.duration_s, (n + shift) / env.sample_rate_hz))
    ref_name = _reference(env)
    responders = responders or _others(env)
    rows = []
    for t in range(trials):
        ts = trial_seed(seed, t)
        bufs = synthesize_environment(env.replace(seed=ts))
        a = bufs[ref_name].window(shift, n)
        for name in responders:
            b = bufs[name].window(0, n)
            s_i, s_r = pair_loopback(cfg, a, b, seeded_key_source(ts))
            ok = s_i.verified and s_r.verified and s_i.derived_key == s_r.derived_key
            bits_ok = s_i.local_bits is not None and s_r.local_bits is not None
            rows.append({
                "trial": t,
                "role_pair": f"{ref_name}-{name}",
                "verified": bool(ok),
                "ber": bit_error_rate(s_i.local_bits, s_r.local_bits) if bits_ok else float("nan"),
                "byte_error_rate": byte_error_rate(s_i.local_bits, s_r.local_bits) if bits_ok else float("nan"),
                "initiator": s_i,
                "responder": s_r,
            })
    return rows


def replay_trials(env, trials, cfg=PairingConfig(), seed=None, replay_epoch=1):
    """Replay attack: an in-room recording from another epoch tries to open
    the live session's commitment. A same-epoch legitimate device is the control.
    """
    seed = env.seed if seed is None else seed
    n = cfg.n_samples(env.sample_rate_hz)
    env = env.replace(duration_s=max(env.duration_s, n / env.sample_rate_hz))
    ref_name, legit = _reference(env), _others(env)[0]
    rows = []
    for t in range(trials):
        ts = trial_seed(seed, t)
        trial_env = env.replace(seed=ts)
        live = synthesize_environment(trial_env)
        old = synthesize_environment(trial_env, epoch=replay_epoch)
        key_src = seeded_key_source(ts)
        ref_bits = quantize_bits(live[ref_name].samples[:n], "trevor", cfg.spectral, cfg.k_eigenvectors)
        c = commit(key_src(cfg.rs.k), ref_bits, cfg.rs)
        for condition, buf in (("replay", old[legit]), ("control", live[legit])):
            bits = quantize_bits(buf.samples[:n], "trevor", cfg.spectral, cfg.k_eigenvectors)
            rows.append({
                "trial": t,
                "condition": condition,
                "ber": bit_error_rate(ref_bits, bits),
                "success": decommit(c, bits) is not None,
            })
    return rows


def trevor_keys(env, count, cfg=PairingConfig(), seed=None):
    """Reference-device TREVOR bit strings from ``count`` seeded environments."""
    seed = env.seed if seed is None else seed
    n = cfg.n_samples(env.sample_rate_hz)
    env = env.replace(duration_s=max(env.duration_s, n / env.sample_rate_hz))
    ref_name = _reference(env)
    keys = []
    for t in range(count):
        bufs = synthesize_environment(env.replace(seed=trial_seed(seed, t)))
        keys.append(quantize_bits(bufs[ref_name].samples[:n], "trevor", cfg.spectral, cfg.k_eigenvectors))
    return keys


def randomness_report(env, count, cfg=PairingConfig(), seed=None):
    return run_suite(trevor_keys(env, count, cfg, seed))


def cosine_table(env, trials, max_shift, step, cfg=PairingConfig(), reps=("time", "fft", "trevor_pc")):
    """Mean cosine distance from the reference to each device, per representation."""
    n = cfg.n_samples(env.sample_rate_hz)
    env = env.replace(duration_s=max(env.duration_s, (n + max_shift) / env.sample_rate_hz))
    ref_name = _reference(env)
    acc = {}
    for t in range(trials):
        bufs = synthesize_environment(env.replace(seed=trial_seed(env.seed, t)))
        ref = bufs[ref_name].samples[:n + max_shift]
        for name in _others(env):
            for rep in reps:
                d = mean_cosine_distance(ref, bufs[name].samples, rep, max_shift, step, cfg.spectral,
                                         cfg.k_eigenvectors)
                acc.setdefault((name, rep), []).append(d)
    return [{"device": name, "representation": rep, "mean_cosine_distance": float(np.mean(v))}
            for (name, rep), v in acc.items()]


def to_csv(rows, columns, precision=6):
    """Render rows with fixed float formatting so reruns are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        out = []
        for c in columns:
            v = r[c]
            if isinstance(v, bool):
                out.append(int(v))
            elif isinstance(v, float):
                out.append(f"{v:.{precision}f}")
            else:
                out.append(v)
        w.writerow(out)
    return buf.getvalue()
