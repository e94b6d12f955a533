"""SyncBleed: eavesdropping on a synchronization-based pairing protocol.

The adversary sits outside the legitimate space. Every pairing of the
sync baseline broadcasts a raw snippet of in-room audio; paired with the
adversary's own muffled recording of the same moment, the snippets
train an estimate of the wall's transfer function. Inverting it on a
later muffled recording approximates the in-room signal, from which the
adversary quantizes a guess of the key material.

The transfer function is estimated with a regularized linear (Wiener)
estimator rather than a neural network.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, InsufficientDataError
from .ingest import SampleBuffer, synthesize_environment
from .protocol import MsgType, PairingConfig, pair_loopback, parse_stream, seeded_key_source
from .quantize import BitSequence, bit_error_rate, to_bits, schurmann_sigg_quantize
from .reconcile import FuzzyCommitment, decommit, decommit_many
from .spectral import build_observation_matrix

DEFAULT_EPS = 1e-3
ADVERSARY = "adversary"


@dataclass(frozen=True)
class TransferEstimate:
    """Estimated wall response Ĥ per rfft bin (adversary = Ĥ · legitimate).

    ``inverse_gains``, when present, is the Wiener (MMSE) inverse fitted on
    the same training pairs; it attenuates bins the wall buried in noise
    instead of amplifying them.
    """

    gains: np.ndarray
    fft_len: int
    regularizer_eps: float
    training_pairs: int
    inverse_gains: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=complex)
        if g.shape != (self.fft_len // 2 + 1,):
            raise ConfigError(f"gains must have {self.fft_len // 2 + 1} entries, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ConfigError("transfer estimate has non-finite gains")
        if not self.regularizer_eps > 0:
            raise ConfigError("regularizer_eps must be > 0")
        object.__setattr__(self, "gains", g)
        if self.inverse_gains is not None:
            gi = np.asarray(self.inverse_gains, dtype=complex)
            if gi.shape != g.shape or not np.all(np.isfinite(gi)):
                raise ConfigError("inverse gains must be finite and match the forward gains")
            object.__setattr__(self, "inverse_gains", gi)


def _frames(x, n):
    # periodic Hann frames at 50% overlap; short inputs give one zero-padded frame
    x = np.asarray(x, dtype=np.float64)
    hop = n // 2
    w = sps.windows.hann(n, sym=False)
    if x.size < n:
        x = np.concatenate([x, np.zeros(n - x.size)])
    starts = range(0, x.size - n + 1, hop)
    return np.fft.rfft(np.stack([x[s:s + n] * w for s in starts]), axis=1)


def fit_transfer(leg_snippets, adv_snippets, fft_len=2048, eps=DEFAULT_EPS):
    """Least-squares wall response from time-paired snippets.

    Ĥ(ω) = Σ A(ω)·conj(L(ω)) / (Σ |L(ω)|² + eps·mean Σ|L|²), summed over
    every windowed frame of every pair. The Wiener inverse
    Σ L·conj(A) / (Σ |A|² + eps·mean Σ|A|²) is fitted alongside.

    Parameters
    ----------
    leg_snippets, adv_snippets : list of SampleBuffer or array
        In-room snippets and the adversary's recordings of the same moments.
    fft_len : int
    eps : float
        Regularizer relative to the mean legitimate power; must be > 0.
    """
    if not eps > 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    if len(leg_snippets) != len(adv_snippets):
        raise ConfigError("snippet lists differ in length")
    if not leg_snippets:
        raise InsufficientDataError("no training snippets (the protocol leaked none)")
    num = np.zeros(fft_len // 2 + 1, dtype=complex)
    den = np.zeros(fft_len // 2 + 1)
    den_a = np.zeros(fft_len // 2 + 1)
    for l_buf, a_buf in zip(leg_snippets, adv_snippets):
        l = getattr(l_buf, "samples", l_buf)
        a = getattr(a_buf, "samples", a_buf)
        n = min(len(l), len(a))
        L, A = _frames(l[:n], fft_len), _frames(a[:n], fft_len)
        num += np.sum(A * np.conj(L), axis=0)
        den += np.sum(np.abs(L) ** 2, axis=0)
        den_a += np.sum(np.abs(A) ** 2, axis=0)
    reg = eps * den.mean() if den.mean() > 0 else eps
    reg_a = eps * den_a.mean() if den_a.mean() > 0 else eps
    return TransferEstimate(num / (den + reg), fft_len, eps, len(leg_snippets), np.conj(num) / (den_a + reg_a))


def apply_inverse(est, muffled):
    """Undo the wall and return the estimated in-room signal, overlap-added.

    Uses the fitted Wiener inverse when the estimate carries one, else
    E = M·conj(Ĥ) / (|Ĥ|² + eps·mean|Ĥ|²). The output has the same length
    as the input.
    """
    x = getattr(muffled, "samples", muffled)
    x = np.asarray(x, dtype=np.float64)
    n, hop = est.fft_len, est.fft_len // 2
    h = est.gains
    reg = est.regularizer_eps * max(np.mean(np.abs(h) ** 2), np.finfo(float).tiny)
    inv = est.inverse_gains if est.inverse_gains is not None else np.conj(h) / (np.abs(h) ** 2 + reg)
    pad = np.concatenate([np.zeros(hop), x, np.zeros(n + hop - x.size % hop)])
    w = sps.windows.hann(n, sym=False)
    out = np.zeros(pad.size)
    for s in range(0, pad.size - n + 1, hop):
        out[s:s + n] += np.fft.irfft(np.fft.rfft(pad[s:s + n] * w) * inv, n)
    y = out[hop:hop + x.size]
    if isinstance(muffled, SampleBuffer):
        return SampleBuffer(y, muffled.sample_rate_hz, muffled.source_id + "+inverse")
    return y


def snooped_snippets(transcript):
    """Raw samples of every SYNC_SNIPPET frame in a transcript byte string."""
    return [np.frombuffer(m.body, dtype="<f4").astype(np.float64)
            for m in parse_stream(transcript) if m.msg_type is MsgType.SYNC_SNIPPET]


def snooped_commitment(transcript):
    for m in parse_stream(transcript):
        if m.msg_type is MsgType.COMMIT:
            return FuzzyCommitment.from_bytes(m.body)
    return None


def local_reconciliation_check(est_bits, snooped, radius=2, reliability=None, pool=16):
    """Try to open a snooped commitment with estimated bits.

    Direct decommitment first; then a bounded brute force flipping up to
    ``radius`` of the ``pool`` least reliable bits (each flip can cost at
    most one extra byte error), when ``reliability`` is given.

    Returns
    -------
    bool
    """
    bits = est_bits if isinstance(est_bits, BitSequence) else BitSequence(est_bits)
    n = snooped.params.n
    if decommit(snooped, bits) is not None:
        return True
    if reliability is None or radius < 1:
        return False
    rel = np.asarray(reliability)[:8 * n]
    weakest = np.argsort(rel, kind="stable")[:pool]
    base = bits.bits[:8 * n].copy()
    masks = []
    for r in range(1, radius + 1):
        for combo in itertools.combinations(weakest, r):
            b = base.copy()
            b[list(combo)] ^= 1
            masks.append(np.packbits(b))
    return bool(decommit_many(snooped, np.array(masks)).any())


@dataclass
class AttackReport:
    ber_without_attack: float
    ber_with_attack: float
    trials: int
    reconciliation_successes: int
    training_pairs: int = 0
    per_trial: list = field(default_factory=list)

    def to_json(self):
        d = asdict(self)
        return json.dumps(d, indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "ber_without_attack", "ber_with_attack", "legit_ber", "reconciled"])
        for row in self.per_trial:
            w.writerow([row["trial"], f"{row['ber_without_attack']:.6f}", f"{row['ber_with_attack']:.6f}",
                        f"{row['legit_ber']:.6f}", int(row["reconciled"])])
        return buf.getvalue()


def _legit_pair(env):
    names = [name for name, _ in env.devices if name != ADVERSARY]
    if len(names) < 2:
        raise ConfigError("environment needs two legitimate devices besides the adversary")
    return names[0], names[1]


def _observe_session(env, epoch, cfg, shift, key_seed):
    """One pairing session as seen by the adversary.

    The responder records from t=0, the initiator starts ``shift`` samples
    later; the adversary's recording is time-indexed to the initiator.
    """
    bufs = synthesize_environment(env, epoch)
    init, resp = _legit_pair(env)
    n = cfg.n_samples(env.sample_rate_hz)
    a = bufs[init].window(shift, n)
    b = bufs[resp].window(0, n + shift)
    adv = bufs[ADVERSARY].samples[shift:shift + n]
    s_i, s_r = pair_loopback(cfg, a, b, seeded_key_source(key_seed))
    return s_i, s_r, adv


def _ss_bits(x, cfg):
    X = build_observation_matrix(x, cfg.spectral)
    dd = np.diff(np.diff(X.rows, axis=1), axis=0).ravel()
    return to_bits(schurmann_sigg_quantize(X)), np.abs(dd)


def run_attack(env, training_rounds=256, attack_rounds=100, cfg=None, shift=2400, seed=0, radius=2,
               eps=DEFAULT_EPS):
    """Train on snooped snippets, then attack fresh pairings.

    Training sessions use epochs 1000.. and attack sessions epochs 0..,
    so no attacked key comes from a training recording.

    Raises
    ------
    ConfigError
        If ``env`` has no device named ``adversary``.
    InsufficientDataError
        If the protocol leaked no snippets to train on (TREVOR).
    """
    names = [name for name, _ in env.devices]
    if ADVERSARY not in names:
        raise ConfigError(f"environment has no '{ADVERSARY}' device")
    cfg = cfg or PairingConfig(protocol_kind="sync_baseline")
    env = env.replace(duration_s=max(env.duration_s, (cfg.n_samples(env.sample_rate_hz) + shift)
                                     / env.sample_rate_hz))
    leg, adv = [], []
    for r in range(training_rounds):
        s_i, _, adv_rec = _observe_session(env, 1000 + r, cfg, shift, seed * 7919 + 1000 + r)
        for snip in snooped_snippets(s_i.transcript_bytes()):
            leg.append(snip)
            adv.append(adv_rec[:snip.size])
    est = fit_transfer(leg, adv, cfg.spectral.block_len_d, eps)
    rows = []
    for j in range(attack_rounds):
        s_i, s_r, adv_rec = _observe_session(env, j, cfg, shift, seed * 7919 + j)
        ref = s_i.local_bits
        raw_bits, _ = _ss_bits(adv_rec, cfg)
        rec_bits, rel = _ss_bits(apply_inverse(est, adv_rec), cfg)
        c = snooped_commitment(s_i.transcript_bytes())
        ok = c is not None and local_reconciliation_check(rec_bits, c, radius, rel)
        rows.append({
            "trial": j,
            "ber_without_attack": bit_error_rate(ref, raw_bits),
            "ber_with_attack": bit_error_rate(ref, rec_bits),
            "legit_ber": bit_error_rate(ref, s_r.local_bits) if s_r.local_bits is not None else float("nan"),
            "reconciled": bool(ok),
        })
    return AttackReport(
        ber_without_attack=float(np.mean([r["ber_without_attack"] for r in rows])),
        ber_with_attack=float(np.mean([r["ber_with_attack"] for r in rows])),
        trials=attack_rounds,
        reconciliation_successes=int(sum(r["reconciled"] for r in rows)),
        training_pairs=est.training_pairs,
        per_trial=rows,
    )
