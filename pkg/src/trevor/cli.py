"""Command-line harness: ``trevor <subcommand> [options]``.

Exit codes: 0 success, 1 negative experimental outcome (pairing
rejected, randomness suite failed), 2 usage or configuration error.
Set TREVOR_LOG (DEBUG, INFO, WARNING, ...) to control logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import socket
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import ConfigError, TrevorError
from .ingest import EnvironmentSpec, synthesize_environment
from .protocol import (
    PairingConfig,
    TcpTransport,
    pair_loopback,
    parse_tcp_url,
    run_pairing,
    seeded_key_source,
)
from .quantize import bit_error_rate
from .svg import cdf_plot, bar_plot, line_plot
from .syncbleed import run_attack

log = logging.getLogger("trevor")

QUANT_CHOICES = {"trevor": ("trevor",), "means": ("means",), "ss": ("schurmann_sigg",), "all": ex.QUANTIZERS}


class UsageError(Exception):
    pass


def _load_env(args, default):
    if args.env:
        try:
            env = EnvironmentSpec.load(args.env)
        except OSError as exc:
            raise ConfigError(f"cannot read environment file: {exc}") from None
        return env.replace(seed=args.seed) if args.seed is not None else env
    return default(0 if args.seed is None else args.seed)


def _out(args, name):
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _ms_to_samples(ms, fs):
    return int(round(ms * fs / 1000.0))


def cmd_pair(args):
    env = _load_env(args, ex.standard_env)
    cfg = PairingConfig()
    fs = env.sample_rate_hz
    n = cfg.n_samples(fs)
    shift = _ms_to_samples(args.shift, fs)
    env = env.replace(duration_s=max(env.duration_s, (n + shift) / fs))
    bufs = synthesize_environment(env)
    names = [name for name, _ in env.devices]
    responder = args.device or names[1]
    if responder not in bufs:
        raise ConfigError(f"no device named {responder!r}; choose from {names}")
    a = bufs[names[0]].window(shift, n)
    b = bufs[responder].window(0, n)
    keys = seeded_key_source(env.seed)
    if args.transport == "loopback":
        s_i, s_r = pair_loopback(cfg, a, b, keys)
        sessions = [("initiator", s_i), ("responder", s_r)]
    else:
        host, port = parse_tcp_url(args.transport)
        if args.role == "responder":
            with socket.create_server((host, port)) as srv:
                srv.settimeout(args.timeout)
                conn, _ = srv.accept()
            t = TcpTransport(conn)
            sessions = [("responder", run_pairing(cfg.with_role("responder"), b, t, "initiator",
                                                  timeout=args.timeout))]
        else:
            t = TcpTransport.connect(host, port, args.timeout)
            sessions = [("initiator", run_pairing(cfg, a, t, "responder", keys, args.timeout))]
        t.close()
    rows = []
    for role, s in sessions:
        print(f"{role}: {s.state.value}" + (f" ({s.reason})" if s.reason else ""))
        rows.append({"role": role, "peer": responder if role == "initiator" else names[0],
                     "state": s.state.value, "reason": s.reason})
    if args.debug and len(sessions) == 2 and all(s.local_bits is not None for _, s in sessions):
        print(f"debug: bit error rate {bit_error_rate(sessions[0][1].local_bits, sessions[1][1].local_bits):.4f}")
    _out(args, "pair.csv").write_text(ex.to_csv(rows, ["role", "peer", "state", "reason"]))
    return 0 if all(s.verified for _, s in sessions) else 1


def cmd_shift_sweep(args):
    env = _load_env(args, ex.standard_env)
    fs = env.sample_rate_hz
    step = _ms_to_samples(args.shift_step, fs)
    top = _ms_to_samples(args.shift_max, fs)
    if step < 1 or top < 0:
        raise UsageError("--shift-step must be positive and --shift-max nonnegative")
    rows = ex.shift_sweep(env, range(0, top + 1, step), args.trials, QUANT_CHOICES[args.quantizer])
    _out(args, "shift_sweep.csv").write_text(ex.to_csv(rows, ["shift_samples", "quantizer", "role_pair", "ber"]))
    series = {}
    for r in rows:
        x, y = series.setdefault(f"{r['quantizer']} {r['role_pair']}", ([], []))
        x.append(r["shift_samples"] / fs * 1000.0)
        y.append(r["ber"])
    _out(args, "shift_sweep.svg").write_text(
        line_plot(series, "Bit error rate vs. relative shift", "shift (ms)", "BER", (0.0, 0.6)))
    for q in QUANT_CHOICES[args.quantizer]:
        worst = max(r["ber"] for r in rows if r["quantizer"] == q and r["role_pair"].endswith(env.devices[1][0]))
        print(f"{q}: worst BER vs {env.devices[1][0]} = {worst:.3f}")
    return 0


def cmd_attack(args):
    env = _load_env(args, ex.attack_env)
    rep = run_attack(env, args.training_rounds, args.trials, seed=0 if args.seed is None else args.seed)
    _out(args, "attack.json").write_text(rep.to_json() + "\n")
    _out(args, "attack_trials.csv").write_text(rep.to_csv())
    cdf_rows = []
    for col in ("ber_without_attack", "ber_with_attack"):
        xs, ps = np.sort([r[col] for r in rep.per_trial]), np.arange(1, rep.trials + 1) / rep.trials
        cdf_rows += [{"series": col, "ber": float(x), "cdf": float(p)} for x, p in zip(xs, ps)]
    _out(args, "attack_cdf.csv").write_text(ex.to_csv(cdf_rows, ["series", "ber", "cdf"]))
    _out(args, "attack_cdf.svg").write_text(cdf_plot(
        {c: [r[c] for r in rep.per_trial] for c in ("ber_without_attack", "ber_with_attack")},
        "Adversary bit error rate", "BER"))
    print(f"without attack {rep.ber_without_attack:.3f}, with attack {rep.ber_with_attack:.3f}, "
          f"reconciled {rep.reconciliation_successes}/{rep.trials}")
    return 0


def cmd_replay(args):
    env = _load_env(args, ex.standard_env)
    rows = ex.replay_trials(env, args.trials)
    _out(args, "replay.csv").write_text(ex.to_csv(rows, ["trial", "condition", "ber", "success"]))
    for cond in ("replay", "control"):
        r = [x for x in rows if x["condition"] == cond]
        print(f"{cond}: mean BER {np.mean([x['ber'] for x in r]):.3f}, "
              f"successes {sum(x['success'] for x in r)}/{len(r)}")
    return 0


def cmd_randomness(args):
    env = _load_env(args, ex.standard_env)
    keys = ex.trevor_keys(env, args.trials)
    from .randomness import run_suite
    rep = run_suite(keys)
    _out(args, "randomness.json").write_text(rep.to_json() + "\n")
    _out(args, "randomness.txt").write_text(rep.to_table())
    rows = [{"key": i, "bits": "".join(map(str, k.bits))} for i, k in enumerate(keys)]
    _out(args, "randomness_keys.csv").write_text(ex.to_csv(rows, ["key", "bits"]))
    prow = [{"key": i, "test": t, "statistic": r.per_test[t][0], "p_value": r.per_test[t][1],
             "pass": r.per_test[t][2]} for i, r in enumerate(rep.reports) for t in r.per_test]
    _out(args, "randomness.csv").write_text(ex.to_csv(prow, ["key", "test", "statistic", "p_value", "pass"]))
    print(rep.to_table(), end="")
    return 0 if rep.passed else 1


def cmd_cosine(args):
    env = _load_env(args, ex.standard_env)
    fs = env.sample_rate_hz
    rows = ex.cosine_table(env, args.trials, _ms_to_samples(args.shift_max, fs), max(1, _ms_to_samples(args.shift_step, fs)))
    _out(args, "cosine.csv").write_text(ex.to_csv(rows, ["device", "representation", "mean_cosine_distance"]))
    _out(args, "cosine.svg").write_text(bar_plot(
        {f"{r['device']}/{r['representation']}": r["mean_cosine_distance"] for r in rows},
        "Mean cosine distance to the reference", "distance"))
    for r in rows:
        print(f"{r['device']:<12}{r['representation']:<10}{r['mean_cosine_distance']:.4f}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--env", help="environment spec JSON (default: built-in synthetic room)")
    common.add_argument("--seed", type=_u64, default=None, help="64-bit seed (overrides the environment's)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--debug", action="store_true", help="print diagnostic values")

    p = argparse.ArgumentParser(prog="trevor", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("pair", parents=[common], help="run one pairing")
    s.add_argument("--transport", default="loopback", help="loopback or tcp://host:port")
    s.add_argument("--role", choices=("initiator", "responder"), default="initiator",
                   help="side to run over tcp")
    s.add_argument("--device", help="responder device id (default: second device)")
    s.add_argument("--shift", type=float, default=50.0, help="relative shift in ms")
    s.add_argument("--timeout", type=float, default=10.0)
    s.set_defaults(func=cmd_pair)

    s = sub.add_parser("shift-sweep", parents=[common], help="BER vs. relative shift")
    s.add_argument("--shift-max", type=float, default=2000.0, help="largest shift in ms")
    s.add_argument("--shift-step", type=float, default=50.0, help="shift step in ms")
    s.add_argument("--trials", type=_positive, default=20)
    s.add_argument("--quantizer", choices=tuple(QUANT_CHOICES), default="all")
    s.set_defaults(func=cmd_shift_sweep)

    s = sub.add_parser("attack", parents=[common], help="SyncBleed against the sync baseline")
    s.add_argument("--trials", type=_positive, default=100, help="attacked pairings")
    s.add_argument("--training-rounds", type=_positive, default=256)
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("replay", parents=[common], help="replay of an earlier recording")
    s.add_argument("--trials", type=_positive, default=100)
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("randomness", parents=[common], help="statistical tests on generated keys")
    s.add_argument("--trials", type=_positive, default=100, help="number of keys")
    s.set_defaults(func=cmd_randomness)

    s = sub.add_parser("cosine", parents=[common], help="cosine distance per representation")
    s.add_argument("--shift-max", type=float, default=100.0, help="largest shift in ms")
    s.add_argument("--shift-step", type=float, default=25.0, help="shift step in ms")
    s.add_argument("--trials", type=_positive, default=5)
    s.set_defaults(func=cmd_cosine)
    return p


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def main(argv=None):
    level = os.environ.get("TREVOR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"trevor {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except TrevorError as exc:
        print(f"trevor {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
