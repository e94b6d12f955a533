"""Pairing protocols over a reliable, ordered byte stream.

Frames are ``length (4 bytes, big-endian) ‖ type ‖ version ‖ body``.

TREVOR pairing::

    initiator                         responder
    INIT(config hash)       ------>
                            <------   INIT(config hash)
    [both quantize their own buffer]
    COMMIT(E, params, digest) ---->
                            <------   RESULT(accept | reject)

The sync baseline additionally sends SYNC_SNIPPET (the first 0.25 s of
raw samples) right after the INIT exchange; the responder aligns its
own buffer to it before quantizing with Schurmann–Sigg.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import queue
import secrets
import socket
import struct
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, FramingError, InsufficientDataError, ProtocolError, TrevorError
from .quantize import (
    BitSequence,
    quantize_bits,
    schurmann_sigg_quantize,
    to_bits,
)
from .reconcile import FuzzyCommitment, RsParams, commit, decommit
from .spectral import SpectralConfig, build_observation_matrix

log = logging.getLogger(__name__)

VERSION = 1
HEADER = struct.Struct(">IBB")
MAX_BODY = 1 << 20
DEFAULT_TIMEOUT = 10.0
SNIPPET_S = 0.25
MIN_PEAK = 0.5


class MsgType(enum.IntEnum):
    INIT = 1
    SYNC_SNIPPET = 2
    COMMIT = 3
    RESULT = 4


# -- wire format ------------------------------------------------------------

@dataclass(frozen=True)
class WireMessage:
    msg_type: MsgType
    body: bytes = b""
    version: int = VERSION

    def to_bytes(self):
        if len(self.body) > MAX_BODY:
            raise ProtocolError(f"body of {len(self.body)} bytes exceeds the {MAX_BODY}-byte limit")
        return HEADER.pack(len(self.body), int(self.msg_type), self.version) + bytes(self.body)

    @classmethod
    def from_bytes(cls, data):
        """Parse exactly one complete frame."""
        msg, used = parse_frame(data)
        if used != len(data):
            raise FramingError(f"{len(data) - used} trailing bytes after frame")
        return msg


def _check_header(length, mtype, version):
    if length > MAX_BODY:
        raise ProtocolError(f"declared body of {length} bytes exceeds the {MAX_BODY}-byte limit")
    try:
        mtype = MsgType(mtype)
    except ValueError:
        raise ProtocolError(f"unknown message type {mtype}") from None
    if version != VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    return mtype


def parse_frame(data, offset=0):
    """Parse one frame from ``data`` at ``offset``; return (message, bytes used)."""
    data = bytes(data)
    if len(data) - offset < HEADER.size:
        raise FramingError(f"need {HEADER.size} header bytes, have {len(data) - offset}")
    length, mtype, version = HEADER.unpack_from(data, offset)
    mtype = _check_header(length, mtype, version)
    end = offset + HEADER.size + length
    if end > len(data):
        raise FramingError(f"declared length {length}, only {len(data) - offset - HEADER.size} bytes available")
    return WireMessage(mtype, data[offset + HEADER.size:end], version), end - offset


def parse_stream(data):
    """Split a concatenation of frames into messages."""
    out, off = [], 0
    while off < len(data):
        msg, used = parse_frame(data, off)
        out.append(msg)
        off += used
    return out


# -- transports -------------------------------------------------------------

class Transport:
    """Ordered, reliable byte stream with a per-read timeout."""

    def send(self, data):
        raise NotImplementedError

    def recv_exact(self, n, timeout):
        raise NotImplementedError

    def close(self):
        pass

    def send_message(self, msg):
        self.send(msg.to_bytes())

    def recv_message(self, timeout=DEFAULT_TIMEOUT):
        head = self.recv_exact(HEADER.size, timeout)
        length, mtype, version = HEADER.unpack(head)
        mtype = _check_header(length, mtype, version)
        body = self.recv_exact(length, timeout) if length else b""
        return WireMessage(mtype, body, version)


class LoopbackTransport(Transport):
    """One end of an in-process byte pipe; create ends with :func:`loopback_pair`."""

    _EOF = object()

    def __init__(self, inbox, outbox):
        self._in, self._out = inbox, outbox
        self._buf = bytearray()
        self._eof = False

    def send(self, data):
        self._out.put(bytes(data))

    def recv_exact(self, n, timeout):
        deadline = time.monotonic() + timeout
        while len(self._buf) < n:
            if self._eof:
                raise FramingError(f"stream closed with {len(self._buf)} of {n} bytes")
            left = deadline - time.monotonic()
            if left <= 0:
                raise TimeoutError(f"no data within {timeout} s")
            try:
                chunk = self._in.get(timeout=left)
            except queue.Empty:
                raise TimeoutError(f"no data within {timeout} s") from None
            if chunk is self._EOF:
                self._eof = True
            else:
                self._buf += chunk
        out = bytes(self._buf[:n])
        del self._buf[:n]
        return out

    def close(self):
        self._out.put(self._EOF)


def loopback_pair():
    a, b = queue.Queue(), queue.Queue()
    return LoopbackTransport(a, b), LoopbackTransport(b, a)


class TcpTransport(Transport):
    """A connected TCP socket; one pairing per connection."""

    def __init__(self, sock):
        self.sock = sock

    def send(self, data):
        self.sock.sendall(data)

    def recv_exact(self, n, timeout):
        self.sock.settimeout(timeout)
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self.sock.recv(n - len(buf))
            except socket.timeout:
                raise TimeoutError(f"no data within {timeout} s") from None
            if not chunk:
                raise FramingError(f"connection closed with {len(buf)} of {n} bytes")
            buf += chunk
        return bytes(buf)

    def close(self):
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()

    @classmethod
    def connect(cls, host, port, timeout=DEFAULT_TIMEOUT):
        return cls(socket.create_connection((host, port), timeout=timeout))


def parse_tcp_url(url):
    """``tcp://host:port`` -> (host, port)."""
    if not url.startswith("tcp://"):
        raise ConfigError(f"transport must be 'loopback' or tcp://host:port, got {url!r}")
    host, _, port = url[6:].rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bad tcp address {url!r}")
    return host, int(port)


# -- configuration and sessions --------------------------------------------

ROLES = ("initiator", "responder")
KINDS = ("trevor", "sync_baseline")
DEFAULT_RS = {"trevor": RsParams(32, 24), "sync_baseline": RsParams(255, 191)}


@dataclass(frozen=True)
class PairingConfig:
    """Parameters both peers must agree on (role excluded)."""

    spectral: SpectralConfig = SpectralConfig()
    k_eigenvectors: int = 4
    rs: Optional[RsParams] = None
    sample_duration_s: float = 3.0
    role: str = "initiator"
    protocol_kind: str = "trevor"

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.protocol_kind not in KINDS:
            raise ConfigError(f"protocol_kind must be one of {KINDS}, got {self.protocol_kind!r}")
        if not 1 <= self.k_eigenvectors <= self.spectral.n_bins:
            raise ConfigError(f"k_eigenvectors must lie in [1, {self.spectral.n_bins}], got {self.k_eigenvectors}")
        if not self.sample_duration_s > 0:
            raise ConfigError("sample_duration_s must be positive")
        if self.rs is None:
            object.__setattr__(self, "rs", DEFAULT_RS[self.protocol_kind])
        if self.protocol_kind == "trevor":
            avail = 2 * self.k_eigenvectors * self.spectral.n_bins
            if 8 * self.rs.n > avail:
                raise ConfigError(f"RS n={self.rs.n} needs {8 * self.rs.n} bits but trevor yields {avail}")

    def with_role(self, role):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d["role"] = role
        return PairingConfig(**d)

    def n_samples(self, rate):
        return int(round(self.sample_duration_s * rate))

    def config_hash(self):
        """SHA-256 over every agreed parameter (role excluded)."""
        doc = {
            "spectral": asdict(self.spectral),
            "k_eigenvectors": self.k_eigenvectors,
            "rs": [self.rs.n, self.rs.k],
            "sample_duration_s": self.sample_duration_s,
            "protocol_kind": self.protocol_kind,
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).digest()


class State(str, enum.Enum):
    IDLE = "idle"
    SAMPLING = "sampling"
    QUANTIZED = "quantized"
    COMMITTED = "committed"
    VERIFIED = "verified"
    REJECTED = "rejected"


_NEXT = {
    State.IDLE: {State.SAMPLING},
    State.SAMPLING: {State.QUANTIZED},
    State.QUANTIZED: {State.COMMITTED, State.VERIFIED},
    State.COMMITTED: {State.VERIFIED},
}


@dataclass
class TranscriptEntry:
    direction: str
    msg_type: MsgType
    frame: bytes

    def summary(self):
        return f"{self.direction} {self.msg_type.name} {len(self.frame) - HEADER.size}B"


@dataclass
class PairingSession:
    """One side of a pairing attempt."""

    role: str
    peer_id: str = "peer"
    state: State = State.IDLE
    derived_key: Optional[bytes] = None
    transcript: list = field(default_factory=list)
    reason: str = ""
    local_bits: Optional[BitSequence] = field(default=None, repr=False)
    alignment: Optional[tuple] = None

    def advance(self, new):
        if self.state in (State.VERIFIED, State.REJECTED):
            raise ProtocolError(f"session already terminal ({self.state.value})")
        if new is not State.REJECTED and new not in _NEXT.get(self.state, ()):
            raise ProtocolError(f"illegal transition {self.state.value} -> {new.value}")
        log.debug("%s: %s -> %s", self.role, self.state.value, new.value)
        self.state = new

    def reject(self, reason):
        self.reason = reason
        self.derived_key = None
        if self.state is not State.REJECTED:
            self.advance(State.REJECTED)

    def verify(self, key):
        self.advance(State.VERIFIED)
        self.derived_key = bytes(key)

    @property
    def verified(self):
        return self.state is State.VERIFIED

    def transcript_bytes(self):
        return b"".join(e.frame for e in self.transcript)

    def summaries(self):
        return [e.summary() for e in self.transcript]


class _Channel:
    # records every frame in the session transcript
    def __init__(self, transport, session, timeout):
        self.t, self.s, self.timeout = transport, session, timeout

    def send(self, mtype, body=b""):
        frame = WireMessage(mtype, bytes(body)).to_bytes()
        self.t.send(frame)
        self.s.transcript.append(TranscriptEntry("sent", mtype, frame))

    def recv(self, expected):
        msg = self.t.recv_message(self.timeout)
        self.s.transcript.append(TranscriptEntry("recv", msg.msg_type, msg.to_bytes()))
        if msg.msg_type is not expected:
            raise ProtocolError(f"expected {expected.name}, got {msg.msg_type.name}")
        return msg


def _window(signal, cfg, offset=0):
    x = signal.samples if hasattr(signal, "samples") else np.asarray(signal, dtype=np.float64)
    rate = getattr(signal, "sample_rate_hz", 48000)
    n = cfg.n_samples(rate)
    if x.size < offset + n:
        raise InsufficientDataError(f"need {offset + n} samples for {cfg.sample_duration_s} s, got {x.size}")
    return x[offset:offset + n], rate


def _local_bits(x, cfg):
    if cfg.protocol_kind == "trevor":
        return quantize_bits(x, "trevor", cfg.spectral, cfg.k_eigenvectors)
    return to_bits(schurmann_sigg_quantize(build_observation_matrix(x, cfg.spectral)))


def _hello(ch, cfg, session):
    """Exchange config hashes; returns False (and rejects) on mismatch."""
    mine = cfg.config_hash()
    if cfg.role == "initiator":
        ch.send(MsgType.INIT, mine)
        theirs = ch.recv(MsgType.INIT).body
    else:
        theirs = ch.recv(MsgType.INIT).body
        ch.send(MsgType.INIT, mine)
    session.advance(State.SAMPLING)
    if theirs != mine:
        session.reject("config hash mismatch")
        return False
    return True


def _finish(ch, cfg, session, bits, key_source):
    session.local_bits = bits
    session.advance(State.QUANTIZED)
    if cfg.role == "initiator":
        R = key_source(cfg.rs.k)
        c = commit(R, bits, cfg.rs)
        ch.send(MsgType.COMMIT, c.to_bytes())
        session.advance(State.COMMITTED)
        res = ch.recv(MsgType.RESULT).body
        if res == b"\x01":
            session.verify(R)
        else:
            session.reject("peer rejected the commitment")
    else:
        c = FuzzyCommitment.from_bytes(ch.recv(MsgType.COMMIT).body)
        if c.params != cfg.rs:
            ch.send(MsgType.RESULT, b"\x00")
            session.reject("commitment parameters differ from configuration")
            return
        R = decommit(c, bits)
        ch.send(MsgType.RESULT, b"\x01" if R is not None else b"\x00")
        if R is None:
            session.reject("decommitment failed")
        else:
            session.verify(R)


def _run(cfg, signal, transport, body, peer_id, key_source, timeout):
    session = PairingSession(cfg.role, peer_id)
    ch = _Channel(transport, session, timeout)
    key_source = key_source or secrets.token_bytes
    try:
        if _hello(ch, cfg, session):
            body(ch, cfg, session, signal, key_source)
    except TimeoutError as exc:
        session.reject(f"timeout: {exc}")
    except (TrevorError, ValueError) as exc:
        session.reject(f"{type(exc).__name__}: {exc}")
    log.info("%s %s: %s %s", cfg.protocol_kind, cfg.role, session.state.value, session.reason)
    return session


def _trevor_body(ch, cfg, session, signal, key_source):
    x, _ = _window(signal, cfg)
    _finish(ch, cfg, session, _local_bits(x, cfg), key_source)


def run_pairing(cfg, signal, transport, peer_id="peer", key_source=None, timeout=DEFAULT_TIMEOUT):
    """Run one side of a pairing and return the finished session.

    No signal-derived bytes other than the commitment cross the transport
    for ``protocol_kind == 'trevor'``.
    """
    if cfg.protocol_kind == "sync_baseline":
        return run_sync_baseline(cfg, signal, transport, peer_id, key_source, timeout)
    return _run(cfg, signal, transport, _trevor_body, peer_id, key_source, timeout)


# -- sync baseline ----------------------------------------------------------

def align_snippet(snippet, x):
    """Offset in ``x`` maximizing Pearson correlation with ``snippet``.

    Returns
    -------
    (lag, peak) : (int, float)
    """
    s = np.asarray(snippet, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    n = s.size
    if x.size < n:
        raise InsufficientDataError(f"signal ({x.size}) shorter than snippet ({n})")
    s0 = s - s.mean()
    ss = np.sqrt(np.sum(s0 ** 2))
    num = sps.correlate(x, s0, mode="valid", method="fft")
    c1 = np.concatenate([[0.0], np.cumsum(x)])
    c2 = np.concatenate([[0.0], np.cumsum(x * x)])
    win = c1[n:] - c1[:-n]
    win2 = c2[n:] - c2[:-n]
    var = np.maximum(win2 - win * win / n, 0.0)
    den = ss * np.sqrt(var)
    r = np.where(den > 1e-12 * max(ss, 1e-300), num / np.where(den > 0, den, 1.0), 0.0)
    lag = int(np.argmax(r))
    return lag, float(r[lag])


def snippet_len(rate):
    return int(round(SNIPPET_S * rate))


def _sync_body(ch, cfg, session, signal, key_source):
    x = signal.samples if hasattr(signal, "samples") else np.asarray(signal, dtype=np.float64)
    rate = getattr(signal, "sample_rate_hz", 48000)
    m = snippet_len(rate)
    if cfg.role == "initiator":
        win, _ = _window(signal, cfg)
        ch.send(MsgType.SYNC_SNIPPET, win[:m].astype("<f4").tobytes())
    else:
        snip = np.frombuffer(ch.recv(MsgType.SYNC_SNIPPET).body, dtype="<f4")
        if snip.size == 0:
            raise ProtocolError("empty sync snippet")
        lag, peak = align_snippet(snip, x)
        session.alignment = (lag, peak)
        if peak < MIN_PEAK:
            # still consume the commitment so the initiator gets an answer
            ch.recv(MsgType.COMMIT)
            ch.send(MsgType.RESULT, b"\x00")
            session.advance(State.QUANTIZED)
            session.reject(f"alignment failed, correlation peak {peak:.3f} < {MIN_PEAK}")
            return
        win, _ = _window(signal, cfg, lag)
    _finish(ch, cfg, session, _local_bits(win, cfg), key_source)


def run_sync_baseline(cfg, signal, transport, peer_id="peer", key_source=None, timeout=DEFAULT_TIMEOUT):
    """Synchronization-based baseline: leaks a raw snippet, then reconciles.

    The responder's buffer should start no later than the initiator's so
    the snippet can be found in it.
    """
    if cfg.protocol_kind != "sync_baseline":
        cfg = PairingConfig(cfg.spectral, cfg.k_eigenvectors, RsParams(255, 191), cfg.sample_duration_s,
                            cfg.role, "sync_baseline")
    return _run(cfg, signal, transport, _sync_body, peer_id, key_source, timeout)


# -- harness helpers --------------------------------------------------------

def pair_loopback(cfg, initiator_signal, responder_signal, key_source=None, responder_cfg=None,
                  timeout=DEFAULT_TIMEOUT):
    """Run both sides over an in-process loopback pipe.

    Returns
    -------
    (PairingSession, PairingSession)
        Initiator and responder sessions.
    """
    cfg_i = cfg.with_role("initiator")
    cfg_r = (responder_cfg or cfg).with_role("responder")
    ta, tb = loopback_pair()
    box = {}

    def responder():
        box["r"] = run_pairing(cfg_r, responder_signal, tb, "initiator", timeout=timeout)
        tb.close()

    th = threading.Thread(target=responder, daemon=True)
    th.start()
    s_i = run_pairing(cfg_i, initiator_signal, ta, "responder", key_source, timeout)
    ta.close()
    th.join()
    return s_i, box["r"]


def seeded_key_source(seed):
    """Deterministic key generator for reproducible harness runs."""
    rng = np.random.default_rng(seed)
    return lambda k: rng.integers(0, 256, k, dtype=np.uint8).tobytes()
