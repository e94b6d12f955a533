"""Signal ingestion: WAV/CSV loaders and a seeded multi-device simulator.

Every device in a simulated environment hears the same latent source
through its own channel (gain, FIR filter, integer delay, white noise),
which is enough to reproduce the legitimate / medium / adversary
placements used throughout the evaluation.
"""

from __future__ import annotations

import json
import wave
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, EmptyInputError, FormatError, ParseError

SOURCE_KINDS = ("filtered_noise", "harmonic_mixture", "ar_process")

# RMS level of every latent source before channel gain
SOURCE_RMS = 0.1

# stable order-4 AR polynomial with two resonances (about 1.9 kHz and 5.5 kHz at 48 kHz)
AR_COEFFS = (1.0, -2.2137, 2.9403, -2.1697, 0.9606)


@dataclass(frozen=True)
class SampleBuffer:
    """A device's time-domain measurement.

    Parameters
    ----------
    samples : array_like
        Real amplitudes, nominally in [-1, 1].
    sample_rate_hz : int
        Sampling rate.
    source_id : str
        Short label naming where the samples came from.
    """

    samples: np.ndarray
    sample_rate_hz: int
    source_id: str = ""

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).ravel()
        if x.size < 1:
            raise EmptyInputError("sample buffer is empty")
        if not np.all(np.isfinite(x)):
            raise ConfigError("sample buffer contains NaN or Inf")
        if int(self.sample_rate_hz) < 1:
            raise ConfigError(f"sample_rate_hz must be >= 1, got {self.sample_rate_hz}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz

    def window(self, start, length):
        """Return ``length`` samples starting at ``start`` as a new buffer."""
        if start < 0 or length < 1 or start + length > self.samples.size:
            raise ConfigError(
                f"window [{start}, {start + length}) outside buffer of {self.samples.size}"
            )
        return SampleBuffer(self.samples[start:start + length], self.sample_rate_hz, self.source_id)


@dataclass(frozen=True)
class ChannelModel:
    """Propagation from the latent source to one device.

    The device observes ``gain * (fir_taps * s)`` delayed by
    ``delay_samples`` (zero head, same length) plus white Gaussian noise
    at ``snr_db`` relative to the filtered signal power.
    """

    gain: float = 1.0
    delay_samples: int = 0
    fir_taps: tuple = (1.0,)
    snr_db: float = 200.0

    def __post_init__(self):
        taps = tuple(float(t) for t in self.fir_taps)
        if not taps or not any(t != 0.0 for t in taps):
            raise ConfigError("fir_taps must be nonempty with at least one nonzero tap")
        if not all(np.isfinite(taps)):
            raise ConfigError("fir_taps must be finite")
        if int(self.delay_samples) != self.delay_samples or self.delay_samples < 0:
            raise ConfigError(f"delay_samples must be a nonnegative integer, got {self.delay_samples}")
        if not np.isfinite(self.gain) or not np.isfinite(self.snr_db):
            raise ConfigError("gain and snr_db must be finite")
        object.__setattr__(self, "fir_taps", taps)
        object.__setattr__(self, "delay_samples", int(self.delay_samples))
        object.__setattr__(self, "gain", float(self.gain))
        object.__setattr__(self, "snr_db", float(self.snr_db))

    def clean(self, source):
        """Filtered, scaled and delayed source without noise."""
        y = self.gain * sps.lfilter(self.fir_taps, [1.0], source)
        d = self.delay_samples
        if d:
            y = np.concatenate([np.zeros(min(d, y.size)), y[:max(y.size - d, 0)]])
        return y

    def apply(self, source, rng):
        """Observe ``source`` through this channel using noise from ``rng``."""
        y = self.clean(source)
        p = np.mean(y ** 2)
        sigma = np.sqrt(p / 10.0 ** (self.snr_db / 10.0))
        return y + sigma * rng.standard_normal(y.size)


@dataclass(frozen=True)
class EnvironmentSpec:
    """A seeded synthetic environment shared by two or more devices."""

    source_kind: str
    duration_s: float
    sample_rate_hz: int
    seed: int
    devices: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.source_kind not in SOURCE_KINDS:
            raise ConfigError(f"unknown source_kind {self.source_kind!r}; expected one of {SOURCE_KINDS}")
        if not (np.isfinite(self.duration_s) and self.duration_s > 0):
            raise ConfigError(f"duration_s must be positive, got {self.duration_s}")
        if int(self.sample_rate_hz) != self.sample_rate_hz or self.sample_rate_hz < 1:
            raise ConfigError(f"sample_rate_hz must be a positive integer, got {self.sample_rate_hz}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        devs = tuple((str(name), ch) for name, ch in self.devices)
        if len(devs) < 2:
            raise ConfigError("an environment needs at least 2 devices")
        names = [name for name, _ in devs]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate device ids in {names}")
        for name, ch in devs:
            if not isinstance(ch, ChannelModel):
                raise ConfigError(f"device {name!r} has no ChannelModel")
        object.__setattr__(self, "devices", devs)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "duration_s", float(self.duration_s))

    @property
    def n_samples(self):
        return int(round(self.duration_s * self.sample_rate_hz))

    def device(self, device_id):
        for name, ch in self.devices:
            if name == device_id:
                return ch
        raise ConfigError(f"no device named {device_id!r}")

    def replace(self, **changes):
        fields = dict(source_kind=self.source_kind, duration_s=self.duration_s,
                      sample_rate_hz=self.sample_rate_hz, seed=self.seed, devices=self.devices)
        fields.update(changes)
        return EnvironmentSpec(**fields)

    def to_dict(self):
        return {
            "source_kind": self.source_kind,
            "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz,
            "seed": self.seed,
            "devices": [
                {
                    "device_id": name,
                    "gain": ch.gain,
                    "delay_samples": ch.delay_samples,
                    "fir_taps": list(ch.fir_taps),
                    "snr_db": ch.snr_db,
                }
                for name, ch in self.devices
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("environment document must be a JSON object")
        _check_keys(doc, {"source_kind", "duration_s", "sample_rate_hz", "seed", "devices"}, "environment")
        if not isinstance(doc["devices"], list):
            raise ConfigError("devices must be a list")
        devices = []
        for i, d in enumerate(doc["devices"]):
            if not isinstance(d, dict):
                raise ConfigError(f"devices[{i}] must be an object")
            _check_keys(d, {"device_id", "gain", "delay_samples", "fir_taps", "snr_db"}, f"devices[{i}]")
            ch = ChannelModel(gain=d["gain"], delay_samples=d["delay_samples"],
                              fir_taps=tuple(d["fir_taps"]), snr_db=d["snr_db"])
            devices.append((d["device_id"], ch))
        return cls(source_kind=doc["source_kind"], duration_s=doc["duration_s"],
                   sample_rate_hz=doc["sample_rate_hz"], seed=doc["seed"], devices=tuple(devices))

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"environment is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text())


def _check_keys(doc, expected, what):
    unknown = set(doc) - expected
    if unknown:
        raise ConfigError(f"{what}: unknown keys {sorted(unknown)}")
    missing = expected - set(doc)
    if missing:
        raise ConfigError(f"{what}: missing keys {sorted(missing)}")


# -- file loaders -----------------------------------------------------------

def load_wav(path):
    """Read a 16-bit PCM WAV file, keeping channel 0 only.

    Samples are divided by 32768 so that full scale maps to [-1, 1).
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as w:
            nch, width, rate, nframes = w.getnchannels(), w.getsampwidth(), w.getframerate(), w.getnframes()
            if width != 2:
                raise FormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit samples")
            raw = w.readframes(nframes)
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    if nframes == 0:
        raise EmptyInputError(f"{path}: no audio frames")
    if len(raw) < nframes * nch * 2:
        raise FormatError(f"{path}: truncated body, {len(raw)} of {nframes * nch * 2} bytes")
    pcm = np.frombuffer(raw, dtype="<i2").reshape(nframes, nch)[:, 0]
    return SampleBuffer(pcm.astype(np.float64) / 32768.0, rate, path.stem)


def load_csv(path, sample_rate_hz):
    """Read one real value per line (LF or CRLF)."""
    path = Path(path)
    lines = path.read_text().splitlines()
    values = []
    for i, line in enumerate(lines, start=1):
        try:
            v = float(line.strip())
        except ValueError:
            raise ParseError(f"not a number: {line!r}", i) from None
        if not np.isfinite(v):
            raise ParseError(f"non-finite value: {line!r}", i)
        values.append(v)
    if not values:
        raise EmptyInputError(f"{path}: no samples")
    return SampleBuffer(np.array(values), sample_rate_hz, path.stem)


# -- latent sources ---------------------------------------------------------

def _filtered_noise(n, fs, rng):
    sos = sps.butter(4, min(4000.0, 0.45 * fs), fs=fs, output="sos")
    return sps.sosfilt(sos, rng.standard_normal(n))


def _ar_process(n, fs, rng):
    burn = 4096
    x = sps.lfilter([1.0], AR_COEFFS, rng.standard_normal(n + burn))
    return x[burn:]


def _formant_tone(n, fs, rng, f0, center, width_oct=0.5, floor=0.05):
    # periodic harmonic tone whose partials follow a log-gaussian formant
    h = np.arange(1, int(0.45 * fs / f0) + 1)
    f = f0 * h
    amps = np.exp(-np.log2(f / center) ** 2 / (2 * width_oct ** 2)) + floor / h
    amps *= rng.uniform(0.5, 1.0, h.size)
    phases = rng.uniform(0.0, 2 * np.pi, h.size)
    spec = np.zeros(n // 2 + 1, dtype=complex)
    idx = np.minimum(np.round(f * n / fs).astype(int), n // 2)
    np.add.at(spec, idx, amps * np.exp(1j * phases))
    tone = np.fft.irfft(spec, n)
    return tone / np.sqrt(np.mean(tone ** 2))


def _harmonic_mixture(n, fs, rng, n_voices=8, note_s=0.1, ratio=0.85):
    """Eight harmonic voices playing a looped bar of decaying notes.

    Each voice has its own pitch and formant. The bar (4 to 8 note slots)
    repeats for the whole buffer, which gives the repetitive spectral
    pattern that music-like signals have.
    """
    n_notes = int(rng.integers(4, 9))
    slot = max(1, int(note_s * fs))
    weights = ratio ** np.arange(n_voices)
    order = rng.choice(n_voices, n_notes, p=weights / weights.sum())
    levels = rng.uniform(0.6, 1.0, n_notes)
    decay = np.exp(-np.arange(slot) / (0.6 * slot))
    out = np.zeros(n)
    for v in range(n_voices):
        f0 = np.exp(rng.uniform(np.log(80.0), np.log(1500.0)))
        center = np.exp(rng.uniform(np.log(200.0), np.log(min(12000.0, 0.45 * fs))))
        tone = _formant_tone(n, fs, rng, f0, center)
        bar = np.zeros(slot * n_notes)
        for i in np.flatnonzero(order == v):
            bar[i * slot:(i + 1) * slot] = levels[i] * decay
        out += np.resize(bar, n) * tone
    return out


_SOURCES = {
    "filtered_noise": _filtered_noise,
    "harmonic_mixture": _harmonic_mixture,
    "ar_process": _ar_process,
}


def latent_source(kind, n, fs, seed, epoch=0):
    """Generate the shared source signal, scaled to ``SOURCE_RMS``."""
    if kind not in _SOURCES:
        raise ConfigError(f"unknown source_kind {kind!r}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch, 0]))
    s = _SOURCES[kind](n, fs, rng)
    rms = np.sqrt(np.mean(s ** 2))
    return s * (SOURCE_RMS / rms) if rms > 0 else s


def _device_rng(seed, epoch, device_id):
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, 1, zlib.crc32(device_id.encode())]))


def synthesize_environment(spec, epoch=0):
    """Render every device's buffer for ``spec``.

    Parameters
    ----------
    spec : EnvironmentSpec
    epoch : int
        Recording epoch. Epoch 0 is the live session; other epochs are
        different recordings (new source content) of the same room with
        the same channels, as used by the replay experiment.

    Returns
    -------
    dict of str -> SampleBuffer
    """
    n = spec.n_samples
    longest = max(len(ch.fir_taps) for _, ch in spec.devices)
    if n < longest:
        raise ConfigError(f"duration covers {n} samples, shorter than a {longest}-tap filter")
    s = latent_source(spec.source_kind, n, spec.sample_rate_hz, spec.seed, epoch)
    out = {}
    for name, ch in spec.devices:
        y = ch.apply(s, _device_rng(spec.seed, epoch, name))
        out[name] = SampleBuffer(y, spec.sample_rate_hz, name)
    return out
