import json
import wave

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trevor.errors import ConfigError, EmptyInputError, FormatError, ParseError
from trevor.ingest import (
    SOURCE_KINDS,
    SOURCE_RMS,
    ChannelModel,
    EnvironmentSpec,
    SampleBuffer,
    latent_source,
    load_csv,
    load_wav,
    synthesize_environment,
)


def write_wav(path, frames, channels=1, rate=48000):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(np.asarray(frames, dtype="<i2").tobytes())


def identity_env(seed=3, devices=None, duration_s=0.5):
    devices = devices or (("a", ChannelModel(snr_db=200.0)), ("b", ChannelModel(snr_db=200.0)))
    return EnvironmentSpec("filtered_noise", duration_s, 48000, seed, devices)


# -- loaders -----------------------------------------------------------------

def test_wav_fixed_point_scaling(tmp_path):
    p = tmp_path / "three.wav"
    write_wav(p, [0, 16384, -32768])
    buf = load_wav(p)
    assert buf.sample_rate_hz == 48000
    np.testing.assert_array_equal(buf.samples, [0.0, 0.5, -1.0])


def test_wav_stereo_keeps_channel_zero(tmp_path):
    p = tmp_path / "stereo.wav"
    write_wav(p, [[100, -1], [200, -2], [300, -3], [400, -4]], channels=2, rate=8000)
    buf = load_wav(p)
    assert len(buf) == 4
    np.testing.assert_array_equal(buf.samples * 32768, [100, 200, 300, 400])


def test_wav_truncated_body(tmp_path):
    p = tmp_path / "cut.wav"
    write_wav(p, np.arange(1000))
    data = p.read_bytes()
    p.write_bytes(data[:-500])
    with pytest.raises(FormatError):
        load_wav(p)


def test_wav_not_a_wav(tmp_path):
    p = tmp_path / "junk.wav"
    p.write_bytes(b"definitely not RIFF")
    with pytest.raises(FormatError):
        load_wav(p)


def test_wav_empty(tmp_path):
    p = tmp_path / "empty.wav"
    write_wav(p, [])
    with pytest.raises(EmptyInputError):
        load_wav(p)


def test_csv_values(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("0.1\n-0.2\n")
    buf = load_csv(p, 31250)
    assert buf.sample_rate_hz == 31250
    np.testing.assert_array_equal(buf.samples, [0.1, -0.2])


def test_csv_crlf(tmp_path):
    p = tmp_path / "x.csv"
    p.write_bytes(b"1\r\n2\r\n")
    np.testing.assert_array_equal(load_csv(p, 10).samples, [1.0, 2.0])


def test_csv_empty(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("")
    with pytest.raises(EmptyInputError):
        load_csv(p, 100)


def test_csv_parse_error_cites_line(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("0.5\nabc\n")
    with pytest.raises(ParseError) as info:
        load_csv(p, 100)
    assert info.value.line == 2
    assert "2" in str(info.value)


def test_csv_rejects_nan(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("0.5\nnan\n")
    with pytest.raises(ParseError):
        load_csv(p, 100)


# -- sample buffer -------------------------------------------------------------

def test_buffer_is_read_only():
    buf = SampleBuffer([1.0, 2.0], 10)
    with pytest.raises(ValueError):
        buf.samples[0] = 5.0


def test_buffer_window_bounds():
    buf = SampleBuffer(np.arange(10.0), 10)
    np.testing.assert_array_equal(buf.window(2, 3).samples, [2, 3, 4])
    with pytest.raises(ConfigError):
        buf.window(8, 3)


def test_buffer_rejects_bad_rate_and_nan():
    with pytest.raises(ConfigError):
        SampleBuffer([1.0], 0)
    with pytest.raises(ConfigError):
        SampleBuffer([np.inf], 10)
    with pytest.raises(EmptyInputError):
        SampleBuffer([], 10)


# -- environment spec ----------------------------------------------------------

def test_spec_needs_two_unique_devices():
    with pytest.raises(ConfigError):
        EnvironmentSpec("filtered_noise", 1.0, 48000, 0, (("a", ChannelModel()),))
    with pytest.raises(ConfigError):
        EnvironmentSpec("filtered_noise", 1.0, 48000, 0, (("a", ChannelModel()), ("a", ChannelModel())))


def test_spec_rejects_unknown_source_and_keys():
    with pytest.raises(ConfigError):
        identity_env().replace(source_kind="whale_song")
    doc = identity_env().to_dict()
    doc["extra"] = 1
    with pytest.raises(ConfigError):
        EnvironmentSpec.from_dict(doc)
    doc = identity_env().to_dict()
    doc["devices"][0]["colour"] = "red"
    with pytest.raises(ConfigError):
        EnvironmentSpec.from_dict(doc)


def test_spec_json_round_trip(tmp_path):
    env = identity_env(devices=(("a", ChannelModel(0.5, 3, (0.25, 0.5), 12.0)), ("b", ChannelModel())))
    p = tmp_path / "env.json"
    p.write_text(env.to_json())
    assert EnvironmentSpec.load(p) == env
    assert json.loads(env.to_json())["devices"][0]["delay_samples"] == 3


def test_channel_validation():
    with pytest.raises(ConfigError):
        ChannelModel(delay_samples=-1)
    with pytest.raises(ConfigError):
        ChannelModel(fir_taps=())


# -- synthesis -----------------------------------------------------------------

def test_identity_channels_match():
    bufs = synthesize_environment(identity_env())
    # noise at 200 dB SNR is 1e-10 of the 0.1 source RMS, so agreement is bounded
    # by a few noise sigmas (about 1e-11 per sample) rather than exactly zero
    np.testing.assert_allclose(bufs["a"].samples, bufs["b"].samples, rtol=0, atol=1e-9)


def test_pure_delay_zero_head():
    env = identity_env(devices=(("a", ChannelModel(snr_db=200.0)),
                                ("b", ChannelModel(delay_samples=10, snr_db=200.0))))
    bufs = synthesize_environment(env)
    a, b = bufs["a"].samples, bufs["b"].samples
    assert np.all(np.abs(b[:10]) < 1e-9)
    np.testing.assert_allclose(b[10:], a[:-10], rtol=0, atol=1e-9)


def test_clean_channel_is_exact_delay_and_gain():
    src = np.arange(1.0, 21.0)
    out = ChannelModel(gain=2.0, delay_samples=3).clean(src)
    np.testing.assert_array_equal(out[:3], 0.0)
    np.testing.assert_array_equal(out[3:], 2.0 * src[:-3])


def test_synthesis_is_deterministic():
    env = identity_env(seed=11)
    a = synthesize_environment(env)
    b = synthesize_environment(env)
    for k in a:
        assert np.array_equal(a[k].samples, b[k].samples)


def test_epochs_give_new_content():
    env = identity_env(seed=5)
    a = synthesize_environment(env)["a"].samples
    b = synthesize_environment(env, epoch=1)["a"].samples
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.1


def test_snr_sets_noise_power():
    env = identity_env(devices=(("a", ChannelModel(snr_db=200.0)), ("b", ChannelModel(snr_db=10.0))), duration_s=2.0)
    bufs = synthesize_environment(env)
    noise = bufs["b"].samples - bufs["a"].samples
    snr = 10 * np.log10(np.mean(bufs["a"].samples ** 2) / np.mean(noise ** 2))
    assert abs(snr - 10.0) < 0.2


def test_too_short_for_filter():
    env = identity_env(devices=(("a", ChannelModel()), ("b", ChannelModel(fir_taps=(1.0,) * 100))),
                       duration_s=50 / 48000)
    with pytest.raises(ConfigError):
        synthesize_environment(env)


@pytest.mark.parametrize("kind", SOURCE_KINDS)
def test_sources_have_fixed_rms(kind):
    s = latent_source(kind, 48000, 48000, seed=1)
    assert s.shape == (48000,)
    assert np.sqrt(np.mean(s ** 2)) == pytest.approx(SOURCE_RMS, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 63), gain=st.floats(0.1, 4.0))
def test_gain_scales_clean_signal(seed, gain):
    env = identity_env(seed=seed, devices=(("a", ChannelModel(snr_db=200.0)),
                                           ("b", ChannelModel(gain=gain, snr_db=200.0))), duration_s=0.05)
    bufs = synthesize_environment(env)
    np.testing.assert_allclose(bufs["b"].samples, gain * bufs["a"].samples, rtol=0, atol=1e-8)
