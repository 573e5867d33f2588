import io
import pathlib

import numpy as np
import pytest
from numpy.testing import assert_array_equal

import ttafft
from ttafft import qformat, samples
from ttafft.types import SampleVector

from .utils import assert_samples_equal, random_words

PATH = pathlib.Path(__file__).parent / "testdata"


def test_read_sample_file(plan64):
    with open(PATH / "impulse_64.txt") as f:
        x = samples.read_samples(f)
    assert_samples_equal(x, samples.impulse(plan64))


def test_text_round_trip():
    x = SampleVector(16, random_words(16, bound=1 << 15))
    buffer = io.StringIO()
    samples.write_samples(x, buffer)
    assert buffer.getvalue().splitlines()[0].split()[0] == "0"
    buffer.seek(0)
    assert_samples_equal(samples.read_samples(buffer), x)


@pytest.mark.parametrize(
    "text, match",
    [
        ("0 1 2\n2 3 4\n", "indices"),
        ("0 1\n", "Malformed"),
        ("0 40000 0\n", "16-bit"),
        ("0 a b\n", "Malformed"),
    ],
)
def test_bad_sample_files(text, match):
    with pytest.raises(ValueError, match=match):
        samples.read_samples(io.StringIO(text))


def test_binary_samples():
    x = SampleVector(8, qformat.pack(np.arange(-4, 4), np.arange(8) * 100))
    buffer = io.BytesIO()
    samples.write_samples_binary(x, buffer)
    assert len(buffer.getvalue()) == 8 * 4
    assert buffer.getvalue()[:4] == b"\xfc\xff\x00\x00"
    buffer.seek(0)
    assert_samples_equal(samples.read_samples_binary(buffer), x)
    with pytest.raises(ValueError):
        samples.read_samples_binary(io.BytesIO(b"\x00\x00"))


def test_memory_image():
    words = np.array([0, 0xDEADBEEF, 7])
    buffer = io.StringIO()
    samples.write_memory_image(words, buffer)
    assert buffer.getvalue() == "0 00000000\n1 deadbeef\n2 00000007\n"
    buffer.seek(0)
    assert_array_equal(samples.read_memory_image(buffer), words)
    with pytest.raises(ValueError, match="line 2"):
        samples.read_memory_image(io.StringIO("0 00\n5 00\n"))


def test_generators(plan64):
    assert samples.impulse(plan64).data[0] == qformat.pack(16384, 0)
    assert not samples.impulse(plan64).data[1:].any()
    assert np.all(samples.dc(plan64).data == qformat.pack(16384, 0))
    x = samples.random(plan64, seed=7)
    assert x == samples.random(plan64, seed=7)
    assert x != samples.random(plan64, seed=8)
    re, im = qformat.unpack(x.data)
    assert re.min() >= -16384 and re.max() <= 16383
    assert im.min() >= -16384 and im.max() <= 16383


def test_generate():
    plan = ttafft.make_plan(128)
    assert samples.generate("dc", plan) == samples.dc(plan)
    with pytest.raises(ValueError, match="Unknown input generator"):
        samples.generate("chirp", plan)


@pytest.mark.parametrize("fmt", samples.FORMATS)
def test_sample_file_formats(tmp_path, fmt):
    x = SampleVector(64, random_words(64))
    path = tmp_path / f"x.{fmt}"
    samples.write_sample_file(x, path, fmt)
    assert_samples_equal(samples.read_sample_file(path, fmt), x)


def test_sample_file_unknown_format(tmp_path):
    with pytest.raises(ValueError, match="Unknown sample format"):
        samples.read_sample_file(tmp_path / "x", "hex")
    x = samples.impulse(ttafft.make_plan(64))
    with pytest.raises(ValueError, match="Unknown sample format"):
        samples.write_sample_file(x, tmp_path / "x", "hex")
