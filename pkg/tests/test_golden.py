import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import ttafft
from ttafft import golden, qformat, samples
from ttafft.types import SampleVector, UndefinedSnrError

from .utils import SMALL_SIZES, random_words, recursive_fft


@pytest.mark.parametrize("n", SMALL_SIZES)
def test_matches_recursive_reference(n):
    plan = ttafft.make_plan(n)
    x = SampleVector(n, random_words(n))
    assert_array_equal(golden.fft_fixed(plan, x).data, recursive_fft(plan, x))


def test_impulse(plan64):
    # 16384 -> 8191 -> 2047 -> 1023 -> 255 -> 127 -> 31 through three stages.
    out = golden.fft_fixed(plan64, samples.impulse(plan64))
    assert_array_equal(out.data, qformat.pack(31, 0))


@pytest.mark.parametrize("n", ttafft.SUPPORTED_SIZES)
def test_dc_single_bin(n):
    plan = ttafft.make_plan(n)
    out = golden.fft_fixed(plan, samples.dc(plan))
    re, im = qformat.unpack(out.data)
    assert re[0] > 0
    assert_array_equal(re[1:], 0)
    assert_array_equal(im, 0)


@pytest.mark.parametrize("n", ttafft.SUPPORTED_SIZES)
def test_snr_floor(n):
    plan = ttafft.make_plan(n)
    for seed in range(100 if n <= 1024 else 20):
        x = samples.random(plan, seed)
        snr = golden.snr_db(golden.fft_fixed(plan, x), golden.dft_float(x), plan)
        assert snr >= golden.SNR_FLOOR_DB[n], f"seed={seed}"


def test_small_transform_against_direct_dft(plan64):
    for seed in range(1000):
        x = samples.random(plan64, seed)
        out = golden.fft_fixed(plan64, x)
        assert_array_equal(out.data, recursive_fft(plan64, x))
        snr = golden.snr_db(out, golden.dft_direct(x), plan64)
        assert snr >= golden.SNR_FLOOR_DB[64], f"seed={seed}"


# Share of output energy in bin 5 for a half-amplitude tone. Truncation noise
# grows against the shrinking signal, so large sizes fall below 0.999.
TONE_BIN_FLOOR = {
    64: 0.9999,
    128: 0.9995,
    256: 0.999,
    512: 0.999,
    1024: 0.998,
    2048: 0.985,
    4096: 0.90,
    8192: 0.83,
    16384: 0.71,
}


@pytest.mark.parametrize("n", ttafft.SUPPORTED_SIZES)
def test_tone_energy_in_bin(n):
    plan = ttafft.make_plan(n)
    x = samples.tone(plan, 5)
    spectrum = np.abs(qformat.to_complex(golden.fft_fixed(plan, x).data)) ** 2
    assert spectrum[5] / spectrum.sum() >= TONE_BIN_FLOOR[n]


def test_float_oracles_agree(plan64):
    x = samples.random(plan64, seed=3)
    assert_allclose(golden.dft_direct(x), golden.dft_float(x), atol=1e-9)


def test_snr_exact_and_undefined(plan64):
    zero = SampleVector(64, np.zeros(64))
    with pytest.raises(UndefinedSnrError):
        golden.snr_db(zero, np.zeros(64), plan64)
    ref = np.ones(64) / plan64.scale * 2**-15
    out = SampleVector(64, np.full(64, qformat.pack(1, 0)))
    assert golden.snr_db(out, ref, plan64) == math.inf


def test_fft_stage_in_place(plan64):
    memory = np.full(64, qformat.pack(64, 0), dtype=np.int64)
    golden.fft_stage(plan64, 0, memory)
    # Stage 0 butterflies see four equal W^0-scaled operands.
    re, _ = qformat.unpack(memory.reshape(-1, 4))
    assert_array_equal(re[:, 0], 31)
    assert_array_equal(re[:, 1:], 0)
