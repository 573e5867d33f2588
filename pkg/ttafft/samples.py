"""Sample files, memory images and test input generators.

Text sample files hold one ``index re im`` line per sample with Q1.15
integer components. Binary sample files are interleaved little-endian int16
``re, im`` pairs. Memory images hold one ``index hex32`` line per word.
"""

import logging
from typing import BinaryIO, TextIO

import numpy as np
import pandas as pd

from . import qformat
from .types import FftPlan, SampleVector

logger = logging.getLogger(__name__)

GENERATORS = ("impulse", "dc", "random")
FORMATS = ("text", "binary", "image")
HALF_SCALE = 1 << 14


def read_samples(buffer: TextIO) -> SampleVector:
    """Read a text sample file; indices must run 0..N-1 in order.

    :raise ValueError: For malformed files or out-of-range components.
    """
    try:
        df = pd.read_csv(
            buffer,
            sep=r"\s+",
            header=None,
            names=["index", "re", "im"],
            comment="#",
            dtype="int64",
        )
    except (ValueError, pd.errors.ParserError) as e:
        raise ValueError(f"Malformed sample file: {e}") from e
    if not np.array_equal(df["index"].to_numpy(), np.arange(len(df))):
        raise ValueError("Sample indices must run 0..N-1 in order")
    re, im = df["re"].to_numpy(), df["im"].to_numpy()
    for name, comp in (("re", re), ("im", im)):
        out_of_range = (comp < qformat.FIX16_MIN) | (comp > qformat.FIX16_MAX)
        if out_of_range.any():
            raise ValueError(f"Component {name} outside the 16-bit range")
    logger.debug("read %d samples", len(df))
    return SampleVector(len(df), qformat.pack(re, im))


def write_samples(x: SampleVector, buffer: TextIO) -> None:
    re, im = qformat.unpack(x.data)
    df = pd.DataFrame({"index": np.arange(x.n_points), "re": re, "im": im})
    df.to_csv(buffer, sep=" ", header=False, index=False)


def read_samples_binary(buffer: BinaryIO) -> SampleVector:
    raw = np.frombuffer(buffer.read(), dtype="<i2")
    if len(raw) % 2:
        raise ValueError("Binary sample file has an odd number of int16 values")
    pairs = raw.astype(np.int64).reshape(-1, 2)
    return SampleVector(len(pairs), qformat.pack(pairs[:, 0], pairs[:, 1]))


def write_samples_binary(x: SampleVector, buffer: BinaryIO) -> None:
    re, im = qformat.unpack(x.data)
    buffer.write(np.stack([re, im], axis=1).astype("<i2").tobytes())


def write_memory_image(words, buffer: TextIO) -> None:
    """One ``index hex32`` line per memory word."""
    for idx, word in enumerate(np.asarray(words, dtype=np.int64).tolist()):
        buffer.write(f"{idx} {word & qformat.WORD_MASK:08x}\n")


def read_memory_image(buffer: TextIO) -> np.ndarray:
    words = []
    for lineno, line in enumerate(buffer, start=1):
        if not line.strip():
            continue
        try:
            idx, value = line.split()
            if int(idx) != len(words):
                raise ValueError(f"expected index {len(words)}")
            words.append(int(value, 16) & qformat.WORD_MASK)
        except ValueError as e:
            raise ValueError(f"Malformed memory image line {lineno}: {e}") from e
    return np.array(words, dtype=np.int64)


def read_sample_file(path, fmt: str = "text") -> SampleVector:
    """Read a sample vector stored in one of :data:`FORMATS`.

    :raise ValueError: For an unknown format or a malformed file.
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unknown sample format: {fmt}")
    if fmt == "binary":
        with open(path, "rb") as f:
            return read_samples_binary(f)
    with open(path) as f:
        if fmt == "text":
            return read_samples(f)
        words = read_memory_image(f)
        return SampleVector(len(words), words)


def write_sample_file(x: SampleVector, path, fmt: str = "text") -> None:
    if fmt not in FORMATS:
        raise ValueError(f"Unknown sample format: {fmt}")
    if fmt == "binary":
        with open(path, "wb") as f:
            write_samples_binary(x, f)
    else:
        with open(path, "w") as f:
            if fmt == "text":
                write_samples(x, f)
            else:
                write_memory_image(x.data, f)
    logger.debug("wrote %d samples to %s as %s", x.n_points, path, fmt)


def impulse(plan: FftPlan, amplitude: int = HALF_SCALE) -> SampleVector:
    """``x[0] = amplitude``, zero elsewhere."""
    data = np.zeros(plan.n_points, dtype=np.int64)
    data[0] = qformat.pack(amplitude, 0)
    return SampleVector(plan.n_points, data)


def dc(plan: FftPlan, amplitude: int = HALF_SCALE) -> SampleVector:
    data = np.full(plan.n_points, qformat.pack(amplitude, 0), dtype=np.int64)
    return SampleVector(plan.n_points, data)


def tone(plan: FftPlan, bin_index: int, amplitude: float = 0.5) -> SampleVector:
    """Complex exponential centered on one DFT bin."""
    n = np.arange(plan.n_points)
    z = amplitude * np.exp(2j * np.pi * bin_index * n / plan.n_points)
    return SampleVector(plan.n_points, qformat.from_complex(z))


def random(plan: FftPlan, seed: int = 0) -> SampleVector:
    """Components uniform over the half-scale range [-16384, 16383]."""
    rng = np.random.default_rng(seed)
    re, im = rng.integers(-HALF_SCALE, HALF_SCALE, size=(2, plan.n_points))
    return SampleVector(plan.n_points, qformat.pack(re, im))


def generate(kind: str, plan: FftPlan, seed: int = 0) -> SampleVector:
    """Input vector from one of :data:`GENERATORS`."""
    if kind == "impulse":
        return impulse(plan)
    if kind == "dc":
        return dc(plan)
    if kind == "random":
        return random(plan, seed)
    raise ValueError(f"Unknown input generator: {kind}")
