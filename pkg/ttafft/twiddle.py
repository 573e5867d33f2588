"""Twiddle factors from a compressed one-octant lookup table.

The table stores ``W^j = exp(-2*pi*i*j / 16384)`` for ``j = 0..2048`` (N/8 + 1
entries for the largest transform). Every other twiddle is rebuilt from a
stored entry by negating and swapping its components.
"""

import functools
from dataclasses import dataclass
from typing import TextIO

import numpy as np
import pandas as pd
from icontract import invariant, require

from . import qformat
from .types import MAX_POINTS, FftPlan

LUT_SIZE = MAX_POINTS // 8 + 1
_QUADRANT = MAX_POINTS // 4
_OCTANT = MAX_POINTS // 8


@invariant(lambda self: len(self.re) == LUT_SIZE and len(self.im) == LUT_SIZE)
@dataclass(frozen=True, eq=False)
class TwiddleLut:
    """Pre-computed first-octant twiddles as Fix16 component arrays."""

    re: np.ndarray
    im: np.ndarray
    n_max: int = MAX_POINTS

    def __len__(self):
        return LUT_SIZE

    @property
    def entries(self) -> np.ndarray:
        return qformat.pack(self.re, self.im)


@invariant(lambda self: 0 <= self.p < self.n_points)
@dataclass(frozen=True)
class TwiddleRequest:
    """Exponent ``p`` of the twiddle ``W_N^p = exp(-2*pi*i*p / N)``."""

    p: int
    n_points: int


def quantize(x) -> np.ndarray:
    """Round to Q1.15 and saturate."""
    return qformat.saturate(np.round(np.asarray(x) * (1 << qformat.FRAC_BITS)))


@functools.lru_cache(maxsize=None)
def build_lut() -> TwiddleLut:
    """Build the 2049-entry twiddle table."""
    angle = -2 * np.pi * np.arange(LUT_SIZE) / MAX_POINTS
    re = quantize(np.cos(angle)).astype(np.int64)
    im = quantize(np.sin(angle)).astype(np.int64)
    re.setflags(write=False)
    im.setflags(write=False)
    return TwiddleLut(re, im)


def fetch(lut: TwiddleLut, p_full):
    """Twiddle ``W_16384^p_full`` rebuilt from the first-octant table.

    Accepts a scalar or an array of exponents; they wrap modulo 16384.
    """
    p_full = np.asarray(p_full, dtype=np.int64) % MAX_POINTS
    quadrant = p_full // _QUADRANT
    r = p_full % _QUADRANT
    mirror = r > _OCTANT
    t = np.where(mirror, _QUADRANT - r, r)
    e_re, e_im = lut.re[t], lut.im[t]
    # W^(4096 - t) = -i * conj(W^t)
    re = np.where(mirror, -e_im, e_re)
    im = np.where(mirror, -e_re, e_im)
    # Each quadrant multiplies by -i: (re, im) -> (im, -re).
    for q in range(1, 4):
        sel = quadrant >= q
        re, im = np.where(sel, im, re), np.where(sel, -re, im)
    words = qformat.pack(re, im)
    return int(words) if words.ndim == 0 else words


@require(lambda req: MAX_POINTS % req.n_points == 0)
def lookup(lut: TwiddleLut, req: TwiddleRequest) -> int:
    """Data word for one twiddle request."""
    return fetch(lut, req.p * (MAX_POINTS // req.n_points))


def lookup_many(lut: TwiddleLut, p: np.ndarray, n_points: int) -> np.ndarray:
    """Vectorized :func:`lookup` for an array of exponents of one size."""
    return fetch(lut, np.asarray(p, dtype=np.int64) * (MAX_POINTS // n_points))


def stage_exponents(plan: FftPlan, stage: int, index):
    """Twiddle exponents for counter indices of one stage (scalar or array).

    In a radix-4 stage, operand slot ``q = index mod 4`` of the butterfly at
    position ``r`` (counter bits ``2s+1..2``) is multiplied by
    ``W_N^(q * r * N / 4**(s+1))``. In the radix-2 stage, the odd member of a
    counter pair gets ``W_N^(index >> 1)``.
    """
    if plan.stages[stage] == 2:
        return (index & 1) * (index >> 1)
    q = index & 3
    r = (index >> 2) & ((1 << (2 * stage)) - 1)
    return q * r * (plan.n_points >> (2 * stage + 2))


@require(lambda plan, stage: 0 <= stage < plan.n_stages)
@require(lambda plan, counter_index: 0 <= counter_index < plan.n_points)
def twiddle_exponent(plan: FftPlan, stage: int, counter_index: int) -> TwiddleRequest:
    """Twiddle applied to the sample entering the butterfly at this counter."""
    exponent = int(stage_exponents(plan, stage, counter_index))
    return TwiddleRequest(exponent, plan.n_points)


@require(lambda plan, stage: 0 <= stage < plan.n_stages)
def rx2_flag(plan: FftPlan, stage: int) -> bool:
    """True in the final stage of an odd-exponent transform."""
    return plan.stages[stage] == 2


def write_lut(lut: TwiddleLut, buffer: TextIO):
    """Dump the table, one ``index re_int im_int`` line per entry."""
    for idx, (re, im) in enumerate(zip(lut.re.tolist(), lut.im.tolist())):
        buffer.write(f"{idx} {re} {im}\n")


def read_lut(buffer: TextIO) -> TwiddleLut:
    """Load a table written by :func:`write_lut`.

    :raise ValueError: If the file is malformed or holds the wrong entry count.
    """
    try:
        df = pd.read_csv(
            buffer,
            sep=r"\s+",
            header=None,
            names=["index", "re", "im"],
            dtype="int64",
        )
    except (ValueError, pd.errors.ParserError) as e:
        raise ValueError(f"Malformed twiddle table: {e}") from e
    if not np.array_equal(df["index"].to_numpy(), np.arange(LUT_SIZE)):
        raise ValueError(f"Twiddle table needs indices 0..{LUT_SIZE - 1} in order")
    return TwiddleLut(df["re"].to_numpy(), df["im"].to_numpy())
