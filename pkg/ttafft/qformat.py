"""Bit-exact Q1.15 complex arithmetic on 32-bit packed data words.

A data word holds the real part in bits 15..0 and the imaginary part in bits
31..16, each a 16-bit two's-complement number with value ``raw / 2**15``.

Every function accepts Python integers or numpy integer arrays, so the golden
model can run a whole stage at once while the machine works one word at a time.
"""

from dataclasses import dataclass

import numpy as np
from icontract import invariant, require

FIX16_MIN = -32768
FIX16_MAX = 32767
FRAC_BITS = 15
WORD_MASK = 0xFFFFFFFF


@invariant(lambda self: self.rx2 in (0, 1))
@invariant(lambda self: 0 <= self.cnt < 4)
@dataclass(frozen=True)
class CaddSelector:
    """Opcode of the complex adder: butterfly mode and output phase.

    :param rx2: 1 for two radix-2 butterflies, 0 for one radix-4 butterfly.
    :param cnt: Output phase, the adder's internal 2-bit counter.
    """

    rx2: int
    cnt: int

    def next(self) -> "CaddSelector":
        return CaddSelector(self.rx2, (self.cnt + 1) % 4)


def _sext16(x):
    x = x & 0xFFFF
    return (x ^ 0x8000) - 0x8000


def saturate(x):
    """Clamp to the Fix16 range."""
    if isinstance(x, np.ndarray):
        return np.clip(x, FIX16_MIN, FIX16_MAX)
    return min(max(int(x), FIX16_MIN), FIX16_MAX)


def pack(re, im):
    """Pack two Fix16 components into one data word."""
    return ((im & 0xFFFF) << 16) | (re & 0xFFFF)


def unpack(w):
    """Split a data word into its (re, im) Fix16 components."""
    return _sext16(w), _sext16(w >> 16)


def to_complex(w) -> np.ndarray:
    """Floating-point value of data words, for oracles and reports."""
    re, im = unpack(np.asarray(w, dtype=np.int64))
    return (re + 1j * im) / (1 << FRAC_BITS)


def from_complex(z) -> np.ndarray:
    """Quantize complex values to data words, rounding to nearest and saturating."""
    z = np.asarray(z, dtype=complex) * (1 << FRAC_BITS)
    re = saturate(np.round(z.real).astype(np.int64))
    im = saturate(np.round(z.imag).astype(np.int64))
    return pack(re, im)


def conjugate(w):
    """Complex conjugate; negating -32768 saturates to 32767."""
    re, im = unpack(w)
    return pack(re, saturate(-im))


# Each radix-4 output is a + u1*b + u2*c + u3*d with u in {1, -1, i, -i}, encoded
# here as (real factor, imaginary factor) pairs.
_RADIX4_ROWS = (
    ((1, 0), (1, 0), (1, 0)),
    ((0, -1), (-1, 0), (0, 1)),
    ((-1, 0), (1, 0), (-1, 0)),
    ((0, 1), (-1, 0), (0, -1)),
)


def _rotate(re, im, unit):
    # (x + iy) * (ur + i*ui) for a unit ur + i*ui with one nonzero part.
    ur, ui = unit
    if ur:
        return ur * re, ur * im
    return -ui * im, ui * re


@require(lambda sel: sel.cnt in (0, 1, 2, 3))
def cadd(a, b, c, d, sel: CaddSelector):
    """One output of the complex adder.

    Radix-4 mode yields ``(a + b + c + d)``, ``(a - ib - c + id)``,
    ``(a - b + c - d)`` or ``(a + ib - c - id)`` divided by four; radix-2 mode
    yields ``a + b``, ``a - b``, ``c + d`` or ``c - d`` divided by two. Sums are
    formed exactly, shifted right arithmetically and saturated.
    """
    ar, ai = unpack(a)
    br, bi = unpack(b)
    cr, ci = unpack(c)
    dr, di = unpack(d)
    if sel.rx2:
        if sel.cnt < 2:
            xr, xi, yr, yi = ar, ai, br, bi
        else:
            xr, xi, yr, yi = cr, ci, dr, di
        sign = -1 if sel.cnt % 2 else 1
        re = (xr + sign * yr) >> 1
        im = (xi + sign * yi) >> 1
    else:
        ub, uc, ud = _RADIX4_ROWS[sel.cnt]
        re, im = ar, ai
        for (xr, xi), unit in zip(((br, bi), (cr, ci), (dr, di)), (ub, uc, ud)):
            rr, ri = _rotate(xr, xi, unit)
            re = re + rr
            im = im + ri
        re = re >> 2
        im = im >> 2
    return pack(saturate(re), saturate(im))


def cmul(a, w):
    """Complex product ``a * w / 2``.

    The exact Q2.30 products are truncated to their upper half (arithmetic shift
    by 16), then saturated.
    """
    ar, ai = unpack(a)
    wr, wi = unpack(w)
    p_re = ar * wr - ai * wi
    p_im = ar * wi + ai * wr
    return pack(saturate(p_re >> 16), saturate(p_im >> 16))
