"""Utilities for testing."""

import numpy as np
import pytest
from numpy.testing import assert_equal

from ttafft import qformat, twiddle
from ttafft.types import SUPPORTED_SIZES

SMALL_SIZES = [64, 128, 256, 512, 1024]

#: Every supported size; the large ones are marked slow.
ALL_SIZES = [
    n if n in SMALL_SIZES else pytest.param(n, marks=pytest.mark.slow)
    for n in SUPPORTED_SIZES
]


def assert_samples_equal(actual, desired, err_msg=""):
    assert actual.n_points == desired.n_points, err_msg
    assert_equal(actual.data, desired.data, err_msg=err_msg)


def random_words(n, bound=1 << 14, multiple=1):
    """Packed words with components uniform in [-bound, bound) times ``multiple``."""
    re, im = np.random.randint(-bound, bound, size=(2, n)) * multiple
    return qformat.pack(re, im)


def recursive_fft(plan, x):
    """Decimation-in-time recursion built directly on the adder and multiplier.

    The first stage of the processor is the deepest level of the recursion; the
    top level splits by the radix of the last stage.
    """
    lut = twiddle.build_lut()

    def rec(data, radices):
        n = len(data)
        if not radices:
            return list(data)
        radix = radices[-1]
        subs = [rec(data[r::radix], radices[:-1]) for r in range(radix)]
        m = n // radix
        out = [0] * n
        for j in range(m):
            factors = twiddle.lookup_many(lut, np.arange(radix) * j, n)
            inputs = [qformat.cmul(subs[r][j], factors[r]) for r in range(radix)]
            inputs = [int(v) for v in inputs]
            if radix == 4:
                for cnt in range(4):
                    sel = qformat.CaddSelector(0, cnt)
                    out[j + cnt * m] = int(qformat.cadd(*inputs, sel))
            else:
                a, b = inputs
                out[j] = int(qformat.cadd(a, b, a, b, qformat.CaddSelector(1, 0)))
                out[j + m] = int(qformat.cadd(a, b, a, b, qformat.CaddSelector(1, 1)))
        return out

    return np.array(rec(list(x.data), plan.stages), dtype=np.int64)
