"""Common types used in :mod:`ttafft`."""

from dataclasses import dataclass, field

import numpy as np
from icontract import invariant

MIN_LOG2N = 6  #: Smallest supported transform, 64 points.
MAX_LOG2N = 14  #: Largest supported transform, 16384 points.
MAX_POINTS = 1 << MAX_LOG2N


class TtaFftError(Exception):
    """Error in ttafft."""


class DecodeError(TtaFftError):
    """An instruction references a nonexistent port or has malformed bits."""


class StructuralHazardError(TtaFftError):
    """Two moves write the same port in one cycle."""


class MemoryFault(TtaFftError):
    """A memory request is outside the data memory."""


class ConfigurationError(TtaFftError):
    """The machine was set up inconsistently, e.g. a program built for another size."""


class EncodingError(TtaFftError):
    """An instruction field does not fit its encoding."""


class ConnectivityError(TtaFftError):
    """A move uses a socket that is not connected to its bus."""

    def __init__(self, bus: str, socket: str, reason: str = "not connected"):
        super().__init__(f"bus {bus}: socket {socket} {reason}")
        self.bus = bus
        self.socket = socket


class AssemblyError(TtaFftError):
    """Syntax error in assembly source.

    :param line: 1-based line number.
    :param column: 1-based column number.
    """

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UndefinedSnrError(TtaFftError):
    """SNR requested against a reference with zero energy."""


class ProfileError(TtaFftError):
    """Malformed cost profile file."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@invariant(lambda self: self.n_points == 1 << self.log2n)
@invariant(lambda self: MIN_LOG2N <= self.log2n <= MAX_LOG2N)
@invariant(lambda self: len(self.stages) == (self.log2n + 1) // 2)
@invariant(lambda self: all(r == 4 for r in self.stages[:-1]))
@invariant(lambda self: self.stages[-1] == (2 if self.log2n % 2 else 4))
@dataclass(frozen=True)
class FftPlan:
    """Shape of one mixed radix-4/2 transform.

    All stages are radix-4 except a final radix-2 stage when ``log2n`` is odd.

    :param n_points: Transform size N.
    :param log2n: Exponent k with N = 2**k.
    :param stages: Radix of each stage, in execution order.
    """

    n_points: int
    log2n: int
    stages: tuple[int, ...]

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def butterfly_slots_per_stage(self) -> int:
        return self.n_points // 4

    @property
    def kernel_iterations(self) -> int:
        """One linear counter value per cycle: N * S."""
        return self.n_points * self.n_stages

    @property
    def scale(self) -> float:
        """Cumulative fixed-point scale: 1/8 per radix-4 stage, 1/4 per radix-2."""
        result = 1.0
        for radix in self.stages:
            result /= 8 if radix == 4 else 4
        return result


def make_plan(n_points: int) -> FftPlan:
    """Build the :class:`FftPlan` for an N-point transform.

    :param n_points: Transform size, a power of two from 64 to 16384.
    :raise ValueError: If the size is not supported.
    """
    if (
        not isinstance(n_points, (int, np.integer))
        or n_points <= 0
        or n_points & (n_points - 1)
        or not (1 << MIN_LOG2N) <= n_points <= MAX_POINTS
    ):
        raise ValueError(f"Unsupported FFT size: {n_points}")
    log2n = int(n_points).bit_length() - 1
    n_stages = (log2n + 1) // 2
    stages = (4,) * (n_stages - 1) + ((2,) if log2n % 2 else (4,))
    return FftPlan(int(n_points), log2n, stages)


SUPPORTED_SIZES = tuple(1 << k for k in range(MIN_LOG2N, MAX_LOG2N + 1))


@invariant(lambda self: len(self.data) == self.n_points)
@dataclass
class SampleVector:
    """N packed complex samples in natural order.

    :param n_points: Transform size N.
    :param data: Array of N 32-bit :mod:`ttafft.qformat` data words.
    """

    n_points: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.int64) & 0xFFFFFFFF

    def __eq__(self, other):
        if not isinstance(other, SampleVector):
            return NotImplemented
        return self.n_points == other.n_points and np.array_equal(
            self.data, other.data
        )
