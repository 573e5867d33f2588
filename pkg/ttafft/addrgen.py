"""Butterfly operand addressing and parity-selected memory banks.

Addresses come from a linear counter by a bit-pair permutation: in radix-4 stage
``s`` the counter's lowest bit pair is inserted at bit ``2s`` and the bits it
displaces move down two places. In the final radix-2 stage of an odd-exponent
transform the lowest counter bit becomes the most significant address bit.
"""

import numpy as np
from icontract import require

from .types import FftPlan

N_BANKS = 2


def _permute(plan: FftPlan, stage: int, index):
    if plan.stages[stage] == 2:
        k = plan.log2n
        return ((index & 1) << (k - 1)) | (index >> 1)
    pos = 2 * stage
    high = (index >> (pos + 2)) << (pos + 2)
    pair = index & 3
    middle = (index >> 2) & ((1 << pos) - 1)
    return high | (pair << pos) | middle


@require(lambda plan, stage: 0 <= stage < plan.n_stages)
@require(lambda plan, counter_index: 0 <= counter_index < plan.n_points)
def operand_address(plan: FftPlan, stage: int, counter_index: int) -> int:
    """Data memory address read (and later written) for one counter value.

    :param plan: Transform shape.
    :param stage: Stage number, 0 <= stage < S.
    :param counter_index: The ``index`` field of the linear counter.
    :return: Word address in [0, N).
    """
    return int(_permute(plan, stage, counter_index))


def stage_addresses(plan: FftPlan, stage: int) -> np.ndarray:
    """Addresses for every counter value of a stage, in counter order."""
    return _permute(plan, stage, np.arange(plan.n_points, dtype=np.int64))


def split_counter(plan: FftPlan, value: int) -> tuple[int, int]:
    """Split a linear counter into its (stage, index) fields."""
    return value >> plan.log2n, value & (plan.n_points - 1)


def bank_of(addr):
    """Memory bank selected by the parity (popcount mod 2) of an address."""
    if isinstance(addr, np.ndarray):
        parity = np.zeros_like(addr)
        x = addr.copy()
        while x.any():
            parity ^= x & 1
            x = x >> 1
        return parity
    return int(addr).bit_count() & 1


@require(lambda plan, addr: 0 <= addr < plan.n_points)
def bank_offset(plan: FftPlan, addr: int) -> int:
    """Row of an address within its bank.

    Addresses ``2j`` and ``2j + 1`` differ in parity, so each row holds exactly
    one address of each bank.
    """
    return addr >> 1


def load_order(plan: FftPlan) -> np.ndarray:
    """Mixed-radix digit reversal placing natural-order input into memory.

    ``memory[a] = x[order[a]]``. The digit consumed by stage 0 is the least
    significant address digit and the most significant input-index digit, so
    the in-place transform leaves the spectrum in natural order.
    """
    addr = np.arange(plan.n_points, dtype=np.int64)
    order = np.zeros_like(addr)
    span = plan.n_points
    for radix in plan.stages:
        span //= radix
        order += (addr % radix) * span
        addr //= radix
    return order
