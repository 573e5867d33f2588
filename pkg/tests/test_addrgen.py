import icontract
import numpy as np
import pytest
from numpy.testing import assert_array_equal

import ttafft
from ttafft import addrgen

from .utils import SMALL_SIZES

STAGES = [
    (n, s)
    for n in ttafft.SUPPORTED_SIZES
    for s in range(ttafft.make_plan(n).n_stages)
]


@pytest.mark.parametrize("n, stage", STAGES)
def test_stage_is_permutation(n, stage):
    plan = ttafft.make_plan(n)
    addr = addrgen.stage_addresses(plan, stage)
    assert_array_equal(np.sort(addr), np.arange(n))


@pytest.mark.parametrize("n, stage", STAGES)
def test_counter_pairs_alternate_banks(n, stage):
    addr = addrgen.stage_addresses(ttafft.make_plan(n), stage)
    banks = addrgen.bank_of(addr)
    assert np.all(banks[0::2] != banks[1::2])


@pytest.mark.parametrize("n, stage", STAGES)
def test_address_keeps_counter_parity(n, stage):
    addr = addrgen.stage_addresses(ttafft.make_plan(n), stage)
    assert_array_equal(addrgen.bank_of(addr), addrgen.bank_of(np.arange(n)))


def test_operand_address_example():
    assert addrgen.operand_address(ttafft.make_plan(256), 1, 6) == 9


@pytest.mark.parametrize("n, stage", STAGES)
def test_butterfly_groups(n, stage):
    plan = ttafft.make_plan(n)
    addr = addrgen.stage_addresses(plan, stage).reshape(-1, 4)
    if plan.stages[stage] == 4:
        # The four operands differ only in address digit ``stage``.
        span = 1 << (2 * stage)
        offsets = np.array([0, 1, 2, 3]) * span
        assert_array_equal(addr - addr[:, :1], np.tile(offsets, (len(addr), 1)))
    else:
        half = n // 2
        assert_array_equal(addr[:, 1] - addr[:, 0], half)
        assert_array_equal(addr[:, 3] - addr[:, 2], half)


def test_operand_address_matches_vector():
    plan = ttafft.make_plan(128)
    for stage in range(plan.n_stages):
        addr = addrgen.stage_addresses(plan, stage)
        for c in (0, 1, 5, 77, 127):
            assert addrgen.operand_address(plan, stage, c) == addr[c]
    assert addrgen.operand_address(plan, 3, 1) == 64


def test_operand_address_contracts(plan64):
    with pytest.raises(icontract.ViolationError):
        addrgen.operand_address(plan64, 3, 0)
    with pytest.raises(icontract.ViolationError):
        addrgen.operand_address(plan64, 0, 64)


@pytest.mark.parametrize(
    "addr, bank", [(0, 0), (1, 1), (2, 1), (3, 0), (5, 0), (7, 1), (6, 0)]
)
def test_bank_of(addr, bank):
    assert addrgen.bank_of(addr) == bank
    assert addrgen.bank_of(np.array([addr]))[0] == bank


def test_bank_rows(plan64):
    assert addrgen.bank_offset(plan64, 5) == 2
    # Each row holds one address of each bank.
    addr = np.arange(64)
    banks = addrgen.bank_of(addr)
    assert np.all(banks[0::2] != banks[1::2])


def test_split_counter(plan64):
    assert addrgen.split_counter(plan64, (2 << 6) | 5) == (2, 5)


@pytest.mark.parametrize("n", SMALL_SIZES)
def test_load_order(n):
    plan = ttafft.make_plan(n)
    order = addrgen.load_order(plan)
    assert_array_equal(np.sort(order), np.arange(n))
    assert order[0] == 0
    assert order[1] == n // plan.stages[0]


def test_load_order_digit_reversal(plan64):
    order = addrgen.load_order(plan64)
    # Base-4 digit reversal of (d2 d1 d0).
    assert order[0b000110] == 0b100100
    assert order[0b111001] == 0b011011
