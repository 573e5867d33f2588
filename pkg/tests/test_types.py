import icontract
import numpy as np
import pytest

import ttafft
from ttafft import FftPlan, SampleVector


@pytest.mark.parametrize(
    "n, stages",
    [
        (64, (4, 4, 4)),
        (128, (4, 4, 4, 2)),
        (1024, (4, 4, 4, 4, 4)),
        (2048, (4, 4, 4, 4, 4, 2)),
        (16384, (4,) * 7),
    ],
)
def test_make_plan(n, stages):
    plan = ttafft.make_plan(n)
    assert plan.stages == stages
    assert plan.n_stages == len(stages)
    assert plan.kernel_iterations == n * len(stages)
    assert plan.butterfly_slots_per_stage == n // 4


@pytest.mark.parametrize("n", [0, 32, 100, 1000, 32768, -64, 64.0])
def test_make_plan_unsupported(n):
    with pytest.raises(ValueError, match="Unsupported FFT size"):
        ttafft.make_plan(n)


def test_plan_scale():
    assert ttafft.make_plan(64).scale == 1 / 512
    assert ttafft.make_plan(128).scale == 1 / 2048


def test_plan_invariants():
    with pytest.raises(icontract.ViolationError):
        FftPlan(64, 6, (4, 4))
    with pytest.raises(icontract.ViolationError):
        FftPlan(128, 7, (4, 4, 4, 4))


def test_sample_vector():
    x = SampleVector(2, np.array([-1, 5]))
    assert x.data.tolist() == [0xFFFFFFFF, 5]
    assert x == SampleVector(2, [0xFFFFFFFF, 5])
    assert x != SampleVector(2, [0, 5])
    with pytest.raises(icontract.ViolationError):
        SampleVector(3, [0, 0])


def test_errors():
    e = ttafft.AssemblyError("bad operand", 3, 7)
    assert (e.line, e.column) == (3, 7)
    assert isinstance(e, ttafft.TtaFftError)
    e = ttafft.ConnectivityError("B7", "AG.t")
    assert "B7" in str(e) and "AG.t" in str(e)
