import io

import icontract
import numpy as np
import pytest

import ttafft
from ttafft import golden, machine, samples
from ttafft.machine import (
    Machine,
    MachineConfig,
    MemRequest,
    MemorySystem,
    SchedulerMode,
    memory_access,
    run_fft,
)
from ttafft.program import Immediate, InstructionWord, Move, Program, Socket, assemble
from ttafft.types import (
    ConfigurationError,
    DecodeError,
    MemoryFault,
    SampleVector,
    StructuralHazardError,
)

from .utils import ALL_SIZES, assert_samples_equal, random_words

CONFLICT_ASM = """
B0: #3 -> RF.0
B0: #5 -> RF.1
B3: RF.0 -> LSU0.t | B9: RF.1 -> LSU1.t
"""


def read(addr):
    return MemRequest(addr, False, 0)


@pytest.mark.parametrize("n", ALL_SIZES)
@pytest.mark.parametrize("kind", samples.GENERATORS)
def test_matches_functional_model(n, kind):
    plan = ttafft.make_plan(n)
    x = samples.generate(kind, plan)
    out, stats = run_fft(plan, x)
    assert_samples_equal(out, golden.fft_fixed(plan, x))
    assert stats.stall_cycles == 0
    assert stats.total_cycles == 32 + n * plan.n_stages
    assert stats.imem_fetches == 33
    assert stats.loop_fetches == plan.kernel_iterations
    assert stats.n_points == n


@pytest.mark.parametrize("n", ALL_SIZES)
def test_seeded_inputs_match_functional_model(n):
    plan = ttafft.make_plan(n)
    for seed in range(100):
        x = samples.random(plan, seed)
        out, stats = run_fft(plan, x)
        assert_samples_equal(out, golden.fft_fixed(plan, x), err_msg=f"seed={seed}")
        assert stats.stall_cycles == 0


def test_unsigned_draws_match_functional_model():
    plan = ttafft.make_plan(256)
    x = SampleVector(256, random_words(256))
    out, _ = run_fft(plan, x)
    assert_samples_equal(out, golden.fft_fixed(plan, x))


def test_counters_1024():
    plan = ttafft.make_plan(1024)
    _, stats = run_fft(plan, samples.impulse(plan))
    assert stats.total_cycles == 5152
    assert stats.productive_cycles == 5152
    assert stats.bus_transports == 56475
    assert (stats.rf_reads, stats.rf_writes) == (4, 2)
    assert stats.memory_block_accesses == (640, 640, 1280, 2560, 5120, 0, 0, 0, 0)
    assert stats.memory_accesses == 2 * 1024 * 5
    expected = {fu: 5133 for fu in ("AG", "TFG", "LSU0", "LSU1", "CMUL", "CADD", "DLY")}
    expected.update(ADD=5134, SH=2)
    assert stats.fu_triggers == expected
    assert stats.summary() == "cycles=5152 stalls=0 imem_fetches=33 loop_fetches=5120"


def test_small_transform_uses_smallest_block():
    plan = ttafft.make_plan(64)
    _, stats = run_fft(plan, samples.random(plan))
    for bank in stats.block_accesses:
        assert bank[0] == 64 * 3
        assert not any(bank[1:])


def test_scheduler_off_stalls_but_stays_exact():
    plan = ttafft.make_plan(64)
    x = samples.random(plan, seed=5)
    out, stats = run_fft(plan, x, config=MachineConfig(scheduler=SchedulerMode.OFF))
    assert_samples_equal(out, golden.fft_fixed(plan, x))
    assert stats.stall_cycles > 0
    assert stats.total_cycles == 32 + 64 * 3 + stats.stall_cycles


def test_without_loop_buffer():
    plan = ttafft.make_plan(64)
    config = MachineConfig(loop_buffer_words=0)
    _, stats = run_fft(plan, samples.impulse(plan), config=config)
    assert stats.loop_fetches == 0
    assert stats.imem_fetches == 32 + plan.kernel_iterations


@pytest.mark.parametrize("mode", list(SchedulerMode))
def test_same_bank_loads_stall_once(mode):
    core = Machine(assemble(CONFLICT_ASM), MachineConfig(scheduler=mode))
    stats = core.run()
    assert stats.stall_cycles == 1
    assert stats.total_cycles == 4
    assert stats.fu_triggers == {"LSU0": 1, "LSU1": 1}
    assert sum(stats.memory_block_accesses) == 2


def test_empty_program():
    core = Machine(Program())
    core.step()
    stats = core.stats
    assert stats.total_cycles == 1
    assert stats.stall_cycles == 0
    assert stats.imem_fetches == stats.loop_fetches == stats.bus_transports == 0
    assert not stats.fu_triggers
    assert core.halted
    core.step()
    assert core.stats.total_cycles == 1


def test_reset():
    core = Machine(assemble(CONFLICT_ASM))
    assert core.registers == [0] * 8
    core.run()
    assert core.registers[:2] == [3, 5]
    core.reset()
    first = core.stats
    core.reset()
    assert core.stats == first == machine.RunStats()
    assert core.registers == [0] * 8
    assert not core.halted


def test_kernel_repeats():
    prog = assemble(
        ".setup\nB0: #1 -> ADD.o\n.kernel 5\nB0: ADD.r -> ADD.t\n.epilogue\nnop\n"
    )
    stats = Machine(prog).run()
    assert stats.total_cycles == 1 + 5 + 1
    assert stats.imem_fetches == 3
    assert stats.loop_fetches == 5
    assert stats.fu_triggers == {"ADD": 5}


def test_trace():
    buffer = io.StringIO()
    Machine(assemble(CONFLICT_ASM), trace=buffer).run()
    lines = buffer.getvalue().splitlines()
    assert lines == [
        "cycle 0 | B0: #3 -> RF.0",
        "cycle 1 | B0: #5 -> RF.1",
        "cycle 2 | B3: RF.0 -> LSU0.t | B9: RF.1 -> LSU1.t | lock",
    ]


def test_structural_hazard():
    word = InstructionWord.of(
        [
            Move("B0", Immediate(1), Socket("SH", "t")),
            Move("B1", Socket("RF", "1"), Socket("SH", "t")),
        ]
    )
    with pytest.raises(StructuralHazardError):
        Machine(Program(setup=(word,))).step()


def test_unknown_port():
    word = InstructionWord.of([Move("B0", Immediate(1), Socket("ADD", "x"))])
    with pytest.raises(DecodeError):
        Machine(Program(setup=(word,))).step()


def test_program_mismatch(plan64, plan128):
    prog = ttafft.gen_fft_program(plan128)
    with pytest.raises(ConfigurationError):
        run_fft(plan64, samples.impulse(plan64), program=prog)
    with pytest.raises(ConfigurationError):
        run_fft(plan64, samples.impulse(plan128))


def test_config_invariants():
    with pytest.raises(icontract.ViolationError):
        MachineConfig(add_latency=0)
    assert MachineConfig().latencies()["DLY"] == 11


def test_memory_access_banks():
    sys = MemorySystem()
    _, lock = memory_access(sys, [read(2), read(5)])
    assert not lock
    _, lock = memory_access(sys, [read(3), read(5)])
    assert lock


def test_memory_access_data_and_blocks():
    sys = MemorySystem()
    memory_access(sys, [MemRequest(9, True, 0, data=0x12345678)])
    assert memory_access(sys, [read(9)])[0] == [0x12345678]
    sys = MemorySystem()
    for i in range(1000):
        memory_access(sys, [read(i % 32)])
    assert sys.block_accesses[:, 0].sum() == 1000
    assert not sys.block_accesses[:, 1:].any()


def test_memory_fault():
    with pytest.raises(MemoryFault):
        memory_access(MemorySystem(), [read(16384)])


def test_memory_blocks():
    assert sum(machine.BLOCK_ROWS) == 8192
    rows = (0, 31, 32, 63, 64, 8191)
    assert [machine.block_of(r) for r in rows] == [0, 0, 1, 1, 2, 8]


def test_memory_image():
    sys = MemorySystem()
    words = np.arange(100) * 3
    sys.load(words)
    np.testing.assert_array_equal(sys.image(100), words)


def test_complex_adder_timing():
    unit = machine.ComplexAdder("CADD", 3)
    w = ttafft.pack(4, 0)
    for cycle in range(4):
        unit.write("t", w, cycle)
    assert unit.read("r", 5) == 0
    assert unit.read("r", 6) == ttafft.pack(4, 0)
    assert unit.read("r", 7) == 0
    assert unit.read("r", 100) == 0


def test_delay_line():
    unit = machine.DelayLine("DLY", 11)
    unit.write("t", 7, 10)
    assert unit.read("r", 20) == 0
    assert unit.read("r", 21) == 7
