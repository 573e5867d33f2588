"""Cycle-accurate model of the transport-triggered FFT core.

Every cycle the control unit fetches one instruction word, all source ports of
its moves are read, operand ports are written, then trigger ports start their
unit's operation. A result becomes readable ``latency`` cycles after the
trigger. The two load-store units share a memory of two single-port banks
selected by address parity; a scheduler buffers their requests and pairs reads
with reads and writes with writes. When two issued requests select the same
bank the core is locked for one cycle.
"""

import bisect
import enum
import logging
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import accumulate
from typing import Mapping, Optional, TextIO

import numpy as np
from icontract import invariant, require

from . import addrgen, qformat, twiddle
from .program import (
    NOP,
    UNIT_PORTS,
    Immediate,
    InstructionWord,
    SECTIONS,
    Program,
    Socket,
    format_word,
    gen_fft_program,
)
from .types import (
    ConfigurationError,
    DecodeError,
    FftPlan,
    MAX_POINTS,
    MemoryFault,
    SampleVector,
    StructuralHazardError,
    make_plan,
)

logger = logging.getLogger(__name__)

WORD_MASK = 0xFFFFFFFF
IDLE_ADDRESS = 0x80000000
MEMORY_WORDS = MAX_POINTS
BANK_ROWS = MEMORY_WORDS // addrgen.N_BANKS
BLOCK_ROWS = (32, 32, 64, 128, 256, 512, 1024, 2048, 4096)
_BLOCK_STARTS = np.cumsum((0,) + BLOCK_ROWS[:-1])
RF_REGISTERS = 8

assert sum(BLOCK_ROWS) == BANK_ROWS


class SchedulerMode(enum.Enum):
    """Memory request scheduling: paired (ON) or raw LSU order (OFF)."""

    ON = "on"
    OFF = "off"


@invariant(lambda self: min(self.latencies().values()) >= 1)
@invariant(lambda self: self.loop_buffer_words >= 0)
@dataclass(frozen=True)
class MachineConfig:
    """Unit latencies and control options.

    The defaults give a 13-cycle element pipeline with one new element per
    cycle: reads issue at offset 2 and writes at offset 13, an odd distance, so
    the scheduler always pairs accesses to opposite banks.
    """

    add_latency: int = 1
    shift_latency: int = 1
    ag_latency: int = 2
    tfg_latency: int = 5
    load_latency: int = 3
    cmul_latency: int = 2
    cadd_latency: int = 3
    delay_depth: int = 11
    scheduler: SchedulerMode = SchedulerMode.ON
    loop_buffer_words: int = 1

    def latencies(self) -> dict:
        return {
            "ADD": self.add_latency,
            "SH": self.shift_latency,
            "AG": self.ag_latency,
            "TFG": self.tfg_latency,
            "LSU": self.load_latency,
            "CMUL": self.cmul_latency,
            "CADD": self.cadd_latency,
            "DLY": self.delay_depth,
        }


@dataclass(frozen=True)
class RunStats:
    """Activity counters of one run.

    ``block_accesses[bank][block]`` counts accesses per memory block.
    """

    total_cycles: int = 0
    stall_cycles: int = 0
    imem_fetches: int = 0
    loop_fetches: int = 0
    bus_transports: int = 0
    rf_reads: int = 0
    rf_writes: int = 0
    fu_triggers: Mapping[str, int] = field(default_factory=dict)
    block_accesses: tuple = ((0,) * len(BLOCK_ROWS),) * addrgen.N_BANKS
    n_points: Optional[int] = None

    @property
    def productive_cycles(self) -> int:
        return self.total_cycles - self.stall_cycles

    @property
    def memory_block_accesses(self) -> tuple:
        """Accesses per block, summed over both banks."""
        return tuple(int(sum(col)) for col in zip(*self.block_accesses))

    @property
    def memory_accesses(self) -> int:
        return sum(self.memory_block_accesses)

    def summary(self) -> str:
        return (
            f"cycles={self.total_cycles} stalls={self.stall_cycles} "
            f"imem_fetches={self.imem_fetches} loop_fetches={self.loop_fetches}"
        )


# Memory system


@dataclass(eq=False)
class MemRequest:
    """One LSU access waiting in (or served by) the scheduler."""

    address: int
    is_write: bool
    cycle: int
    data: int = 0
    result: Optional[int] = None


class MemorySystem:
    """Two single-port banks of 8192 rows, each split into growing blocks."""

    def __init__(self):
        self.banks = np.zeros((addrgen.N_BANKS, BANK_ROWS), dtype=np.int64)
        shape = (addrgen.N_BANKS, len(BLOCK_ROWS))
        self.block_accesses = np.zeros(shape, dtype=np.int64)

    def load(self, words) -> None:
        """Store ``words[a]`` at address ``a`` for every a."""
        words = np.asarray(words, dtype=np.int64) & WORD_MASK
        addr = np.arange(len(words), dtype=np.int64)
        self.banks[addrgen.bank_of(addr), addr >> 1] = words

    def image(self, n_words: int) -> np.ndarray:
        """Contents of addresses 0..n_words-1."""
        addr = np.arange(n_words, dtype=np.int64)
        return self.banks[addrgen.bank_of(addr), addr >> 1].copy()


def block_of(row: int) -> int:
    """Block index holding a bank row."""
    return int(np.searchsorted(_BLOCK_STARTS, row, side="right")) - 1


@require(lambda reqs: len(reqs) <= 2)
def memory_access(sys: MemorySystem, reqs) -> tuple[list, bool]:
    """Serve up to two requests.

    Requests to different banks are served in the same cycle. Two requests to
    the same bank lock the core and are served one after the other.

    :return: Read data per request (None for writes) and the lock flag.
    :raise MemoryFault: For an address outside the 16384-word memory.
    """
    for req in reqs:
        if not 0 <= req.address < MEMORY_WORDS:
            raise MemoryFault(f"address {req.address:#x} outside data memory")
    banks = [addrgen.bank_of(req.address) for req in reqs]
    lock = len(banks) == 2 and banks[0] == banks[1]
    responses = []
    for req, bank in zip(reqs, banks):
        row = req.address >> 1
        sys.block_accesses[bank, block_of(row)] += 1
        if req.is_write:
            sys.banks[bank, row] = req.data & WORD_MASK
            responses.append(None)
        else:
            responses.append(int(sys.banks[bank, row]))
    return responses, lock


class RequestScheduler:
    """Buffer reordering LSU requests into read pairs and write pairs.

    With scheduling ON, two buffered reads issue together, else two buffered
    writes, else whatever has waited a cycle. A read is never held past the
    cycle before its result is due. With scheduling OFF requests issue as
    they arrive.
    """

    def __init__(self, mode: SchedulerMode, load_latency: int):
        self.mode = mode
        self.deadline = load_latency - 1
        self.queue: list[MemRequest] = []

    def submit(self, req: MemRequest) -> None:
        self.queue.append(req)

    def select(self, cycle: int, drain: bool = False) -> list[MemRequest]:
        if self.mode is SchedulerMode.OFF or drain:
            issued = self.queue
        else:
            reads = [r for r in self.queue if not r.is_write]
            writes = [r for r in self.queue if r.is_write]
            if len(reads) >= 2:
                issued = reads[:2]
            elif len(writes) >= 2:
                issued = writes[:2]
            else:
                issued = [r for r in self.queue if cycle - r.cycle >= 1]
            issued += [
                r
                for r in reads
                if r not in issued and cycle - r.cycle >= self.deadline
            ]
        self.queue = [r for r in self.queue if r not in issued]
        return issued


# Functional units


@lru_cache(maxsize=None)
def _plan(log2n: int) -> FftPlan:
    try:
        return make_plan(1 << log2n)
    except ValueError as e:
        raise ConfigurationError(f"unit configured with log2(N)={log2n}: {e}") from e


@lru_cache(maxsize=None)
def _address_table(log2n: int) -> np.ndarray:
    plan = _plan(log2n)
    return np.concatenate(
        [addrgen.stage_addresses(plan, s) for s in range(plan.n_stages)]
    )


@lru_cache(maxsize=None)
def _twiddle_table(log2n: int, scale: int):
    plan = _plan(log2n)
    lut = twiddle.build_lut()
    counters = np.arange(plan.n_points, dtype=np.int64)
    words, flags = [], []
    for stage in range(plan.n_stages):
        p = twiddle.stage_exponents(plan, stage, counters) * scale
        words.append(twiddle.fetch(lut, p % MAX_POINTS))
        flags.append(np.full(plan.n_points, int(twiddle.rx2_flag(plan, stage))))
    return np.concatenate(words), np.concatenate(flags), twiddle.fetch(lut, 0)


class Pipe:
    """Result register fed through a pipeline; holds the latest ready value."""

    def __init__(self, initial=0):
        self._pending = deque()
        self._current = initial

    def push(self, ready: int, value) -> None:
        self._pending.append((ready, value))

    def value(self, cycle: int):
        while self._pending and self._pending[0][0] <= cycle:
            self._current = self._pending.popleft()[1]
        return self._current


class FunctionalUnit:
    """Operand registers, trigger ports and result pipes of one unit."""

    def __init__(self, name: str, latency: int = 1):
        self.name = name
        self.latency = latency
        ports = UNIT_PORTS[name]
        self.operands = {p: 0 for p, kind in ports.items() if kind == "operand"}
        self.results = {p: Pipe() for p, kind in ports.items() if kind == "result"}

    def write(self, port: str, value: int, cycle: int) -> None:
        if port in self.operands:
            self.operands[port] = value
        else:
            self.trigger(port, value, cycle)

    def read(self, port: str, cycle: int) -> int:
        return self.results[port].value(cycle)

    def trigger(self, port: str, value: int, cycle: int) -> None:
        raise NotImplementedError


class Adder(FunctionalUnit):
    def trigger(self, port, value, cycle):
        total = (self.operands["o"] + value) & WORD_MASK
        self.results["r"].push(cycle + self.latency, total)


class Shifter(FunctionalUnit):
    def trigger(self, port, value, cycle):
        shifted = (value << (self.operands["o"] & 31)) & WORD_MASK
        self.results["r"].push(cycle + self.latency, shifted)


class AddressGenerator(FunctionalUnit):
    """Maps a linear counter ``stage << log2(N) | index`` to a data address.

    Counters at or beyond the iteration limit yield :data:`IDLE_ADDRESS`.
    """

    def trigger(self, port, value, cycle):
        table = _address_table(self.operands["o"])
        if value >= min(self.operands["lim"], len(table)):
            addr = IDLE_ADDRESS
        else:
            addr = int(table[value])
        self.results["r"].push(cycle + self.latency, addr)


class TwiddleGenerator(FunctionalUnit):
    """Twiddle word and radix-2 flag for a linear counter.

    The exponent is scaled by the ``sc`` operand onto the 16384-point table.
    """

    def trigger(self, port, value, cycle):
        words, flags, unity = _twiddle_table(self.operands["o"], self.operands["sc"])
        if value < len(words):
            w, rx2 = int(words[value]), int(flags[value])
        else:
            w, rx2 = unity, 0
        self.results["r"].push(cycle + self.latency, w)
        self.results["rx2"].push(cycle + self.latency, rx2)


class LoadStoreUnit(FunctionalUnit):
    """``t`` loads from the triggered address, ``st`` stores operand ``o`` there."""

    def __init__(self, name: str, latency: int, scheduler: RequestScheduler):
        super().__init__(name, latency)
        self.scheduler = scheduler

    def trigger(self, port, value, cycle):
        if value == IDLE_ADDRESS:
            return
        if port == "st":
            self.scheduler.submit(MemRequest(value, True, cycle, self.operands["o"]))
            return
        req = MemRequest(value, False, cycle)
        self.scheduler.submit(req)
        self.results["r"].push(cycle + self.latency, req)

    def read(self, port, cycle):
        value = super().read(port, cycle)
        if isinstance(value, MemRequest):
            if value.result is None:
                raise ConfigurationError(
                    f"{self.name}: load result not ready in cycle {cycle}"
                )
            return value.result
        return value


class ComplexMultiplier(FunctionalUnit):
    def trigger(self, port, value, cycle):
        product = qformat.cmul(value, self.operands["o"])
        self.results["r"].push(cycle + self.latency, product)


class ComplexAdder(FunctionalUnit):
    """Serial-input complex adder.

    Four triggers fill the input buffer; the ``rx2`` operand is latched at the
    first. Output ``q`` is readable ``latency + q`` cycles after the fourth.
    """

    def __init__(self, name: str, latency: int):
        super().__init__(name, latency)
        self.buffer = []
        self.rx2 = 0

    def trigger(self, port, value, cycle):
        if not self.buffer:
            self.rx2 = self.operands["rx2"] & 1
        self.buffer.append(value)
        if len(self.buffer) < 4:
            return
        for cnt in range(4):
            out = qformat.cadd(*self.buffer, qformat.CaddSelector(self.rx2, cnt))
            self.results["r"].push(cycle + self.latency + cnt, out)
        self.buffer = []


class DelayLine(FunctionalUnit):
    """Rotating register: the output equals the input ``depth`` cycles earlier."""

    def trigger(self, port, value, cycle):
        self.results["r"].push(cycle + self.latency, value)


class RegisterFile:
    name = "RF"

    def __init__(self):
        self.registers = [0] * RF_REGISTERS

    def read(self, port: str, cycle: int) -> int:
        return self.registers[int(port)]

    def write(self, port: str, value: int, cycle: int) -> None:
        self.registers[int(port)] = value


# Core


class Machine:
    """A core with a loaded program.

    :param program: Instruction memory contents.
    :param config: Latencies and control options; defaults when omitted.
    :param trace: Text stream receiving one ``cycle <n> | moves`` line per cycle.
    """

    def __init__(
        self,
        program: Program,
        config: Optional[MachineConfig] = None,
        trace: Optional[TextIO] = None,
    ):
        self.program = program
        self.config = config or MachineConfig()
        self.trace = trace
        self._words = program.words
        start = program.kernel_start
        self._kernel = (start, start + len(program.kernel))
        self._bounds = list(accumulate(len(getattr(program, s)) for s in SECTIONS[:-1]))
        self.reset()

    def reset(self) -> None:
        """Clear units, memory, control state and counters."""
        cfg = self.config
        self.memory = MemorySystem()
        self.scheduler = RequestScheduler(cfg.scheduler, cfg.load_latency)
        self.units = {
            "ADD": Adder("ADD", cfg.add_latency),
            "SH": Shifter("SH", cfg.shift_latency),
            "AG": AddressGenerator("AG", cfg.ag_latency),
            "TFG": TwiddleGenerator("TFG", cfg.tfg_latency),
            "LSU0": LoadStoreUnit("LSU0", cfg.load_latency, self.scheduler),
            "LSU1": LoadStoreUnit("LSU1", cfg.load_latency, self.scheduler),
            "CMUL": ComplexMultiplier("CMUL", cfg.cmul_latency),
            "CADD": ComplexAdder("CADD", cfg.cadd_latency),
            "DLY": DelayLine("DLY", cfg.delay_depth),
            "RF": RegisterFile(),
        }
        self.pc = 0
        self.cycle = 0
        self.halted = False
        self._iterations_left = self.program.kernel_iterations
        self._loop_filled = False
        self._phase = None
        self._counts = Counter()
        self._triggers = Counter()

    @property
    def registers(self) -> list:
        return list(self.units["RF"].registers)

    @property
    def stats(self) -> RunStats:
        c = self._counts
        return RunStats(
            total_cycles=c["total_cycles"],
            stall_cycles=c["stall_cycles"],
            imem_fetches=c["imem_fetches"],
            loop_fetches=c["loop_fetches"],
            bus_transports=c["bus_transports"],
            rf_reads=c["rf_reads"],
            rf_writes=c["rf_writes"],
            fu_triggers=dict(self._triggers),
            block_accesses=tuple(
                tuple(int(v) for v in row) for row in self.memory.block_accesses
            ),
            n_points=self.program.n_points,
        )

    def _section(self, pc: int) -> str:
        return SECTIONS[bisect.bisect_right(self._bounds, pc)]

    def _fetch(self) -> Optional[InstructionWord]:
        start, end = self._kernel
        if self.pc == start and start < end and self.program.kernel_iterations == 0:
            self.pc = end
        if self.pc >= len(self._words):
            return None
        section = self._section(self.pc)
        if section != self._phase:
            logger.debug("cycle %d: %s", self.cycle, section)
            self._phase = section
        word = self._words[self.pc]
        if start <= self.pc < end and end - start <= self.config.loop_buffer_words:
            if not self._loop_filled:
                self._counts["imem_fetches"] += end - start
                self._loop_filled = True
            self._counts["loop_fetches"] += 1
        else:
            self._counts["imem_fetches"] += 1
        self.pc += 1
        if self.pc == end and self._iterations_left > 1:
            self._iterations_left -= 1
            self.pc = start
        return word

    def _source(self, src) -> int:
        if isinstance(src, Immediate):
            return src.value & WORD_MASK
        if src.unit == "RF":
            self._counts["rf_reads"] += 1
        elif src.kind != "result":
            raise DecodeError(f"{src} is not readable")
        return self.units[src.unit].read(src.port, self.cycle)

    def _sink(self, dst: Socket, value: int) -> None:
        if dst.unit == "RF":
            self._counts["rf_writes"] += 1
        elif dst.kind == "result":
            raise DecodeError(f"{dst} is not writable")
        elif dst.kind == "trigger":
            self._triggers[dst.unit] += 1
        self.units[dst.unit].write(dst.port, value, self.cycle)

    def _execute(self, word: InstructionWord) -> None:
        moves = word.moves
        written = set()
        for move in moves:
            for sock in (move.src, move.dst):
                if isinstance(sock, Socket) and not sock.exists:
                    raise DecodeError(f"move {move} references unknown port {sock}")
            if move.dst in written:
                raise StructuralHazardError(
                    f"cycle {self.cycle}: {move.dst} written twice"
                )
            written.add(move.dst)
        # All sources are read before any port is written; operands before triggers.
        values = [self._source(move.src) for move in moves]
        for move, value in sorted(zip(moves, values), key=lambda mv: mv[0].triggers):
            self._sink(move.dst, value)
        self._counts["bus_transports"] += len(moves)

    def _serve(self, issued: list) -> int:
        stalls = 0
        for i in range(0, len(issued), 2):
            pair = issued[i : i + 2]
            responses, lock = memory_access(self.memory, pair)
            for req, data in zip(pair, responses):
                req.result = data
            if i:
                stalls += 1
            if lock:
                logger.debug(
                    "cycle %d: bank conflict %s",
                    self.cycle,
                    [hex(r.address) for r in pair],
                )
                stalls += 1
        return stalls

    def step(self) -> None:
        """Advance one clock cycle; a halted machine does nothing."""
        if self.halted:
            return
        word = self._fetch()
        if word is None:
            word = NOP
        self._execute(word)
        self.halted = self.pc >= len(self._words)
        stalls = self._serve(self.scheduler.select(self.cycle, drain=self.halted))
        if self.trace is not None:
            lock = " | lock" if stalls else ""
            cycle = self._counts["total_cycles"]
            self.trace.write(f"cycle {cycle} | {format_word(word)}{lock}\n")
        self._counts["total_cycles"] += 1 + stalls
        self._counts["stall_cycles"] += stalls
        self.cycle += 1

    def run(self, max_cycles: Optional[int] = None) -> RunStats:
        """Step until the program has been executed."""
        while not self.halted:
            self.step()
            if max_cycles is not None and self._counts["total_cycles"] > max_cycles:
                raise ConfigurationError(
                    f"program did not halt within {max_cycles} cycles"
                )
        stats = self.stats
        logger.info("run finished: %s", stats.summary())
        return stats


def run_fft(
    plan: FftPlan,
    x: SampleVector,
    program: Optional[Program] = None,
    config: Optional[MachineConfig] = None,
    trace: Optional[TextIO] = None,
) -> tuple[SampleVector, RunStats]:
    """Transform one input vector on the cycle-accurate core.

    The input is stored digit-reversed, the FFT program for ``plan`` (or the
    given one) is run to completion and the first N memory words are returned
    with the run's counters.

    :raise ConfigurationError: If the program was generated for another size or
        the input length differs from N.
    """
    if x.n_points != plan.n_points:
        raise ConfigurationError(
            f"input has {x.n_points} samples, plan needs {plan.n_points}"
        )
    program = program or gen_fft_program(plan)
    if program.n_points is not None and program.n_points != plan.n_points:
        raise ConfigurationError(
            f"program generated for N={program.n_points}, plan has N={plan.n_points}"
        )
    machine = Machine(program, config, trace)
    machine.memory.load(x.data[addrgen.load_order(plan)])
    stats = machine.run()
    out = SampleVector(plan.n_points, machine.memory.image(plan.n_points))
    return out, replace(stats, n_points=plan.n_points)
