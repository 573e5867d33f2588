"""Move-code assembler, 51-bit instruction encoding and the FFT program generator.

A program is a sequence of instruction words. Each word has one optional move
per bus: ten 32-bit buses ``B0``-``B9`` and the 1-bit bus ``b``. A move copies a
source port (or a short immediate) to a destination port; writing a trigger
port starts the unit's operation.

Assembly syntax, one instruction word per line::

    ; comment
    .setup
    B0: #3 -> RF.0
    .kernel 4
    B0: ADD.r -> AG.t | B1: ADD.r -> TFG.t
    nop

Section directives are ``.setup``, ``.prologue``, ``.kernel [iterations]`` and
``.epilogue``; words before any directive belong to the setup section.
"""

from __future__ import annotations

import logging
import math
import re
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional, Union

import pandas as pd
from icontract import ensure, invariant

from .types import (
    AssemblyError,
    ConnectivityError,
    DecodeError,
    EncodingError,
    FftPlan,
    MAX_LOG2N,
)

logger = logging.getLogger(__name__)

BUSES = tuple(f"B{i}" for i in range(10)) + ("b",)
INSTRUCTION_BITS = 51
IMMEDIATE_BITS = 5

#: Port kinds of every unit: ``t``-style ports trigger, ``o``-style ports are
#: operands, ``r``-style ports are results. RF registers are both readable and
#: writable.
UNIT_PORTS = {
    "ADD": {"o": "operand", "t": "trigger", "r": "result"},
    "SH": {"o": "operand", "t": "trigger", "r": "result"},
    "AG": {"o": "operand", "lim": "operand", "t": "trigger", "r": "result"},
    "TFG": {
        "o": "operand",
        "sc": "operand",
        "t": "trigger",
        "r": "result",
        "rx2": "result",
    },
    "LSU0": {"o": "operand", "t": "trigger", "st": "trigger", "r": "result"},
    "LSU1": {"o": "operand", "t": "trigger", "st": "trigger", "r": "result"},
    "CMUL": {"o": "operand", "t": "trigger", "r": "result"},
    "CADD": {"rx2": "operand", "t": "trigger", "r": "result"},
    "DLY": {"t": "trigger", "r": "result"},
    "RF": {str(i): "register" for i in range(8)},
}


@dataclass(frozen=True)
class Socket:
    """One FU or register-file port, written ``unit.port``."""

    unit: str
    port: str

    def __str__(self):
        return f"{self.unit}.{self.port}"

    @property
    def kind(self) -> str:
        return UNIT_PORTS[self.unit][self.port]

    @property
    def exists(self) -> bool:
        return self.port in UNIT_PORTS.get(self.unit, {})


@dataclass(frozen=True)
class Immediate:
    """Short signed immediate carried in the instruction word."""

    value: int

    def __str__(self):
        return f"#{self.value}"


IMM = "#"


@dataclass(frozen=True)
class BusSockets:
    """Sources and destinations wired to one bus."""

    sources: tuple[str, ...]
    destinations: tuple[str, ...]

    @property
    def has_immediate(self) -> bool:
        return IMM in self.sources

    @property
    def choices(self) -> int:
        return len(self.sources) * len(self.destinations)


def _rf(*idx):
    return tuple(f"RF.{i}" for i in idx)


#: Interconnect: which sockets each bus reaches. Unlisted pairs are unconnected.
CONNECTIVITY = {
    "B0": BusSockets(
        (IMM, "ADD.r"), ("ADD.t", "ADD.o", "SH.t", "SH.o") + _rf(0, 1, 2, 3)
    ),
    "B1": BusSockets(("ADD.r", "SH.r", "RF.1"), ("AG.t", "AG.lim", "SH.t", "TFG.sc")),
    "B2": BusSockets(("ADD.r", "RF.0"), ("TFG.t", "TFG.o")),
    "B3": BusSockets(("AG.r", "RF.0", "RF.2"), ("LSU0.t", "SH.o")),
    "B4": BusSockets(("AG.r", "RF.0"), ("DLY.t", "AG.o")),
    "B5": BusSockets(("LSU0.r", "LSU1.r"), ("CMUL.t", "RF.4")),
    "B6": BusSockets(("TFG.r", "RF.3"), ("CMUL.o", "LSU1.o")),
    "B7": BusSockets(("CMUL.r",), ("CADD.t", "RF.5")),
    "B8": BusSockets(("CADD.r", "RF.2"), ("LSU1.o", "LSU0.o")),
    "B9": BusSockets(("DLY.r", "RF.1", "RF.3"), ("LSU1.st", "LSU1.t", "LSU0.st")),
    "b": BusSockets(("TFG.rx2",), ("CADD.rx2",)),
}


Source = Union[Socket, Immediate]


@dataclass(frozen=True)
class Move:
    """Transport of one value over one bus in one cycle."""

    bus: str
    src: Source
    dst: Socket

    def __str__(self):
        return f"{self.bus}: {self.src} -> {self.dst}"

    @property
    def triggers(self) -> bool:
        return self.dst.kind == "trigger"


@invariant(lambda self: len(self.slots) == len(BUSES))
@invariant(
    lambda self: all(m is None or m.bus == bus for bus, m in zip(BUSES, self.slots))
)
@dataclass(frozen=True)
class InstructionWord:
    """One optional move slot per bus."""

    slots: tuple[Optional[Move], ...] = (None,) * len(BUSES)

    @classmethod
    def of(cls, moves: Iterable[Move]) -> InstructionWord:
        slots = [None] * len(BUSES)
        for move in moves:
            idx = BUSES.index(move.bus)
            if slots[idx] is not None:
                raise EncodingError(f"bus {move.bus} used twice in one word")
            slots[idx] = move
        return cls(tuple(slots))

    @property
    def moves(self) -> list[Move]:
        return [m for m in self.slots if m is not None]

    @property
    def occupancy(self) -> int:
        return len(self.moves)

    def __str__(self):
        return format_word(self)


NOP = InstructionWord()


def format_word(word: InstructionWord) -> str:
    """Assembly text of one instruction word."""
    return " | ".join(str(m) for m in word.moves) or "nop"


def check_move(move: Move) -> None:
    """Validate a move against the interconnect.

    :raise ConnectivityError: If the bus is unknown, a socket does not exist, or
        a socket is not connected to the bus.
    """
    if move.bus not in CONNECTIVITY:
        raise ConnectivityError(move.bus, str(move.dst), "on unknown bus")
    sockets = CONNECTIVITY[move.bus]
    if isinstance(move.src, Immediate):
        if not sockets.has_immediate:
            raise ConnectivityError(move.bus, str(move.src), "has no immediate field")
        lo, hi = -(1 << (IMMEDIATE_BITS - 1)), (1 << (IMMEDIATE_BITS - 1)) - 1
        if not lo <= move.src.value <= hi:
            raise EncodingError(f"immediate {move.src.value} outside [{lo}, {hi}]")
    else:
        if not move.src.exists:
            raise ConnectivityError(move.bus, str(move.src), "does not exist")
        if str(move.src) not in sockets.sources:
            raise ConnectivityError(move.bus, str(move.src))
    if not move.dst.exists:
        raise ConnectivityError(move.bus, str(move.dst), "does not exist")
    if str(move.dst) not in sockets.destinations:
        raise ConnectivityError(move.bus, str(move.dst))


# Encoding

@dataclass(frozen=True)
class SlotLayout:
    bus: str
    offset: int
    slot_bits: int
    imm_bits: int

    @property
    def width(self) -> int:
        return self.slot_bits + self.imm_bits


def _build_layout() -> tuple[SlotLayout, ...]:
    layout = []
    offset = 0
    for bus in BUSES:
        sockets = CONNECTIVITY[bus]
        slot_bits = math.ceil(math.log2(sockets.choices + 1))
        imm_bits = IMMEDIATE_BITS if sockets.has_immediate else 0
        layout.append(SlotLayout(bus, offset, slot_bits, imm_bits))
        offset += slot_bits + imm_bits
    if offset > INSTRUCTION_BITS:  # pragma: no cover
        raise EncodingError(f"interconnect needs {offset} bits")
    return tuple(layout)


LAYOUT = _build_layout()
USED_BITS = sum(s.width for s in LAYOUT)


def layout_table() -> pd.DataFrame:
    """Field layout of the instruction word, least significant field first."""
    rows = [
        (s.bus, CONNECTIVITY[s.bus].choices, s.offset, s.slot_bits, s.imm_bits)
        for s in LAYOUT
    ]
    rows.append(("pad", 0, USED_BITS, INSTRUCTION_BITS - USED_BITS, 0))
    columns = ["bus", "choices", "offset", "slot_bits", "imm_bits"]
    return pd.DataFrame(rows, columns=columns)


def _pair_index(bus: str, move: Move) -> int:
    sockets = CONNECTIVITY[bus]
    src = IMM if isinstance(move.src, Immediate) else str(move.src)
    return (
        sockets.sources.index(src) * len(sockets.destinations)
        + sockets.destinations.index(str(move.dst))
        + 1
    )


@ensure(lambda result: 0 <= result < (1 << INSTRUCTION_BITS))
def encode(word: InstructionWord) -> int:
    """Pack an instruction word into its 51-bit form. All-NOP encodes to 0."""
    value = 0
    for slot, move in zip(LAYOUT, word.slots):
        if move is None:
            continue
        check_move(move)
        value |= _pair_index(slot.bus, move) << slot.offset
        if isinstance(move.src, Immediate):
            imm = move.src.value & ((1 << slot.imm_bits) - 1)
            value |= imm << (slot.offset + slot.slot_bits)
    return value


def _socket(text: str) -> Socket:
    unit, port = text.split(".")
    return Socket(unit, port)


def decode(value: int) -> InstructionWord:
    """Inverse of :func:`encode`.

    :raise DecodeError: For out-of-range values, unused slot codes or set padding.
    """
    if not 0 <= value < (1 << INSTRUCTION_BITS):
        raise DecodeError(f"value does not fit {INSTRUCTION_BITS} bits: {value:#x}")
    if value >> USED_BITS:
        raise DecodeError(f"padding bits set in {value:#x}")
    slots = []
    for slot in LAYOUT:
        sockets = CONNECTIVITY[slot.bus]
        code = (value >> slot.offset) & ((1 << slot.slot_bits) - 1)
        imm = (value >> (slot.offset + slot.slot_bits)) & ((1 << slot.imm_bits) - 1)
        if code == 0:
            if imm:
                raise DecodeError(f"immediate bits set on idle bus {slot.bus}")
            slots.append(None)
            continue
        if code > sockets.choices:
            raise DecodeError(f"bus {slot.bus}: unused slot code {code}")
        src_idx, dst_idx = divmod(code - 1, len(sockets.destinations))
        src_name = sockets.sources[src_idx]
        if src_name == IMM:
            if imm >> (slot.imm_bits - 1):
                imm -= 1 << slot.imm_bits
            src = Immediate(imm)
        else:
            if imm:
                raise DecodeError(f"immediate bits set on bus {slot.bus}")
            src = _socket(src_name)
        slots.append(Move(slot.bus, src, _socket(sockets.destinations[dst_idx])))
    return InstructionWord(tuple(slots))


# Programs

SECTIONS = ("setup", "prologue", "kernel", "epilogue")


@invariant(lambda self: self.kernel_iterations >= 0)
@invariant(lambda self: self.kernel or not self.kernel_iterations)
@dataclass(frozen=True)
class Program:
    """Instruction memory image split into its execution phases.

    :param kernel_iterations: How many times the kernel words repeat.
    :param n_points: Transform size for generated FFT programs, else None.
    """

    setup: tuple[InstructionWord, ...] = ()
    prologue: tuple[InstructionWord, ...] = ()
    kernel: tuple[InstructionWord, ...] = ()
    epilogue: tuple[InstructionWord, ...] = ()
    kernel_iterations: int = 0
    n_points: Optional[int] = field(default=None, compare=False)

    @property
    def words(self) -> tuple[InstructionWord, ...]:
        return self.setup + self.prologue + self.kernel + self.epilogue

    @property
    def kernel_start(self) -> int:
        return len(self.setup) + len(self.prologue)

    def __len__(self):
        return len(self.words)

    def to_asm(self) -> str:
        """Assembly source that :func:`assemble` maps back to this program."""
        lines = []
        for name in SECTIONS:
            words = getattr(self, name)
            if not words:
                continue
            if name == "kernel":
                lines.append(f".kernel {self.kernel_iterations}")
            else:
                lines.append(f".{name}")
            lines.extend(format_word(w) for w in words)
        return "\n".join(lines) + "\n"


_MOVE_PATTERN = re.compile(
    r"^\s*(?P<bus>\w+)\s*:\s*(?P<src>\S+)\s*->\s*(?P<dst>\S+)\s*$"
)
_SOCKET_PATTERN = re.compile(r"^(?P<unit>[A-Za-z]\w*)\.(?P<port>\w+)$")
_IMM_PATTERN = re.compile(r"^#(?P<value>[-+]?(0x[0-9a-fA-F]+|\d+))$")


def _parse_operand(text: str, line: int, column: int) -> Source:
    imm = _IMM_PATTERN.match(text)
    if imm:
        return Immediate(int(imm.group("value"), 0))
    sock = _SOCKET_PATTERN.match(text)
    if not sock:
        raise AssemblyError(f"bad operand {text!r}", line, column)
    return Socket(sock.group("unit"), sock.group("port"))


def _parse_word(text: str, line: int, column: int) -> InstructionWord:
    if text.strip().lower() == "nop":
        return NOP
    moves = []
    used = set()
    for part in text.split("|"):
        match = _MOVE_PATTERN.match(part)
        if not match:
            message = f"expected 'bus: src -> dst', got {part.strip()!r}"
            raise AssemblyError(message, line, column)
        cols = {g: column + match.start(g) for g in ("bus", "src", "dst")}
        bus = match.group("bus")
        if bus not in CONNECTIVITY:
            raise AssemblyError(f"unknown bus {bus!r}", line, cols["bus"])
        if bus in used:
            raise AssemblyError(f"bus {bus} used twice", line, cols["bus"])
        used.add(bus)
        src = _parse_operand(match.group("src"), line, cols["src"])
        dst = _parse_operand(match.group("dst"), line, cols["dst"])
        if isinstance(dst, Immediate):
            raise AssemblyError("immediate as destination", line, cols["dst"])
        move = Move(bus, src, dst)
        check_move(move)
        moves.append(move)
        column += len(part) + 1
    return InstructionWord.of(moves)


def assemble(text: str) -> Program:
    """Assemble move-code source into a :class:`Program`.

    :raise AssemblyError: On syntax errors, with line and column.
    :raise ConnectivityError: For unknown or unconnected sockets.
    """
    sections = {name: [] for name in SECTIONS}
    current = "setup"
    iterations = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split(";", 1)[0]
        if not body.strip():
            continue
        column = len(body) - len(body.lstrip()) + 1
        stripped = body.strip()
        if stripped.startswith("."):
            parts = stripped[1:].split()
            if not parts or parts[0] not in SECTIONS:
                raise AssemblyError(f"unknown directive {stripped!r}", lineno, column)
            current = parts[0]
            if current == "kernel":
                try:
                    iterations = int(parts[1]) if len(parts) > 1 else 1
                except ValueError:
                    message = f"bad iteration count {parts[1]!r}"
                    raise AssemblyError(message, lineno, column)
            elif len(parts) > 1:
                message = f"unexpected argument to .{current}"
                raise AssemblyError(message, lineno, column)
            continue
        sections[current].append(_parse_word(body.strip(), lineno, column))
    kernel_iterations = iterations if sections["kernel"] else 0
    return Program(
        tuple(sections["setup"]),
        tuple(sections["prologue"]),
        tuple(sections["kernel"]),
        tuple(sections["epilogue"]),
        kernel_iterations or 0,
    )


# Binary program files

BINARY_MAGIC = b"TTAF"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sHHIBBBB")


def write_binary(program: Program, buffer: BinaryIO) -> None:
    """Write a program as a 16-byte header followed by 64-bit little-endian words."""
    buffer.write(
        _HEADER.pack(
            BINARY_MAGIC,
            BINARY_VERSION,
            len(program),
            program.kernel_iterations,
            len(program.setup),
            len(program.prologue),
            len(program.kernel),
            len(program.epilogue),
        )
    )
    for word in program.words:
        buffer.write(struct.pack("<Q", encode(word)))


def read_binary(buffer: BinaryIO) -> Program:
    """Read a program written by :func:`write_binary`."""
    header = buffer.read(_HEADER.size)
    if len(header) != _HEADER.size:
        raise DecodeError("truncated program header")
    magic, version, count, iterations, *sizes = _HEADER.unpack(header)
    if magic != BINARY_MAGIC:
        raise DecodeError(f"bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise DecodeError(f"unsupported program file version {version}")
    if sum(sizes) != count:
        raise DecodeError("section sizes do not add up to the word count")
    body = buffer.read(8 * count)
    if len(body) != 8 * count:
        raise DecodeError("truncated program body")
    words = [decode(v) for v in struct.unpack(f"<{count}Q", body)]
    parts = []
    start = 0
    for size in sizes:
        parts.append(tuple(words[start : start + size]))
        start += size
    return Program(*parts, kernel_iterations=iterations)


# FFT program generation

PIPELINE_DEPTH = 13  #: Last cycle offset of one counter value's moves.
SETUP_WORDS = 6


def _mv(bus: str, src: Union[str, int], dst: str) -> Move:
    source = Immediate(src) if isinstance(src, int) else _socket(src)
    return Move(bus, source, _socket(dst))


#: Software-pipeline schedule of one linear counter value: (cycle offset, move).
#: Under the default machine latencies every result is consumed in the cycle it
#: becomes readable, and a new counter value enters every cycle.
KERNEL_SCHEDULE = (
    (0, _mv("B0", "ADD.r", "ADD.t")),
    (0, _mv("B1", "ADD.r", "AG.t")),
    (0, _mv("B2", "ADD.r", "TFG.t")),
    (2, _mv("B3", "AG.r", "LSU0.t")),
    (2, _mv("B4", "AG.r", "DLY.t")),
    (5, _mv("B5", "LSU0.r", "CMUL.t")),
    (5, _mv("B6", "TFG.r", "CMUL.o")),
    (5, _mv("b", "TFG.rx2", "CADD.rx2")),
    (7, _mv("B7", "CMUL.r", "CADD.t")),
    (13, _mv("B8", "CADD.r", "LSU1.o")),
    (13, _mv("B9", "DLY.r", "LSU1.st")),
)


def setup_words(plan: FftPlan) -> tuple[InstructionWord, ...]:
    """Distribute N, the iteration limit and the LUT scale to the units.

    SH computes the iteration limit ``S << k`` and the LUT scale
    ``1 << (14 - k)``; the adder is primed so its result is 0 when the prologue
    starts.
    """
    k, s = plan.log2n, plan.n_stages
    return tuple(
        InstructionWord.of(moves)
        for moves in (
            [_mv("B0", k, "RF.0")],
            [
                _mv("B0", s, "RF.1"),
                _mv("B2", "RF.0", "TFG.o"),
                _mv("B3", "RF.0", "SH.o"),
                _mv("B4", "RF.0", "AG.o"),
            ],
            [_mv("B0", 1, "ADD.o"), _mv("B1", "RF.1", "SH.t")],
            [_mv("B0", MAX_LOG2N - k, "SH.o"), _mv("B1", "SH.r", "AG.lim")],
            [_mv("B0", 1, "SH.t")],
            [_mv("B0", -1, "ADD.t"), _mv("B1", "SH.r", "TFG.sc")],
        )
    )


@ensure(lambda result: len(result) == SETUP_WORDS + 2 * PIPELINE_DEPTH + 1)
@ensure(lambda result: result.kernel[0].occupancy == len(BUSES))
def gen_fft_program(plan: FftPlan) -> Program:
    """Generate the 33-word FFT program for a plan.

    Prologue word ``i`` holds the kernel moves with offset <= i, epilogue word
    ``j`` those with offset > j. The kernel repeats N * S times; the last
    :data:`PIPELINE_DEPTH` counter values are beyond the address generator's
    limit and their memory accesses are dropped.
    """
    prologue = tuple(
        InstructionWord.of(m for off, m in KERNEL_SCHEDULE if off <= i)
        for i in range(PIPELINE_DEPTH)
    )
    kernel = (InstructionWord.of(m for _, m in KERNEL_SCHEDULE),)
    epilogue = tuple(
        InstructionWord.of(m for off, m in KERNEL_SCHEDULE if off > j)
        for j in range(PIPELINE_DEPTH)
    )
    program = Program(
        setup_words(plan),
        prologue,
        kernel,
        epilogue,
        plan.kernel_iterations,
        plan.n_points,
    )
    for word in program.words:
        for move in word.moves:
            check_move(move)
    logger.debug("generated %d-word program for N=%d", len(program), plan.n_points)
    return program
