"""Activity-based energy model and technology normalization.

Energy is a dot product of the run's activity counters with per-event costs in
picojoules from a :class:`CostProfile`, plus leakage per clock cycle. To compare
designs built in different processes, energies are normalized by feature size,
supply voltage and word length to a 65 nm, 1.0 V, 16-bit reference.
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Optional, TextIO

import pandas as pd
from icontract import invariant, require

from .machine import BLOCK_ROWS, RunStats
from .types import ProfileError

logger = logging.getLogger(__name__)

FU_NAMES = ("ADD", "SH", "AG", "TFG", "LSU0", "LSU1", "CMUL", "CADD", "DLY")
_SCALAR_COSTS = (
    "instruction_memory_fetch",
    "loop_buffer_fetch",
    "rf_read",
    "rf_write",
    "bus_transport",
    "leakage_per_cycle",
)


def _zero_triggers():
    return {fu: 0.0 for fu in FU_NAMES}


@invariant(lambda self: len(self.memory_block_access) == len(BLOCK_ROWS))
@invariant(lambda self: all(c >= 0 for c in self.costs()))
@dataclass(frozen=True)
class CostProfile:
    """Energy per event in picojoules.

    ``memory_block_access`` has one entry per memory block, smallest first;
    ``fu_trigger`` maps unit names to the cost of one operation.
    """

    name: str
    instruction_memory_fetch: float = 0.0
    loop_buffer_fetch: float = 0.0
    memory_block_access: tuple = (0.0,) * len(BLOCK_ROWS)
    rf_read: float = 0.0
    rf_write: float = 0.0
    fu_trigger: Mapping[str, float] = field(default_factory=_zero_triggers)
    bus_transport: float = 0.0
    leakage_per_cycle: float = 0.0

    def costs(self) -> list:
        return (
            [getattr(self, key) for key in _SCALAR_COSTS]
            + list(self.memory_block_access)
            + list(self.fu_trigger.values())
        )

    @require(lambda factor: factor >= 0)
    def scaled(self, factor: float, name: Optional[str] = None) -> "CostProfile":
        """Every cost multiplied by ``factor``."""
        return replace(
            self,
            name=name or self.name,
            memory_block_access=tuple(c * factor for c in self.memory_block_access),
            fu_trigger={fu: c * factor for fu, c in self.fu_trigger.items()},
            **{key: getattr(self, key) * factor for key in _SCALAR_COSTS},
        )


# Fitted once so the 1024-point run costs 47.8 nJ (20915 FFT/mJ).
PROFILE_28NM = CostProfile(
    name="28nm-0.6V",
    instruction_memory_fetch=20.0,
    loop_buffer_fetch=0.4,
    memory_block_access=(0.6, 0.6, 0.8, 1.0, 1.3, 1.7, 2.2, 2.9, 3.8),
    rf_read=0.3,
    rf_write=0.4,
    fu_trigger={
        "ADD": 0.3,
        "SH": 0.3,
        "AG": 0.4,
        "TFG": 0.9,
        "LSU0": 0.5,
        "LSU1": 0.5,
        "CMUL": 1.8,
        "CADD": 1.0,
        "DLY": 0.3,
    },
    bus_transport=0.04,
    leakage_per_cycle=0.5,
)
PROFILE_65NM = PROFILE_28NM.scaled(20916 / 7171, name="65nm-1.0V")
PROFILE_ZERO = CostProfile(name="zero")

BUILTIN_PROFILES = {p.name: p for p in (PROFILE_28NM, PROFILE_65NM, PROFILE_ZERO)}


@dataclass(frozen=True)
class EnergyReport:
    """Energy of one transform, in nanojoules, by category."""

    breakdown: Mapping[str, float]
    profile: str = ""
    n_points: Optional[int] = None

    @property
    def total_nj(self) -> float:
        return sum(self.breakdown.values())

    @property
    def fft_per_mj(self) -> float:
        """Transforms per millijoule; infinite for a zero-energy run."""
        total = self.total_nj
        return 1e6 / total if total > 0 else math.inf

    def normalized_fft_per_mj(
        self, tech: "TechParams", ref: Optional["TechParams"] = None
    ) -> float:
        return normalized_fft_per_mj(self.fft_per_mj, tech, ref or REFERENCE_TECH)


def energy_of(stats: RunStats, profile: CostProfile) -> EnergyReport:
    """Energy of a run under a cost profile."""
    memory = sum(
        n * c for n, c in zip(stats.memory_block_accesses, profile.memory_block_access)
    )
    triggers = stats.fu_triggers.items()
    units = sum(n * profile.fu_trigger.get(fu, 0.0) for fu, n in triggers)
    picojoules = {
        "instruction_memory": stats.imem_fetches * profile.instruction_memory_fetch,
        "loop_buffer": stats.loop_fetches * profile.loop_buffer_fetch,
        "data_memory": memory,
        "register_file": (
            stats.rf_reads * profile.rf_read + stats.rf_writes * profile.rf_write
        ),
        "functional_units": units,
        "interconnect": stats.bus_transports * profile.bus_transport,
        "leakage": stats.total_cycles * profile.leakage_per_cycle,
    }
    report = EnergyReport(
        {k: v / 1000 for k, v in picojoules.items()}, profile.name, stats.n_points
    )
    logger.info("energy under %s: %.3f nJ", profile.name, report.total_nj)
    return report


# Technology normalization


@invariant(lambda self: self.feature_nm > 0 and self.voltage > 0 and self.word_bits > 0)
@dataclass(frozen=True)
class TechParams:
    """Feature size (nm), supply voltage (V) and data word length (bits)."""

    feature_nm: float
    voltage: float
    word_bits: int = 16

    @classmethod
    def parse(cls, text: str) -> "TechParams":
        """Read ``L,U,W`` such as ``65,1.0,16``."""
        try:
            feature, voltage, word = (p.strip() for p in text.split(","))
            return cls(float(feature), float(voltage), int(word))
        except ValueError as e:
            raise ValueError(f"Expected 'nm,volts,bits', got {text!r}") from e

    def _weight(self) -> float:
        w = self.word_bits
        return self.feature_nm * self.voltage**2 * (w * w / 3 + 2 * w / 3)


REFERENCE_TECH = TechParams(65, 1.0, 16)


def normalization_factor(tech: TechParams, ref: TechParams = REFERENCE_TECH) -> float:
    return ref._weight() / tech._weight()


def normalize(
    energy: float, tech: TechParams, ref: TechParams = REFERENCE_TECH
) -> float:
    """Energy scaled from ``tech`` to the reference technology."""
    return energy * normalization_factor(tech, ref)


def normalized_fft_per_mj(
    fft_per_mj: float, tech: TechParams, ref: TechParams = REFERENCE_TECH
) -> float:
    return fft_per_mj / normalization_factor(tech, ref)


@dataclass(frozen=True)
class Table1Row:
    name: str
    architecture: str
    tech: TechParams
    fft_per_mj: float
    programmable: bool = False


def table1_rows() -> list:
    """Published 1024-point FFT processors, by raw FFT/mJ and technology."""
    mem, pipe = "memory based", "pipelined"
    return [
        Table1Row("garrido16", pipe, TechParams(65, 1.10, 16), 2641),
        Table1Row("tta 28nm 0.60V", mem, TechParams(28, 0.60, 16), 20916, True),
        Table1Row("shami18", mem, TechParams(65, 1.20, 16), 2287),
        Table1Row("pitkanen11", mem, TechParams(130, 1.50, 16), 802, True),
        Table1Row("bass99", mem, TechParams(600, 3.30, 20), 39),
        Table1Row("tta 65nm 1.00V", mem, TechParams(65, 1.00, 16), 7171, True),
        Table1Row("huang16", mem, TechParams(90, 1.00, 16), 13360),
        Table1Row("garrido18", pipe, TechParams(55, 0.90, 16), 77131),
    ]


REPORT_COLUMNS = [
    "name",
    "architecture",
    "tech_nm",
    "voltage_v",
    "word_bits",
    "raw_fft_per_mj",
    "norm_fft_per_mj",
]


def table1_report(rows, ref: TechParams = REFERENCE_TECH) -> pd.DataFrame:
    """Raw and normalized FFT/mJ per row, sorted by the normalized value."""
    records = [
        (
            row.name,
            row.architecture,
            row.tech.feature_nm,
            row.tech.voltage,
            row.tech.word_bits,
            row.fft_per_mj,
            normalized_fft_per_mj(row.fft_per_mj, row.tech, ref),
        )
        for row in rows
    ]
    df = pd.DataFrame.from_records(records, columns=REPORT_COLUMNS)
    return df.sort_values("norm_fft_per_mj", kind="stable").reset_index(drop=True)


def report_csv(df: pd.DataFrame, buffer: TextIO) -> None:
    """CSV with ``name,raw_fft_per_mj,norm_fft_per_mj`` columns."""
    df[["name", "raw_fft_per_mj", "norm_fft_per_mj"]].to_csv(buffer, index=False)


# Profile files


def _parse_value(key: str, text: str, line: int):
    try:
        if key == "memory_block_access":
            values = tuple(float(v) for v in text.split(","))
            if len(values) != len(BLOCK_ROWS):
                message = (
                    f"memory_block_access needs {len(BLOCK_ROWS)} values,"
                    f" got {len(values)}"
                )
                raise ProfileError(message, line)
        else:
            values = (float(text),)
    except ValueError:
        raise ProfileError(f"bad number {text!r} for {key}", line)
    if any(v < 0 for v in values):
        raise ProfileError(f"negative cost for {key}", line)
    return values if key == "memory_block_access" else values[0]


def load_profile(buffer: TextIO, name: str = "custom") -> CostProfile:
    """Read a ``key = value_pJ`` profile; ``#`` starts a comment.

    Keys are the :class:`CostProfile` fields, ``trigger.<UNIT>`` for unit costs
    and optionally ``name``. Missing costs are zero.

    :raise ProfileError: With the offending line number.
    """
    values = {}
    triggers = _zero_triggers()
    for lineno, raw in enumerate(buffer, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ProfileError(f"expected 'key = value', got {text!r}", lineno)
        key, value = (part.strip() for part in text.split("=", 1))
        if key == "name":
            name = value
        elif key.startswith("trigger."):
            unit = key.split(".", 1)[1]
            if unit not in triggers:
                raise ProfileError(f"unknown unit {unit!r}", lineno)
            triggers[unit] = _parse_value(key, value, lineno)
        elif key in _SCALAR_COSTS or key == "memory_block_access":
            values[key] = _parse_value(key, value, lineno)
        else:
            raise ProfileError(f"unknown key {key!r}", lineno)
    return CostProfile(name=name, fu_trigger=triggers, **values)


def dump_profile(profile: CostProfile, buffer: TextIO) -> None:
    """Write a profile in the format read by :func:`load_profile`."""
    buffer.write(f"name = {profile.name}\n")
    for f in fields(profile):
        if f.name in _SCALAR_COSTS:
            buffer.write(f"{f.name} = {getattr(profile, f.name)!r}\n")
    blocks = ", ".join(repr(c) for c in profile.memory_block_access)
    buffer.write(f"memory_block_access = {blocks}\n")
    for unit, cost in profile.fu_trigger.items():
        buffer.write(f"trigger.{unit} = {cost!r}\n")


def get_profile(name_or_path: str) -> CostProfile:
    """Built-in profile by name, else a profile file."""
    if name_or_path in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[name_or_path]
    with open(name_or_path) as f:
        return load_profile(f, name=name_or_path)
