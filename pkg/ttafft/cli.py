"""Command-line front end: run transforms, assemble programs, report energy."""

import logging
import math
import sys
from typing import Optional, TextIO

import click
import numpy as np
import pandas as pd

import ttafft
from ttafft import energy, golden, program, samples, twiddle
from ttafft.machine import MachineConfig, SchedulerMode, run_fft
from ttafft.types import TtaFftError, make_plan

logger = logging.getLogger(__name__)

#: Technology of each built-in cost profile.
PROFILE_TECH = {
    energy.PROFILE_28NM.name: energy.TechParams(28, 0.60, 16),
    energy.PROFILE_65NM.name: energy.TechParams(65, 1.00, 16),
    energy.PROFILE_ZERO.name: energy.REFERENCE_TECH,
}


def _plan(ctx, param, value):
    if value is None:
        return None
    try:
        return make_plan(value)
    except ValueError as e:
        raise click.BadParameter(str(e), ctx=ctx, param=param)


def _tech(ctx, param, value):
    if value is None:
        return None
    try:
        return energy.TechParams.parse(value)
    except ValueError as e:
        raise click.BadParameter(str(e), ctx=ctx, param=param)


def _profile(ctx, param, value):
    try:
        return energy.get_profile(value)
    except OSError as e:
        raise click.BadParameter(str(e), ctx=ctx, param=param)
    except TtaFftError as e:
        raise click.BadParameter(f"{value}: {e}", ctx=ctx, param=param)


profile_option = click.option(
    "--profile",
    default=energy.PROFILE_28NM.name,
    envvar="TTAFFT_PROFILE",
    show_default=True,
    callback=_profile,
    help=f"Cost profile ({', '.join(energy.BUILTIN_PROFILES)}) or a profile file.",
)


@click.group()
@click.version_option(ttafft.__version__)
@click.option("-v", "--verbose", count=True, help="Log progress; -vv for debug.")
def main(verbose: int):
    """Simulate a transport-triggered FFT processor."""
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG if verbose > 1 else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )


@main.command()
@click.option(
    "--n", "plan", type=int, required=True, callback=_plan, help="Transform size."
)
@click.option(
    "--input",
    "kind",
    type=click.Choice(samples.GENERATORS),
    default="random",
    show_default=True,
    help="Input generator.",
)
@click.option(
    "--input-file",
    type=click.Path(exists=True, dir_okay=False),
    help="Sample file to transform.",
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(samples.FORMATS),
    default="text",
    show_default=True,
    help="Format of --input-file and --output.",
)
@click.option("--seed", type=int, default=0, show_default=True, help="Input seed.")
@click.option("--verify", is_flag=True, help="Compare with the functional model.")
@click.option(
    "--scheduler",
    type=click.Choice([m.value for m in SchedulerMode]),
    default=SchedulerMode.ON.value,
    show_default=True,
)
@click.option("--trace", type=click.File("w"), help="Write a per-cycle move trace.")
@click.option(
    "--output", type=click.Path(dir_okay=False), help="Write the output samples."
)
@click.option("--memory-image", type=click.File("w"), help="Write the memory image.")
@profile_option
def run(
    plan,
    kind,
    input_file,
    fmt,
    seed,
    verify,
    scheduler,
    trace,
    output,
    memory_image,
    profile,
):
    """Run one transform on the cycle-accurate core."""
    if input_file is not None:
        try:
            x = samples.read_sample_file(input_file, fmt)
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="--input-file")
    else:
        x = samples.generate(kind, plan, seed)
    config = MachineConfig(scheduler=SchedulerMode(scheduler))
    try:
        out, stats = run_fft(plan, x, config=config, trace=trace)
    except TtaFftError as e:
        raise click.ClickException(str(e))

    click.echo(stats.summary())
    report = energy.energy_of(stats, profile)
    click.echo(f"energy_nj={report.total_nj:.3f} fft_per_mj={report.fft_per_mj:.0f}")
    if output is not None:
        samples.write_sample_file(out, output, fmt)
    if memory_image is not None:
        samples.write_memory_image(out.data, memory_image)
    if verify:
        expected = golden.fft_fixed(plan, x)
        if out != expected:
            bad = int(np.count_nonzero(out.data != expected.data))
            click.echo(f"verify=FAILED mismatched_words={bad}")
            sys.exit(1)
        click.echo("verify=ok")
    return 0


@main.command("energy")
@click.option(
    "--n", "plan", type=int, default=1024, show_default=True, callback=_plan
)
@profile_option
@click.option("--tech", callback=_tech, help="Profile technology as 'nm,volts,bits'.")
@click.option("--normalize", "ref", callback=_tech, help="Reference 'nm,volts,bits'.")
@click.option("--table1", is_flag=True, help="Print the comparison table.")
@click.option("--csv", "csv_file", type=click.File("w"), help="Write the table as CSV.")
def energy_cmd(plan, profile, tech, ref, table1, csv_file):
    """Energy per transform of a simulated run under a cost profile."""
    x = samples.impulse(plan)
    _, stats = run_fft(plan, x)
    report = energy.energy_of(stats, profile)
    tech = tech or PROFILE_TECH.get(profile.name, energy.REFERENCE_TECH)

    click.echo(
        f"profile={profile.name} n={plan.n_points} cycles={stats.total_cycles}"
    )
    for category, nj in report.breakdown.items():
        click.echo(f"  {category:<20} {nj:12.3f} nJ")
    click.echo(f"energy_nj={report.total_nj:.3f}")
    if math.isinf(report.fft_per_mj):
        click.echo("fft_per_mj=inf")
        return 0
    click.echo(f"fft_per_mj={report.fft_per_mj:.0f}")
    if ref is not None:
        norm = energy.normalized_fft_per_mj(report.fft_per_mj, tech, ref)
        click.echo(f"norm_fft_per_mj={norm:.0f}")

    if table1 or csv_file is not None:
        rows = energy.table1_rows()
        rows.append(
            energy.Table1Row(
                f"simulated {profile.name}",
                "memory based",
                tech,
                report.fft_per_mj,
                True,
            )
        )
        df = energy.table1_report(rows)
        if table1:
            click.echo(df.to_string(index=False, float_format=lambda v: f"{v:.0f}"))
        if csv_file is not None:
            energy.report_csv(df, csv_file)
    return 0


@main.command()
@click.option(
    "--sizes",
    "sizes",
    type=int,
    multiple=True,
    help="Transform sizes; all supported sizes by default.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@profile_option
@click.option("--csv", "csv_file", type=click.File("w"), help="Write the table as CSV.")
def sweep(sizes, seed, profile, csv_file):
    """Cycles, stalls, accuracy and energy for a range of sizes."""
    try:
        plans = [make_plan(n) for n in (sizes or ttafft.SUPPORTED_SIZES)]
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--sizes")
    rows = []
    for plan in plans:
        x = samples.random(plan, seed)
        out, stats = run_fft(plan, x)
        report = energy.energy_of(stats, profile)
        rows.append(
            {
                "n": plan.n_points,
                "cycles": stats.total_cycles,
                "stalls": stats.stall_cycles,
                "exact": out == golden.fft_fixed(plan, x),
                "snr_db": golden.snr_db(out, golden.dft_float(x), plan),
                "energy_nj": report.total_nj,
                "blocks_used": sum(1 for n in stats.memory_block_accesses if n),
                **{
                    f"block{i}": n
                    for i, n in enumerate(stats.memory_block_accesses)
                },
            }
        )
        logger.info("swept N=%d", plan.n_points)
    df = pd.DataFrame(rows)
    click.echo(df.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    if csv_file is not None:
        df.to_csv(csv_file, index=False)
    if not (df["exact"].all() and (df["stalls"] == 0).all()):
        sys.exit(1)
    return 0


@main.command()
@click.argument("source", type=click.File(), required=False)
@click.option(
    "--generate", "plan", type=int, callback=_plan, help="Emit the FFT program for N."
)
@click.option("--output", type=click.File("wb"), help="Write a binary program file.")
@click.option("--layout", is_flag=True, help="Print the instruction field layout.")
def asm(source: Optional[TextIO], plan, output, layout):
    """Assemble SOURCE and print the encoded instruction words."""
    if layout:
        click.echo(program.layout_table().to_string(index=False))
        return 0
    if plan is not None:
        prog = program.gen_fft_program(plan)
        click.echo(prog.to_asm(), nl=False)
    elif source is not None:
        try:
            prog = program.assemble(source.read())
        except TtaFftError as e:
            raise click.ClickException(str(e))
        for idx, word in enumerate(prog.words):
            click.echo(f"{idx:4d} {program.encode(word):013x}  {word}")
    else:
        raise click.UsageError("Give a SOURCE file, --generate or --layout.")
    if output is not None:
        program.write_binary(prog, output)
    return 0


@main.command()
@click.option("--output", type=click.File("w"), default="-", help="Destination file.")
def lutdump(output):
    """Print the twiddle table as 'index re im' lines."""
    twiddle.write_lut(twiddle.build_lut(), output)
    return 0


if __name__ == "__main__":
    main()  # pragma: no cover
