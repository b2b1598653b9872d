"""qsieve CLI: factor, trace, bench and validate-trace."""

from __future__ import annotations

import json
import logging
import re
import time
from collections.abc import Callable
from dataclasses import dataclass, replace
from enum import StrEnum
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Annotated, Any

import typer
from sympy import isprime

from qsieve import bench as bench_mod
from qsieve.classical_qs import (
    FactorResult,
    SieveParams,
    default_params,
    factor,
    split_degenerate,
)
from qsieve.config import SieveConfig, load_config
from qsieve.console import (
    bench_table,
    console,
    create_status,
    print_error,
    print_factor_result,
    print_step,
    print_success,
    print_verdict,
    print_warning,
    trace_table,
)
from qsieve.errors import ErrorCode, QsieveError
from qsieve.quantum_qs import run_pipeline
from qsieve.trace import TraceError, read_trace, validate_records, write_trace

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="qsieve",
    help="Quadratic sieve factorization, classical and on a simulated quantum register machine.",
    rich_markup_mode="rich",
    no_args_is_help=True,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_NATURAL = re.compile(r"^(?:0[xX][0-9a-fA-F]+|[0-9]+)$")


class Mode(StrEnum):
    CLASSICAL = "classical"
    QUANTUM = "quantum-sim"
    BOTH = "both"


@dataclass(frozen=True)
class RunConfig:
    """Validated options of one ``factor`` or ``trace`` invocation."""

    n: int
    mode: Mode
    smoothness_bound: int | None = None
    half_width: int | None = None
    seed: int = 0
    trace_path: Path | None = None
    json_output: bool = False

    def params_for(self, config: SieveConfig, *, max_half_width: int) -> SieveParams | None:
        """Explicit params from the overrides, ``None`` to let the pipeline choose."""
        if self.smoothness_bound is None and self.half_width is None:
            return None
        base = default_params(self.n, config=config, max_half_width=max_half_width)
        return SieveParams.for_bounds(
            self.n,
            base.smoothness_bound if self.smoothness_bound is None else self.smoothness_bound,
            base.half_width if self.half_width is None else self.half_width,
            safety_margin=config.safety_margin,
        )


# ---------------------------------------------------------------------------
# Shared option types
# ---------------------------------------------------------------------------

NumberArg = Annotated[str, typer.Argument(help="Integer to factor, decimal or 0x-hex.")]
ModeOpt = Annotated[Mode, typer.Option("--mode", "-m", help="Pipeline(s) to run.")]
BoundOpt = Annotated[
    int | None, typer.Option("--smoothness-bound", "-B", help="Override the smoothness bound B.")
]
HalfWidthOpt = Annotated[
    int | None,
    typer.Option("--interval-half-width", "-M", help="Override the sieve interval half-width M."),
]
SeedOpt = Annotated[
    int, typer.Option("--seed", min=0, max=2**64 - 1, help="Seed for sampled measurements.")
]
JsonOpt = Annotated[bool, typer.Option("--json", help="Emit one JSON document on stdout.")]
NoTimingOpt = Annotated[bool, typer.Option("--no-timing", help="Omit wall-clock timings.")]
RetriesOpt = Annotated[
    int | None, typer.Option("--max-retries", min=0, help="Override the escalation cap.")
]
SampleOpt = Annotated[
    bool,
    typer.Option(
        "--sample-measurements", help="Sample measurements with --seed instead of post-selecting."
    ),
]
VerboseOpt = Annotated[bool, typer.Option("--verbose", "-v", help="Log at DEBUG level.")]


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def parse_natural(raw: str) -> int:
    """Decimal or ``0x`` hex; anything else raises ``ValueError``."""
    text = raw.strip()
    if not _NATURAL.match(text):
        raise ValueError(f"not a natural number: {raw!r}")
    return int(text, 0) if text[:2].lower() == "0x" else int(text)


def _setup(verbose: bool, max_retries: int | None = None) -> SieveConfig:
    try:
        config = load_config()
    except ValueError as exc:
        print_error(str(exc))
        raise typer.Exit(code=EXIT_INVALID) from exc
    if max_retries is not None:
        config = replace(config, max_retries=max_retries)

    level = logging.DEBUG if verbose else getattr(logging, config.log_level)
    logging.basicConfig(level=level, format=_LOG_FORMAT)
    logging.getLogger().setLevel(level)
    if config.log_file:
        handler = RotatingFileHandler(
            config.log_file, maxBytes=5_000_000, backupCount=3, encoding="utf-8"
        )
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        logging.getLogger().addHandler(handler)
    return config


def _parse_n(raw: str) -> int:
    try:
        return parse_natural(raw)
    except ValueError as exc:
        print_error(str(exc))
        raise typer.Exit(code=EXIT_INVALID) from exc


def _fail(exc: QsieveError) -> typer.Exit:
    print_error(exc.detail)
    code = EXIT_INVALID if exc.code is ErrorCode.INVALID_INPUT else EXIT_FAILURE
    return typer.Exit(code=code)


def _result_dict(result: FactorResult, elapsed_ms: float | None) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "factors": [result.f1, result.f2],
        "witness": list(result.witness) if result.witness else None,
        "attempts": result.attempts,
        "method": result.method,
        "relations": result.relations,
        "escalations": len(result.history),
    }
    if result.params is not None:
        doc["smoothness_bound"] = result.params.smoothness_bound
        doc["half_width"] = result.params.half_width
    if elapsed_ms is not None:
        doc["time_ms"] = elapsed_ms
    return doc


def prime_factorization(n: int, config: SieveConfig) -> list[int]:
    """Re-run the classical pipeline on composite outputs until only primes remain."""
    pending = [n]
    primes: list[int] = []
    while pending:
        m = pending.pop()
        if m == 1:
            continue
        if isprime(m):
            primes.append(m)
            continue
        result = factor(m, config=config)
        pending.extend((result.f1, result.f2))
    return sorted(primes)


def _timed[T](call: Callable[[], T]) -> tuple[T, float]:
    start = time.perf_counter()
    value = call()
    return value, round((time.perf_counter() - start) * 1000.0, 3)


def _params(
    run: RunConfig, config: SieveConfig, degenerate: bool, max_half_width: int
) -> SieveParams | None:
    return None if degenerate else run.params_for(config, max_half_width=max_half_width)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@app.command("factor")
def factor_cmd(
    number: NumberArg,
    mode: ModeOpt = Mode.CLASSICAL,
    smoothness_bound: BoundOpt = None,
    interval_half_width: HalfWidthOpt = None,
    seed: SeedOpt = 0,
    trace: Annotated[
        Path | None, typer.Option("--trace", help="Write the quantum-sim trace as JSON lines.")
    ] = None,
    json_output: JsonOpt = False,
    no_timing: NoTimingOpt = False,
    max_retries: RetriesOpt = None,
    recurse: Annotated[
        bool, typer.Option("--recurse", help="Keep factoring composite outputs.")
    ] = False,
    sample_measurements: SampleOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Factor an integer with the classical sieve, the simulated quantum sieve, or both."""
    config = _setup(verbose, max_retries)
    run = RunConfig(
        n=_parse_n(number),
        mode=mode,
        smoothness_bound=smoothness_bound,
        half_width=interval_half_width,
        seed=seed,
        trace_path=trace,
        json_output=json_output,
    )
    if run.trace_path is not None and run.mode is Mode.CLASSICAL:
        print_error("--trace needs --mode quantum-sim or both")
        raise typer.Exit(code=EXIT_INVALID)

    results: dict[str, tuple[FactorResult, float | None]] = {}
    try:
        degenerate = split_degenerate(run.n, config) is not None
        if run.mode in (Mode.CLASSICAL, Mode.BOTH):
            params = _params(run, config, degenerate, config.max_half_width)
            with create_status("Sieving…"):
                result, ms = _timed(lambda: factor(run.n, params, config=config))
            results[Mode.CLASSICAL] = (result, None if no_timing else ms)
        if run.mode in (Mode.QUANTUM, Mode.BOTH):
            params = _params(run, config, degenerate, config.quantum_max_half_width)
            sample_seed = run.seed if sample_measurements else None
            with create_status("Simulating…"):
                (result, pipeline_trace), ms = _timed(
                    lambda: run_pipeline(run.n, params, config=config, seed=sample_seed)
                )
            results[Mode.QUANTUM] = (result, None if no_timing else ms)
            if run.trace_path is not None:
                write_trace(pipeline_trace, run.trace_path)
        primes = prime_factorization(run.n, config) if recurse else None
    except QsieveError as exc:
        raise _fail(exc) from exc
    except OSError as exc:
        print_error(f"cannot write trace: {exc}")
        raise typer.Exit(code=EXIT_INVALID) from exc

    pairs = {label: (r.f1, r.f2) for label, (r, _) in results.items()}
    equal = len(set(pairs.values())) == 1

    if run.json_output:
        doc: dict[str, Any] = {
            "n": run.n,
            "mode": str(run.mode),
            "results": {str(k): _result_dict(r, ms) for k, (r, ms) in results.items()},
        }
        if run.mode is Mode.BOTH:
            doc["verdict"] = "EQUAL" if equal else "DIFFER"
        if primes is not None:
            doc["prime_factors"] = primes
        typer.echo(json.dumps(doc, sort_keys=True))
    else:
        for label, (result, ms) in results.items():
            print_factor_result(str(label), run.n, result, ms)
        if run.mode is Mode.BOTH:
            print_verdict(equal)
        if primes is not None:
            print_success(f"{run.n} = " + " × ".join(str(p) for p in primes))
        if run.trace_path is not None:
            print_step(f"trace written to {run.trace_path}")

    if not equal:
        raise typer.Exit(code=EXIT_FAILURE)


@app.command("trace")
def trace_cmd(
    number: NumberArg,
    trace: Annotated[Path, typer.Option("--trace", help="Output JSON-lines path.")],
    smoothness_bound: BoundOpt = None,
    interval_half_width: HalfWidthOpt = None,
    seed: SeedOpt = 0,
    sample_measurements: SampleOpt = False,
    max_retries: RetriesOpt = None,
    json_output: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Run the simulated pipeline and dump every step's state as JSON lines."""
    config = _setup(verbose, max_retries)
    run = RunConfig(
        n=_parse_n(number),
        mode=Mode.QUANTUM,
        smoothness_bound=smoothness_bound,
        half_width=interval_half_width,
        seed=seed,
        trace_path=trace,
        json_output=json_output,
    )
    try:
        degenerate = split_degenerate(run.n, config) is not None
        params = _params(run, config, degenerate, config.quantum_max_half_width)
        sample_seed = run.seed if sample_measurements else None
        result, pipeline_trace = run_pipeline(run.n, params, config=config, seed=sample_seed)
    except QsieveError as exc:
        raise _fail(exc) from exc
    try:
        count = write_trace(pipeline_trace, trace)
    except OSError as exc:
        print_error(f"cannot write trace {trace}: {exc}")
        raise typer.Exit(code=EXIT_INVALID) from exc

    if run.json_output:
        doc: dict[str, Any] = {
            "n": run.n,
            "records": count,
            "steps": pipeline_trace.labels,
            "factors": [result.f1, result.f2],
            "trace": str(trace),
        }
        typer.echo(json.dumps(doc, sort_keys=True))
    else:
        console.print(trace_table(pipeline_trace))
        print_success(f"{count} records written to {trace}")


@app.command("bench")
def bench_cmd(
    sizes: Annotated[str, typer.Argument(help="Bit sizes as START:STOP:STEP, e.g. 32:48:8.")],
    repetitions: Annotated[
        int, typer.Option("--repetitions", "-r", help="Semiprimes per size.")
    ] = 5,
    seed: SeedOpt = 0,
    json_output: JsonOpt = False,
    no_timing: NoTimingOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Time the classical sieve on seeded random semiprimes."""
    config = _setup(verbose)
    try:
        bit_sizes = bench_mod.parse_size_range(sizes)
        if repetitions < 1:
            raise bench_mod.BenchError(f"repetitions must be >= 1, got {repetitions}")
    except bench_mod.BenchError as exc:
        print_error(str(exc))
        raise typer.Exit(code=EXIT_INVALID) from exc

    try:
        with create_status(f"Benchmarking {len(bit_sizes)} sizes…"):
            rows = bench_mod.run_bench(bit_sizes, repetitions, seed, config=config)
    except QsieveError as exc:
        raise _fail(exc) from exc

    timing = not no_timing
    if json_output:
        doc: dict[str, Any] = {
            "seed": seed,
            "rows": [row.to_dict(timing=timing) for row in rows],
        }
        typer.echo(json.dumps(doc, sort_keys=True))
        return
    console.print(bench_table(rows, timing=timing))
    medians = [row.median_ms for row in rows]
    if timing and any(b < a for a, b in zip(medians, medians[1:], strict=False)):
        print_warning("median time is not monotone across sizes")


@app.command("validate-trace")
def validate_trace_cmd(
    path: Annotated[Path, typer.Argument(help="JSON-lines trace to re-verify.")],
    verbose: VerboseOpt = False,
) -> None:
    """Re-read a trace and re-verify step order and per-step normalisation."""
    _setup(verbose)
    if not path.is_file():
        print_error(f"trace not found: {path}")
        raise typer.Exit(code=EXIT_INVALID)
    try:
        report = validate_records(read_trace(path))
    except TraceError as exc:
        raise _fail(exc) from exc
    if not report.ok:
        for problem in report.problems:
            print_error(problem)
        raise typer.Exit(code=EXIT_FAILURE)
    print_success(
        f"{len(report.steps)} steps, {report.terms} terms, "
        f"max norm deviation {report.max_norm_deviation:.3g}"
    )
