"""Rich console utilities for the qsieve CLI."""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING

from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.status import Status
from rich.table import Table

if TYPE_CHECKING:
    from qsieve.bench import BenchRow
    from qsieve.classical_qs import FactorResult
    from qsieve.quantum_qs import PipelineTrace

console = Console()
err_console = Console(stderr=True)


def print_success(message: str) -> None:
    """Print a green success message with a checkmark."""
    console.print(f"[bold green]✔[/bold green] {escape(message)}", soft_wrap=True)


def print_error(message: str) -> None:
    """Print a one-line red diagnostic to stderr."""
    err_console.print(f"[bold red]✘[/bold red] {escape(message)}", soft_wrap=True)


def print_warning(message: str) -> None:
    err_console.print(f"[bold yellow]⚠[/bold yellow] {escape(message)}", soft_wrap=True)


def print_step(message: str) -> None:
    """Print a blue step indicator."""
    console.print(f"[bold blue]→[/bold blue] {escape(message)}", soft_wrap=True)


def create_status(message: str) -> Status:
    """Return a Rich Status context manager for long-running operations."""
    return err_console.status(f"[bold cyan]{escape(message)}[/bold cyan]", spinner="dots")


def print_factor_result(
    label: str, n: int, result: FactorResult, elapsed_ms: float | None
) -> None:
    """Display one pipeline's factorization in a panel."""
    lines = [f"[bold]{n}[/bold] = {result.f1} × {result.f2}"]
    if result.witness is not None:
        x, y = result.witness
        lines.append(f"witness  x = {x}, y = {y}")
    if result.params is not None:
        lines.append(
            f"params   B = {result.params.smoothness_bound}, M = {result.params.half_width}, "
            f"relations = {result.relations}"
        )
    else:
        lines.append(f"method   {result.method}")
    lines.append(f"attempts {result.attempts}")
    if result.history:
        lines.append(f"escalations {len(result.history)}")
    if elapsed_ms is not None:
        lines.append(f"time     {elapsed_ms:.3f} ms")
    title = f"[bold green]{label}[/bold green]"
    console.print(Panel("\n".join(lines), title=title, border_style="green", expand=False))


def print_verdict(equal: bool) -> None:
    if equal:
        console.print("[bold green]verdict: EQUAL[/bold green]")
    else:
        console.print("[bold red]verdict: DIFFER[/bold red]")


def bench_table(rows: Sequence[BenchRow], *, timing: bool = True) -> Table:
    table = Table(title="Classical sieve benchmark")
    table.add_column("bits", justify="right")
    table.add_column("samples", justify="right")
    if timing:
        table.add_column("median ms", justify="right")
        table.add_column("p95 ms", justify="right")
    table.add_column("relations", justify="right")
    table.add_column("B", justify="right")
    table.add_column("M", justify="right")
    for row in rows:
        timing_cells = [f"{row.median_ms:.3f}", f"{row.p95_ms:.3f}"] if timing else []
        table.add_row(
            str(row.bits),
            str(row.samples),
            *timing_cells,
            str(row.relations),
            str(row.smoothness_bound),
            str(row.half_width),
        )
    return table


def trace_table(trace: PipelineTrace) -> Table:
    table = Table(title="Pipeline trace")
    table.add_column("step")
    table.add_column("support", justify="right")
    table.add_column("norm", justify="right")
    table.add_column("pr", justify="right")
    table.add_column("note")
    for step in trace.steps:
        snap = step.snapshot
        table.add_row(
            step.label,
            str(snap.support) if snap else "-",
            f"{snap.norm:.12g}" if snap else "-",
            f"{step.probability:.6g}" if step.probability is not None else "",
            escape(step.note or ""),
        )
    return table
