"""
Result rendering for the embedlab CLI.

Command results, tables and errors are rendered either as Rich console
output for people or as indented JSON for scripts. Results go to standard
output and logs to standard error; the CLI picks JSON on its own when
standard output is not a terminal.
"""

import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Literal

import pandas as pd
from rich.console import Console
from rich.table import Table

logger = logging.getLogger(__name__)

OutputFormat = Literal["text", "json"]
EXIT_CODES = (0, 1, 2, 130)


@dataclass
class CommandResult:
    """What a finished command reports: written files, headline metrics and counts."""

    command: str
    status: Literal["success", "failure"] = "success"
    exit_code: int = 0
    outputs: dict[str, str] = field(default_factory=dict)  # label -> path
    metrics: dict[str, float] = field(default_factory=dict)
    details: dict[str, int | str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status not in ("success", "failure"):
            raise ValueError(f"unknown status {self.status!r}")
        if self.exit_code not in EXIT_CODES:
            raise ValueError(f"exit code {self.exit_code} is not one of {EXIT_CODES}")


def _json_value(value: object) -> object:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _dump(payload: object) -> None:
    print(json.dumps(payload, indent=2))


class OutputFormatter:
    """
    Render results in text (Rich) or JSON mode.

    Args:
        output_format: "text" or "json"
        quiet: Drop progress messages
        verbose: Kept for symmetry with the logging flags
    """

    def __init__(self, output_format: OutputFormat = "text", quiet: bool = False, verbose: bool = False) -> None:
        if output_format not in ("text", "json"):
            raise ValueError(f"unknown output format {output_format!r}")
        self.output_format = output_format
        self.quiet = quiet
        self.verbose = verbose
        self.console = Console(file=sys.stdout)

    @property
    def is_json(self) -> bool:
        return self.output_format == "json"

    def print_result(self, result: CommandResult) -> None:
        if self.is_json:
            _dump(asdict(result))
            return

        ok = result.status == "success"
        marker = "[bold green]✓[/bold green]" if ok else "[bold red]✗[/bold red]"
        self.console.print(f"{marker} [bold]{result.command}[/bold]")
        for label, path in result.outputs.items():
            self.console.print(f"  {label}: [cyan]{path}[/cyan]")
        for label, value in result.details.items():
            self.console.print(f"  {label}: {value}")

        if result.metrics:
            table = self._table("Metrics", ["metric", "value"])
            for name, value in result.metrics.items():
                table.add_row(name, f"{value:.6f}")
            self.console.print(table)

    def print_table(self, title: str, table: pd.DataFrame) -> None:
        """
        Print a results table such as an ablation or a checkpoint time series.

        JSON mode emits {"title": ..., "rows": [...]} with NaN cells as null.
        """
        if self.is_json:
            records = table.to_dict(orient="records")
            _dump({"title": title, "rows": [{k: _json_value(v) for k, v in row.items()} for row in records]})
            return

        rich_table = self._table(title, [str(col) for col in table.columns])
        for row in table.itertuples(index=False):
            rich_table.add_row(*(f"{v:.6f}" if isinstance(v, float) else str(v) for v in row))
        self.console.print(rich_table)

    def print_error(self, message: str, hint: str | None = None) -> None:
        """
        Report a failed command, with an optional suggestion for fixing it.

        The message is also logged at error level.
        """
        if self.is_json:
            _dump({"error": message, **({"hint": hint} if hint else {})})
        else:
            self.console.print(f"[bold red]Error:[/bold red] {message}")
            if hint:
                self.console.print(f"[yellow]Fix:[/yellow] {hint}")
        logger.error(message if hint is None else f"{message} ({hint})")

    def print_progress(self, message: str, style: str = "") -> None:
        """Status line for people; silent in quiet or JSON mode."""
        if self.quiet or self.is_json:
            return
        self.console.print(message, style=style or None)

    def _table(self, title: str, columns: list[str]) -> Table:
        table = Table(title=title, show_header=True, header_style="bold magenta")
        for name in columns:
            table.add_column(name, style="cyan" if name in ("metric", "suite") else None)
        return table
