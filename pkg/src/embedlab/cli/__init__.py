"""
Typer CLI for embedlab.

Exports the Typer application and the console-script entry point.
"""

from .main import app, main, run

__all__ = ["app", "main", "run"]
