"""Allow running with ``python -m qsieve``."""

from qsieve.cli import app

app(prog_name="qsieve")
