"""Fixtures shared by unit and integration tests."""

from __future__ import annotations

import os

import pytest


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep a developer's .env and QSIEVE_* variables out of every test."""
    monkeypatch.setattr("qsieve.config.load_dotenv", lambda *a, **kw: None)
    for name in list(os.environ):
        if name.startswith("QSIEVE_"):
            monkeypatch.delenv(name)
