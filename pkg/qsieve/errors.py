"""Error codes shared by every qsieve module."""

from __future__ import annotations

from enum import StrEnum


class ErrorCode(StrEnum):
    INVALID_INPUT = "INVALID_INPUT"
    INPUT_IS_PRIME = "INPUT_IS_PRIME"
    ZERO_MODULUS = "ZERO_MODULUS"
    INVALID_ODD_PRIME = "INVALID_ODD_PRIME"
    EMPTY_FACTOR_BASE = "EMPTY_FACTOR_BASE"
    INSUFFICIENT_RELATIONS = "INSUFFICIENT_RELATIONS"
    INCONSISTENT_FACTOR_BASE = "INCONSISTENT_FACTOR_BASE"
    INVALID_DEPENDENCY = "INVALID_DEPENDENCY"
    ALL_DEPENDENCIES_TRIVIAL = "ALL_DEPENDENCIES_TRIVIAL"
    FACTORIZATION_FAILED = "FACTORIZATION_FAILED"
    INVALID_STATE = "INVALID_STATE"
    DOMAIN_OVERFLOW = "DOMAIN_OVERFLOW"
    IMPOSSIBLE_OUTCOME = "IMPOSSIBLE_OUTCOME"
    NON_REVERSIBLE_MAP = "NON_REVERSIBLE_MAP"
    NO_SMOOTH_VALUES = "NO_SMOOTH_VALUES"
    INVALID_TRACE = "INVALID_TRACE"


class QsieveError(Exception):
    """Base class: a one-line ``detail`` plus an :class:`ErrorCode`."""

    code: ErrorCode = ErrorCode.INVALID_STATE

    def __init__(self, detail: str, code: ErrorCode | None = None) -> None:
        super().__init__(detail)
        self.detail = detail
        if code is not None:
            self.code = code
