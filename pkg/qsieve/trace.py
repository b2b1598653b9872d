"""JSON-lines codec for pipeline traces."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, NotRequired, TypedDict

from qsieve.errors import ErrorCode, QsieveError
from qsieve.qsim import Value
from qsieve.quantum_qs import STEP_ORDER, PipelineTrace, TraceStep

logger = logging.getLogger(__name__)

AMPLITUDE_DIGITS = 12
NORM_TOLERANCE = 1e-9


class TraceError(QsieveError):
    code = ErrorCode.INVALID_TRACE


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


class MeasurementDict(TypedDict):
    register: str
    value: Any
    probability: float
    mode: str


class StepRecord(TypedDict):
    type: Literal["step"]
    step: str
    norm: float
    support: int
    truncated: bool
    registers: list[str]
    measurements: list[MeasurementDict]
    probability: NotRequired[float]
    note: NotRequired[str]


class TermRecord(TypedDict):
    type: Literal["term"]
    step: str
    registers: list[str]
    values: list[Any]
    amp_re: float
    amp_im: float


class ResultRecord(TypedDict):
    type: Literal["result"]
    step: Literal["3"]
    factors: list[int]
    witness: list[int] | None
    attempts: int


TraceRecord = StepRecord | TermRecord | ResultRecord

_REQUIRED_FIELDS: dict[str, list[str]] = {
    "step": ["step", "norm", "support", "truncated", "registers", "measurements"],
    "term": ["step", "registers", "values", "amp_re", "amp_im"],
    "result": ["step", "factors", "witness", "attempts"],
}

_FIELD_TYPES: dict[str, type | tuple[type, ...]] = {
    "step": str,
    "norm": (int, float),
    "support": int,
    "truncated": bool,
    "registers": list,
    "measurements": list,
    "probability": (int, float),
    "note": str,
    "values": list,
    "amp_re": (int, float),
    "amp_im": (int, float),
    "factors": list,
    "attempts": int,
}


def _round(x: float) -> float:
    return float(f"{x:.{AMPLITUDE_DIGITS}g}")


def _jsonable(value: Value) -> Any:
    return list(value) if isinstance(value, tuple) else value


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


def step_records(step: TraceStep) -> list[TraceRecord]:
    """Header plus one term record per snapshot term, lexicographic by value tuple."""
    snap = step.snapshot
    registers = list(snap.registers) if snap else []
    header: StepRecord = {
        "type": "step",
        "step": step.label,
        "norm": _round(snap.norm) if snap else 1.0,
        "support": snap.support if snap else 0,
        "truncated": snap.truncated if snap else False,
        "registers": registers,
        "measurements": [
            {
                "register": m.register,
                "value": _jsonable(m.value),
                "probability": _round(m.probability),
                "mode": str(m.mode),
            }
            for m in step.measurements
        ],
    }
    if step.probability is not None:
        header["probability"] = _round(step.probability)
    if step.note:
        header["note"] = step.note

    records: list[TraceRecord] = [header]
    for key, amp in snap.terms if snap else ():
        records.append(
            {
                "type": "term",
                "step": step.label,
                "registers": registers,
                "values": [_jsonable(v) for v in key],
                "amp_re": _round(amp.real),
                "amp_im": _round(amp.imag),
            }
        )
    return records


def trace_records(trace: PipelineTrace) -> list[TraceRecord]:
    records: list[TraceRecord] = []
    for step in trace.steps:
        records.extend(step_records(step))
    result = trace.result
    if result is not None:
        records.append(
            {
                "type": "result",
                "step": "3",
                "factors": [result.f1, result.f2],
                "witness": list(result.witness) if result.witness else None,
                "attempts": result.attempts,
            }
        )
    return records


def serialize(record: TraceRecord) -> str:
    return json.dumps(record, separators=(",", ":"))


def write_trace(trace: PipelineTrace, path: Path) -> int:
    """Write the trace as JSON lines; returns the number of records."""
    records = trace_records(trace)
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(serialize(record))
            f.write("\n")
    logger.info("Wrote %d trace records to %s", len(records), path)
    return len(records)


# ---------------------------------------------------------------------------
# Decoding and validation
# ---------------------------------------------------------------------------


def _check_fields(data: dict[str, Any], line_no: int) -> None:
    kind = data.get("type")
    required = _REQUIRED_FIELDS.get(kind) if isinstance(kind, str) else None
    if required is None:
        raise TraceError(f"line {line_no}: unknown record type {kind!r}")
    for name in required:
        if name not in data:
            raise TraceError(f"line {line_no}: '{kind}' record missing field '{name}'")
    for name, value in data.items():
        expected = _FIELD_TYPES.get(name)
        if expected is not None and not isinstance(value, expected):
            raise TraceError(f"line {line_no}: field '{name}' has type {type(value).__name__}")


def read_trace(path: Path) -> list[dict[str, Any]]:
    """Parse a JSON-lines trace; blank lines are skipped."""
    records: list[dict[str, Any]] = []
    try:
        with path.open(encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise TraceError(f"line {line_no}: invalid JSON: {exc}") from exc
                if not isinstance(obj, dict):
                    raise TraceError(f"line {line_no}: record must be a JSON object")
                _check_fields(obj, line_no)
                records.append(obj)
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc}") from exc
    return records


@dataclass
class TraceReport:
    steps: list[str] = field(default_factory=list)
    terms: int = 0
    max_norm_deviation: float = 0.0
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def _check_step(
    header: dict[str, Any], terms: Sequence[dict[str, Any]], report: TraceReport
) -> None:
    label = header["step"]
    deviation = abs(float(header["norm"]) - 1.0)
    if header["registers"] and not header["truncated"]:
        if len(terms) != header["support"]:
            report.problems.append(
                f"step {label}: {len(terms)} term records but support {header['support']}"
            )
        mass = math.fsum(t["amp_re"] ** 2 + t["amp_im"] ** 2 for t in terms)
        deviation = max(deviation, abs(math.sqrt(mass) - 1.0))
    report.max_norm_deviation = max(report.max_norm_deviation, deviation)
    if deviation > NORM_TOLERANCE:
        report.problems.append(f"step {label}: norm deviates from 1 by {deviation:.3g}")


def validate_records(records: Iterable[dict[str, Any]]) -> TraceReport:
    """Check step order and re-verify every step's normalisation."""
    report = TraceReport()
    header: dict[str, Any] | None = None
    terms: list[dict[str, Any]] = []

    def close() -> None:
        if header is not None:
            _check_step(header, terms, report)

    for record in records:
        kind = record["type"]
        if kind == "step":
            close()
            label = record["step"]
            if label not in STEP_ORDER:
                report.problems.append(f"unknown step label {label!r}")
            else:
                if report.steps and STEP_ORDER.index(label) <= STEP_ORDER.index(report.steps[-1]):
                    report.problems.append(f"step {label} out of order after {report.steps[-1]}")
                report.steps.append(label)
            header, terms = record, []
        elif kind == "term":
            if header is None or record["step"] != header["step"]:
                report.problems.append(f"term record for step {record['step']} outside its step")
                continue
            terms.append(record)
            report.terms += 1
    close()
    logger.debug("Validated %d steps, %d terms", len(report.steps), report.terms)
    return report
