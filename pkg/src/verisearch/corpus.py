"""Question/solution datasets: parsing, validation, and serialization.

Records are UTF-8 line-delimited JSON objects. Seed records carry a
"question" field and an "answer" field whose final line is a ground-truth
marker ("#### <number>"). Generated records reuse the same two fields (the
answer text ends with an "[ANS] <number>." line instead) and add "ppl",
"step_score" and "path_score".

Reasoning paths may embed calculator annotations of the form
"<<expression=result>>"; these are evaluated with exact rational
arithmetic.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

ANSWER_MARKER = "[ANS]"
GROUND_TRUTH_MARKER = "####"

# Absolute tolerance for numeric answer comparison, applied after both
# sides were converted from their decimal spellings.
ANSWER_TOLERANCE = Fraction(1, 10_000)

_CURRENCY = "$€£¥"


class DatasetFormatError(ValueError):
    """A record stream violates the dataset layout."""


class CalculatorError(ValueError):
    """A calculator annotation cannot be evaluated."""


# ---------------------------------------------------------------------------
# canonical answers


@dataclass(frozen=True)
class CanonicalAnswer:
    """A normalized final answer: an exact rational when parseable, else the
    stripped original string. Equality and hashing are exact; use
    :func:`answers_equal` for tolerance-aware numeric comparison."""

    value: Fraction | str

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.value, Fraction)

    def __str__(self) -> str:
        if isinstance(self.value, Fraction):
            return format_number(self.value)
        return self.value


def _clean_numeric_text(raw: str) -> str:
    text = raw.strip()
    while text and text[0] in _CURRENCY:
        text = text[1:].lstrip()
    text = text.rstrip(".")
    return text.replace(",", "").strip()


def normalize_answer(raw: str | int | float | Fraction) -> CanonicalAnswer:
    """Normalize a raw answer. Strips whitespace, trailing periods, thousands
    separators and currency signs; parses to an exact rational when possible.
    Idempotent: normalizing a normalized answer's string form is a no-op."""
    if isinstance(raw, Fraction):
        return CanonicalAnswer(raw)
    if isinstance(raw, int):
        return CanonicalAnswer(Fraction(raw))
    if isinstance(raw, float):
        # shortest round-tripping decimal spelling, parsed exactly
        return CanonicalAnswer(Fraction(repr(raw)))
    cleaned = _clean_numeric_text(raw)
    if cleaned:
        try:
            return CanonicalAnswer(Fraction(cleaned))
        except (ValueError, ZeroDivisionError):
            pass
    return CanonicalAnswer(raw.strip())


def answers_equal(a: CanonicalAnswer | None, b: CanonicalAnswer | None) -> bool:
    """Numeric answers compare with absolute tolerance 1e-4; everything else
    falls back to exact equality. A missing answer never matches."""
    if a is None or b is None:
        return False
    if isinstance(a.value, Fraction) and isinstance(b.value, Fraction):
        return abs(a.value - b.value) <= ANSWER_TOLERANCE
    return a.value == b.value


def extract_answer(path: str) -> CanonicalAnswer | None:
    """Pull the final answer out of a reasoning path.

    Returns the normalized number following the last "[ANS]" marker, or None
    when there is no marker or the tail is not numeric."""
    idx = path.rfind(ANSWER_MARKER)
    if idx < 0:
        return None
    answer = normalize_answer(path[idx + len(ANSWER_MARKER):])
    return answer if answer.is_numeric else None


def format_number(value: Fraction) -> str:
    """Render an exact rational: integer, terminating decimal, or "p/q"."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    digits = 0
    while den % 2 == 0:
        den //= 2
        digits += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(digits, fives)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


# ---------------------------------------------------------------------------
# calculator annotations

_ANNOTATION_RE = re.compile(r"<<([^<>]*)>>")
_NUMBER_RE = re.compile(r"\d[\d,]*(?:\.\d+)?|\.\d+")


class _ExprParser:
    """Recursive-descent evaluator over + - * / and parentheses, with exact
    rational arithmetic. Numbers may carry thousands separators."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def parse(self) -> Fraction:
        value = self._expr()
        self._skip_ws()
        if self.pos != len(self.text):
            raise CalculatorError(f"trailing characters in expression {self.text!r}")
        return value

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _expr(self) -> Fraction:
        value = self._term()
        while (op := self._peek()) in ("+", "-"):
            self.pos += 1
            rhs = self._term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def _term(self) -> Fraction:
        value = self._factor()
        while (op := self._peek()) in ("*", "/"):
            self.pos += 1
            rhs = self._factor()
            if op == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise CalculatorError(f"division by zero in expression {self.text!r}")
                value = value / rhs
        return value

    def _factor(self) -> Fraction:
        ch = self._peek()
        if ch == "-":
            self.pos += 1
            return -self._factor()
        if ch == "+":
            self.pos += 1
            return self._factor()
        if ch == "(":
            self.pos += 1
            value = self._expr()
            if self._peek() != ")":
                raise CalculatorError(f"unbalanced parenthesis in expression {self.text!r}")
            self.pos += 1
            return value
        match = _NUMBER_RE.match(self.text, self.pos)
        if not match:
            raise CalculatorError(f"expected a number at position {self.pos} in {self.text!r}")
        self.pos = match.end()
        return Fraction(match.group().replace(",", ""))


def evaluate_expression(expr: str) -> Fraction:
    """Exactly evaluate an arithmetic expression."""
    if not expr.strip():
        raise CalculatorError("empty expression")
    return _ExprParser(expr).parse()


def eval_calculator_annotations(path: str) -> str:
    """Re-evaluate every "<<expr=result>>" annotation in a path.

    Each annotation's expression is evaluated with exact rational arithmetic
    and the result re-emitted; text outside annotations is unchanged. Raises
    CalculatorError for unparseable expressions or division by zero."""

    def _substitute(match: re.Match[str]) -> str:
        inner = match.group(1)
        if "=" not in inner:
            raise CalculatorError(f"annotation {match.group(0)!r} has no '=' part")
        expr, _ = inner.rsplit("=", 1)
        try:
            value = evaluate_expression(expr)
        except CalculatorError as exc:
            raise CalculatorError(f"annotation {match.group(0)!r}: {exc}") from exc
        return f"<<{expr}={format_number(value)}>>"

    return _ANNOTATION_RE.sub(_substitute, path)


def _validate_annotations(path: str) -> None:
    for match in _ANNOTATION_RE.finditer(path):
        inner = match.group(1)
        if "=" not in inner:
            raise CalculatorError(f"annotation {match.group(0)!r} has no '=' part")
        expr, _ = inner.rsplit("=", 1)
        try:
            evaluate_expression(expr)
        except CalculatorError as exc:
            raise CalculatorError(f"annotation {match.group(0)!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class Sample:
    """A seed triple: question, reference reasoning path, ground truth."""

    question: str
    path: str
    ground_truth: CanonicalAnswer

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValueError("sample question is empty")
        if not self.ground_truth.is_numeric:
            raise ValueError(f"ground truth {self.ground_truth!r} is not numeric")
        _validate_annotations(self.path)


@dataclass(frozen=True)
class GeneratedSample:
    """A model-produced solution with its generation statistics."""

    question: str
    path: str
    answer: CanonicalAnswer | None
    ppl: float
    step_score: float | None = None
    path_score: float | None = None

    def __post_init__(self) -> None:
        if self.ppl <= 0:
            raise ValueError(f"ppl must be positive, got {self.ppl}")
        for name, score in (("step_score", self.step_score), ("path_score", self.path_score)):
            if score is not None and not 0.0 <= score <= 1.0:
                raise ValueError(f"{name} {score} outside [0, 1]")


# ---------------------------------------------------------------------------
# record I/O


def _iter_lines(source: Iterable[str] | str | Path) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            yield from handle
        return
    yield from source


def _parse_record(line: str, lineno: int) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"line {lineno}: malformed record: {exc}") from exc
    if not isinstance(record, dict):
        raise DatasetFormatError(f"line {lineno}: record is not an object")
    return record


def _require(record: dict, field_name: str, lineno: int) -> str:
    value = record.get(field_name)
    if not isinstance(value, str):
        raise DatasetFormatError(f"line {lineno}: record missing {field_name!r} field")
    return value


def load_dataset(source: Iterable[str] | str | Path) -> list[Sample]:
    """Parse seed samples from line-delimited records, in input order.

    Each record needs a "question" field and an "answer" field whose final
    line starts with the "#### " ground-truth marker."""
    samples: list[Sample] = []
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        record = _parse_record(line, lineno)
        question = _require(record, "question", lineno)
        answer = _require(record, "answer", lineno)
        lines = answer.split("\n")
        marker = lines[-1] if lines else ""
        if not marker.startswith(GROUND_TRUTH_MARKER):
            raise DatasetFormatError(
                f"line {lineno}: answer has no final {GROUND_TRUTH_MARKER!r} marker line"
            )
        ground_truth = normalize_answer(marker[len(GROUND_TRUTH_MARKER):])
        if not ground_truth.is_numeric:
            raise DatasetFormatError(f"line {lineno}: ground truth {marker!r} is not numeric")
        path = "\n".join(lines[:-1]).rstrip("\n")
        try:
            samples.append(Sample(question=question, path=path, ground_truth=ground_truth))
        except (ValueError, CalculatorError) as exc:
            raise DatasetFormatError(f"line {lineno}: {exc}") from exc
    return samples


def sample_to_record(sample: Sample) -> dict:
    answer = f"{sample.path}\n{GROUND_TRUTH_MARKER} {sample.ground_truth}"
    if not sample.path:
        answer = f"{GROUND_TRUTH_MARKER} {sample.ground_truth}"
    return {"question": sample.question, "answer": answer}


def serialize_samples(samples: Iterable[Sample]) -> str:
    """Inverse of load_dataset: one JSON record per line."""
    return "".join(json.dumps(sample_to_record(s), ensure_ascii=False) + "\n" for s in samples)


def generated_to_record(sample: GeneratedSample) -> dict:
    record: dict = {"question": sample.question, "answer": sample.path, "ppl": sample.ppl}
    if sample.step_score is not None:
        record["step_score"] = sample.step_score
    if sample.path_score is not None:
        record["path_score"] = sample.path_score
    return record


def serialize_generated(samples: Iterable[GeneratedSample]) -> str:
    return "".join(json.dumps(generated_to_record(s), ensure_ascii=False) + "\n" for s in samples)


def load_generated(source: Iterable[str] | str | Path) -> list[GeneratedSample]:
    """Parse generated samples; the answer is extracted from the path's
    final "[ANS]" marker."""
    samples: list[GeneratedSample] = []
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        record = _parse_record(line, lineno)
        question = _require(record, "question", lineno)
        path = _require(record, "answer", lineno)
        ppl = record.get("ppl")
        if not isinstance(ppl, (int, float)):
            raise DatasetFormatError(f"line {lineno}: record missing numeric 'ppl' field")
        try:
            samples.append(
                GeneratedSample(
                    question=question,
                    path=path,
                    answer=extract_answer(path),
                    ppl=float(ppl),
                    step_score=record.get("step_score"),
                    path_score=record.get("path_score"),
                )
            )
        except ValueError as exc:
            raise DatasetFormatError(f"line {lineno}: {exc}") from exc
    return samples
