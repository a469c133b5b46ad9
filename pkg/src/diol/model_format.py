"""Portable MODEL.TXT serialization, strict parsing and validation.

Grammar (UTF-8, LF line endings, one trailing LF)::

    DIOL_MODEL v1
    TYPE: KMEANS
    K: <int>
    D: <int>
    FEATURES: <name>,<name>,...
    CENTROIDS:
    <f> <f> ...          K rows of D reals
    MEAN:
    <f> <f> ...
    STD:
    <f> <f> ...
    THRESHOLD: <f>
    SCALE: <f>
    END

Reals are written with ``repr``, the shortest decimal string that reads
back to the same binary double, so a parsed model is bitwise equal to the
one that was written.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

from .kmeans import KMeansModel, NormStats

FORMAT_VERSION = 1
MAGIC = "DIOL_MODEL"
MODEL_TYPE = "KMEANS"
MAX_K = 64
MAX_DIM = 32

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?", re.ASCII)
_NONFINITE = re.compile(r"[+-]?(?:nan|inf|infinity)", re.IGNORECASE)
_INT = re.compile(r"[0-9]+")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*", re.ASCII)
_SECTIONS = ("TYPE", "K", "D", "FEATURES", "CENTROIDS", "MEAN", "STD", "THRESHOLD", "SCALE", "END")


class ErrorKind(enum.Enum):
    MissingSection = "MissingSection"
    CountMismatch = "CountMismatch"
    NonFiniteValue = "NonFiniteValue"
    RangeViolation = "RangeViolation"
    BadSyntax = "BadSyntax"
    UnsupportedVersion = "UnsupportedVersion"


class ParseError(ValueError):
    """Rejected model document. ``line`` is 1-based; 0 for in-memory checks."""

    def __init__(self, kind: ErrorKind, line: int, detail: str):
        super().__init__(f"{kind.value} at line {line}: {detail}")
        self.kind = kind
        self.line = line
        self.detail = detail


@dataclass(frozen=True)
class ModelDocument:
    format_version: int
    model: KMeansModel


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize(model: KMeansModel) -> str:
    validate(model)
    lines = [
        f"{MAGIC} v{FORMAT_VERSION}",
        f"TYPE: {MODEL_TYPE}",
        f"K: {model.k}",
        f"D: {model.dim}",
        "FEATURES: " + ",".join(model.feature_names),
        "CENTROIDS:",
    ]
    lines += [" ".join(_fmt(x) for x in row) for row in model.centroids]
    lines += [
        "MEAN:",
        " ".join(_fmt(x) for x in model.norm.mean),
        "STD:",
        " ".join(_fmt(x) for x in model.norm.std),
        f"THRESHOLD: {_fmt(model.threshold)}",
        f"SCALE: {_fmt(model.scale)}",
        "END",
    ]
    return "\n".join(lines) + "\n"


def _check(k, dim, names, centroids, mean, std, threshold, scale, where=None):
    """Range and count rules shared by ``parse`` and ``validate``.

    ``where`` maps a field name to the line it came from.
    """
    where = where or {}

    def fail(kind, fld, detail):
        raise ParseError(kind, where.get(fld, 0), detail)

    if not 1 <= k <= MAX_K:
        fail(ErrorKind.RangeViolation, "K", f"K={k} outside [1, {MAX_K}]")
    if not 1 <= dim <= MAX_DIM:
        fail(ErrorKind.RangeViolation, "D", f"D={dim} outside [1, {MAX_DIM}]")
    if len(names) != dim:
        fail(ErrorKind.CountMismatch, "FEATURES", f"{len(names)} feature names for D={dim}")
    if len(set(names)) != len(names):
        fail(ErrorKind.RangeViolation, "FEATURES", "duplicate feature names")
    for name in names:
        if not _NAME.fullmatch(name):
            fail(ErrorKind.BadSyntax, "FEATURES", f"bad feature name {name!r}")
    if len(centroids) != k:
        fail(ErrorKind.CountMismatch, "CENTROIDS", f"{len(centroids)} centroid rows for K={k}")
    for i, row in enumerate(centroids):
        if len(row) != dim:
            fail(ErrorKind.CountMismatch, f"CENTROIDS.{i}", f"centroid {i} has {len(row)} values for D={dim}")
        if not all(math.isfinite(x) for x in row):
            fail(ErrorKind.NonFiniteValue, f"CENTROIDS.{i}", f"non-finite value in centroid {i}")
    for label, vec in (("MEAN", mean), ("STD", std)):
        if len(vec) != dim:
            fail(ErrorKind.CountMismatch, label, f"{label} has {len(vec)} values for D={dim}")
        if not all(math.isfinite(x) for x in vec):
            fail(ErrorKind.NonFiniteValue, label, f"non-finite value in {label}")
    if not all(x > 0 for x in std):
        fail(ErrorKind.RangeViolation, "STD", "every STD entry must be > 0")
    for label, val in (("THRESHOLD", threshold), ("SCALE", scale)):
        if not math.isfinite(val):
            fail(ErrorKind.NonFiniteValue, label, f"{label} is not finite")
        if not val > 0:
            fail(ErrorKind.RangeViolation, label, f"{label} must be > 0")


def validate(model: KMeansModel) -> None:
    """Raise :class:`ParseError` (line 0) on the first violated rule."""
    _check(
        model.k,
        model.dim,
        list(model.feature_names),
        model.centroids,
        model.norm.mean,
        model.norm.std,
        model.threshold,
        model.scale,
    )


class _Reader:
    def __init__(self, text: str):
        if "\r" in text:
            lineno = text[: text.index("\r")].count("\n") + 1
            raise ParseError(ErrorKind.BadSyntax, lineno, "carriage return; LF line endings required")
        if not text.endswith("\n"):
            lineno = text.count("\n") + 1
            if text == "":
                raise ParseError(ErrorKind.MissingSection, 1, "empty document")
            raise ParseError(ErrorKind.BadSyntax, lineno, "missing final line feed")
        self.lines = text[:-1].split("\n")
        self.pos = 0

    @property
    def lineno(self) -> int:
        return self.pos + 1

    def peek(self):
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def next(self, expecting: str) -> str:
        line = self.peek()
        if line is None:
            raise ParseError(ErrorKind.MissingSection, self.lineno, f"document ends before {expecting}")
        self.pos += 1
        return line

    def labelled(self, label: str, *, has_value: bool = True, bare: bool = False) -> str:
        line = self.next(label)
        prefix = label if bare else f"{label}: " if has_value else f"{label}:"
        if has_value and line.startswith(prefix):
            return line[len(prefix):]
        if not has_value and line == prefix:
            return ""
        self.pos -= 1
        found = _section_of(line)
        if found is not None and found != label:
            raise ParseError(ErrorKind.MissingSection, self.lineno, f"expected {label}, found {found}")
        if found is None and _looks_numeric_row(line) and label in ("MEAN", "STD", "THRESHOLD"):
            raise ParseError(ErrorKind.CountMismatch, self.lineno, f"extra data row where {label} expected")
        raise ParseError(ErrorKind.BadSyntax, self.lineno, f"malformed {label} line {line!r}")


def _section_of(line: str):
    head = line.split(":", 1)[0] if ":" in line else line
    return head if head in _SECTIONS else None


def _looks_numeric_row(line: str) -> bool:
    toks = line.split(" ")
    return all(_NUMBER.fullmatch(t) or _NONFINITE.fullmatch(t) for t in toks) and bool(line)


def _real(tok: str, lineno: int) -> float:
    if _NUMBER.fullmatch(tok):
        val = float(tok)
        if not math.isfinite(val):
            raise ParseError(ErrorKind.NonFiniteValue, lineno, f"{tok!r} overflows to a non-finite value")
        return val
    if _NONFINITE.fullmatch(tok):
        raise ParseError(ErrorKind.NonFiniteValue, lineno, f"non-finite value {tok!r}")
    raise ParseError(ErrorKind.BadSyntax, lineno, f"bad number {tok!r}")


def _int(tok: str, lineno: int) -> int:
    if not _INT.fullmatch(tok):
        raise ParseError(ErrorKind.BadSyntax, lineno, f"bad integer {tok!r}")
    return int(tok)


def _row(line: str, lineno: int, dim: int, what: str) -> list[float]:
    if line == "" or "\t" in line or "  " in line or line != line.strip(" "):
        raise ParseError(ErrorKind.BadSyntax, lineno, f"{what}: entries must be separated by single spaces")
    toks = line.split(" ")
    vals = [_real(t, lineno) for t in toks]
    if len(vals) != dim:
        raise ParseError(ErrorKind.CountMismatch, lineno, f"{what} has {len(vals)} values for D={dim}")
    return vals


def parse(text: str) -> ModelDocument:
    """Parse a MODEL.TXT document.

    Section order is fixed and unknown lines are rejected. Any violation
    raises :class:`ParseError`; no partially built model ever escapes.
    """
    r = _Reader(text)
    where: dict[str, int] = {}

    header = r.next(MAGIC)
    m = re.fullmatch(rf"{MAGIC} v([0-9]+)", header)
    if m is None:
        if header.startswith(MAGIC + " v"):
            raise ParseError(ErrorKind.BadSyntax, 1, f"bad version tag {header!r}")
        raise ParseError(ErrorKind.MissingSection, 1, f"expected {MAGIC} header")
    if int(m.group(1)) != FORMAT_VERSION:
        raise ParseError(ErrorKind.UnsupportedVersion, 1, f"format version {m.group(1)} not supported")

    model_type = r.labelled("TYPE")
    if model_type != MODEL_TYPE:
        if _NAME.fullmatch(model_type):
            raise ParseError(ErrorKind.UnsupportedVersion, r.lineno - 1, f"model type {model_type!r} not supported")
        raise ParseError(ErrorKind.BadSyntax, r.lineno - 1, f"bad model type {model_type!r}")

    k = _int(r.labelled("K"), r.lineno - 1)
    where["K"] = r.lineno - 1
    dim = _int(r.labelled("D"), r.lineno - 1)
    where["D"] = r.lineno - 1
    # range-check counts before they size anything
    if not 1 <= k <= MAX_K:
        raise ParseError(ErrorKind.RangeViolation, where["K"], f"K={k} outside [1, {MAX_K}]")
    if not 1 <= dim <= MAX_DIM:
        raise ParseError(ErrorKind.RangeViolation, where["D"], f"D={dim} outside [1, {MAX_DIM}]")

    names_line = r.labelled("FEATURES")
    where["FEATURES"] = r.lineno - 1
    names = names_line.split(",")
    for name in names:
        if not _NAME.fullmatch(name):
            raise ParseError(ErrorKind.BadSyntax, where["FEATURES"], f"bad feature name {name!r}")
    if len(names) != dim:
        raise ParseError(ErrorKind.CountMismatch, where["FEATURES"], f"{len(names)} feature names for D={dim}")

    r.labelled("CENTROIDS", has_value=False)
    where["CENTROIDS"] = r.lineno - 1
    centroids = []
    for i in range(k):
        line = r.next(f"centroid row {i + 1} of {k}")
        if _section_of(line) is not None:
            raise ParseError(
                ErrorKind.CountMismatch, where["CENTROIDS"], f"CENTROIDS has {i} rows but K={k}"
            )
        where[f"CENTROIDS.{i}"] = r.lineno - 1
        centroids.append(_row(line, r.lineno - 1, dim, f"centroid {i}"))

    vectors = {}
    for label in ("MEAN", "STD"):
        r.labelled(label, has_value=False)
        line = r.next(f"{label} row")
        where[label] = r.lineno - 1
        if _section_of(line) is not None:
            raise ParseError(ErrorKind.CountMismatch, where[label], f"{label} row missing")
        vectors[label] = _row(line, where[label], dim, label)

    scalars = {}
    for label in ("THRESHOLD", "SCALE"):
        tok = r.labelled(label)
        where[label] = r.lineno - 1
        scalars[label] = _real(tok, where[label])

    r.labelled("END", has_value=False, bare=True)
    if r.peek() is not None:
        raise ParseError(ErrorKind.BadSyntax, r.lineno, "content after END")

    _check(k, dim, names, centroids, vectors["MEAN"], vectors["STD"], scalars["THRESHOLD"], scalars["SCALE"], where)
    model = KMeansModel(
        centroids=centroids,
        norm=NormStats(vectors["MEAN"], vectors["STD"]),
        threshold=scalars["THRESHOLD"],
        scale=scalars["SCALE"],
        feature_names=names,
    )
    return ModelDocument(FORMAT_VERSION, model)


def load(path) -> ModelDocument:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse(fh.read())


def dump(model: KMeansModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize(model))
