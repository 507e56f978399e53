"""Corpus formats: tokenization, edits, M2 annotation files and parallel TSV.

A sentence is a tuple of non-empty, whitespace-free token strings.  Edits are
anchored on token indices of the source sentence, following the M2 convention.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence

Sentence = tuple[str, ...]

NOOP_LINE = "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{annotator}"
NO_CATEGORY = "-NONE-"


class ValidationError(ValueError):
    """Structurally invalid edits or sentences."""


class M2ParseError(ValidationError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


# ---------------------------------------------------------------------------
# tokenization

# Suffixes split off a word stem, longest first.  "n't" takes the final
# consonant of "can't"/"won't" with it ("ca" + "n't"), as in PTB/spaCy output.
CONTRACTION_SUFFIXES = ("n't", "'ll", "'re", "'ve", "'s", "'d", "'m")
_APOSTROPHES = str.maketrans({"’": "'"})
_ABBREVIATION = re.compile(r"^(?:[A-Za-z]\.){2,}$")
_ELLIPSIS = "..."


def _is_punct(ch: str) -> bool:
    return not ch.isalnum() and not ch.isspace()


def _split_contraction(core: str) -> list[str]:
    low = core.translate(_APOSTROPHES).lower()
    for suffix in CONTRACTION_SUFFIXES:
        if low.endswith(suffix) and len(low) > len(suffix):
            stem = core[: -len(suffix)]
            if stem[-1:].isalpha():
                return _tokenize_chunk(stem) + [core[-len(suffix):]]
    return [core]


def _is_contraction(chunk: str) -> bool:
    return chunk.translate(_APOSTROPHES).lower() in CONTRACTION_SUFFIXES


def _tokenize_chunk(chunk: str) -> list[str]:
    if not chunk:
        return []
    if _ABBREVIATION.match(chunk) or _is_contraction(chunk):
        return [chunk]
    lead: list[str] = []
    trail: list[str] = []
    start, end = 0, len(chunk)
    while start < end and _is_punct(chunk[start]):
        if chunk.startswith(_ELLIPSIS, start) and start + 3 <= end:
            lead.append(_ELLIPSIS)
            start += 3
        else:
            lead.append(chunk[start])
            start += 1
    while end > start and _is_punct(chunk[end - 1]):
        if _ABBREVIATION.match(chunk[start:end]):
            break
        if end - 3 >= start and chunk[end - 3 : end] == _ELLIPSIS:
            trail.append(_ELLIPSIS)
            end -= 3
        else:
            trail.append(chunk[end - 1])
            end -= 1
    core = chunk[start:end]
    middle = _split_contraction(core) if core else []
    return lead + middle + trail[::-1]


def tokenize(text: str) -> Sentence:
    """Whitespace split, punctuation detachment and contraction splitting.

    >>> tokenize("Travel by bus.")
    ('Travel', 'by', 'bus', '.')
    >>> tokenize("don't stop")
    ('do', "n't", 'stop')
    """
    out: list[str] = []
    for chunk in text.split():
        out.extend(_tokenize_chunk(chunk))
    return tuple(out)


def detokenize(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


def make_sentence(tokens: Iterable[str]) -> Sentence:
    sent = tuple(tokens)
    for tok in sent:
        if not tok or any(ch.isspace() for ch in tok):
            raise ValidationError(f"invalid token {tok!r}")
    return sent


# ---------------------------------------------------------------------------
# edits


@dataclass(frozen=True)
class Edit:
    """Replace ``source[span_start:span_end]`` with ``replacement``."""

    span_start: int
    span_end: int
    replacement: tuple[str, ...] = ()
    category: str | None = None

    def __post_init__(self):
        if not isinstance(self.replacement, tuple):
            object.__setattr__(self, "replacement", tuple(self.replacement))
        if self.span_start < 0 or self.span_end < self.span_start:
            raise ValidationError(f"bad span ({self.span_start}, {self.span_end})")
        if self.span_start == self.span_end and not self.replacement:
            raise ValidationError(f"empty insertion at {self.span_start}")
        for tok in self.replacement:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValidationError(f"invalid replacement token {tok!r}")

    @property
    def key(self) -> tuple[int, int, tuple[str, ...]]:
        """Identity used for matching: span and replacement, not category."""
        return (self.span_start, self.span_end, self.replacement)

    @property
    def is_insertion(self) -> bool:
        return self.span_start == self.span_end

    def with_category(self, category: str | None) -> "Edit":
        return Edit(self.span_start, self.span_end, self.replacement, category)


def _conflict(a: Edit, b: Edit) -> bool:
    # a sorts before b
    if b.span_start < a.span_end:
        return True
    return a.is_insertion and b.is_insertion and a.span_start == b.span_start


def sort_edits(edits: Iterable[Edit]) -> list[Edit]:
    return sorted(edits, key=lambda e: (e.span_start, e.span_end))


def validate_edits(edits: Sequence[Edit], length: int) -> None:
    prev = None
    for e in edits:
        if e.span_end > length:
            raise ValidationError(f"edit span ({e.span_start}, {e.span_end}) beyond sentence length {length}")
        if prev is not None:
            if (e.span_start, e.span_end) < (prev.span_start, prev.span_end):
                raise ValidationError("edits are not sorted")
            if _conflict(prev, e):
                raise ValidationError(
                    f"overlapping edits ({prev.span_start}, {prev.span_end}) and ({e.span_start}, {e.span_end})"
                )
        prev = e


def apply_edits(source: Sequence[str], edits: Sequence[Edit]) -> Sentence:
    validate_edits(edits, len(source))
    out: list[str] = []
    pos = 0
    for e in edits:
        out.extend(source[pos : e.span_start])
        out.extend(e.replacement)
        pos = e.span_end
    out.extend(source[pos:])
    return tuple(out)


# ---------------------------------------------------------------------------
# M2


@dataclass(frozen=True)
class AnnotatedPair:
    source: Sentence
    annotations: tuple[tuple[int, tuple[Edit, ...]], ...]

    def __post_init__(self):
        object.__setattr__(self, "source", make_sentence(self.source))
        anns = tuple((int(a), tuple(edits)) for a, edits in self.annotations)
        if not anns:
            raise ValidationError("an annotated pair needs at least one annotator")
        ids = [a for a, _ in anns]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate annotator ids {ids}")
        for _, edits in anns:
            validate_edits(edits, len(self.source))
        object.__setattr__(self, "annotations", anns)

    def edits(self, annotator: int | None = None) -> tuple[Edit, ...]:
        """Edits of ``annotator`` (default: the first listed annotator)."""
        if annotator is None:
            return self.annotations[0][1]
        for a, edits in self.annotations:
            if a == annotator:
                return edits
        raise KeyError(annotator)

    def target(self, annotator: int | None = None) -> Sentence:
        return apply_edits(self.source, self.edits(annotator))


def _iter_text_lines(stream) -> Iterator[str]:
    for raw in stream:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw


def _parse_annotation(line: str, lineno: int, ntokens: int) -> tuple[int, Edit | None]:
    fields = line[2:].split("|||")
    if len(fields) != 6:
        raise M2ParseError(lineno, f"expected 6 '|||' fields, got {len(fields)}")
    span = fields[0].split()
    if len(span) != 2:
        raise M2ParseError(lineno, f"bad span field {fields[0]!r}")
    try:
        start, end = int(span[0]), int(span[1])
        annotator = int(fields[5])
    except ValueError:
        raise M2ParseError(lineno, "non-integer span or annotator id") from None
    category = fields[1]
    if category == "noop" or (start, end) == (-1, -1):
        return annotator, None
    repl_field = fields[2].strip()
    replacement = () if repl_field in ("", NO_CATEGORY) else tuple(repl_field.split())
    if end > ntokens:
        raise M2ParseError(lineno, f"span ({start}, {end}) beyond sentence length {ntokens}")
    try:
        edit = Edit(start, end, replacement, None if category == NO_CATEGORY else category)
    except ValidationError as exc:
        raise M2ParseError(lineno, str(exc)) from None
    return annotator, edit


def _finish_block(source: Sentence, edits: dict[int, list[Edit]], lineno: int) -> AnnotatedPair:
    if not edits:
        edits = {0: []}
    anns = []
    for annotator in sorted(edits):
        ordered = sort_edits(edits[annotator])
        try:
            validate_edits(ordered, len(source))
        except ValidationError as exc:
            raise ValidationError(f"block ending at line {lineno}, annotator {annotator}: {exc}") from None
        anns.append((annotator, tuple(ordered)))
    return AnnotatedPair(source, tuple(anns))


def read_m2(stream) -> list[AnnotatedPair]:
    """Parse an M2 stream (bytes or text) into annotated pairs."""
    pairs: list[AnnotatedPair] = []
    source: Sentence | None = None
    edits: dict[int, list[Edit]] = {}
    lineno = 0
    for lineno, line in enumerate(_iter_text_lines(stream), 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            if source is not None:
                pairs.append(_finish_block(source, edits, lineno))
                source, edits = None, {}
            continue
        if line.startswith("S ") or line == "S":
            if source is not None:
                pairs.append(_finish_block(source, edits, lineno))
                edits = {}
            source = tuple(line[2:].split())
        elif line.startswith("A "):
            if source is None:
                raise M2ParseError(lineno, "annotation line before any S line")
            annotator, edit = _parse_annotation(line, lineno, len(source))
            bucket = edits.setdefault(annotator, [])
            if edit is not None:
                bucket.append(edit)
        else:
            raise M2ParseError(lineno, f"unrecognised line {line[:30]!r}")
    if source is not None:
        pairs.append(_finish_block(source, edits, lineno))
    return pairs


def read_m2_file(path) -> list[AnnotatedPair]:
    with open(path, "rb") as fh:
        return read_m2(fh)


def format_edit(edit: Edit, annotator: int) -> str:
    repl = " ".join(edit.replacement)
    cat = edit.category if edit.category is not None else NO_CATEGORY
    return f"A {edit.span_start} {edit.span_end}|||{cat}|||{repl}|||REQUIRED|||-NONE-|||{annotator}"


def format_m2_block(pair: AnnotatedPair) -> str:
    lines = ["S " + " ".join(pair.source)]
    for annotator, edits in pair.annotations:
        if not edits:
            lines.append(NOOP_LINE.format(annotator=annotator))
        lines.extend(format_edit(e, annotator) for e in edits)
    return "\n".join(lines) + "\n\n"


def write_m2(pairs: Iterable[AnnotatedPair], stream) -> int:
    """Write pairs in M2 format; returns the number of bytes written."""
    total = 0
    binary = not isinstance(stream, io.TextIOBase)
    for pair in pairs:
        data = format_m2_block(pair).encode("utf-8")
        stream.write(data if binary else data.decode("utf-8"))
        total += len(data)
    return total


def dumps_m2(pairs: Iterable[AnnotatedPair]) -> bytes:
    buf = io.BytesIO()
    write_m2(pairs, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# plain text and parallel TSV


def read_lines(stream) -> Iterator[str]:
    for line in _iter_text_lines(stream):
        yield line.rstrip("\r\n")


def read_tsv(stream) -> Iterator[tuple[str, str]]:
    for lineno, line in enumerate(read_lines(stream), 1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise M2ParseError(lineno, "expected exactly one TAB in parallel TSV line")
        yield parts[0], parts[1]


def write_tsv(pairs: Iterable[tuple[str, str]], stream: IO[str]) -> None:
    for src, tgt in pairs:
        stream.write(f"{src}\t{tgt}\n")
