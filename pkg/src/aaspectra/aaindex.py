"""Reader for the AAIndex1 flat-file database of amino-acid indices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

# internal ordering: alphabetical one-letter codes
AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"

# order of the 20 values in an AAIndex1 "I" block (row 1 then row 2)
_I_LINE_ORDER = "ARNDCQEGHI" + "LKMFPSTWYV"


class ParseError(ValueError):
    """Raised when an AAIndex1 record block is malformed."""


@dataclass(frozen=True)
class PropertyRecord:
    accession: str
    description: str
    values: dict[str, float] = field(repr=False)
    has_missing: bool = False

    def vector(self) -> np.ndarray:
        """Values as a float array in alphabetical amino-acid order."""
        return np.array([self.values[aa] for aa in AMINO_ACIDS], dtype=float)


def _parse_value(token: str) -> float:
    if token == "NA":
        return math.nan
    return float(token)


def _parse_block(lines: list[str], offset: int) -> PropertyRecord:
    accession = None
    desc_parts: list[str] = []
    raw_values: list[str] | None = None
    current = None
    i = 0
    while i < len(lines):
        line = lines[i]
        tag = line[:2]
        if tag == "H ":
            accession = line[2:].strip()
            current = "H"
        elif tag == "D ":
            desc_parts.append(line[2:].strip())
            current = "D"
        elif tag == "I ":
            raw_values = []
            j = i + 1
            while j < len(lines) and lines[j].startswith(" "):
                raw_values.extend(lines[j].split())
                j += 1
            i = j
            current = "I"
            continue
        elif line.startswith(" ") and current == "D":
            # continuation of a multi-line description
            desc_parts.append(line.strip())
        elif line[:1].strip():
            current = line[:1]
        i += 1

    where = accession if accession else f"byte offset {offset}"
    if not accession:
        raise ParseError(f"record at {where}: missing H line")
    if raw_values is None:
        raise ParseError(f"record {where}: missing I line")
    if len(raw_values) != 20:
        raise ParseError(f"record {where}: expected 20 values, found {len(raw_values)}")
    try:
        parsed = [_parse_value(tok) for tok in raw_values]
    except ValueError as exc:
        raise ParseError(f"record {where}: {exc}") from None

    by_letter = dict(zip(_I_LINE_ORDER, parsed))
    values = {aa: by_letter[aa] for aa in AMINO_ACIDS}
    has_missing = any(math.isnan(v) for v in parsed)
    return PropertyRecord(accession, " ".join(p for p in desc_parts if p), values, has_missing)


def parse_aaindex(text: str) -> list[PropertyRecord]:
    """Parse AAIndex1 flat text into records, preserving file order.

    Records are delimited by a line containing only ``//``. Missing values
    (``NA``) are stored as NaN and flag the record with ``has_missing``.
    """
    records: list[PropertyRecord] = []
    seen: set[str] = set()
    block: list[str] = []
    block_start = 0
    offset = 0
    for line in text.splitlines(keepends=True):
        stripped = line.rstrip("\r\n")
        if stripped.strip() == "//":
            if any(l.strip() for l in block):
                rec = _parse_block(block, block_start)
                if rec.accession in seen:
                    raise ParseError(f"record {rec.accession}: duplicate accession")
                seen.add(rec.accession)
                records.append(rec)
            block = []
            block_start = offset + len(line.encode())
        else:
            block.append(stripped)
        offset += len(line.encode())
    if any(l.strip() for l in block):
        raise ParseError(f"record at byte offset {block_start}: missing '//' terminator")
    return records


def drop_incomplete(records: list[PropertyRecord]) -> list[PropertyRecord]:
    return [r for r in records if not r.has_missing]


def _fmt(v: float) -> str:
    return "NA" if math.isnan(v) else repr(float(v))


def format_aaindex(records: list[PropertyRecord]) -> str:
    """Serialize records back to AAIndex1 flat text (debugging aid).

    Only the H, D and I lines are written; values use ``repr`` so that a
    re-parse reproduces them exactly.
    """
    out = []
    for rec in records:
        out.append(f"H {rec.accession}")
        out.append(f"D {rec.description}")
        out.append("I    A/L     R/K     N/M     D/F     C/P     Q/S     E/T     G/W     H/Y     I/V")
        first = [_fmt(rec.values[aa]) for aa in _I_LINE_ORDER[:10]]
        second = [_fmt(rec.values[aa]) for aa in _I_LINE_ORDER[10:]]
        out.append("  " + " ".join(first))
        out.append("  " + " ".join(second))
        out.append("//")
    return "\n".join(out) + ("\n" if out else "")


def default_aaindex_path() -> Path:
    """Path of the AAIndex1 release bundled with the package."""
    return Path(str(resources.files("aaspectra") / "data" / "aaindex1"))


def load_aaindex(path: str | Path | None = None) -> list[PropertyRecord]:
    path = default_aaindex_path() if path is None else Path(path)
    return parse_aaindex(path.read_text(encoding="latin-1"))
