"""Streaming ingestion of SGA-style tab-separated fitness files.

The published pair files are plain UTF-8 TSV, header first, no quoting,
with one row per query/array strain pair. Parsing is single-pass and keeps
no more than one row in memory; filtering follows the published data's
cleaning rules (drop rows with non-numeric/NaN numeric fields or negative
fitness) and every drop is tallied in an :class:`IngestReport`.

Row filtering precedence (first failing check claims the row):

1. structural problems (too few columns, empty strain id) -> malformed
2. numeric fields that are empty, unparseable or non-finite -> NaN
3. negative fitness values -> negative
4. p-value outside [0, 1] -> malformed
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .errors import InvalidIdentifierError, SchemaError
from .measures import m_score

# Column labels of the published SGA pair files; exact match is tried first,
# the substring patterns are the case-insensitive fallback.
_EXACT_NAMES = {
    "query_strain": ("Query Strain ID",),
    "array_strain": ("Array Strain ID",),
    "smf_query": ("Query single mutant fitness (SMF)",),
    "smf_array": ("Array SMF",),
    "dmf": ("Double mutant fitness",),
    "p_value": ("P-value",),
}
_SUBSTRING_PATTERNS = {
    "query_strain": ("query strain",),
    "array_strain": ("array strain",),
    "smf_query": ("query single mutant fitness", "query smf"),
    "smf_array": ("array smf", "array single mutant fitness"),
    "dmf": ("double mutant fitness",),
    "p_value": ("p-value", "p value", "pvalue"),
}
_FIELDS = ("query_strain", "array_strain", "smf_query", "smf_array", "dmf", "p_value")


@dataclass(frozen=True)
class SgaColumnMap:
    """0-based column indices of the six fields the scorer consumes."""

    query_strain: int
    array_strain: int
    smf_query: int
    smf_array: int
    dmf: int
    p_value: int

    def __post_init__(self) -> None:
        indices = self.as_tuple()
        if len(set(indices)) != len(indices):
            raise SchemaError(f"column indices must be distinct, got {indices}")
        if min(indices) < 0:
            raise SchemaError(f"column indices must be >= 0, got {indices}")

    def as_tuple(self) -> tuple[int, ...]:
        return (self.query_strain, self.array_strain, self.smf_query,
                self.smf_array, self.dmf, self.p_value)

    @classmethod
    def from_header(cls, header: list[str]) -> "SgaColumnMap":
        """Resolve indices from a header row.

        Exact name match first; unresolved fields fall back to the first
        not-yet-claimed column whose name contains the pattern
        case-insensitively.
        """
        resolved: dict[str, int] = {}
        for fname in _FIELDS:
            for name in _EXACT_NAMES[fname]:
                if name in header:
                    resolved[fname] = header.index(name)
                    break
        lowered = [h.lower() for h in header]
        for fname in _FIELDS:
            if fname in resolved:
                continue
            claimed = set(resolved.values())
            for pattern in _SUBSTRING_PATTERNS[fname]:
                hits = [i for i, h in enumerate(lowered) if pattern in h and i not in claimed]
                if hits:
                    resolved[fname] = hits[0]
                    break
        missing = [f for f in _FIELDS if f not in resolved]
        if missing:
            raise SchemaError(f"header {header!r} does not expose columns for: {missing}")
        return cls(**resolved)


@dataclass(frozen=True)
class StrainPairRecord:
    """One cleaned SGA row: strains, extracted genes, fitness triple, p-value."""

    query_strain: str
    array_strain: str
    query_gene: str
    array_gene: str
    smf_query: float
    smf_array: float
    dmf: float
    p_value: float

    @property
    def is_self_pair(self) -> bool:
        return self.query_gene == self.array_gene

    def gene_pair(self) -> tuple[str, str]:
        """Unordered gene pair key (sorted tuple)."""
        a, b = self.query_gene, self.array_gene
        return (a, b) if a <= b else (b, a)


@dataclass
class IngestReport:
    rows_read: int = 0
    rows_kept: int = 0
    rows_dropped_nan: int = 0
    rows_dropped_negative: int = 0
    rows_dropped_malformed: int = 0

    def consistent(self) -> bool:
        dropped = self.rows_dropped_nan + self.rows_dropped_negative + self.rows_dropped_malformed
        return self.rows_read == self.rows_kept + dropped

    def as_dict(self) -> dict[str, int]:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped_nan": self.rows_dropped_nan,
            "rows_dropped_negative": self.rows_dropped_negative,
            "rows_dropped_malformed": self.rows_dropped_malformed,
        }


def extract_gene(strain_id: str) -> str:
    """Systematic gene name from a strain id: prefix before the first
    underscore (allele suffixes hang after it), uppercased."""
    strain_id = strain_id.strip()
    if not strain_id:
        raise InvalidIdentifierError("empty strain identifier")
    return strain_id.split("_", 1)[0].upper()


def _as_text_lines(source: IO[bytes] | IO[str] | Iterable[str]) -> Iterator[str]:
    if isinstance(source, io.TextIOBase):
        return iter(source)
    if hasattr(source, "read"):
        return iter(io.TextIOWrapper(source, encoding="utf-8"))  # type: ignore[arg-type]
    return iter(source)


def _parse_float(text: str) -> float:
    """Float or NaN; empty, unparseable and non-finite all map to NaN."""
    try:
        value = float(text)
    except ValueError:
        return math.nan
    return value if math.isfinite(value) else math.nan


def parse_sga(
    source: IO[bytes] | IO[str] | Iterable[str],
    column_map: SgaColumnMap | None = None,
) -> tuple[Iterator[StrainPairRecord], IngestReport]:
    """Stream cleaned records out of an SGA pair file.

    The first line is taken as the header unless ``column_map`` is given.
    Returns the record iterator plus a live report; the report's counters
    are final once the iterator is exhausted. A missing required column is
    fatal; bad rows are counted and skipped.
    """
    lines = _as_text_lines(source)
    if column_map is None:
        try:
            header_line = next(lines)
        except StopIteration:
            raise SchemaError("input is empty; no header row") from None
        column_map = SgaColumnMap.from_header(header_line.rstrip("\r\n").split("\t"))
    report = IngestReport()
    last_needed = max(column_map.as_tuple())

    def records() -> Iterator[StrainPairRecord]:
        for line in lines:
            report.rows_read += 1
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) <= last_needed:
                report.rows_dropped_malformed += 1
                continue
            query_strain = fields[column_map.query_strain].strip()
            array_strain = fields[column_map.array_strain].strip()
            if not query_strain or not array_strain:
                report.rows_dropped_malformed += 1
                continue
            smf_q = _parse_float(fields[column_map.smf_query])
            smf_a = _parse_float(fields[column_map.smf_array])
            dmf = _parse_float(fields[column_map.dmf])
            p_value = _parse_float(fields[column_map.p_value])
            if any(math.isnan(v) for v in (smf_q, smf_a, dmf, p_value)):
                report.rows_dropped_nan += 1
                continue
            if smf_q < 0.0 or smf_a < 0.0 or dmf < 0.0:
                report.rows_dropped_negative += 1
                continue
            if not (0.0 <= p_value <= 1.0):
                report.rows_dropped_malformed += 1
                continue
            report.rows_kept += 1
            yield StrainPairRecord(
                query_strain=query_strain,
                array_strain=array_strain,
                query_gene=extract_gene(query_strain),
                array_gene=extract_gene(array_strain),
                smf_query=smf_q,
                smf_array=smf_a,
                dmf=dmf,
                p_value=p_value,
            )

    return records(), report


def _aggregation_rank(rec: StrainPairRecord) -> tuple:
    # Total order: min p-value wins, then smaller |M|, then strain ids,
    # then the remaining numeric fields so duplicates cannot flip results.
    return (
        rec.p_value,
        abs(m_score(rec.smf_query, rec.smf_array, rec.dmf)),
        rec.query_strain,
        rec.array_strain,
        rec.smf_query,
        rec.smf_array,
        rec.dmf,
    )


def aggregate_gene_pairs(records: Iterable[StrainPairRecord]) -> list[StrainPairRecord]:
    """Collapse allele-level rows to one record per unordered gene pair.

    The surviving record is the minimum of :func:`_aggregation_rank`, so the
    result is independent of input order and idempotent. Self-pairs (both
    strains mapping to the same gene) are kept; ``is_self_pair`` flags them.
    """
    best: dict[tuple[str, str], StrainPairRecord] = {}
    for rec in records:
        key = rec.gene_pair()
        cur = best.get(key)
        if cur is None or _aggregation_rank(rec) < _aggregation_rank(cur):
            best[key] = rec
    return [best[key] for key in sorted(best)]
