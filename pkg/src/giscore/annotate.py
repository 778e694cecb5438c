"""Functional-category bookkeeping: catalogs, segregation tables, enrichment.

Annotations come in as two-column TSV (gene<TAB>category). Segregation
tables count, per category and interaction sign, how the two measures'
calls overlap among co-annotated pairs; enrichment is an exact
hypergeometric upper tail with step-down (Holm) family-wise correction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import IO, Iterable, Sequence

from .errors import ContainmentError
from .ingest import _as_text_lines
from .measures import QuadrantClass, Sign
from .netanalysis import ScoredPair

log = logging.getLogger(__name__)


class AnnotationKind(str, Enum):
    GO_BP = "GO_BP"
    KEGG = "KEGG"
    COMPLEX = "complex"


#: Category size filters: minimum co-annotated pairs called by both measures.
DEFAULT_MIN_PAIRS: dict[AnnotationKind, int] = {
    AnnotationKind.GO_BP: 500,
    AnnotationKind.KEGG: 10,
    AnnotationKind.COMPLEX: 10,
}


@dataclass
class AnnotationCatalog:
    """Gene/category membership in both directions; the maps stay inverses."""

    kind: AnnotationKind
    by_category: dict[str, set[str]] = field(default_factory=dict)
    by_gene: dict[str, set[str]] = field(default_factory=dict)
    malformed_lines: int = 0

    def add(self, gene: str, category: str) -> None:
        self.by_category.setdefault(category, set()).add(gene)
        self.by_gene.setdefault(gene, set()).add(category)

    def categories_of_pair(self, gene_a: str, gene_b: str) -> set[str]:
        """Categories holding both genes (the pair is co-annotated there)."""
        cats_a = self.by_gene.get(gene_a)
        cats_b = self.by_gene.get(gene_b)
        if not cats_a or not cats_b:
            return set()
        return cats_a & cats_b


def load_annotations(source: IO[bytes] | IO[str] | Iterable[str], kind: AnnotationKind) -> AnnotationCatalog:
    """Read gene<TAB>category lines; '#' comments and blanks are ignored,
    duplicates collapse, malformed lines are counted and skipped."""
    catalog = AnnotationCatalog(kind=kind)
    for line in _as_text_lines(source):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            catalog.malformed_lines += 1
            continue
        catalog.add(parts[0].strip(), parts[1].strip())
    if not catalog.by_category:
        log.warning("annotation catalog (%s) is empty", kind.value)
    return catalog


@dataclass(frozen=True)
class CategorySegregation:
    """Per category and sign: overlap of the two measures' calls.

    ``miss_rate_m`` is the fraction of the J calls of this sign that M does
    not make, ``miss_rate_j`` the mirror; both are None when the measure in
    the denominator made no call. ``n_sign_conflicts`` counts pairs in this
    row whose other-measure call carries the opposite sign (such pairs
    appear in both sign rows, once per measure).
    """

    category: str
    sign: Sign
    n_mj: int
    n_mbar_j: int
    n_mjbar: int
    n_sign_conflicts: int

    @property
    def miss_rate_m(self) -> float | None:
        denom = self.n_mj + self.n_mbar_j
        return self.n_mbar_j / denom if denom else None

    @property
    def miss_rate_j(self) -> float | None:
        denom = self.n_mj + self.n_mjbar
        return self.n_mjbar / denom if denom else None


def segregation_table(
    pairs: Sequence[ScoredPair],
    catalog: AnnotationCatalog,
    min_pairs: int | None = None,
    count_either: bool = False,
) -> list[CategorySegregation]:
    """Sign-split call-overlap counts for every large-enough category.

    A category qualifies when the number of its co-annotated pairs called
    interacting by BOTH measures (sign ignored) reaches ``min_pairs``
    (default per catalog kind); ``count_either`` relaxes the filter to
    pairs called by at least one measure. Self-pairs never co-annotate.
    """
    if min_pairs is None:
        min_pairs = DEFAULT_MIN_PAIRS[catalog.kind]
    totals: dict[str, int] = {}
    members: dict[str, list[ScoredPair]] = {}
    for pair in pairs:
        if pair.is_self_pair:
            continue
        cats = catalog.categories_of_pair(pair.gene_a, pair.gene_b)
        if not cats:
            continue
        both = pair.quadrant is QuadrantClass.MJ
        either = pair.quadrant is not QuadrantClass.MBAR_JBAR
        qualifies = either if count_either else both
        for cat in cats:
            members.setdefault(cat, []).append(pair)
            if qualifies:
                totals[cat] = totals.get(cat, 0) + 1
    rows: list[CategorySegregation] = []
    for cat in sorted(members):
        if totals.get(cat, 0) <= min_pairs - 1:
            continue
        for sign in (Sign.POSITIVE, Sign.NEGATIVE):
            n_mj = n_mbar_j = n_mjbar = conflicts = 0
            for pair in members[cat]:
                m_call = pair.sign_m is sign
                j_call = pair.sign_j is sign
                if not (m_call or j_call):
                    continue
                if m_call and j_call:
                    n_mj += 1
                elif j_call:
                    n_mbar_j += 1
                else:
                    n_mjbar += 1
                if (
                    pair.sign_m is not Sign.NONE
                    and pair.sign_j is not Sign.NONE
                    and pair.sign_m is not pair.sign_j
                ):
                    conflicts += 1
            rows.append(
                CategorySegregation(
                    category=cat,
                    sign=sign,
                    n_mj=n_mj,
                    n_mbar_j=n_mbar_j,
                    n_mjbar=n_mjbar,
                    n_sign_conflicts=conflicts,
                )
            )
    return rows


def hypergeom_tail(population: int, successes: int, draws: int, overlap: int) -> float:
    """Exact upper-tail probability of drawing >= overlap marked items.

    Integer combinatorics throughout; the single final division is the only
    rounding step, so small cases are exact to the last bit.
    """
    if not (0 <= successes <= population):
        raise ValueError(f"successes {successes} out of range for population {population}")
    if not (0 <= draws <= population):
        raise ValueError(f"draws {draws} out of range for population {population}")
    lo = max(0, draws + successes - population)
    hi = min(successes, draws)
    if overlap < 0 or overlap > hi:
        raise ValueError(f"overlap {overlap} infeasible for ({population}, {successes}, {draws})")
    if overlap <= lo:
        return 1.0
    numerator = sum(
        comb(successes, i) * comb(population - successes, draws - i)
        for i in range(overlap, hi + 1)
    )
    return numerator / comb(population, draws)


@dataclass(frozen=True)
class EnrichmentResult:
    category: str
    overlap: int
    category_size: int
    p_raw: float
    p_adjusted: float
    significant: bool


def enrichment(
    selected: set[str],
    universe: set[str],
    catalog: AnnotationCatalog,
    alpha: float = 0.05,
) -> list[EnrichmentResult]:
    """Hypergeometric over-representation of each category in ``selected``.

    Tests every category with at least one universe gene, with the
    step-down family-wise adjustment (running maximum of (m - rank + 1) *
    p over the ascending raw p-values). Sorted by raw p, then category.
    """
    if not universe:
        raise ValueError("universe must be non-empty")
    stray = selected - universe
    if stray:
        raise ContainmentError(f"selected genes outside the universe: {sorted(stray)[:5]}")
    tested: list[tuple[str, int, int]] = []
    for cat in sorted(catalog.by_category):
        in_universe = catalog.by_category[cat] & universe
        if not in_universe:
            continue
        tested.append((cat, len(in_universe & selected), len(in_universe)))
    raw = [
        (hypergeom_tail(len(universe), size, len(selected), overlap), cat, overlap, size)
        for cat, overlap, size in tested
    ]
    raw.sort(key=lambda t: (t[0], t[1]))
    m = len(raw)
    results: list[EnrichmentResult] = []
    running = 0.0
    for rank, (p, cat, overlap, size) in enumerate(raw, start=1):
        running = max(running, min(1.0, (m - rank + 1) * p))
        results.append(
            EnrichmentResult(
                category=cat,
                overlap=overlap,
                category_size=size,
                p_raw=p,
                p_adjusted=running,
                significant=running < alpha,
            )
        )
    return results
