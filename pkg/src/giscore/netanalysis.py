"""Gene-level network analysis: quadrant tallies, hubs, profiles, similarity.

Works on :class:`ScoredPair` values (one per gene pair, produced by
:func:`score_pair`). Hub detection is pure count arithmetic on per-gene
quadrant tallies; profile similarity is a Pearson correlation over the
positions two interaction profiles share.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    EmptyProfileError,
    InsufficientOverlapError,
    UndefinedCorrelationError,
)
from .ingest import StrainPairRecord
from .measures import (
    InteractionScores,
    Measure,
    PositiveType,
    QuadrantClass,
    Sign,
    Thresholds,
    classify_quadrant,
    is_interacting,
    j_score,
    m_score,
    positive_type,
)


@dataclass(frozen=True)
class ScoredPair:
    """One gene pair with both scores and their classification."""

    gene_a: str
    gene_b: str
    scores: InteractionScores
    p_value: float
    quadrant: QuadrantClass
    sign_m: Sign
    sign_j: Sign
    pos_type_m: PositiveType
    pos_type_j: PositiveType
    f01: float
    f10: float
    f11: float

    @property
    def is_self_pair(self) -> bool:
        return self.gene_a == self.gene_b

    def interacting(self, measure: Measure) -> bool:
        if measure is Measure.M:
            return self.quadrant in (QuadrantClass.MJ, QuadrantClass.M_JBAR)
        return self.quadrant in (QuadrantClass.MJ, QuadrantClass.MBAR_J)

    def score(self, measure: Measure) -> float:
        return self.scores.m if measure is Measure.M else self.scores.log_j

    def partner(self, gene: str) -> str:
        if gene == self.gene_a:
            return self.gene_b
        if gene == self.gene_b:
            return self.gene_a
        raise ValueError(f"{gene!r} is not an endpoint of ({self.gene_a!r}, {self.gene_b!r})")


def _sign(value: float, interacting: bool) -> Sign:
    if not interacting:
        return Sign.NONE
    return Sign.POSITIVE if value > 0.0 else Sign.NEGATIVE


def score_pair(record: StrainPairRecord, th: Thresholds) -> ScoredPair:
    """Score and classify one record; genes keep query/array orientation."""
    scores = InteractionScores(
        m=m_score(record.smf_query, record.smf_array, record.dmf),
        log_j=j_score(record.smf_query, record.smf_array, record.dmf),
    )
    quadrant = classify_quadrant(scores, record.p_value, th)
    m_hit = is_interacting(scores.m, th.m_thresh, record.p_value, th.p_max)
    j_hit = is_interacting(scores.log_j, th.j_thresh, record.p_value, th.p_max)
    sign_m = _sign(scores.m, m_hit)
    sign_j = _sign(scores.log_j, j_hit)
    ptype = positive_type(record.smf_query, record.smf_array, record.dmf)
    return ScoredPair(
        gene_a=record.query_gene,
        gene_b=record.array_gene,
        scores=scores,
        p_value=record.p_value,
        quadrant=quadrant,
        sign_m=sign_m,
        sign_j=sign_j,
        pos_type_m=ptype if sign_m is Sign.POSITIVE else PositiveType.NOT_APPLICABLE,
        pos_type_j=ptype if sign_j is Sign.POSITIVE else PositiveType.NOT_APPLICABLE,
        f01=record.smf_query,
        f10=record.smf_array,
        f11=record.dmf,
    )


@dataclass
class GeneQuadrantCounts:
    """Per-gene tallies of incident pairs by quadrant class."""

    gene: str
    n_mj: int = 0
    n_mbar_j: int = 0
    n_mjbar: int = 0
    n_mbar_jbar: int = 0

    def bump(self, quadrant: QuadrantClass) -> None:
        if quadrant is QuadrantClass.MJ:
            self.n_mj += 1
        elif quadrant is QuadrantClass.MBAR_J:
            self.n_mbar_j += 1
        elif quadrant is QuadrantClass.M_JBAR:
            self.n_mjbar += 1
        else:
            self.n_mbar_jbar += 1


def quadrant_counts(pairs: Iterable[ScoredPair]) -> dict[str, GeneQuadrantCounts]:
    """Tally each pair into both incident genes' buckets.

    A self-pair is incident to its gene twice and counts twice, which keeps
    the bucket totals at exactly 2x the pair count per quadrant.
    """
    counts: dict[str, GeneQuadrantCounts] = {}
    for pair in pairs:
        for gene in (pair.gene_a, pair.gene_b):
            entry = counts.get(gene)
            if entry is None:
                entry = counts[gene] = GeneQuadrantCounts(gene=gene)
            entry.bump(pair.quadrant)
    return counts


def exclusive_hubs(
    counts: Mapping[str, GeneQuadrantCounts], ratio: float = 0.1
) -> list[GeneQuadrantCounts]:
    """Genes whose J-only connections dwarf everything M sees.

    Criterion: n_mj + n_mjbar < ratio * n_mbar_j. Sorted by J-only degree
    descending, then gene name.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    hits = [c for c in counts.values() if c.n_mj + c.n_mjbar < ratio * c.n_mbar_j]
    return sorted(hits, key=lambda c: (-c.n_mbar_j, c.gene))


def shared_hubs(
    counts: Mapping[str, GeneQuadrantCounts],
    min_common: int = 100,
    max_discord: float = 0.05,
) -> list[GeneQuadrantCounts]:
    """Genes both measures agree on: many common calls, few discordant ones.

    Criterion: n_mj > min_common - 1 and n_mbar_j + n_mjbar < max_discord * n_mj.
    """
    if min_common < 1:
        raise ValueError(f"min_common must be >= 1, got {min_common}")
    if not (0.0 < max_discord < 1.0):
        raise ValueError(f"max_discord must be in (0, 1), got {max_discord}")
    hits = [
        c
        for c in counts.values()
        if c.n_mj > min_common - 1 and c.n_mbar_j + c.n_mjbar < max_discord * c.n_mj
    ]
    return sorted(hits, key=lambda c: (-c.n_mj, c.gene))


def symmetric_exclusive_hubs(
    counts: Mapping[str, GeneQuadrantCounts],
    min_exclusive: int = 10,
    ratio: float = 0.1,
) -> list[GeneQuadrantCounts]:
    """Mirror of :func:`exclusive_hubs` with the measures swapped.

    Criterion: n_mjbar > min_exclusive and n_mj + n_mbar_j < ratio * n_mjbar.
    """
    if min_exclusive < 1:
        raise ValueError(f"min_exclusive must be >= 1, got {min_exclusive}")
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    hits = [
        c
        for c in counts.values()
        if c.n_mjbar > min_exclusive and c.n_mj + c.n_mbar_j < ratio * c.n_mjbar
    ]
    return sorted(hits, key=lambda c: (-c.n_mjbar, c.gene))


def intermediary_connectors(
    hub_genes: set[str], pairs: Iterable[ScoredPair], measure: Measure
) -> set[str]:
    """Non-hub genes connected to at least two distinct hubs by the measure."""
    if not hub_genes:
        raise ValueError("hub set must be non-empty")
    hub_partners: dict[str, set[str]] = {}
    for pair in pairs:
        if pair.is_self_pair or not pair.interacting(measure):
            continue
        for gene, other in ((pair.gene_a, pair.gene_b), (pair.gene_b, pair.gene_a)):
            if gene not in hub_genes and other in hub_genes:
                hub_partners.setdefault(gene, set()).add(other)
    return {gene for gene, hubs in hub_partners.items() if len(hubs) >= 2}


def interaction_profile(
    gene: str,
    pairs: Iterable[ScoredPair],
    measure: Measure,
    universe: Sequence[str],
    significant_only: bool = False,
) -> np.ndarray:
    """Score vector of ``gene`` against every universe gene; NaN marks absence.

    Raw scores by default; ``significant_only`` blanks pairs the measure
    does not call interacting. The self position stays absent.
    """
    index = {g: i for i, g in enumerate(universe)}
    profile = np.full(len(universe), np.nan)
    seen = False
    for pair in pairs:
        if gene not in (pair.gene_a, pair.gene_b):
            continue
        seen = True
        if pair.is_self_pair:
            continue
        if significant_only and not pair.interacting(measure):
            continue
        partner = pair.partner(gene)
        pos = index.get(partner)
        if pos is not None:
            profile[pos] = pair.score(measure)
    if not seen:
        raise EmptyProfileError(f"gene {gene!r} appears in no scored pair")
    return profile


def profile_pcc(p1: np.ndarray, p2: np.ndarray) -> float:
    """Pearson correlation over the positions present in both profiles."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError(f"profile shapes differ: {p1.shape} vs {p2.shape}")
    mask = ~(np.isnan(p1) | np.isnan(p2))
    n = int(mask.sum())
    if n < 3:
        raise InsufficientOverlapError(f"profiles share {n} positions, need >= 3")
    x = p1[mask] - p1[mask].mean()
    y = p2[mask] - p2[mask].mean()
    sx = float(np.dot(x, x))
    sy = float(np.dot(y, y))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("a shared-position restriction is constant")
    r = float(np.dot(x, y)) / (sx * sy) ** 0.5
    return max(-1.0, min(1.0, r))


class SimilarityResult(NamedTuple):
    pairs: list[tuple[str, str, float]]
    skipped: int


def similarity_pairs(
    pairs: Sequence[ScoredPair],
    measure: Measure,
    pcc_threshold: float = 0.2,
    significant_only: bool = False,
) -> SimilarityResult:
    """All unordered gene pairs whose profile correlation exceeds the threshold.

    Pairs whose correlation is undefined (too little overlap, constant
    restriction) are skipped and counted. Sorted by correlation descending,
    then gene names.
    """
    universe = sorted({g for p in pairs for g in (p.gene_a, p.gene_b)})
    profiles = {
        gene: interaction_profile(gene, pairs, measure, universe, significant_only)
        for gene in universe
    }
    hits: list[tuple[str, str, float]] = []
    skipped = 0
    for g1, g2 in itertools.combinations(universe, 2):
        try:
            r = profile_pcc(profiles[g1], profiles[g2])
        except (InsufficientOverlapError, UndefinedCorrelationError):
            skipped += 1
            continue
        if r > pcc_threshold:
            hits.append((g1, g2, r))
    hits.sort(key=lambda t: (-t[2], t[0], t[1]))
    return SimilarityResult(pairs=hits, skipped=skipped)


class DegreeEntry(NamedTuple):
    degree_m: int
    degree_j: int


def degree_table(pairs: Iterable[ScoredPair]) -> dict[str, DegreeEntry]:
    """Distinct interacting partners per gene and measure; self-pairs excluded."""
    partners_m: dict[str, set[str]] = {}
    partners_j: dict[str, set[str]] = {}
    genes: set[str] = set()
    for pair in pairs:
        genes.update((pair.gene_a, pair.gene_b))
        if pair.is_self_pair:
            continue
        for store, measure in ((partners_m, Measure.M), (partners_j, Measure.J)):
            if pair.interacting(measure):
                store.setdefault(pair.gene_a, set()).add(pair.gene_b)
                store.setdefault(pair.gene_b, set()).add(pair.gene_a)
    return {
        gene: DegreeEntry(
            degree_m=len(partners_m.get(gene, ())),
            degree_j=len(partners_j.get(gene, ())),
        )
        for gene in sorted(genes)
    }
