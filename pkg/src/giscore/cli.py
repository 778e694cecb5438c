"""Command-line surface: ingest -> score -> calibrate/hubs/similarity/annotate,
plus the theory commands (simulate, neutrality).

Every command writes its machine-readable outputs under --out-dir and
prints a summary to stdout (--format json|tsv). Outputs are byte
deterministic: stable sort keys, LF line endings, and floats rendered with
at most 6 significant digits ({:.6g}) in every TSV column and summary.

Exit codes: 0 success, 1 fatal input error, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

from . import annotate as annotate_mod
from . import netanalysis as net
from .errors import GiscoreError
from .ingest import IngestReport, StrainPairRecord, aggregate_gene_pairs, parse_sga
from .measures import (
    InteractionScores,
    Measure,
    PositiveType,
    QuadrantClass,
    Sign,
    Thresholds,
    calibrate_j_threshold,
)
from .netanalysis import ScoredPair, score_pair
from .probmodel import is_neutral, model_from_dict, observables_from_model
from .simgen import InteractionPerturbation, oracle_report, sample_population

_SCORE_COLUMNS = (
    "gene_a", "gene_b", "smf_query", "smf_array", "dmf", "p_value",
    "m_score", "log_j", "quadrant", "sign_m", "sign_j", "pos_type_m", "pos_type_j",
)


class ConfigError(Exception):
    """Invalid command-line configuration (exit code 2)."""


def fmt_float(value: float) -> str:
    """Pinned float rendering: 6 significant digits, no negative zero."""
    if value == 0.0:
        value = 0.0
    return format(value, ".6g")


def write_tsv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def write_json(path: Path, obj: object) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _flatten(obj: object, prefix: str = "") -> list[tuple[str, str]]:
    if isinstance(obj, dict):
        items: list[tuple[str, str]] = []
        for key in sorted(obj):
            items.extend(_flatten(obj[key], f"{prefix}{key}."))
        return items
    if isinstance(obj, float):
        return [(prefix.rstrip("."), fmt_float(obj))]
    return [(prefix.rstrip("."), str(obj))]


def emit_summary(summary: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(summary, sort_keys=True))
    else:
        for key, value in _flatten(summary):
            print(f"{key}\t{value}")


def _thresholds(args: argparse.Namespace) -> Thresholds:
    try:
        return Thresholds(m_thresh=args.m_threshold, j_thresh=args.j_threshold, p_max=args.p_max)
    except GiscoreError as exc:
        raise ConfigError(str(exc)) from None


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_records(args: argparse.Namespace) -> tuple[list[StrainPairRecord], IngestReport]:
    with open(args.input, "rb") as fh:
        records, report = parse_sga(fh)
        rows = list(records)
    if not args.no_aggregate:
        rows = aggregate_gene_pairs(rows)
    return rows, report


def _score_all(records: Sequence[StrainPairRecord], th: Thresholds, workers: int) -> list[ScoredPair]:
    if workers <= 1 or len(records) < 2048:
        return [score_pair(r, th) for r in records]
    chunk = -(-len(records) // workers)
    chunks = [records[i : i + chunk] for i in range(0, len(records), chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda rs: [score_pair(r, th) for r in rs], chunks)
    return [p for part in parts for p in part]


def _quadrant_totals(pairs: Sequence[ScoredPair]) -> dict[str, int]:
    totals = {q.value: 0 for q in QuadrantClass}
    for p in pairs:
        totals[p.quadrant.value] += 1
    return totals


def _write_scores(path: Path, pairs: Sequence[ScoredPair]) -> None:
    rows = (
        (
            p.gene_a, p.gene_b,
            fmt_float(p.f01), fmt_float(p.f10), fmt_float(p.f11), fmt_float(p.p_value),
            fmt_float(p.scores.m), fmt_float(p.scores.log_j),
            p.quadrant.value, p.sign_m.value, p.sign_j.value,
            p.pos_type_m.value, p.pos_type_j.value,
        )
        for p in pairs
    )
    write_tsv(path, _SCORE_COLUMNS, rows)


def read_scores(path: str | Path) -> list[ScoredPair]:
    """Load a scores TSV written by the score command."""
    pairs: list[ScoredPair] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != _SCORE_COLUMNS:
            raise GiscoreError(f"{path}: not a scores file (header {header!r})")
        for line in fh:
            f = line.rstrip("\n").split("\t")
            if len(f) != len(_SCORE_COLUMNS):
                raise GiscoreError(f"{path}: malformed scores row {f!r}")
            pairs.append(
                ScoredPair(
                    gene_a=f[0], gene_b=f[1],
                    scores=InteractionScores(m=float(f[6]), log_j=float(f[7])),
                    p_value=float(f[5]),
                    quadrant=QuadrantClass(f[8]),
                    sign_m=Sign(f[9]), sign_j=Sign(f[10]),
                    pos_type_m=PositiveType(f[11]), pos_type_j=PositiveType(f[12]),
                    f01=float(f[2]), f10=float(f[3]), f11=float(f[4]),
                )
            )
    return pairs


def cmd_ingest(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    rows, report = _load_records(args)
    write_tsv(
        out / "pairs.tsv",
        ("gene_a", "gene_b", "smf_query", "smf_array", "dmf", "p_value"),
        (
            (r.query_gene, r.array_gene, fmt_float(r.smf_query), fmt_float(r.smf_array),
             fmt_float(r.dmf), fmt_float(r.p_value))
            for r in rows
        ),
    )
    write_json(out / "ingest_report.json", report.as_dict())
    return {"pairs": len(rows), **report.as_dict()}


def cmd_score(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    th = _thresholds(args)
    rows, report = _load_records(args)
    if not rows:
        print("warning: no rows survived ingestion filtering", file=sys.stderr)
    pairs = _score_all(rows, th, args.workers)
    _write_scores(out / "scores.tsv", pairs)
    quadrants = _quadrant_totals(pairs)
    signs = {
        "M": {s.value: sum(1 for p in pairs if p.sign_m is s) for s in (Sign.POSITIVE, Sign.NEGATIVE)},
        "J": {s.value: sum(1 for p in pairs if p.sign_j is s) for s in (Sign.POSITIVE, Sign.NEGATIVE)},
    }
    discordant = quadrants["MbarJ"] + quadrants["MJbar"]
    denom = discordant + quadrants["MJ"]
    summary = {
        "pairs": len(pairs),
        "quadrants": quadrants,
        "signs": signs,
        "discordance": (discordant / denom) if denom else 0.0,
        "ingest": report.as_dict(),
    }
    write_json(out / "score_summary.json", summary)
    return summary


def cmd_calibrate(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    th = _thresholds(args)
    rows, _ = _load_records(args)
    pairs = _score_all(rows, th, args.workers)
    result = calibrate_j_threshold(pairs, th)
    summary = {
        "tau": result.tau,
        "m_count": result.m_count,
        "j_count": result.j_count,
        "n_significant": result.n_significant,
        "exact": result.exact,
        "tie": result.tie,
    }
    write_json(out / "calibration.json", summary)
    return summary


def _hub_rows(hubs: list[net.GeneQuadrantCounts], lhs, rhs) -> Iterable[Sequence[str]]:
    for c in hubs:
        yield (
            c.gene, str(c.n_mbar_j), str(c.n_mjbar), str(c.n_mj),
            fmt_float(lhs(c)), fmt_float(rhs(c)),
        )


def cmd_hubs(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    pairs = read_scores(args.scores)
    counts = net.quadrant_counts(pairs)
    header = ("gene", "n_mbar_j", "n_mjbar", "n_mj", "criterion_lhs", "criterion_rhs")
    exclusive = net.exclusive_hubs(counts, ratio=args.ratio)
    write_tsv(
        out / "hubs_exclusive.tsv", header,
        _hub_rows(exclusive, lambda c: c.n_mj + c.n_mjbar, lambda c: args.ratio * c.n_mbar_j),
    )
    shared = net.shared_hubs(counts, min_common=args.min_common, max_discord=args.max_discord)
    write_tsv(
        out / "hubs_shared.tsv", header,
        _hub_rows(shared, lambda c: c.n_mbar_j + c.n_mjbar, lambda c: args.max_discord * c.n_mj),
    )
    symmetric = net.symmetric_exclusive_hubs(counts, min_exclusive=args.min_exclusive, ratio=args.ratio)
    write_tsv(
        out / "hubs_symmetric.tsv", header,
        _hub_rows(symmetric, lambda c: c.n_mj + c.n_mbar_j, lambda c: args.ratio * c.n_mjbar),
    )
    degrees = net.degree_table(pairs)
    write_tsv(
        out / "degree.tsv",
        ("gene", "degree_m", "degree_j"),
        ((g, str(d.degree_m), str(d.degree_j)) for g, d in degrees.items()),
    )
    return {
        "genes": len(counts),
        "exclusive_hubs": len(exclusive),
        "shared_hubs": len(shared),
        "symmetric_hubs": len(symmetric),
    }


def cmd_similarity(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    pairs = read_scores(args.scores)
    by_measure = {
        measure: net.similarity_pairs(
            pairs, measure, pcc_threshold=args.pcc_threshold,
            significant_only=args.significant_only,
        )
        for measure in (Measure.M, Measure.J)
    }
    merged: dict[tuple[str, str], dict[str, float]] = {}
    for measure, result in by_measure.items():
        for g1, g2, r in result.pairs:
            merged.setdefault((g1, g2), {})[measure.value] = r
    write_tsv(
        out / "similarity.tsv",
        ("gene_a", "gene_b", "pcc_m", "pcc_j"),
        (
            (g1, g2,
             fmt_float(vals["M"]) if "M" in vals else "",
             fmt_float(vals["J"]) if "J" in vals else "")
            for (g1, g2), vals in sorted(merged.items())
        ),
    )
    summary = {
        "pairs_m": len(by_measure[Measure.M].pairs),
        "pairs_j": len(by_measure[Measure.J].pairs),
        "skipped_m": by_measure[Measure.M].skipped,
        "skipped_j": by_measure[Measure.J].skipped,
        "threshold": args.pcc_threshold,
    }
    write_json(out / "similarity_summary.json", summary)
    return summary


def _load_catalog(args: argparse.Namespace) -> annotate_mod.AnnotationCatalog:
    kind = annotate_mod.AnnotationKind(args.kind)
    with open(args.annotations, "rb") as fh:
        return annotate_mod.load_annotations(fh, kind)


def cmd_annotate(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    pairs = read_scores(args.scores)
    catalog = _load_catalog(args)
    rows = annotate_mod.segregation_table(
        pairs, catalog, min_pairs=args.min_pairs, count_either=args.count_either
    )
    write_tsv(
        out / "segregation.tsv",
        ("category", "sign", "n_mj", "n_mbar_j", "n_mjbar",
         "miss_rate_m", "miss_rate_j", "n_sign_conflicts"),
        (
            (
                r.category, r.sign.value, str(r.n_mj), str(r.n_mbar_j), str(r.n_mjbar),
                fmt_float(r.miss_rate_m) if r.miss_rate_m is not None else "",
                fmt_float(r.miss_rate_j) if r.miss_rate_j is not None else "",
                str(r.n_sign_conflicts),
            )
            for r in rows
        ),
    )
    return {"categories": len({r.category for r in rows}), "rows": len(rows)}


def _read_gene_list(path: str) -> set[str]:
    genes: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                genes.add(line)
    return genes


def cmd_enrich(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    catalog = _load_catalog(args)
    selected = _read_gene_list(args.selected)
    if args.universe:
        universe = _read_gene_list(args.universe)
    elif args.scores:
        universe = {g for p in read_scores(args.scores) for g in (p.gene_a, p.gene_b)}
    else:
        raise ConfigError("enrich needs --universe or --scores to define the gene universe")
    results = annotate_mod.enrichment(selected, universe, catalog, alpha=args.alpha)
    write_tsv(
        out / "enrichment.tsv",
        ("category", "overlap", "category_size", "p_raw", "p_adjusted", "significant"),
        (
            (r.category, str(r.overlap), str(r.category_size),
             fmt_float(r.p_raw), fmt_float(r.p_adjusted), str(r.significant).lower())
            for r in results
        ),
    )
    return {
        "tested": len(results),
        "significant": sum(1 for r in results if r.significant),
        "alpha": args.alpha,
    }


def _load_model(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    model = model_from_dict(doc)
    perturbation = None
    if "perturbation" in doc:
        multipliers = {
            (str(a), str(b)): float(m)
            for a, row in doc["perturbation"].items()
            for b, m in row.items()
        }
        perturbation = InteractionPerturbation(multipliers=multipliers)
    return model, perturbation


def cmd_simulate(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    model, perturbation = _load_model(args.model)
    batch = sample_population(model, perturbation, n=args.samples, seed=args.seed)
    write_tsv(
        out / "samples.tsv",
        ("level_a", "level_b", "effect"),
        ((a, b, "1" if e else "0") for a, b, e in batch.rows()),
    )
    report = oracle_report(model, perturbation, n=args.samples, seed=args.seed)
    write_json(out / "simulation_report.json", report.to_dict())
    worst = max(
        (abs(e.z) for e in report.log_j.values()), default=0.0
    )
    return {
        "n": args.samples,
        "seed": args.seed,
        "model_digest": report.model_digest,
        "max_neutrality_deviation": report.max_neutrality_deviation,
        "max_abs_z": worst,
    }


def cmd_neutrality(args: argparse.Namespace) -> dict:
    out = _out_dir(args)
    model, _ = _load_model(args.model)
    table = observables_from_model(model)
    check = is_neutral(table, tol=args.tol)
    summary = {"neutral": check.neutral, "max_deviation": check.max_deviation, "tol": args.tol}
    write_json(out / "neutrality.json", summary)
    return summary


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for output files")
    common.add_argument("--m-threshold", type=float, default=0.08)
    common.add_argument("--j-threshold", type=float, default=0.0886)
    common.add_argument("--p-max", type=float, default=0.05)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--no-aggregate", action="store_true",
                        help="keep strain-pair granularity (skip gene-pair aggregation)")
    common.add_argument("--format", choices=("json", "tsv"), default="json",
                        help="stdout summary format")

    parser = argparse.ArgumentParser(prog="giscore", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse an SGA file to canonical pairs TSV")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("score", parents=[common], help="score all pairs with both measures")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("calibrate", parents=[common],
                       help="find the J threshold matching the M call count")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("hubs", parents=[common], help="hub detection and degree tables")
    p.add_argument("--scores", required=True, help="scores.tsv from the score command")
    p.add_argument("--ratio", type=float, default=0.1)
    p.add_argument("--min-common", type=int, default=100)
    p.add_argument("--max-discord", type=float, default=0.05)
    p.add_argument("--min-exclusive", type=int, default=10)
    p.set_defaults(func=cmd_hubs)

    p = sub.add_parser("similarity", parents=[common], help="profile-similarity pairs (PCC)")
    p.add_argument("--scores", required=True)
    p.add_argument("--pcc-threshold", type=float, default=0.2)
    p.add_argument("--significant-only", action="store_true",
                   help="build profiles from measure-called pairs only")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("annotate", parents=[common], help="co-annotation segregation table")
    p.add_argument("--scores", required=True)
    p.add_argument("--annotations", required=True, help="gene<TAB>category TSV")
    p.add_argument("--kind", choices=[k.value for k in annotate_mod.AnnotationKind], required=True)
    p.add_argument("--min-pairs", type=int, default=None)
    p.add_argument("--count-either", action="store_true",
                   help="size filter counts pairs called by either measure instead of both")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("enrich", parents=[common], help="category over-representation test")
    p.add_argument("--selected", required=True, help="file with one gene per line")
    p.add_argument("--annotations", required=True)
    p.add_argument("--kind", choices=[k.value for k in annotate_mod.AnnotationKind], required=True)
    p.add_argument("--universe", default=None, help="file with one gene per line")
    p.add_argument("--scores", default=None, help="derive the universe from a scores file")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("simulate", parents=[common], help="sample a model and run the oracle")
    p.add_argument("--model", required=True, help="model specification JSON")
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("neutrality", parents=[common], help="check a model's observable neutrality")
    p.add_argument("--model", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_neutrality)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        summary = args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GiscoreError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    emit_summary(summary, args.format)
    return 0


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
