"""Unit tests for SGA file parsing, gene extraction and pair aggregation."""

import io
import random

import pytest

from giscore.errors import InvalidIdentifierError, SchemaError
from giscore.ingest import (
    IngestReport,
    SgaColumnMap,
    StrainPairRecord,
    aggregate_gene_pairs,
    extract_gene,
    parse_sga,
)

HEADER = "\t".join(
    [
        "Query Strain ID",
        "Query allele name",
        "Array Strain ID",
        "Array allele name",
        "Arraytype/Temp",
        "Genetic interaction score (eps)",
        "P-value",
        "Query single mutant fitness (SMF)",
        "Array SMF",
        "Double mutant fitness",
        "Double mutant fitness standard deviation",
    ]
)


def row(q="YDL064W_tsq1", a="YGR120C_dma2", p="0.01", smf_q="0.8", smf_a="0.9", dmf="0.5"):
    return "\t".join([q, "qa", a, "aa", "26C", "0.0", p, smf_q, smf_a, dmf, "0.02"])


def parse_lines(*rows, header=HEADER, column_map=None):
    text = "\n".join([header, *rows]) + "\n" if header else "\n".join(rows) + "\n"
    records, report = parse_sga(io.StringIO(text), column_map=column_map)
    return list(records), report


class TestColumnMap:
    def test_exact_names(self):
        cm = SgaColumnMap.from_header(HEADER.split("\t"))
        assert cm.query_strain == 0
        assert cm.array_strain == 2
        assert cm.p_value == 6
        assert cm.smf_query == 7
        assert cm.smf_array == 8
        assert cm.dmf == 9  # not the stddev column right of it

    def test_substring_fallback(self):
        header = ["query strain", "array strain", "pvalue", "Query SMF", "array smf", "double mutant fitness x"]
        cm = SgaColumnMap.from_header(header)
        assert (cm.query_strain, cm.array_strain, cm.p_value) == (0, 1, 2)
        assert (cm.smf_query, cm.smf_array, cm.dmf) == (3, 4, 5)

    def test_missing_column(self):
        with pytest.raises(SchemaError):
            SgaColumnMap.from_header(["Query Strain ID", "Array Strain ID"])

    def test_duplicate_indices_rejected(self):
        with pytest.raises(SchemaError):
            SgaColumnMap(0, 0, 1, 2, 3, 4)


class TestParseSga:
    def test_pass_through(self):
        records, report = parse_lines(row())
        assert report.rows_read == 1 and report.rows_kept == 1
        rec = records[0]
        assert rec.query_strain == "YDL064W_tsq1"
        assert rec.query_gene == "YDL064W"
        assert rec.array_gene == "YGR120C"
        assert rec.smf_query == 0.8 and rec.smf_array == 0.9 and rec.dmf == 0.5
        assert rec.p_value == 0.01

    def test_nan_dropped(self):
        records, report = parse_lines(row(dmf="NaN"))
        assert records == []
        assert report.rows_dropped_nan == 1

    def test_empty_field_counts_as_nan(self):
        _, report = parse_lines(row(smf_q=""))
        assert report.rows_dropped_nan == 1

    def test_non_numeric_counts_as_nan(self):
        _, report = parse_lines(row(p="abc"))
        assert report.rows_dropped_nan == 1

    def test_negative_fitness_dropped(self):
        _, report = parse_lines(row(smf_a="-0.1"))
        assert report.rows_dropped_negative == 1

    def test_short_row_malformed(self):
        _, report = parse_lines("too\tshort")
        assert report.rows_dropped_malformed == 1

    def test_p_out_of_range_malformed(self):
        _, report = parse_lines(row(p="1.5"))
        assert report.rows_dropped_malformed == 1

    def test_scientific_notation(self):
        records, _ = parse_lines(row(p="1e-3"))
        assert records[0].p_value == 1e-3

    def test_report_consistency(self):
        _, report = parse_lines(row(), row(dmf="NaN"), row(smf_a="-1"), "bad")
        assert report.rows_read == 4
        assert report.consistent()

    def test_empty_input_is_schema_error(self):
        with pytest.raises(SchemaError):
            parse_sga(io.StringIO(""))

    def test_missing_column_is_fatal(self):
        with pytest.raises(SchemaError):
            parse_sga(io.StringIO("a\tb\tc\nx\ty\tz\n"))

    def test_binary_stream(self):
        text = HEADER + "\n" + row() + "\n"
        records, report = parse_sga(io.BytesIO(text.encode("utf-8")))
        assert len(list(records)) == 1

    def test_explicit_column_map_means_no_header(self):
        cm = SgaColumnMap(query_strain=0, array_strain=1, smf_query=2, smf_array=3, dmf=4, p_value=5)
        records, report = parse_lines(
            "q1_x\ta1_y\t0.8\t0.9\t0.5\t0.01", header=None, column_map=cm
        )
        assert len(records) == 1 and report.rows_kept == 1

    def test_determinism(self):
        rows = [row(q=f"Q{i}_al", a=f"A{i}_al", p=str(0.01 * (i + 1))) for i in range(20)]
        first = parse_lines(*rows)
        second = parse_lines(*rows)
        assert first[0] == second[0]
        assert first[1] == second[1]


class TestFilterSoundness:
    def test_every_kept_record_satisfies_invariants(self):
        # fuzzed rows: whatever survives must be clean
        rng = random.Random(99)
        tokens = ["0.5", "1.2", "0", "-0.3", "NaN", "inf", "abc", "", "1e-4", "2.0"]
        rows = []
        for i in range(300):
            rows.append(
                "\t".join(
                    [f"Q{i}_al", f"A{i}_al"]
                    + [rng.choice(tokens) for _ in range(4)]
                )
            )
        header = "\t".join(
            ["Query Strain ID", "Array Strain ID", "P-value",
             "Query single mutant fitness (SMF)", "Array SMF", "Double mutant fitness"]
        )
        records, report = parse_lines(*rows, header=header)
        assert report.consistent()
        for rec in records:
            for v in (rec.smf_query, rec.smf_array, rec.dmf):
                assert v >= 0.0 and v == v and abs(v) != float("inf")
            assert 0.0 <= rec.p_value <= 1.0
            assert rec.query_gene and rec.array_gene


class TestExtractGene:
    def test_allele_suffix(self):
        assert extract_gene("YDL064W_tsq1") == "YDL064W"

    def test_no_suffix(self):
        assert extract_gene("YGR120C") == "YGR120C"

    def test_uppercased(self):
        assert extract_gene("trm112_damp") == "TRM112"

    def test_empty_rejected(self):
        with pytest.raises(InvalidIdentifierError):
            extract_gene("   ")


def _rec(q, a, p, smf_q=0.8, smf_a=0.9, dmf=0.5):
    return StrainPairRecord(
        query_strain=q,
        array_strain=a,
        query_gene=extract_gene(q),
        array_gene=extract_gene(a),
        smf_query=smf_q,
        smf_array=smf_a,
        dmf=dmf,
        p_value=p,
    )


class TestAggregateGenePairs:
    def test_min_p_wins(self):
        r1 = _rec("G1_a1", "G2_b1", p=0.01)
        r2 = _rec("G1_a2", "G2_b2", p=0.2)
        assert aggregate_gene_pairs([r2, r1]) == [r1]

    def test_single_record(self):
        r = _rec("G1_a", "G2_b", p=0.5)
        assert aggregate_gene_pairs([r]) == [r]

    def test_equal_p_smaller_abs_m_wins(self):
        # |m| = |dmf - smf_q * smf_a|: 0.1 for r1, 0.05 for r2
        r1 = _rec("G1_a1", "G2_b1", p=0.1, smf_q=1.0, smf_a=1.0, dmf=0.9)
        r2 = _rec("G1_a2", "G2_b2", p=0.1, smf_q=1.0, smf_a=1.0, dmf=0.95)
        assert aggregate_gene_pairs([r1, r2]) == [r2]

    def test_unordered_key(self):
        r1 = _rec("G1_a", "G2_b", p=0.5)
        r2 = _rec("G2_x", "G1_y", p=0.1)
        assert aggregate_gene_pairs([r1, r2]) == [r2]

    def test_self_pairs_kept_and_flagged(self):
        r = _rec("G1_a", "G1_b", p=0.5)
        out = aggregate_gene_pairs([r])
        assert out == [r] and out[0].is_self_pair

    def test_idempotent(self):
        records = [_rec(f"G{i}_x", f"G{(i * 3) % 7}_y", p=0.1 * (i % 5)) for i in range(30)]
        once = aggregate_gene_pairs(records)
        assert aggregate_gene_pairs(once) == once

    def test_order_independent(self):
        records = [_rec(f"G{i % 6}_x", f"G{(i * 3) % 7}_y", p=0.01 * (i % 9)) for i in range(40)]
        expected = aggregate_gene_pairs(records)
        rng = random.Random(13)
        for _ in range(10):
            shuffled = records[:]
            rng.shuffle(shuffled)
            assert aggregate_gene_pairs(shuffled) == expected

    def test_output_sorted_by_gene_pair(self):
        records = [_rec("G9_x", "G1_y", p=0.1), _rec("G2_x", "G3_y", p=0.1)]
        out = aggregate_gene_pairs(records)
        assert [r.gene_pair() for r in out] == sorted(r.gene_pair() for r in out)
