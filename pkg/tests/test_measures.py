"""Unit tests for the fitness-based scores and their classification."""

import math

import numpy as np
import pytest

from giscore.errors import EmptyDatasetError, InvalidFitnessError
from giscore.measures import (
    CalibrationResult,
    InteractionScores,
    PositiveType,
    QuadrantClass,
    Thresholds,
    calibrate_j_threshold,
    classify_quadrant,
    j_score,
    m_score,
    positive_type,
    survival_from_rate,
)
from giscore.probmodel import ObservableTable, j_ratio

TH = Thresholds()


class _Rec:
    """Minimal stand-in for a scored pair: scores plus p-value."""

    def __init__(self, m, log_j, p):
        self.scores = InteractionScores(m=m, log_j=log_j)
        self.p_value = p


class TestMScore:
    def test_wild_type(self):
        assert m_score(1.0, 1.0, 1.0) == 0.0

    def test_exact_multiplicative_null(self):
        assert m_score(0.5, 0.5, 0.25) == 0.0

    def test_direct_formula(self):
        assert m_score(0.5, 0.5, 0.4) == pytest.approx(0.15, abs=1e-15)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidFitnessError):
            m_score(float("nan"), 1.0, 1.0)
        with pytest.raises(InvalidFitnessError):
            m_score(1.0, float("inf"), 1.0)

    def test_negative_rejected(self):
        with pytest.raises(InvalidFitnessError):
            m_score(-0.1, 1.0, 1.0)


class TestJScore:
    def test_wild_type(self):
        assert j_score(1.0, 1.0, 1.0) == 0.0

    def test_diverges_from_m_at_multiplicative_null(self):
        assert j_score(0.5, 0.5, 0.25) == pytest.approx(0.25, abs=1e-15)
        assert m_score(0.5, 0.5, 0.25) == 0.0

    def test_dead_double_mutant_scored(self):
        assert j_score(0.5, 0.5, 0.0) == 0.0
        assert m_score(0.5, 0.5, 0.0) == pytest.approx(-0.25, abs=1e-15)

    def test_symmetry_in_single_mutants(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b, d = rng.uniform(0.0, 2.0, size=3)
            assert j_score(a, b, d) == pytest.approx(j_score(b, a, d), abs=1e-15)
            assert m_score(a, b, d) == pytest.approx(m_score(b, a, d), abs=1e-15)


class TestSurvivalFromRate:
    def test_zero_rate(self):
        r = survival_from_rate(0.0, 1.0)
        assert r.event == 0.0 and r.survival == 1.0

    def test_unit_rate(self):
        assert survival_from_rate(1.0, 1.0).event == pytest.approx(1.0 - math.exp(-1.0), abs=1e-12)

    def test_saturation(self):
        assert survival_from_rate(10.0, 10.0).event == pytest.approx(1.0, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            survival_from_rate(-1.0, 1.0)
        with pytest.raises(ValueError):
            survival_from_rate(1.0, 0.0)


class TestBridgeIdentity:
    def test_j_score_equals_log_ratio_of_rate_table(self):
        # survival table with t = 1 and wild-type rate 1 in the reference cell
        rng = np.random.default_rng(4)
        for _ in range(300):
            l01, l10, l11 = rng.uniform(1e-6, 2.0, size=3)
            table = ObservableTable(
                levels_a=("wt", "a"),
                levels_b=("wt", "b"),
                survival={
                    ("wt", "wt"): survival_from_rate(1.0, 1.0).survival,
                    ("a", "wt"): survival_from_rate(l10, 1.0).survival,
                    ("wt", "b"): survival_from_rate(l01, 1.0).survival,
                    ("a", "b"): survival_from_rate(l11, 1.0).survival,
                },
            )
            assert j_score(l01, l10, l11) == pytest.approx(
                math.log(j_ratio(table, "a", "b")), abs=1e-12
            )


class TestClassifyQuadrant:
    def test_j_only(self):
        assert classify_quadrant(InteractionScores(0.05, 0.2), 0.01, TH) is QuadrantClass.MBAR_J

    def test_both(self):
        assert classify_quadrant(InteractionScores(-0.2, -0.3), 0.001, TH) is QuadrantClass.MJ

    def test_p_filter_kills_both(self):
        assert classify_quadrant(InteractionScores(0.5, 0.5), 0.2, TH) is QuadrantClass.MBAR_JBAR

    def test_m_only(self):
        assert classify_quadrant(InteractionScores(0.5, 0.01), 0.01, TH) is QuadrantClass.M_JBAR

    def test_boundary_values_not_interacting(self):
        # thresholds are strict: a score exactly at the line is no call
        assert classify_quadrant(InteractionScores(0.08, 0.0886), 0.01, TH) is QuadrantClass.MBAR_JBAR

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            scores = InteractionScores(rng.normal(), rng.normal())
            p = rng.random() * 0.1
            low = classify_quadrant(scores, p, Thresholds(j_thresh=0.05))
            high = classify_quadrant(scores, p, Thresholds(j_thresh=0.2))
            if high in (QuadrantClass.MJ, QuadrantClass.MBAR_J):
                assert low in (QuadrantClass.MJ, QuadrantClass.MBAR_J)


class TestPositiveType:
    def test_suppressor(self):
        assert positive_type(0.5, 0.6, 0.55) is PositiveType.SUPPRESSOR

    def test_masking(self):
        assert positive_type(0.5, 0.6, 0.3) is PositiveType.MASKING

    def test_tie_is_masking(self):
        assert positive_type(0.5, 0.6, 0.5) is PositiveType.MASKING

    def test_swap_invariance(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            a, b, d = rng.uniform(0.0, 1.2, size=3)
            assert positive_type(a, b, d) is positive_type(b, a, d)


def brute_force_tau(records, th):
    """Independent oracle: scan candidate thresholds for the smallest one
    whose strict-exceedance count drops to the M call count."""
    sig = [r for r in records if r.p_value < th.p_max]
    m_count = sum(1 for r in sig if abs(r.scores.m) > th.m_thresh)
    values = sorted(abs(r.scores.log_j) for r in sig)
    for tau in [0.0] + values:
        if sum(1 for v in values if v > tau) <= m_count:
            return tau
    return values[-1]


class TestCalibrateJThreshold:
    def test_empty_raises(self):
        with pytest.raises(EmptyDatasetError):
            calibrate_j_threshold([], TH)

    def test_known_order_statistics(self):
        # 10 significant M calls; tau must sit at the 11th largest |log J|
        records = [_Rec(m=0.2, log_j=1.0 - 0.01 * i, p=0.01) for i in range(10)]
        records += [_Rec(m=0.01, log_j=0.5 - 0.01 * i, p=0.01) for i in range(15)]
        result = calibrate_j_threshold(records, TH)
        assert result.m_count == 10
        assert result.tau == pytest.approx(0.5, abs=1e-15)  # 11th largest
        assert result.j_count == 10
        assert result.exact and not result.tie
        assert result.tau == pytest.approx(brute_force_tau(records, TH), abs=1e-15)

    def test_no_significant_m_pairs(self):
        records = [_Rec(m=0.01, log_j=0.3 + 0.1 * i, p=0.01) for i in range(5)]
        result = calibrate_j_threshold(records, TH)
        assert result.m_count == 0
        assert result.tau == pytest.approx(0.7, abs=1e-15)
        assert result.j_count == 0
        assert result.tau == pytest.approx(brute_force_tau(records, TH), abs=1e-15)

    def test_tie_resolves_conservatively(self):
        records = [
            _Rec(m=0.2, log_j=0.9, p=0.01),
            _Rec(m=0.2, log_j=0.8, p=0.01),
            _Rec(m=0.01, log_j=0.8, p=0.01),
            _Rec(m=0.01, log_j=0.7, p=0.01),
        ]
        result = calibrate_j_threshold(records, TH)
        assert result.m_count == 2
        assert result.tau == pytest.approx(0.8, abs=1e-15)
        assert result.j_count == 1  # never more than the M count
        assert result.tie and not result.exact

    def test_insignificant_records_ignored(self):
        records = [_Rec(m=0.5, log_j=0.5, p=0.2), _Rec(m=0.2, log_j=0.3, p=0.01)]
        result = calibrate_j_threshold(records, TH)
        assert result.n_significant == 1
        assert result.m_count == 1

    def test_random_agrees_with_brute_force(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            records = [
                _Rec(m=float(rng.normal(0, 0.1)), log_j=float(rng.normal(0, 0.2)), p=float(rng.random()))
                for _ in range(rng.integers(1, 60))
            ]
            result = calibrate_j_threshold(records, TH)
            assert result.tau == pytest.approx(brute_force_tau(records, TH), abs=1e-15)
            assert result.j_count <= result.m_count


class TestThresholds:
    def test_defaults(self):
        assert TH.m_thresh == 0.08 and TH.j_thresh == 0.0886 and TH.p_max == 0.05

    def test_validation(self):
        with pytest.raises(Exception):
            Thresholds(m_thresh=-1.0)
        with pytest.raises(Exception):
            Thresholds(p_max=0.0)


class TestCalibrationResultProps:
    def test_exact_flag(self):
        r = CalibrationResult(tau=0.1, m_count=5, j_count=5, n_significant=20)
        assert r.exact and not r.tie
