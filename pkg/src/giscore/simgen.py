"""Synthetic populations and the Monte Carlo oracle.

Sampling is deterministic, platform-stable and shard-friendly:

* generator: PCG64 (numpy ``default_rng``), one instance per fixed-size
  block of 65536 draws, seeded by ``SeedSequence(seed, spawn_key=(block,))``;
* stream discipline within a block: one uniform vector selects level pairs
  by inverse CDF over the joint distribution (row-major level order), a
  second uniform vector decides effect occurrence.

Because blocks are indexed, results are byte-identical for any worker
count, and a run is reproducible from (model, seed, n) alone. The model
digest recorded on every batch ties samples back to the exact generating
model.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .errors import MissingCellError, PerturbationError, ZeroSurvivalError
from .probmodel import (
    Cell,
    Level,
    ObservableTable,
    TwoFactorEffectModel,
    is_neutral,
    model_to_dict,
    null_joint_survival,
)

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class InteractionPerturbation:
    """Multipliers applied to the null joint survival, cell by cell.

    Unlisted cells default to 1. Reference-row/column cells must stay at 1,
    so the perturbation only ever creates genuine interaction, never main
    effects.
    """

    multipliers: Mapping[Cell, float]

    def factor(self, cell: Cell) -> float:
        return self.multipliers.get(cell, 1.0)


def perturbed_survival(
    model: TwoFactorEffectModel, perturbation: InteractionPerturbation | None
) -> dict[Cell, float]:
    """Joint survival grid of the (optionally perturbed) model.

    Raises PerturbationError when a multiplier touches a reference cell or
    drives any survival out of (0, 1].
    """
    grid: dict[Cell, float] = {}
    for a in model.levels_a:
        for b in model.levels_b:
            s = null_joint_survival(model, a, b)
            if perturbation is not None:
                f = perturbation.factor((a, b))
                if f != 1.0 and (a == model.ref_a or b == model.ref_b):
                    raise PerturbationError(
                        f"multiplier {f} at reference cell ({a!r}, {b!r}) must be 1"
                    )
                s *= f
            if not (0.0 < s <= 1.0):
                raise PerturbationError(f"perturbed survival at ({a!r}, {b!r}) is {s}, outside (0, 1]")
            grid[(a, b)] = s
    return grid


def model_digest(model: TwoFactorEffectModel) -> str:
    """Content hash of the model (canonical JSON, sha256)."""
    payload = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SampleBatch:
    """Sampled (level pair, effect) observations plus their provenance."""

    levels_a: tuple[Level, ...]
    levels_b: tuple[Level, ...]
    a_index: np.ndarray
    b_index: np.ndarray
    effect: np.ndarray
    seed: int
    model_digest: str

    def __len__(self) -> int:
        return len(self.effect)

    def rows(self) -> Iterator[tuple[Level, Level, bool]]:
        for ai, bi, e in zip(self.a_index, self.b_index, self.effect):
            yield self.levels_a[ai], self.levels_b[bi], bool(e)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def sample_population(
    model: TwoFactorEffectModel,
    perturbation: InteractionPerturbation | None = None,
    n: int = 1,
    seed: int = 0,
) -> SampleBatch:
    """Draw n observations: a level pair from the joint distribution, then
    an effect flip against the (perturbed) joint survival."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    n_b = len(model.levels_b)
    cells = [(a, b) for a in model.levels_a for b in model.levels_b]
    weights = np.array([model.joint_factor_dist[c] for c in cells], dtype=float)
    edges = np.cumsum(weights)
    edges[-1] = 1.0  # sum is 1 within 1e-12 by model invariant; pin the last edge
    survival = perturbed_survival(model, perturbation)
    event_p = np.array([1.0 - survival[c] for c in cells], dtype=float)

    pair_idx = np.empty(n, dtype=np.int64)
    effect = np.empty(n, dtype=bool)
    for block in range(0, -(-n // BLOCK_SIZE)):
        start = block * BLOCK_SIZE
        stop = min(start + BLOCK_SIZE, n)
        rng = _block_rng(seed, block)
        u_pair = rng.random(BLOCK_SIZE)[: stop - start]
        u_eff = rng.random(BLOCK_SIZE)[: stop - start]
        idx = np.searchsorted(edges, u_pair, side="right")
        pair_idx[start:stop] = idx
        effect[start:stop] = u_eff < event_p[idx]
    return SampleBatch(
        levels_a=model.levels_a,
        levels_b=model.levels_b,
        a_index=pair_idx // n_b,
        b_index=pair_idx % n_b,
        effect=effect,
        seed=seed,
        model_digest=model_digest(model),
    )


@dataclass(frozen=True)
class EmpiricalTable:
    """Cell-wise estimates from a batch: table, binomial SEs, pair counts."""

    table: ObservableTable
    standard_errors: dict[Cell, float]
    pair_counts: dict[Cell, int]
    n: int


def empirical_table(batch: SampleBatch) -> EmpiricalTable:
    """Estimate survival and the joint level distribution from a batch.

    Never-observed cells are left absent (their SE too); the attached joint
    distribution covers the full grid, with zeros where nothing landed.
    """
    n_a, n_b = len(batch.levels_a), len(batch.levels_b)
    flat = batch.a_index * n_b + batch.b_index
    counts = np.bincount(flat, minlength=n_a * n_b)
    effects = np.bincount(flat, weights=batch.effect.astype(float), minlength=n_a * n_b)
    total = len(batch)
    survival: dict[Cell, float] = {}
    ses: dict[Cell, float] = {}
    pair_counts: dict[Cell, int] = {}
    joint: dict[Cell, float] = {}
    for i, a in enumerate(batch.levels_a):
        for j, b in enumerate(batch.levels_b):
            cnt = int(counts[i * n_b + j])
            joint[(a, b)] = cnt / total
            if cnt == 0:
                continue
            s = 1.0 - float(effects[i * n_b + j]) / cnt
            survival[(a, b)] = s
            ses[(a, b)] = math.sqrt(s * (1.0 - s) / cnt)
            pair_counts[(a, b)] = cnt
    table = ObservableTable(
        levels_a=batch.levels_a,
        levels_b=batch.levels_b,
        survival=survival,
        joint_factor_dist=joint,
    )
    return EmpiricalTable(table=table, standard_errors=ses, pair_counts=pair_counts, n=total)


@dataclass(frozen=True)
class LogJEstimate:
    empirical: float
    standard_error: float
    analytic: float

    @property
    def z(self) -> float:
        return (self.empirical - self.analytic) / self.standard_error


@dataclass(frozen=True)
class OracleReport:
    """One simulation round-trip: estimates, ratio tests, neutrality check."""

    n: int
    seed: int
    model_digest: str
    cell_survival: dict[Cell, float]
    cell_se: dict[Cell, float]
    cell_counts: dict[Cell, int]
    log_j: dict[Cell, LogJEstimate]
    max_neutrality_deviation: float

    def to_dict(self) -> dict:
        def nest(values: Mapping[Cell, object], conv) -> dict:
            out: dict[str, dict[str, object]] = {}
            for (a, b), v in values.items():
                out.setdefault(a, {})[b] = conv(v)
            return out

        return {
            "n": self.n,
            "seed": self.seed,
            "model_digest": self.model_digest,
            "cells": nest(self.cell_survival, lambda s: s),
            "cell_se": nest(self.cell_se, lambda s: s),
            "cell_counts": nest(self.cell_counts, lambda c: c),
            "log_j": nest(
                self.log_j,
                lambda e: {
                    "empirical": e.empirical,
                    "standard_error": e.standard_error,
                    "analytic": e.analytic,
                },
            ),
            "max_neutrality_deviation": self.max_neutrality_deviation,
        }


def analytic_log_j(
    model: TwoFactorEffectModel, perturbation: InteractionPerturbation | None, a: Level, b: Level
) -> float:
    """Exact log ratio of the perturbed model; multipliers are all that survive.

    The factorized part cancels, leaving log of the multiplier cross-ratio;
    with reference multipliers pinned at 1 this is -log of the multiplier
    at (a, b).
    """
    if perturbation is None:
        return 0.0
    ra, rb = model.ref_a, model.ref_b
    return math.log(
        (perturbation.factor((a, rb)) * perturbation.factor((ra, b)))
        / (perturbation.factor((ra, rb)) * perturbation.factor((a, b)))
    )


def oracle_report(
    model: TwoFactorEffectModel,
    perturbation: InteractionPerturbation | None,
    n: int,
    seed: int,
) -> OracleReport:
    """Sample, estimate, and compare against the analytic expectations.

    Needs every cell observed with positive estimated survival; the log-J
    standard errors come from first-order error propagation of the four
    cell estimates.
    """
    batch = sample_population(model, perturbation, n, seed)
    est = empirical_table(batch)
    table = est.table
    for cell in table.grid():
        if cell not in table.survival:
            raise MissingCellError(f"cell {cell} was never sampled; increase n")
        if table.survival[cell] == 0.0:
            raise ZeroSurvivalError(f"estimated survival at {cell} is zero; log-ratio undefined")
    ra, rb = model.ref_a, model.ref_b
    log_j: dict[Cell, LogJEstimate] = {}
    for a in model.levels_a[1:]:
        for b in model.levels_b[1:]:
            quad = ((a, rb), (ra, b), (ra, rb), (a, b))
            empirical = (
                math.log(table.survival[(a, rb)])
                + math.log(table.survival[(ra, b)])
                - math.log(table.survival[(ra, rb)])
                - math.log(table.survival[(a, b)])
            )
            var = sum(
                (1.0 - table.survival[c]) / (est.pair_counts[c] * table.survival[c]) for c in quad
            )
            log_j[(a, b)] = LogJEstimate(
                empirical=empirical,
                standard_error=math.sqrt(var),
                analytic=analytic_log_j(model, perturbation, a, b),
            )
    deviation = is_neutral(table, tol=0.0).max_deviation
    return OracleReport(
        n=n,
        seed=seed,
        model_digest=batch.model_digest,
        cell_survival=dict(table.survival),
        cell_se=dict(est.standard_errors),
        cell_counts=dict(est.pair_counts),
        log_j=log_j,
        max_neutrality_deviation=deviation,
    )
