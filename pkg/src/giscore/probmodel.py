"""Probabilistic core: factorized no-interaction models and their observable face.

Two observed factors (A and B, each with a designated reference level at
index 0) influence a dichotomous effect together with an unobserved
background. A :class:`TwoFactorEffectModel` is the generative picture: each
factor level carries its own survival probability, the background carries
one more, and under no interaction the joint survival is simply their
product (:func:`null_joint_survival`).

An :class:`ObservableTable` is what an experiment can actually estimate:
conditional survival per level pair, optionally together with the joint
distribution of level pairs in the population. The operations here connect
the two pictures without ever needing the generative side:

* :func:`neutrality` predicts each cell's survival from marginals alone;
  a factorized model satisfies the prediction exactly, for any population
  structure, so departure from it diagnoses interaction.
* :func:`j_ratio` is the four-cell survival ratio that equals 1 exactly on
  factorized tables and needs no population distribution at all.
* :func:`loglinear_decompose` splits any positive table into a baseline,
  per-level main effects and a per-cell residual; the residual of a
  non-reference cell is exactly ``log j_ratio`` for that cell, and it
  vanishes identically on factorized tables.

All survival probabilities handled here must be positive wherever a ratio
or logarithm is taken; zero cells raise :class:`~giscore.errors.ZeroSurvivalError`
instead of propagating infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping, NamedTuple

from .errors import (
    DegenerateDistributionError,
    LevelNotFoundError,
    MissingCellError,
    MissingDistributionError,
    ModelValidationError,
    NormalizationError,
    ZeroMassError,
    ZeroSurvivalError,
)

Level = str
Cell = tuple[Level, Level]
Axis = Literal["A", "B"]

#: Tolerance for analytic identities (distribution sums, reconstruction).
ANALYTIC_TOL = 1e-12


def _check_levels(levels: tuple[Level, ...], name: str) -> None:
    if len(levels) < 2:
        raise ModelValidationError(f"{name} needs at least 2 levels, got {len(levels)}")
    if len(set(levels)) != len(levels):
        raise ModelValidationError(f"{name} contains duplicate levels: {levels}")


def _check_joint(
    dist: Mapping[Cell, float],
    levels_a: tuple[Level, ...],
    levels_b: tuple[Level, ...],
    *,
    require_full_grid: bool,
) -> None:
    grid = {(a, b) for a in levels_a for b in levels_b}
    extra = set(dist) - grid
    if extra:
        raise ModelValidationError(f"joint distribution names unknown level pairs: {sorted(extra)}")
    if require_full_grid and set(dist) != grid:
        missing = grid - set(dist)
        raise ModelValidationError(f"joint distribution misses level pairs: {sorted(missing)}")
    total = 0.0
    for cell, p in dist.items():
        if not math.isfinite(p) or p < 0.0:
            raise ModelValidationError(f"joint probability of {cell} is {p}, must be finite and >= 0")
        total += p
    if abs(total - 1.0) > ANALYTIC_TOL:
        raise ModelValidationError(f"joint distribution sums to {total!r}, must be 1 within {ANALYTIC_TOL}")


@dataclass(frozen=True)
class TwoFactorEffectModel:
    """Generative two-factor model with per-level and background survivals.

    ``levels_a[0]`` and ``levels_b[0]`` are the reference levels. Survival
    probabilities are strictly positive (a level that kills everything has
    no finite log-scale representation) and the joint factor distribution
    covers the full level-pair grid.
    """

    levels_a: tuple[Level, ...]
    levels_b: tuple[Level, ...]
    survival_a: Mapping[Level, float]
    survival_b: Mapping[Level, float]
    survival_z: float
    joint_factor_dist: Mapping[Cell, float]

    def __post_init__(self) -> None:
        _check_levels(self.levels_a, "levels_a")
        _check_levels(self.levels_b, "levels_b")
        for levels, survival, name in (
            (self.levels_a, self.survival_a, "survival_a"),
            (self.levels_b, self.survival_b, "survival_b"),
        ):
            if set(survival) != set(levels):
                raise ModelValidationError(f"{name} must map exactly the declared levels")
            for level, p in survival.items():
                if not (0.0 < p <= 1.0):
                    raise ModelValidationError(f"{name}[{level!r}] = {p}, must be in (0, 1]")
        if not (0.0 < self.survival_z <= 1.0):
            raise ModelValidationError(f"survival_z = {self.survival_z}, must be in (0, 1]")
        _check_joint(self.joint_factor_dist, self.levels_a, self.levels_b, require_full_grid=True)

    @property
    def ref_a(self) -> Level:
        return self.levels_a[0]

    @property
    def ref_b(self) -> Level:
        return self.levels_b[0]


@dataclass(frozen=True)
class ObservableTable:
    """Conditional survival per level pair, the observable face of a model.

    ``survival`` may omit cells (an empirical estimate with unobserved
    pairs) and may contain exact zeros (every sampled individual showed the
    effect); operations that need logs or ratios of a zero cell raise
    rather than return infinities. ``joint_factor_dist`` is only required
    by the neutrality operations.
    """

    levels_a: tuple[Level, ...]
    levels_b: tuple[Level, ...]
    survival: Mapping[Cell, float]
    joint_factor_dist: Mapping[Cell, float] | None = None

    def __post_init__(self) -> None:
        _check_levels(self.levels_a, "levels_a")
        _check_levels(self.levels_b, "levels_b")
        grid = {(a, b) for a in self.levels_a for b in self.levels_b}
        extra = set(self.survival) - grid
        if extra:
            raise ModelValidationError(f"survival names unknown level pairs: {sorted(extra)}")
        for cell, p in self.survival.items():
            if not math.isfinite(p) or not (0.0 <= p <= 1.0):
                raise ModelValidationError(f"survival[{cell}] = {p}, must be in [0, 1]")
        if self.joint_factor_dist is not None:
            _check_joint(self.joint_factor_dist, self.levels_a, self.levels_b, require_full_grid=False)

    @property
    def ref_a(self) -> Level:
        return self.levels_a[0]

    @property
    def ref_b(self) -> Level:
        return self.levels_b[0]

    def grid(self) -> list[Cell]:
        return [(a, b) for a in self.levels_a for b in self.levels_b]

    def cell(self, x: Level, y: Level) -> float:
        """Survival at (x, y); raises MissingCellError if the cell is absent."""
        try:
            return self.survival[(x, y)]
        except KeyError:
            raise MissingCellError(f"survival cell ({x!r}, {y!r}) is absent") from None


@dataclass(frozen=True)
class LogLinearDecomposition:
    """Additive split of log-survival: baseline + main effects - interaction.

    Gauge: ``alpha[ref_a] = beta[ref_b] = 0`` and ``delta`` vanishes on every
    reference row/column, so all the interaction content sits in the
    non-reference cells.
    """

    mu: float
    alpha: Mapping[Level, float]
    beta: Mapping[Level, float]
    delta: Mapping[Cell, float]

    def reconstruct(self, x: Level, y: Level) -> float:
        """Survival probability implied by the decomposition at (x, y)."""
        return math.exp(self.mu + self.alpha[x] + self.beta[y] - self.delta[(x, y)])


class NeutralityCheck(NamedTuple):
    neutral: bool
    max_deviation: float


def _require_level(level: Level, levels: tuple[Level, ...], name: str) -> None:
    if level not in levels:
        raise LevelNotFoundError(f"level {level!r} not in {name} {levels}")


def null_joint_survival(model: TwoFactorEffectModel, x: Level, y: Level) -> float:
    """Joint survival under the factorized no-interaction model.

    The product of the two per-level survivals and the background survival.
    """
    _require_level(x, model.levels_a, "levels_a")
    _require_level(y, model.levels_b, "levels_b")
    return model.survival_a[x] * model.survival_b[y] * model.survival_z


def observables_from_model(model: TwoFactorEffectModel) -> ObservableTable:
    """Materialize the model's survival over the full level-pair grid."""
    survival = {
        (a, b): null_joint_survival(model, a, b)
        for a in model.levels_a
        for b in model.levels_b
    }
    return ObservableTable(
        levels_a=model.levels_a,
        levels_b=model.levels_b,
        survival=survival,
        joint_factor_dist=dict(model.joint_factor_dist),
    )


def _conditional(table: ObservableTable, given: Level, axis: Axis) -> dict[Level, float]:
    """Distribution of the opposite factor's levels, conditioned on ``given``.

    Derived from the attached joint distribution by normalizing the row
    (axis A) or column (axis B) of ``given``.
    """
    if table.joint_factor_dist is None:
        raise MissingDistributionError("operation needs joint_factor_dist, table has none")
    dist = table.joint_factor_dist
    if axis == "A":
        _require_level(given, table.levels_a, "levels_a")
        weights = {b: dist.get((given, b), 0.0) for b in table.levels_b}
    else:
        _require_level(given, table.levels_b, "levels_b")
        weights = {a: dist.get((a, given), 0.0) for a in table.levels_a}
    mass = sum(weights.values())
    if mass <= 0.0:
        raise ZeroMassError(f"marginal probability of level {given!r} on axis {axis} is zero")
    return {level: w / mass for level, w in weights.items()}


def marginal_survival(table: ObservableTable, x: Level, axis: Axis) -> float:
    """Observable marginal survival given one factor's level.

    Averages the joint survival over the opposite factor, weighted by the
    conditional level distribution. Cells carrying zero conditional weight
    may be absent; cells with positive weight must be present.
    """
    cond = _conditional(table, x, axis)
    total = 0.0
    for level, w in cond.items():
        if w == 0.0:
            continue
        cell = (x, level) if axis == "A" else (level, x)
        total += table.cell(*cell) * w
    return total


def neutrality(table: ObservableTable, x: Level, y: Level) -> float:
    """No-interaction prediction of the survival at (x, y) from observables.

    The product of the two marginal survivals, corrected by the
    cross-conditioned average of the joint survivals. Spurious marginal
    associations that population structure pushes into the numerator are
    cancelled by the denominator, so for factorized tables the prediction
    matches the cell exactly regardless of the level-pair distribution.
    """
    num = marginal_survival(table, x, "A") * marginal_survival(table, y, "B")
    cond_b_given_x = _conditional(table, x, "A")
    cond_a_given_y = _conditional(table, y, "B")
    denom = 0.0
    for a, wa in cond_a_given_y.items():
        for b, wb in cond_b_given_x.items():
            w = wa * wb
            if w == 0.0:
                continue
            denom += table.cell(a, b) * w
    if denom <= 0.0:
        raise DegenerateDistributionError(
            f"neutrality denominator at ({x!r}, {y!r}) is {denom}; table is degenerate"
        )
    return num / denom


def spurious_risk(
    risk_by_level: Mapping[Level, float],
    cond_dist: Mapping[Level, float],
    x: Level,
) -> float:
    """Risk attributed to a level ``x`` purely through co-occurrence.

    The expected risk of the causal factor's levels, weighted by how often
    they co-occur with ``x``. Equals the unconditional risk when the
    conditional distribution matches the causal factor's marginal, and
    deviates from it whenever the population is structured; ``x`` itself
    only labels the conditioning slice.
    """
    unknown = set(cond_dist) - set(risk_by_level)
    if unknown:
        raise LevelNotFoundError(f"conditional distribution for {x!r} names unknown levels: {sorted(unknown)}")
    total = sum(cond_dist.values())
    if abs(total - 1.0) > 1e-9:
        raise NormalizationError(f"conditional distribution for {x!r} sums to {total!r}, must be 1 within 1e-9")
    return sum(risk_by_level[b] * w for b, w in cond_dist.items())


def j_ratio(table: ObservableTable, a: Level, b: Level) -> float:
    """Four-cell survival ratio; equals 1 exactly on factorized tables.

    Ratio of the two single-perturbation survivals' product to the product
    of the reference and double-perturbation survivals. Requires no
    population distribution.
    """
    _require_level(a, table.levels_a, "levels_a")
    _require_level(b, table.levels_b, "levels_b")
    ra, rb = table.ref_a, table.ref_b
    if a == ra or b == rb:
        raise ValueError(f"j_ratio needs non-reference levels, got ({a!r}, {b!r})")
    cells = {cell: table.cell(*cell) for cell in ((ra, rb), (a, rb), (ra, b), (a, b))}
    zero = [cell for cell, p in cells.items() if p == 0.0]
    if zero:
        raise ZeroSurvivalError(f"survival is zero at {zero}; ratio undefined")
    return (cells[(a, rb)] * cells[(ra, b)]) / (cells[(ra, rb)] * cells[(a, b)])


def loglinear_decompose(table: ObservableTable) -> LogLinearDecomposition:
    """Split log-survival into baseline, main effects and interaction terms.

    Requires the full grid with positive cells. The interaction term of
    each non-reference cell equals ``log j_ratio`` for that cell; the
    reconstruction ``exp(mu + alpha + beta - delta)`` reproduces every cell.
    """
    ra, rb = table.ref_a, table.ref_b
    values: dict[Cell, float] = {}
    for cell in table.grid():
        p = table.cell(*cell)
        if p == 0.0:
            raise ZeroSurvivalError(f"survival is zero at {cell}; log undefined")
        values[cell] = p
    base = values[(ra, rb)]
    mu = math.log(base)
    alpha = {a: math.log(values[(a, rb)] / base) for a in table.levels_a}
    beta = {b: math.log(values[(ra, b)] / base) for b in table.levels_b}
    alpha[ra] = 0.0
    beta[rb] = 0.0
    delta: dict[Cell, float] = {}
    for a in table.levels_a:
        for b in table.levels_b:
            if a == ra or b == rb:
                delta[(a, b)] = 0.0
            else:
                delta[(a, b)] = alpha[a] + beta[b] - math.log(values[(a, b)] / base)
    return LogLinearDecomposition(mu=mu, alpha=alpha, beta=beta, delta=delta)


def is_neutral(table: ObservableTable, tol: float) -> NeutralityCheck:
    """Whether every cell matches its neutrality prediction within ``tol``.

    Returns the verdict together with the maximum absolute deviation over
    the full grid.
    """
    max_dev = 0.0
    for x, y in table.grid():
        dev = abs(table.cell(x, y) - neutrality(table, x, y))
        if dev > max_dev:
            max_dev = dev
    return NeutralityCheck(neutral=max_dev <= tol, max_deviation=max_dev)


def model_from_dict(obj: Mapping) -> TwoFactorEffectModel:
    """Build a model from the JSON document layout.

    Expected keys: ``levelsA``, ``levelsB``, ``survivalA``, ``survivalB``,
    ``survivalZ``, ``jointFactorDist`` (nested mapping ``{a: {b: prob}}``).
    """
    try:
        levels_a = tuple(str(v) for v in obj["levelsA"])
        levels_b = tuple(str(v) for v in obj["levelsB"])
        survival_a = {str(k): float(v) for k, v in obj["survivalA"].items()}
        survival_b = {str(k): float(v) for k, v in obj["survivalB"].items()}
        survival_z = float(obj["survivalZ"])
        joint = {
            (str(a), str(b)): float(p)
            for a, row in obj["jointFactorDist"].items()
            for b, p in row.items()
        }
    except KeyError as exc:
        raise ModelValidationError(f"model document misses key {exc}") from None
    return TwoFactorEffectModel(
        levels_a=levels_a,
        levels_b=levels_b,
        survival_a=survival_a,
        survival_b=survival_b,
        survival_z=survival_z,
        joint_factor_dist=joint,
    )


def model_to_dict(model: TwoFactorEffectModel) -> dict:
    """Inverse of :func:`model_from_dict`; nested mappings, plain floats."""
    joint: dict[str, dict[str, float]] = {a: {} for a in model.levels_a}
    for (a, b), p in model.joint_factor_dist.items():
        joint[a][b] = p
    return {
        "levelsA": list(model.levels_a),
        "levelsB": list(model.levels_b),
        "survivalA": dict(model.survival_a),
        "survivalB": dict(model.survival_b),
        "survivalZ": model.survival_z,
        "jointFactorDist": joint,
    }
