"""Figure rendering for giscore pipeline outputs.

Reads the TSV files the giscore CLI writes (scores.tsv, degree.tsv,
segregation.tsv) and renders static paper-style figures:

* quadrant_scatter  - log-ratio score vs multiplicative score, one dot per
  gene pair colored by quadrant class, threshold lines at the configured
  values;
* fitness_scatter   - double-mutant fitness vs one measure's score;
* degree_scatter    - per-gene interaction degree under both measures,
  with the identity diagonal;
* segregation_bars  - per category and sign, stacked miss-rate bars.

Every render writes a JSON sidecar next to the image (<out>.json) with the
row/class tallies, axis ranges and threshold values, so correctness is
assertable without opening the image. Tallies always come from the full
input; only the *displayed* points are down-sampled (deterministic even
stride) beyond 100k rows. For inputs up to 1000 rows the sidecar also
carries the plotted coordinates.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

QUADRANTS = ("MJ", "MbarJ", "MJbar", "MbarJbar")
QUADRANT_COLORS = {"MJ": "black", "MbarJ": "red", "MJbar": "green", "MbarJbar": "0.82"}
HIGHLIGHT_COLOR = "magenta"
MAX_DISPLAY_POINTS = 100_000
COORDS_IN_SIDECAR_LIMIT = 1000
FIGSIZE = (6.0, 5.0)
DPI = 100

KINDS = ("quadrant_scatter", "fitness_scatter", "degree_scatter", "segregation_bars")

REQUIRED_COLUMNS = {
    "quadrant_scatter": ("gene_a", "gene_b", "m_score", "log_j", "quadrant"),
    "fitness_scatter": ("gene_a", "gene_b", "dmf", "m_score", "log_j", "quadrant"),
    "degree_scatter": ("gene", "degree_m", "degree_j"),
    "segregation_bars": ("category", "sign", "miss_rate_m", "miss_rate_j"),
}


class RenderSchemaError(Exception):
    """Input file lacks columns the figure kind needs."""


@dataclass
class FigureSpec:
    input_path: Path
    kind: str
    out_path: Path
    m_threshold: float = 0.08
    j_threshold: float = 0.0886
    measure: str = "j"  # fitness_scatter only
    highlight: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise RenderSchemaError(f"unknown figure kind {self.kind!r}; pick one of {KINDS}")
        if self.measure not in ("m", "j"):
            raise RenderSchemaError(f"measure must be 'm' or 'j', got {self.measure!r}")

    @property
    def sidecar_path(self) -> Path:
        return self.out_path.with_name(self.out_path.name + ".json")


def read_table(path: Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        missing = [c for c in required if c not in header]
        if missing:
            raise RenderSchemaError(
                f"{path}: missing columns {missing}; this figure kind needs {list(required)}"
            )
        rows = []
        for line in fh:
            fields = line.rstrip("\n").split("\t")
            rows.append(dict(zip(header, fields)))
    return rows


def stride_sample(n: int, cap: int) -> list[int]:
    """Deterministic even-stride index selection of at most cap of n rows."""
    if n <= cap:
        return list(range(n))
    step = n / cap
    return sorted({int(i * step) for i in range(cap)})


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _axis_ranges(ax) -> dict:
    x0, x1 = ax.get_xlim()
    y0, y1 = ax.get_ylim()
    return {"x": [x0, x1], "y": [y0, y1]}


def _save(fig, spec: FigureSpec, sidecar: dict) -> dict:
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path, metadata={"Software": "plots/render"})
    plt.close(fig)
    with open(spec.sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar


def _is_highlighted(row: dict, spec: FigureSpec) -> bool:
    return bool(spec.highlight) and (
        row.get("gene_a") in spec.highlight
        or row.get("gene_b") in spec.highlight
        or row.get("gene") in spec.highlight
    )


def _scatter_by_class(ax, rows, idx, xcol, ycol, spec):
    """Draw the selected rows class by class, highlights on top."""
    chosen = [rows[i] for i in idx]
    for quadrant in QUADRANTS:
        xs = [float(r[xcol]) for r in chosen if r["quadrant"] == quadrant and not _is_highlighted(r, spec)]
        ys = [float(r[ycol]) for r in chosen if r["quadrant"] == quadrant and not _is_highlighted(r, spec)]
        ax.scatter(xs, ys, s=4, c=QUADRANT_COLORS[quadrant], label=quadrant, linewidths=0)
    hx = [float(r[xcol]) for r in chosen if _is_highlighted(r, spec)]
    hy = [float(r[ycol]) for r in chosen if _is_highlighted(r, spec)]
    ax.scatter(hx, hy, s=12, c=HIGHLIGHT_COLOR, label="highlighted", linewidths=0)
    return len(hx)


def render_quadrant_scatter(spec: FigureSpec) -> dict:
    rows = read_table(spec.input_path, REQUIRED_COLUMNS["quadrant_scatter"])
    fig, ax = _new_axes("M score", "log J score")
    idx = stride_sample(len(rows), MAX_DISPLAY_POINTS)
    highlighted = _scatter_by_class(ax, rows, idx, "m_score", "log_j", spec)
    for v in (-spec.m_threshold, spec.m_threshold):
        ax.axvline(v, color="0.4", linewidth=0.8)
    for v in (-spec.j_threshold, spec.j_threshold):
        ax.axhline(v, color="0.4", linewidth=0.8)
    classes = {q: sum(1 for r in rows if r["quadrant"] == q) for q in QUADRANTS}
    sidecar = {
        "kind": spec.kind,
        "input": str(spec.input_path),
        "points_total": len(rows),
        "points_displayed": len(idx),
        "downsampled": len(idx) < len(rows),
        "classes": classes,
        "highlighted": highlighted,
        "thresholds": {"m": spec.m_threshold, "j": spec.j_threshold},
        "axes": _axis_ranges(ax),
    }
    if len(rows) <= COORDS_IN_SIDECAR_LIMIT:
        sidecar["points"] = [[float(r["m_score"]), float(r["log_j"])] for r in rows]
    return _save(fig, spec, sidecar)


def render_fitness_scatter(spec: FigureSpec) -> dict:
    rows = read_table(spec.input_path, REQUIRED_COLUMNS["fitness_scatter"])
    score_col = "m_score" if spec.measure == "m" else "log_j"
    thresh = spec.m_threshold if spec.measure == "m" else spec.j_threshold
    fig, ax = _new_axes(f"{'M' if spec.measure == 'm' else 'log J'} score", "double-mutant fitness")
    idx = stride_sample(len(rows), MAX_DISPLAY_POINTS)
    highlighted = _scatter_by_class(ax, rows, idx, score_col, "dmf", spec)
    for v in (-thresh, thresh):
        ax.axvline(v, color="0.4", linewidth=0.8)
    classes = {q: sum(1 for r in rows if r["quadrant"] == q) for q in QUADRANTS}
    sidecar = {
        "kind": spec.kind,
        "input": str(spec.input_path),
        "measure": spec.measure,
        "points_total": len(rows),
        "points_displayed": len(idx),
        "downsampled": len(idx) < len(rows),
        "classes": classes,
        "highlighted": highlighted,
        "thresholds": {spec.measure: thresh},
        "axes": _axis_ranges(ax),
    }
    if len(rows) <= COORDS_IN_SIDECAR_LIMIT:
        sidecar["points"] = [[float(r[score_col]), float(r["dmf"])] for r in rows]
    return _save(fig, spec, sidecar)


def render_degree_scatter(spec: FigureSpec) -> dict:
    rows = read_table(spec.input_path, REQUIRED_COLUMNS["degree_scatter"])
    fig, ax = _new_axes("degree (M)", "degree (J)")
    idx = stride_sample(len(rows), MAX_DISPLAY_POINTS)
    chosen = [rows[i] for i in idx]
    plain = [r for r in chosen if not _is_highlighted(r, spec)]
    ax.scatter(
        [int(r["degree_m"]) for r in plain],
        [int(r["degree_j"]) for r in plain],
        s=8, c="black", linewidths=0,
    )
    hi = [r for r in chosen if _is_highlighted(r, spec)]
    ax.scatter(
        [int(r["degree_m"]) for r in hi],
        [int(r["degree_j"]) for r in hi],
        s=16, c=HIGHLIGHT_COLOR, linewidths=0,
    )
    top = max([1] + [max(int(r["degree_m"]), int(r["degree_j"])) for r in rows])
    ax.plot([0, top], [0, top], color="0.6", linewidth=0.8)  # identity reference
    sidecar = {
        "kind": spec.kind,
        "input": str(spec.input_path),
        "points_total": len(rows),
        "points_displayed": len(idx),
        "downsampled": len(idx) < len(rows),
        "highlighted": len(hi),
        "axes": _axis_ranges(ax),
    }
    if len(rows) <= COORDS_IN_SIDECAR_LIMIT:
        sidecar["points"] = [[int(r["degree_m"]), int(r["degree_j"])] for r in rows]
    return _save(fig, spec, sidecar)


def render_segregation_bars(spec: FigureSpec) -> dict:
    rows = read_table(spec.input_path, REQUIRED_COLUMNS["segregation_bars"])
    fig, ax = _new_axes("", "missed fraction")
    labels, miss_m, miss_j = [], [], []
    for r in rows:
        labels.append(f"{r['category']}\n{r['sign']}")
        miss_m.append(float(r["miss_rate_m"]) if r["miss_rate_m"] else 0.0)
        miss_j.append(float(r["miss_rate_j"]) if r["miss_rate_j"] else 0.0)
    xs = range(len(rows))
    # stacked per bar: share of calls each measure misses (J-only red, M-only green)
    ax.bar(xs, miss_m, color=QUADRANT_COLORS["MbarJ"], label="missed by M")
    ax.bar(xs, miss_j, bottom=miss_m, color=QUADRANT_COLORS["MJbar"], label="missed by J")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=6, rotation=90)
    ax.legend(fontsize=7)
    fig.tight_layout()
    sidecar = {
        "kind": spec.kind,
        "input": str(spec.input_path),
        "bars": len(rows),
        "categories": len({r["category"] for r in rows}),
        "axes": _axis_ranges(ax),
        "stack": {"missed_by_m": miss_m, "missed_by_j": miss_j},
    }
    return _save(fig, spec, sidecar)


RENDERERS = {
    "quadrant_scatter": render_quadrant_scatter,
    "fitness_scatter": render_fitness_scatter,
    "degree_scatter": render_degree_scatter,
    "segregation_bars": render_segregation_bars,
}


def render(spec: FigureSpec) -> dict:
    """Render one figure and return its sidecar payload."""
    return RENDERERS[spec.kind](spec)


def load_highlight(path: str | None) -> set[str]:
    if not path:
        return set()
    genes = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                genes.add(line)
    return genes


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots/render", description="Render a giscore pipeline figure."
    )
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--in", dest="input", required=True, help="pipeline TSV to plot")
    parser.add_argument("--out", required=True, help="output image path (PNG)")
    parser.add_argument("--highlight", default=None, help="file with one gene per line")
    parser.add_argument("--m-threshold", type=float, default=0.08)
    parser.add_argument("--j-threshold", type=float, default=0.0886)
    parser.add_argument("--measure", choices=("m", "j"), default="j",
                        help="score axis for fitness_scatter")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            input_path=Path(args.input),
            kind=args.kind,
            out_path=Path(args.out),
            m_threshold=args.m_threshold,
            j_threshold=args.j_threshold,
            measure=args.measure,
            highlight=load_highlight(args.highlight),
        )
        sidecar = render(spec)
    except (RenderSchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"out": args.out, "sidecar": str(spec.sidecar_path),
                      "points": sidecar.get("points_total", sidecar.get("bars", 0))}))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
