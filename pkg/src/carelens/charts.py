"""Renderable chart specs and base64 PNG images for explanation artifacts.

Each artifact maps to a declarative ChartSpec the web console can draw, plus
a rasterized PNG ("img64", base64 of the PNG bytes) so charts can ride along
inside multimodal prompt bundles. Rendering is deterministic: the same
artifact always yields identical bytes.
"""

from __future__ import annotations

import base64
import io
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .causal import CausalGraph  # noqa: E402
from .counterfactual import Counterfactual  # noqa: E402
from .shapley import ShapAttribution  # noqa: E402

PNG_MAGIC = b"\x89PNG"


@dataclass
class ChartSpec:
    kind: str  # bar | rules_table | delta_table | dag | grouped_bar
    title: str
    x_label: str = ""
    y_label: str = ""
    series: list = field(default_factory=list)
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "title": self.title,
            "x_label": self.x_label,
            "y_label": self.y_label,
            "series": self.series,
            "columns": self.columns,
            "rows": self.rows,
            "nodes": self.nodes,
            "edges": self.edges,
        }


def _fig_to_img64(fig) -> str:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=100)
    plt.close(fig)
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _render_bar(spec: ChartSpec) -> str:
    labels = [s["label"] for s in spec.series]
    values = [s["value"] for s in spec.series]
    fig, ax = plt.subplots(figsize=(6, max(2.0, 0.4 * len(labels) + 1)))
    colors = ["#d9895b" if v >= 0 else "#6b9bd1" for v in values]
    ax.barh(range(len(labels)), values, color=colors)
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel(spec.x_label)
    ax.set_title(spec.title, fontsize=10)
    ax.axvline(0.0, color="#444444", linewidth=0.8)
    fig.tight_layout()
    return _fig_to_img64(fig)


def _render_table(spec: ChartSpec) -> str:
    fig, ax = plt.subplots(figsize=(7, max(1.6, 0.35 * (len(spec.rows) + 2))))
    ax.axis("off")
    ax.set_title(spec.title, fontsize=10)
    if spec.rows:
        table = ax.table(
            cellText=[[str(c) for c in row] for row in spec.rows],
            colLabels=spec.columns,
            loc="center",
        )
        table.auto_set_font_size(False)
        table.set_fontsize(8)
    else:
        ax.text(0.5, 0.5, "no rows", ha="center", va="center", fontsize=9)
    fig.tight_layout()
    return _fig_to_img64(fig)


def _render_dag(spec: ChartSpec) -> str:
    import math

    n = max(1, len(spec.nodes))
    pos = {
        name: (math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n))
        for i, name in enumerate(spec.nodes)
    }
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.axis("off")
    ax.set_title(spec.title, fontsize=10)
    for edge in spec.edges:
        x0, y0 = pos[edge["from"]]
        x1, y1 = pos[edge["to"]]
        ax.annotate(
            "",
            xy=(x1, y1),
            xytext=(x0, y0),
            arrowprops={"arrowstyle": "->", "color": "#555555", "shrinkA": 16, "shrinkB": 16},
        )
    for name, (px, py) in pos.items():
        ax.plot(px, py, "o", markersize=26, color="#e8eef7", markeredgecolor="#3a5a8c")
        ax.text(px, py, name, ha="center", va="center", fontsize=7)
    ax.set_xlim(-1.4, 1.4)
    ax.set_ylim(-1.4, 1.4)
    fig.tight_layout()
    return _fig_to_img64(fig)


def _render_grouped_bar(spec: ChartSpec) -> str:
    groups = [s["label"] for s in spec.series]
    a = [s["a"] for s in spec.series]
    b = [s["b"] for s in spec.series]
    stars = [s.get("stars", "") for s in spec.series]
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(groups) + 1), 4))
    xs = range(len(groups))
    ax.bar([x - width / 2 for x in xs], a, width, color="#f5b78a", label="optimized")
    ax.bar([x + width / 2 for x in xs], b, width, color="#a8c6e8", label="basic")
    for x, star in zip(xs, stars):
        if star:
            top = max(a[x], b[x])
            ax.text(x, top + 0.2, star, ha="center", color="red", fontsize=11)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(groups, fontsize=8)
    ax.set_ylabel(spec.y_label)
    ax.set_title(spec.title, fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _fig_to_img64(fig)


def spec_for_artifact(artifact, title_prefix: str = "") -> ChartSpec:
    if isinstance(artifact, ShapAttribution):
        return ChartSpec(
            kind="bar",
            title=f"{title_prefix}feature contributions",
            x_label="contribution to predicted probability",
            series=[{"label": name, "value": value} for name, value in artifact.ranked()],
        )
    if isinstance(artifact, Counterfactual):
        rows = [
            [name, round(artifact.original[artifact.feature_names.index(name)], 4),
             round(artifact.modified[artifact.feature_names.index(name)], 4),
             round(delta, 4)]
            for name, delta in sorted(artifact.changed_features.items())
        ]
        return ChartSpec(
            kind="delta_table",
            title=f"{title_prefix}what would change the outcome",
            columns=["feature", "current", "suggested", "change"],
            rows=rows,
        )
    if isinstance(artifact, CausalGraph):
        return ChartSpec(
            kind="dag",
            title=f"{title_prefix}causal graph",
            nodes=list(artifact.nodes),
            edges=[{"from": u, "to": v, "score_gain": g} for u, v, g in artifact.edges],
        )
    if isinstance(artifact, (list, tuple)):  # rule list
        return ChartSpec(
            kind="rules_table",
            title=f"{title_prefix}decision rules",
            columns=["rule", "precision", "recall", "support"],
            rows=[
                [r.describe(), round(r.precision, 4), round(r.recall, 4), r.support]
                for r in artifact
            ],
        )
    raise TypeError(f"unsupported artifact {type(artifact).__name__}")


def render_artifact(artifact, title_prefix: str = "") -> tuple[ChartSpec, str]:
    """Build the chart spec and its img64 PNG for any explanation artifact."""
    spec = spec_for_artifact(artifact, title_prefix)
    img64 = render_spec(spec)
    return spec, img64


def render_spec(spec: ChartSpec) -> str:
    if spec.kind == "bar":
        return _render_bar(spec)
    if spec.kind in ("rules_table", "delta_table"):
        return _render_table(spec)
    if spec.kind == "dag":
        return _render_dag(spec)
    if spec.kind == "grouped_bar":
        return _render_grouped_bar(spec)
    raise ValueError(f"unknown chart kind {spec.kind!r}")


def decode_img64(img64: str) -> bytes:
    return base64.b64decode(img64.encode("ascii"))
