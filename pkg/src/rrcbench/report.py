"""Report generation: per-kind comparison tables (CSV, HTML, console) and radar SVGs."""

import csv
import io
import logging
import math
import os
from dataclasses import dataclass
from datetime import date
from typing import List, Optional, Sequence, Tuple

import pandas as pd
from rich.console import Console
from rich.table import Table

from .campaign import COLUMN_CRITERIA, LOSS_COLUMNS, VARIANTS, mean_losses
from .stats import CriterionComparison, MetricTable, compare_criteria, format_pvalue, render_rank_table

CRITERION_LABELS = {
    "zero_one": "Zero-One",
    "macro_fdr": "MaFDR",
    "macro_fnr": "MaFNR",
    "macro_f1_loss": "MaF1",
    "micro_fdr": "MiFDR",
    "micro_fnr": "MiFNR",
    "micro_f1_loss": "MiF1",
}
_PALETTE = ("#2563eb", "#dc2626", "#16a34a", "#d97706", "#7c3aed", "#0891b2")


@dataclass
class ComparisonReport:
    """Everything needed to render the comparison of the variants of one classifier kind."""
    kind: str
    alpha: float
    datasets: Tuple[str, ...]
    comparisons: List[CriterionComparison]

    @property
    def variants(self) -> Tuple[str, ...]:
        return self.comparisons[0].classifiers if self.comparisons else ()


def metric_tables(results: pd.DataFrame, kind: str) -> List[MetricTable]:
    """Mean loss per dataset and variant of one kind, one table per criterion.

    Datasets lacking any variant are left out so the tables stay rectangular.
    """
    means = mean_losses(results[results["kind"] == kind])
    variants = [v for v in VARIANTS if v in set(means["variant"])]
    variants += sorted(set(means["variant"]) - set(variants))
    tables = []
    for column in LOSS_COLUMNS:
        wide = means.pivot(index="dataset", columns="variant", values=column).reindex(columns=variants)
        incomplete = wide.index[wide.isna().any(axis=1)]
        if len(incomplete):
            logging.warning("Leaving out dataset(s) %s for %s: not every variant has results.",
                            ", ".join(incomplete), kind)
            wide = wide.drop(index=incomplete)
        tables.append(MetricTable(
            criterion=COLUMN_CRITERIA[column],
            classifiers=tuple(variants),
            datasets=tuple(str(d) for d in wide.index),
            losses=wide.to_numpy(dtype=float),
        ))
    return tables


def build_comparisons(results: pd.DataFrame, alpha: float = 0.05) -> List[ComparisonReport]:
    reports = []
    for kind in sorted(results["kind"].unique()):
        tables = metric_tables(results, kind)
        if len(tables[0].classifiers) < 2 or not tables[0].datasets:
            logging.warning("Nothing to compare for %s: need 2 variants on at least one dataset.", kind)
            continue
        reports.append(ComparisonReport(kind, alpha, tables[0].datasets, compare_criteria(tables, alpha)))
    return reports


# ── Rendering ──────────────────────────────────────────────────────────────────

def render_csv(report: ComparisonReport) -> str:
    """Two sections: the rank table as displayed, then raw and adjusted pairwise p-values."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"Comparison of {report.kind} variants over {len(report.datasets)} dataset(s)"])
    w.writerow([f"alpha: {report.alpha}"])
    w.writerow([])

    rows = render_rank_table(report.comparisons)
    w.writerow(["RANKS AND ADJUSTED P-VALUES"])
    w.writerow(list(rows[0].keys()))
    for row in rows:
        w.writerow(list(row.values()))
    w.writerow([])

    w.writerow(["PAIRWISE WILCOXON TESTS"])
    w.writerow(["Criterion", "First", "Second", "Statistic", "p", "p (Bergmann-Hommel)", "Rejected"])
    for c in report.comparisons:
        for (i, j), result, adjusted, rejected in zip(c.pairs, c.pairwise, c.pairwise_adjusted, c.pairwise_rejected):
            w.writerow([
                c.criterion, c.classifiers[i], c.classifiers[j],
                f"{result.statistic:g}", f"{result.pvalue:.6g}", f"{adjusted:.6g}", "yes" if rejected else "no",
            ])
    return buf.getvalue()


_CSS = """\
*, *::before, *::after { box-sizing: border-box; margin: 0; padding: 0; }
body {
    font-family: -apple-system, BlinkMacSystemFont, "Segoe UI", Roboto, sans-serif;
    font-size: 13px; background: #f1f5f9; color: #1e293b; padding: 2rem;
}
.wrap { max-width: 1200px; margin: 0 auto; }
h1 {
    font-size: 1.5rem; font-weight: 700; margin-bottom: .5rem;
    padding-bottom: .75rem; border-bottom: 3px solid #3b82f6;
}
p.meta { font-size: .85rem; color: #64748b; margin-bottom: 2rem; }
.card {
    background: #fff; border-radius: 8px;
    box-shadow: 0 1px 4px rgba(0,0,0,.08); margin-bottom: 2rem; overflow: hidden;
}
.card-title {
    font-size: .7rem; font-weight: 700; letter-spacing: .1em;
    text-transform: uppercase; color: #f8fafc; background: #1e293b;
    padding: .65rem 1rem;
}
.scroll { overflow-x: auto; }
table { width: 100%; border-collapse: collapse; white-space: nowrap; }
th {
    background: #f8fafc; color: #64748b; font-size: .68rem; font-weight: 700;
    text-transform: uppercase; letter-spacing: .06em;
    padding: .55rem .75rem; border-bottom: 2px solid #e2e8f0; text-align: right;
}
th.l { text-align: left; }
td {
    padding: .45rem .75rem; border-bottom: 1px solid #f1f5f9;
    text-align: right; font-variant-numeric: tabular-nums;
}
td.l { text-align: left; }
tbody tr:hover { background: #f0f9ff; }
.best { font-weight: 700; color: #16a34a; }
.sig { font-weight: 700; color: #dc2626; }
.table-note { font-size: .75rem; color: #64748b; margin-top: .75rem; }
footer { margin-top: 1rem; font-size: .75rem; color: #94a3b8; text-align: right; }
"""


def render_html(report: ComparisonReport) -> str:
    """Render a ComparisonReport as a self-contained HTML page."""

    def e(s: object) -> str:
        return str(s).replace('&', '&amp;').replace('<', '&lt;').replace('>', '&gt;')

    variants = report.variants
    pair_names = [f"{variants[i]} vs {variants[j]}" for i, j in report.comparisons[0].pairs]

    def cls(flag: bool, name: str) -> str:
        return f' class="{name}"' if flag else ''

    rank_rows = []
    for c in report.comparisons:
        best = min(c.average_ranks)
        ranks = ''.join(f'<td{cls(r == best, "best")}>{r:.2f}</td>' for r in c.average_ranks)
        pairs = ''.join(
            f'<td{cls(rejected, "sig")}>{format_pvalue(adjusted)}</td>'
            for adjusted, rejected in zip(c.pairwise_adjusted, c.pairwise_rejected)
        )
        rank_rows.append(
            f'<tr><td class="l">{e(CRITERION_LABELS.get(c.criterion, c.criterion))}</td>'
            f'<td>{format_pvalue(c.friedman.pvalue)}</td>'
            f'<td>{format_pvalue(c.friedman_adjusted)}</td>'
            f'{ranks}{pairs}</tr>'
        )
    rank_header = ''.join(f'<th>{e(v)}</th>' for v in variants) + ''.join(f'<th>{e(p)}</th>' for p in pair_names)
    datasets = ', '.join(e(d) for d in report.datasets)
    body = '\n'.join(rank_rows)

    generated = date.today().isoformat()
    return f"""\
<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="UTF-8">
<meta name="viewport" content="width=device-width, initial-scale=1">
<title>{e(report.kind)} comparison</title>
<style>{_CSS}</style>
</head>
<body>
<div class="wrap">
<h1>Comparison of {e(report.kind)} variants</h1>
<p class="meta">{len(report.datasets)} dataset(s): {datasets}. Significance level {report.alpha}.</p>

<div class="card">
<div class="card-title">Average ranks, Friedman and pairwise Wilcoxon tests</div>
<div class="scroll"><table>
<thead><tr>
<th class="l">Criterion</th><th>Friedman p</th><th>Friedman p (adj.)</th>
{rank_header}
</tr></thead>
<tbody>
{body}
</tbody>
</table></div>
</div>
<p class="table-note">Rank 1 is the lowest loss. Pairwise columns show Bergmann-Hommel adjusted p-values;
values in red are significant at the chosen level. 0.000 means p &lt; 0.001 and 1.000 means p &gt; 0.999.</p>

<footer>Generated {generated}</footer>
</div>
</body>
</html>"""


def render_console(reports: Sequence[ComparisonReport], console: Optional[Console] = None) -> None:
    """Print one rich table per kind."""
    console = console or Console()
    for report in reports:
        rows = render_rank_table(report.comparisons)
        table = Table(title=f"{report.kind}: {len(report.datasets)} dataset(s), alpha={report.alpha}")
        for i, header in enumerate(rows[0]):
            table.add_column(header, justify="left" if i == 0 else "right")
        for row in rows:
            table.add_row(CRITERION_LABELS.get(row["criterion"], row["criterion"]), *list(row.values())[1:])
        console.print(table)


def render_summary(means: pd.DataFrame, console: Optional[Console] = None) -> None:
    """Print mean losses per dataset, kind and variant."""
    console = console or Console()
    table = Table(title="Mean losses")
    for column in ("dataset", "kind", "variant"):
        table.add_column(column)
    for column in LOSS_COLUMNS:
        table.add_column(column, justify="right")
    for row in means.itertuples(index=False):
        table.add_row(row.dataset, row.kind, row.variant, *(f"{getattr(row, c):.4f}" for c in LOSS_COLUMNS))
    console.print(table)


def render_radar_svg(report: ComparisonReport, size: int = 520) -> str:
    """Average ranks on one axis per criterion; rank 1 sits next to the centre and rank k on the rim."""
    criteria = [c.criterion for c in report.comparisons]
    if len(criteria) < 3:
        raise ValueError(f"A radar plot needs at least 3 criteria, got {len(criteria)}.")
    variants = report.variants
    k = len(variants)
    cx = cy = size / 2
    rim = size * 0.34
    hub = 0.1 * rim

    def radius(rank: float) -> float:
        return hub + (rim - hub) * (rank - 1.0) / max(k - 1, 1)

    def point(axis: int, r: float) -> Tuple[float, float]:
        angle = -math.pi / 2 + 2 * math.pi * axis / len(criteria)
        return cx + r * math.cos(angle), cy + r * math.sin(angle)

    def polygon_points(values: Sequence[float]) -> str:
        return ' '.join('%.2f,%.2f' % point(i, radius(v)) for i, v in enumerate(values))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 30 * k}" '
        f'viewBox="0 0 {size} {size + 30 * k}" font-family="sans-serif" font-size="12">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{cx:.2f}" y="20" text-anchor="middle" font-size="15" font-weight="bold">'
        f'Average ranks: {report.kind}</text>',
    ]
    for rank in range(1, k + 1):
        parts.append(
            f'<polygon points="{polygon_points([rank] * len(criteria))}" fill="none" '
            f'stroke="#cbd5e1" stroke-dasharray="4 3"/>'
        )
    for i, criterion in enumerate(criteria):
        x, y = point(i, rim)
        lx, ly = point(i, rim + 24)
        parts.append(f'<line x1="{cx:.2f}" y1="{cy:.2f}" x2="{x:.2f}" y2="{y:.2f}" stroke="#94a3b8"/>')
        parts.append(
            f'<text x="{lx:.2f}" y="{ly:.2f}" text-anchor="middle" dominant-baseline="middle">'
            f'{CRITERION_LABELS.get(criterion, criterion)}</text>'
        )
    for v, variant in enumerate(variants):
        colour = _PALETTE[v % len(_PALETTE)]
        ranks = [c.average_ranks[v] for c in report.comparisons]
        parts.append(
            f'<polygon class="variant" data-variant="{variant}" points="{polygon_points(ranks)}" '
            f'fill="{colour}" fill-opacity="0.12" stroke="{colour}" stroke-width="2"/>'
        )
        y = size + 30 * v
        parts.append(f'<rect x="24" y="{y - 11}" width="14" height="14" fill="{colour}"/>')
        parts.append(f'<text x="46" y="{y}">{variant}</text>')
    parts.append('</svg>')
    return '\n'.join(parts) + '\n'


def write_reports(report: ComparisonReport, output_dir: str) -> None:
    """Write comparison_{kind}.csv and .html to output_dir, creating it if needed."""
    os.makedirs(output_dir, exist_ok=True)
    base = os.path.join(output_dir, f"comparison_{report.kind}")
    for ext, content in ((".csv", render_csv(report)), (".html", render_html(report))):
        path = base + ext
        with open(path, "w", newline="" if ext == ".csv" else None, encoding="utf-8") as f:
            f.write(content)
        logging.info("Report written to %s", path)


def emit_radar_svg(report: ComparisonReport, output_dir: str) -> str:
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, f"radar_{report.kind}.svg")
    with open(path, "w", encoding="utf-8") as f:
        f.write(render_radar_svg(report))
    logging.info("Report written to %s", path)
    return path
