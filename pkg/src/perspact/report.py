"""Per-family metrics and the markdown/TSV/figure report."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .planner import PlanStats
from .scenarios import FAMILIES, Family

MISSING = "-"


@dataclass(frozen=True)
class FamilyMetrics:
    trials: int
    first_take_incorrect: float | None  # None when no trial took anything
    mean_steps: float
    mean_asks: float
    success_rate: float
    no_take: int  # trials excluded from the first-take denominator


@dataclass(frozen=True)
class MetricsSummary:
    rows: dict  # policy -> {Family: FamilyMetrics}

    @property
    def policies(self) -> list[str]:
        return list(self.rows)

    def get(self, policy: str, family: Family) -> FamilyMetrics | None:
        return self.rows.get(policy, {}).get(family)


def summarize(records: Iterable) -> MetricsSummary:
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty record list")
    groups: dict[str, dict[Family, list]] = defaultdict(lambda: defaultdict(list))
    for rec in records:
        groups[rec.policy][rec.family].append(rec)

    rows = {}
    for policy, by_family in groups.items():
        rows[policy] = {}
        for family in FAMILIES:
            recs = by_family.get(family)
            if not recs:
                continue
            n = len(recs)
            took = [r for r in recs if r.first_take_correct is not None]
            wrong = sum(not r.first_take_correct for r in took)
            rows[policy][family] = FamilyMetrics(
                trials=n,
                first_take_incorrect=100.0 * wrong / len(took) if took else None,
                mean_steps=sum(r.steps for r in recs) / n,
                mean_asks=sum(r.asks for r in recs) / n,
                success_rate=100.0 * sum(r.success for r in recs) / n,
                no_take=n - len(took),
            )
    return MetricsSummary(rows)


def fmt(value: float | None) -> str:
    if value is None:
        return "n/a"
    return f"{round(value, 2):g}"


def _table(header: str, rows: list[tuple[str, list[str]]]) -> list[str]:
    cols = [f.short for f in FAMILIES]
    lines = [f"| {header} | " + " | ".join(cols) + " |", "|" + "---|" * (len(cols) + 1)]
    lines += [f"| {name} | " + " | ".join(cells) + " |" for name, cells in rows]
    return lines


METRICS = (
    ("First take on incorrect target (%)", "first_take_incorrect"),
    ("Average number of steps", "mean_steps"),
    ("Average number of ask actions", "mean_asks"),
    ("Success rate (%)", "success_rate"),
)


def emit_report(summary: MetricsSummary | None, planner: Mapping[Family, PlanStats] | None = None) -> str:
    """Markdown tables in the fixed family column order; byte-stable for equal inputs."""
    out: list[str] = []
    if summary is not None and summary.rows:
        for title, attr in METRICS:
            rows = []
            for policy in summary.policies:
                cells = []
                for family in FAMILIES:
                    m = summary.get(policy, family)
                    cells.append(MISSING if m is None else fmt(getattr(m, attr)))
                rows.append((policy, cells))
            out += [f"## {title}", "", *_table("Agent", rows), ""]
        excluded = [
            f"{policy}/{family.short}: {m.no_take}"
            for policy in summary.policies
            for family in FAMILIES
            if (m := summary.get(policy, family)) is not None and m.no_take
        ]
        if excluded:
            out += ["Trials without any take (excluded from the first-take percentage): " + ", ".join(excluded) + ".", ""]
    if planner:
        rows = []
        for label, attr in (("#Steps", "steps"), ("#Ask", "asks"), ("#Move", "moves")):
            rows.append((label, [MISSING if f not in planner else str(getattr(planner[f], attr)) for f in FAMILIES]))
        out += ["## Optimal plan baseline", "", *_table("Metric", rows), ""]
    return "\n".join(out)


def emit_tsv(summary: MetricsSummary) -> str:
    lines = ["policy\tfamily\ttrials\tfirst_take_incorrect\tmean_steps\tmean_asks\tsuccess_rate\tno_take"]
    for policy in summary.policies:
        for family in FAMILIES:
            m = summary.get(policy, family)
            if m is None:
                continue
            lines.append(
                "\t".join(
                    [policy, family.short, str(m.trials), fmt(m.first_take_incorrect), fmt(m.mean_steps),
                     fmt(m.mean_asks), fmt(m.success_rate), str(m.no_take)]
                )  # fmt: skip
            )
    return "\n".join(lines) + "\n"


def render_figures(summary: MetricsSummary, directory: str | Path) -> list[Path]:
    """One grouped bar chart per metric, one bar group per family."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    policies = summary.policies
    width = 0.8 / max(len(policies), 1)
    for title, attr in METRICS:
        fig, ax = plt.subplots(figsize=(8, 3.5))
        for i, policy in enumerate(policies):
            xs, ys = [], []
            for j, family in enumerate(FAMILIES):
                m = summary.get(policy, family)
                if m is not None and getattr(m, attr) is not None:
                    xs.append(j + i * width)
                    ys.append(getattr(m, attr))
            ax.bar(xs, ys, width=width, label=policy)
        ax.set_xticks([j + width * (len(policies) - 1) / 2 for j in range(len(FAMILIES))])
        ax.set_xticklabels([f.short for f in FAMILIES])
        ax.set_title(title)
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = directory / f"{attr}.png"
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
        written.append(path)
    return written
