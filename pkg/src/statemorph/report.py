"""Benchmark reports: JSON, aligned tables, delimited files, and figures.

Every report path writes the machine-readable artifacts (report.json plus
items.csv, or sweep.csv) and renders a matplotlib figure next to them.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

logger = logging.getLogger(__name__)


@dataclass
class BenchmarkItem:
    id: str
    question: str
    gold_answer: str
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchmarkItem":
        meta = {k: v for k, v in doc.items() if k not in ("id", "question", "answer")}
        return cls(id=str(doc["id"]), question=doc["question"], gold_answer=doc["answer"], metadata=meta)

    def to_dict(self) -> dict:
        out = {"id": self.id, "question": self.question, "answer": self.gold_answer}
        out.update(self.metadata)
        return out


def load_dataset(path: str | Path) -> list[BenchmarkItem]:
    items: list[BenchmarkItem] = []
    seen: set[str] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        doc = json.loads(line)
        item = BenchmarkItem.from_dict(doc)
        if item.id in seen:
            raise ValueError(f"duplicate item id {item.id!r} at line {lineno}")
        seen.add(item.id)
        items.append(item)
    return items


def dump_dataset(items: list[BenchmarkItem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(item.to_dict(), ensure_ascii=False) + "\n")


@dataclass
class ItemResult:
    id: str
    question: str
    gold_answer: str
    answer: str | None
    correct: bool
    iterations_used: int
    steps: int
    halted_reason: str | None
    op_counts: dict[str, int] = field(default_factory=dict)
    verdicts: list[dict] = field(default_factory=list)
    initial_state_ids: list[str] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "gold_answer": self.gold_answer,
            "answer": self.answer,
            "correct": self.correct,
            "iterations_used": self.iterations_used,
            "steps": self.steps,
            "halted_reason": self.halted_reason,
            "op_counts": {k: self.op_counts[k] for k in sorted(self.op_counts)},
            "verdicts": self.verdicts,
            "initial_state_ids": self.initial_state_ids,
            "error": self.error,
        }


@dataclass
class RunReport:
    mode: str
    items: list[ItemResult]
    workers: int = 1
    dataset: str = ""
    created_at: str | None = None

    @property
    def total(self) -> int:
        return len(self.items)

    @property
    def correct(self) -> int:
        return sum(1 for r in self.items if r.correct)

    @property
    def accuracy(self) -> float | None:
        if self.total == 0:
            return None
        return self.correct / self.total

    @property
    def mean_iterations(self) -> float | None:
        if self.total == 0:
            return None
        return sum(r.iterations_used for r in self.items) / self.total

    @property
    def mean_steps(self) -> float | None:
        if self.total == 0:
            return None
        return sum(r.steps for r in self.items) / self.total

    @property
    def mean_ops(self) -> float | None:
        if self.total == 0:
            return None
        return sum(sum(r.op_counts.values()) for r in self.items) / self.total

    def accuracy_str(self) -> str:
        return "n/a" if self.accuracy is None else f"{self.accuracy:.3f}"

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "dataset": self.dataset,
            "workers": self.workers,
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "mean_iterations": self.mean_iterations,
            "mean_steps": self.mean_steps,
            "mean_ops": self.mean_ops,
            "items": [r.to_dict() for r in self.items],
        }
        if self.created_at is not None:
            out["created_at"] = self.created_at
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def now_stamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def render_table(report: RunReport) -> str:
    headers = ["id", "correct", "iters", "steps", "halt", "answer"]
    rows = []
    for r in report.items:
        answer = (r.answer or "").replace("\n", " ")
        if len(answer) > 48:
            answer = answer[:45] + "..."
        rows.append([r.id, "yes" if r.correct else "no", str(r.iterations_used), str(r.steps), r.halted_reason or "-", answer])
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    lines.append("")
    lines.append(
        f"mode={report.mode} total={report.total} correct={report.correct} "
        f"accuracy={report.accuracy_str()} mean_iterations="
        + ("n/a" if report.mean_iterations is None else f"{report.mean_iterations:.2f}")
        + " mean_steps="
        + ("n/a" if report.mean_steps is None else f"{report.mean_steps:.2f}")
    )
    return "\n".join(lines)


def items_csv(report: RunReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["id", "correct", "iterations_used", "steps", "halted_reason", "ops", "answer"])
    for r in report.items:
        writer.writerow(
            [
                r.id,
                int(r.correct),
                r.iterations_used,
                r.steps,
                r.halted_reason or "",
                sum(r.op_counts.values()),
                (r.answer or "").replace("\n", " "),
            ]
        )
    return buf.getvalue()


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["cap", "accuracy", "mean_ops"])
    for row in rows:
        accuracy = "n/a" if row["accuracy"] is None else f"{row['accuracy']:.6f}"
        mean_ops = "n/a" if row["mean_ops"] is None else f"{row['mean_ops']:.6f}"
        writer.writerow([row["cap"], accuracy, mean_ops])
    return buf.getvalue()


def _matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def bench_figure(report: RunReport, path: str | Path) -> None:
    """Outcome bar chart plus iteration histogram for one benchmark run."""
    plt = _matplotlib()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.bar(["correct", "incorrect"], [report.correct, report.total - report.correct], color=["#2a9d8f", "#e76f51"])
    ax1.set_title(f"mode={report.mode} accuracy={report.accuracy_str()}")
    ax1.set_ylabel("items")
    iterations = [r.iterations_used for r in report.items]
    if iterations:
        bins = range(0, max(iterations) + 2)
        ax2.hist(iterations, bins=bins, align="left", rwidth=0.8, color="#264653")
    ax2.set_title("iterations used")
    ax2.set_xlabel("iterations")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def sweep_figure(rows: list[dict], path: str | Path) -> None:
    """Accuracy against the iteration cap, with mean ops on a second axis."""
    plt = _matplotlib()
    caps = [row["cap"] for row in rows]
    accuracy = [row["accuracy"] if row["accuracy"] is not None else 0.0 for row in rows]
    mean_ops = [row["mean_ops"] if row["mean_ops"] is not None else 0.0 for row in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(caps, accuracy, marker="o", color="#2a9d8f", label="accuracy")
    ax.set_xlabel("evolution iteration cap")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0, 1.05)
    ax2 = ax.twinx()
    ax2.plot(caps, mean_ops, marker="s", linestyle="--", color="#e9c46a", label="mean ops")
    ax2.set_ylabel("mean ops per item")
    ax.set_title("accuracy vs evolution budget")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_bench_outputs(report: RunReport, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out_dir / "items.csv").write_text(items_csv(report), encoding="utf-8")
    try:
        bench_figure(report, out_dir / "report.png")
    except Exception as e:  # a headless plotting failure never sinks the run
        logger.warning("could not render report figure: %s", e)
    return out_dir


def write_sweep_outputs(rows: list[dict], reports: list[RunReport], out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.csv").write_text(sweep_csv(rows), encoding="utf-8")
    for report, row in zip(reports, rows):
        (out_dir / f"bench_cap{row['cap']}.json").write_text(report.to_json(), encoding="utf-8")
    try:
        sweep_figure(rows, out_dir / "sweep.png")
    except Exception as e:
        logger.warning("could not render sweep figure: %s", e)
    return out_dir
