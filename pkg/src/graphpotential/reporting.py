"""Run reports: schema-versioned JSON, plot-ready CSV, human summaries,
and rendered figures.

Reports are fully reproducible from their config echo; with timings
excluded, identical invocations serialize byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

SCHEMA_VERSION = "1"


@dataclass
class RunReport:
    subcommand: str
    config: dict
    sequences: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    timings: dict | None = None
    tool_version: str = "0.1.0"

    def add_sequence(self, quantity: str, radii, values, **extra) -> None:
        record = {"quantity": quantity, "radii": list(radii), "values": [float(v) for v in values]}
        record.update(extra)
        self.sequences.append(record)

    def add_limit(self, quantity: str, report) -> None:
        d = report.as_dict()
        self.add_sequence(
            quantity,
            d["radii"] or list(range(1, len(d["values"]) + 1)),
            d["values"],
            verdict=d["verdict"],
            limit=d["limit"],
            achieved_tol=d["achieved_tol"],
            cauchy_tail=d["cauchy_tail"],
            extra=d["extra"],
        )

    def as_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "subcommand": self.subcommand,
            "config": self.config,
            "sequences": self.sequences,
            "verdicts": self.verdicts,
            "notes": self.notes,
        }
        if self.timings is not None:
            out["timings"] = self.timings
        return out


def emit_json(report: RunReport) -> str:
    return json.dumps(report.as_dict(), sort_keys=True, indent=2) + "\n"


def emit_csv(report: RunReport) -> str:
    lines = ["window_radius,quantity,value"]
    for seq in report.sequences:
        for r, v in zip(seq["radii"], seq["values"]):
            lines.append(f"{r},{seq['quantity']},{v!r}")
    return "\n".join(lines) + "\n"


def emit_human(report: RunReport) -> str:
    lines = [f"== {report.subcommand} =="]
    cfg = report.config
    for key in ("graph", "root", "radii", "seed"):
        if key in cfg:
            lines.append(f"{key:>10}: {cfg[key]}")
    for name, verdict in report.verdicts.items():
        lines.append(f"{name:>10}: {verdict}")
    for seq in report.sequences:
        lines.append(f"-- {seq['quantity']}" + (f" [{seq['verdict']}]" if "verdict" in seq else ""))
        for r, v in zip(seq["radii"], seq["values"]):
            lines.append(f"  {r:>10}  {v:.12g}")
    for key, val in report.notes.items():
        lines.append(f"note {key}: {val}")
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, fmt: str) -> str:
    if fmt == "json":
        return emit_json(report)
    if fmt == "csv":
        return emit_csv(report)
    if fmt == "human":
        return emit_human(report)
    raise ValueError(f"unknown format {fmt!r}")


def render_figures(report: RunReport, outdir: str) -> list[str]:
    """Render one PNG per evidence sequence plus the delimited data.

    Returns the list of written paths.  Uses the non-interactive
    matplotlib backend; safe in headless environments.
    """
    import os

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    written = []
    for seq in report.sequences:
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        radii = seq["radii"]
        values = seq["values"]
        ax.plot(radii, values, marker="o", lw=1.2)
        ax.set_xlabel("window radius")
        ax.set_ylabel(seq["quantity"])
        positive = all(v > 0 for v in values)
        if positive and max(values) / max(min(values), 1e-300) > 50:
            ax.set_yscale("log")
        title = seq["quantity"]
        if "verdict" in seq:
            title += f" ({seq['verdict']})"
        ax.set_title(title, fontsize=10)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        safe = seq["quantity"].replace("/", "_").replace(" ", "_")
        path = os.path.join(outdir, f"{report.subcommand}_{safe}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    csv_path = os.path.join(outdir, f"{report.subcommand}_sequences.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(emit_csv(report))
    written.append(csv_path)
    return written
