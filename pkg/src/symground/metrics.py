"""Per-step metrics series and its CSV/plot emitters.

The CSV is the contract: UTF-8, one header row, fixed column order, floats
printed with 17 significant digits so that parsing recovers every value
exactly. The two flag columns are blank except on the final row.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, MetricsIOError

COLUMNS = (
    "step",
    "N",
    "births",
    "deaths",
    "mean_f_true",
    "max_f_true",
    "mean_f_est",
    "value_corr",
    "mean_sigma_gen",
    "mean_sigma_learn",
    "mean_recall",
    "mean_precision",
    "agreement",
    "mean_cosine",
    "activation_fraction",
    "mean_g_est",
    "goal_corr",
    "mean_goal_error",
)
FLAG_COLUMNS = ("extinct_at", "capped_at")
INT_COLUMNS = frozenset({"step", "N", "births", "deaths"})
HEADER = COLUMNS + FLAG_COLUMNS


@dataclass
class MetricsSeries:
    rows: list = field(default_factory=list)
    extinct_at: int | None = None
    capped_at: int | None = None

    def append(self, row: dict) -> None:
        self.rows.append(tuple(row[c] for c in COLUMNS))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = COLUMNS.index(name)
        dtype = np.int64 if name in INT_COLUMNS else np.float64
        return np.array([r[i] for r in self.rows], dtype=dtype)

    def row(self, k: int) -> dict:
        return dict(zip(COLUMNS, self.rows[k]))

    @property
    def final_step(self) -> int:
        return int(self.rows[-1][0])

    def identical_to(self, other: "MetricsSeries") -> bool:
        if (self.extinct_at, self.capped_at) != (other.extinct_at, other.capped_at):
            return False
        if len(self.rows) != len(other.rows):
            return False
        a = np.array(self.rows, dtype=np.float64)
        b = np.array(other.rows, dtype=np.float64)
        return a.tobytes() == b.tobytes() or bool(np.all((a == b) | (np.isnan(a) & np.isnan(b))))


def _fmt(name: str, value) -> str:
    if name in INT_COLUMNS:
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def to_csv_text(series: MetricsSeries) -> str:
    if len(series) == 0:
        raise InsufficientDataError("metrics series is empty")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    last = len(series) - 1
    for k, row in enumerate(series.rows):
        cells = [_fmt(c, v) for c, v in zip(COLUMNS, row)]
        if k == last:
            cells += ["" if series.extinct_at is None else str(series.extinct_at),
                      "" if series.capped_at is None else str(series.capped_at)]
        else:
            cells += ["", ""]
        writer.writerow(cells)
    return buf.getvalue()


def emit_metrics(series: MetricsSeries, path) -> Path:
    text = to_csv_text(series)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise MetricsIOError(f"cannot write metrics to {path}: {exc}") from exc
    return path


def parse_csv_text(text: str) -> MetricsSeries:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != HEADER:
        raise ValueError(f"unexpected metrics header: {header}")
    series = MetricsSeries()
    flags = ("", "")
    for cells in reader:
        values = {}
        for c, cell in zip(COLUMNS, cells):
            values[c] = int(cell) if c in INT_COLUMNS else float(cell)
        series.append(values)
        flags = cells[len(COLUMNS):]
    series.extinct_at = int(flags[0]) if flags[0] else None
    series.capped_at = int(flags[1]) if flags[1] else None
    return series


def read_metrics(path) -> MetricsSeries:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MetricsIOError(f"cannot read metrics from {path}: {exc}") from exc
    return parse_csv_text(text)


def emit_plot(series: MetricsSeries, path) -> Path:
    """Line charts of the main aggregates against step, as SVG. Best effort."""
    if len(series) == 0:
        raise InsufficientDataError("metrics series is empty")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    step = series.column("step")
    panels = (
        ("N", ("N",)),
        ("fitness", ("mean_f_true", "mean_f_est")),
        ("sigma", ("mean_sigma_gen", "mean_sigma_learn")),
        ("symbols", ("agreement",)),
    )
    fig, axes = plt.subplots(len(panels), 1, figsize=(7, 9), sharex=True)
    for ax, (label, cols) in zip(axes, panels):
        for c in cols:
            ax.plot(step, series.column(c), label=c, lw=0.8)
        ax.set_ylabel(label)
        ax.legend(loc="upper right", fontsize=7)
    axes[-1].set_xlabel("step")
    fig.tight_layout()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise MetricsIOError(f"cannot write plot to {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path
