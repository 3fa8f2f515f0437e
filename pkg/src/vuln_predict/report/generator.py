import csv
import io
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..eval.experiments import ConditionResult, ExperimentReport
from ..eval.metrics import UNDEFINED
from ..eval.sampling import LagHistogram
from ..utils.json_utils import PathLike, atomic_write_json, atomic_write_text
from .svg import render_bar_chart, render_line_chart

METRIC_ROWS = ("accuracy", "precision", "recall", "f1")


def _fmt(value: Any) -> str:
    if value is None or value == UNDEFINED:
        return UNDEFINED
    if isinstance(value, float):
        return format(value, ".6f")
    return str(value)


class ExperimentReportWriter:
    """
    Writes experiment artifacts into one output directory.

    Every JSON document carries ``config_hash`` and ``seed`` keys, every CSV
    starts with a ``# config_hash=... seed=...`` line and every SVG embeds
    both in a comment. All writes are atomic.
    """

    def __init__(self, output_dir: PathLike, config_hash: str, seed: int, logger: Optional[logging.Logger] = None):
        self.output_dir = Path(output_dir)
        self.config_hash = config_hash
        self.seed = seed
        self.logger = logger or logging.getLogger("vuln_predict")
        self.written: List[Path] = []

    # -- primitives -------------------------------------------------------

    @property
    def stamp(self) -> Dict[str, Any]:
        return {"config_hash": self.config_hash, "seed": self.seed}

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        self.logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        return self._record(atomic_write_json(self.output_dir / name, {**data, **self.stamp}))

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        out = io.StringIO()
        out.write(f"# config_hash={self.config_hash} seed={self.seed}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        return self._record(atomic_write_text(self.output_dir / name, out.getvalue()))

    def write_svg(self, name: str, svg: str) -> Path:
        return self._record(atomic_write_text(self.output_dir / name, svg))

    def write_text(self, name: str, text: str) -> Path:
        """Raw text artifacts whose format admits no header (canonical JSONL, mapping CSV)."""
        return self._record(atomic_write_text(self.output_dir / name, text))

    # -- experiments ------------------------------------------------------

    @staticmethod
    def prefix(report: ExperimentReport) -> str:
        return f"exp{report.experiment}" if report.experiment.isdigit() else report.experiment

    def metrics_table(self, report: ExperimentReport) -> Tuple[List[str], List[List[Any]]]:
        """Metrics as rows and conditions as columns."""
        header = ["metric"] + [c.name for c in report.conditions]
        rows: List[List[Any]] = []
        for metric in METRIC_ROWS:
            rows.append([metric] + [getattr(c.metrics, metric) for c in report.conditions])
        rows.append(["test_positive_fraction"] + [c.test_positive_fraction for c in report.conditions])
        rows.append(["train_size"] + [c.train_size for c in report.conditions])
        rows.append(["test_size"] + [c.test_size for c in report.conditions])
        return header, rows

    def generate_report(self, report: ExperimentReport) -> List[Path]:
        start = len(self.written)
        prefix = self.prefix(report)
        self.write_json(f"{prefix}_report.json", report.to_dict())
        header, rows = self.metrics_table(report)
        self.write_csv(f"{prefix}_metrics.csv", header, rows)
        self.write_json(
            f"{prefix}_errors.json",
            {"errors": [{"condition": name, "message": message} for name, message in report.errors]},
        )
        if report.baseline is not None:
            counts, metrics = report.baseline
            self.write_csv(
                f"{prefix}_lookup_baseline.csv",
                ["tp", "fp", "tn", "fn", *METRIC_ROWS],
                [[counts.tp, counts.fp, counts.tn, counts.fn, *(getattr(metrics, m) for m in METRIC_ROWS)]],
            )

        curves = []
        for condition in report.conditions:
            if condition.curve is None:
                continue
            self._write_condition(prefix, condition)
            curves.append((condition.name, condition.curve.to_rows()))
        if curves:
            self.write_svg(
                f"{prefix}_pr.svg",
                render_line_chart(
                    f"Experiment {report.experiment}: interpolated precision-recall",
                    "Recall",
                    "Precision",
                    curves,
                    step=True,
                    meta=self.stamp,
                ),
            )
        return self.written[start:]

    def _write_condition(self, prefix: str, condition: ConditionResult) -> None:
        name = f"{prefix}_{condition.name}"
        points = condition.curve.to_rows()
        self.write_csv(f"{name}_pr.csv", ["recall", "precision"], points)
        self.write_svg(
            f"{name}.svg",
            render_line_chart(
                f"{condition.name}: interpolated precision-recall",
                "Recall",
                "Precision",
                [(condition.name, points)],
                step=True,
                meta=self.stamp,
            ),
        )
        separation = condition.details.get("separation")
        if separation:
            edges = separation["edges"]
            centers = [(a + b) / 2 for a, b in zip(edges, edges[1:])]
            top = max(separation["positive_counts"] + separation["negative_counts"] + [1])
            self.write_svg(
                f"{name}_separation.svg",
                render_line_chart(
                    f"{condition.name}: decision scores by class",
                    "Decision score",
                    "Count",
                    [
                        ("exploited", list(zip(centers, separation["positive_counts"]))),
                        ("not exploited", list(zip(centers, separation["negative_counts"]))),
                    ],
                    x_range=(edges[0], edges[-1]),
                    y_range=(0.0, top * 1.1),
                    meta=self.stamp,
                ),
            )

    # -- corpus-level outputs ---------------------------------------------

    def write_lag_histogram(self, histogram: LagHistogram) -> List[Path]:
        start = len(self.written)
        self.write_json("lag_histogram.json", histogram.to_dict())
        self.write_csv("lag_histogram.csv", ["start_day", "count"], list(histogram.bins))
        width = histogram.bin_width_days
        self.write_svg(
            "lag_histogram.svg",
            render_bar_chart(
                f"Days from disclosure to exploit (median {histogram.median_days:g})",
                f"Lag in days ({width}-day bins)",
                "Vulnerabilities",
                [(str(start), float(count)) for start, count in histogram.bins],
                meta=self.stamp,
                label_every=max(1, len(histogram.bins) // 20),
            ),
        )
        return self.written[start:]

    def write_monthly_counts(self, counts: Sequence[Tuple[str, int]]) -> List[Path]:
        start = len(self.written)
        self.write_csv("disclosures_by_month.csv", ["month", "count"], counts)
        if counts:
            self.write_svg(
                "disclosures_by_month.svg",
                render_bar_chart(
                    "Disclosures per month",
                    "Month",
                    "Vulnerabilities",
                    [(month, float(n)) for month, n in counts],
                    meta=self.stamp,
                    label_every=max(1, len(counts) // 24),
                ),
            )
        return self.written[start:]
