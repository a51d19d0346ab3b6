"""Structured experiment results with JSON/CSV emission.

The `ratio` column means different things per experiment (relative gap for
duality, normalized bound usage for weak-type checks, conditional-expectation
defect for transform checks, best objective for searches); each producer in
`lab` documents its convention. Every report embeds enough of a witness to
re-evaluate its worst case.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

CSV_COLUMNS = ("experiment", "seed", "trial", "ratio", "bound", "pass")


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    ratio: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class ExperimentReport:
    experiment: str
    seed: int
    exponents: dict
    trials: int
    worst_case: float
    passed: bool
    tolerance: float
    witness: dict | None = None
    rows: tuple = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "exponents": dict(self.exponents),
            "trials": self.trials,
            "worst_case": self.worst_case,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "witness": self.witness,
            "rows": [asdict(r) for r in self.rows],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentReport":
        return cls(
            experiment=doc["experiment"],
            seed=int(doc["seed"]),
            exponents=dict(doc["exponents"]),
            trials=int(doc["trials"]),
            worst_case=float(doc["worst_case"]),
            passed=bool(doc["pass"]),
            tolerance=float(doc["tolerance"]),
            witness=doc.get("witness"),
            rows=tuple(
                TrialRow(
                    trial=int(r["trial"]),
                    seed=int(r["seed"]),
                    ratio=float(r["ratio"]),
                    bound=float(r["bound"]),
                    passed=bool(r["passed"]),
                )
                for r in doc.get("rows", ())
            ),
        )


def emit_report(report: ExperimentReport, fmt: str) -> str:
    """Serialize a report; byte-deterministic for a fixed report."""
    if fmt == "json":
        return json.dumps(report.to_json_dict(), sort_keys=True)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in report.rows:
            writer.writerow(
                [report.experiment, r.seed, r.trial, repr(r.ratio), repr(r.bound), r.passed]
            )
        return buf.getvalue()
    raise ValueError(f"unknown report format: {fmt!r}")


def parse_report(text: str) -> ExperimentReport:
    return ExperimentReport.from_json_dict(json.loads(text))


def write_report(report: ExperimentReport, path, fmt: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_report(report, fmt))
