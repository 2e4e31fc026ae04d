"""Metrics JSON, confusion CSV and window-sweep CSV writers."""

from __future__ import annotations

import json
import re
from pathlib import Path

from ..core.io import atomic_write, write_labels_csv, write_table_csv
from .crossval import CrossValResult
from .metrics import SWEEP_HEADER, EvalReport, window_sweep

RATIO_NOTE = ("precision = CPT/AT and recall = CPT/PT follow the original metric "
              "definitions, which swap the conventional meanings")


def report_json(report: EvalReport) -> dict:
    out = report.to_json()
    t = out["transitions"]
    t["precision"] = t["cpt_over_at"]
    t["recall"] = t["cpt_over_pt"]
    t["note"] = RATIO_NOTE
    return out


_NUMBER_ROW = re.compile(r"\[\s+([-+0-9.eE]+(?:,\s+[-+0-9.eE]+)*)\s+\]")


def dumps(obj) -> str:
    """Indented JSON with each list of numbers kept on one line."""
    text = json.dumps(obj, indent=2, sort_keys=True)
    return _NUMBER_ROW.sub(lambda m: "[" + re.sub(r",\s+", ", ", m.group(1)) + "]", text)


def write_json(obj, path) -> None:
    with atomic_write(path) as fh:
        fh.write(dumps(obj) + "\n")


def write_confusion_csv(report: EvalReport, path) -> None:
    """Rows are actual behaviours, columns predicted, as labelled."""
    labels = report.label_set.members
    rows = [(b, *map(int, row)) for b, row in zip(labels, report.confusion)]
    write_table_csv(("actual", *labels), rows, path)


def write_sweep_csv(reports: dict, path) -> None:
    write_table_csv(SWEEP_HEADER, window_sweep(reports), path)


def write_evaluation(reports: dict, window: int, outdir) -> None:
    """metrics.json and confusion.csv at ``window``, window_sweep.csv over all windows."""
    outdir = Path(outdir)
    write_json(report_json(reports[window]), outdir / "metrics.json")
    write_confusion_csv(reports[window], outdir / "confusion.csv")
    write_sweep_csv(reports, outdir / "window_sweep.csv")


def write_crossval(result: CrossValResult, outdir) -> None:
    """One directory per fold plus pooled outputs and a summary.json."""
    outdir = Path(outdir)
    for f in result.folds:
        fdir = outdir / "folds" / f.fold.participant
        write_evaluation(f.reports, result.window, fdir)
        for i, pred in enumerate(f.predicted):
            write_labels_csv(pred, fdir / f"predictions_{i}.csv")
    sweep = result.pooled_sweep()
    write_evaluation(sweep, result.window, outdir / "pooled")
    write_json({
        "protocol": result.protocol,
        "window": result.window,
        "recipe": result.recipe.to_json(),
        "pooled_accuracy": result.pooled().accuracy,
        "folds": [{"participant": f.fold.participant, "ticks": f.ticks,
                   "accuracy": f.reports[result.window].accuracy} for f in result.folds],
    }, outdir / "summary.json")
