"""Report emission: operating-characteristic tables, cutoffs, tuning grids.

CSV reports are long-format with columns (scenario, basket, metric, value,
mc_se); rates carry four decimals and a binomial Monte Carlo standard error.
Metrics that do not apply print "NA".  JSON variants mirror the same content
with full-precision numbers.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Optional, Sequence

from .calibrate import CalibrationResult
from .metrics import AggregateMetrics, ScenarioMetrics
from .simulate import mc_standard_error
from .trial import DesignSpec
from .tune import TuneResult

__all__ = [
    "format_rate",
    "oc_report_csv",
    "oc_report_json",
    "cutoffs_payload",
    "grid_report_csv",
    "tune_payload",
    "analysis_table",
]

NA = "NA"


def format_rate(value: Optional[float]) -> str:
    return NA if value is None else f"{value:.4f}"


def _se_str(value: Optional[float], m: int) -> str:
    if value is None:
        return NA
    return f"{mc_standard_error(value, m):.4f}"


def oc_report_csv(
    rows: Sequence[ScenarioMetrics],
    aggregates: Optional[AggregateMetrics],
    design: DesignSpec,
) -> str:
    """Long-format operating-characteristic CSV with an aggregates block."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario", "basket", "metric", "value", "mc_se"])
    for row in rows:
        for i, rate in enumerate(row.rejection_rate):
            writer.writerow(
                [row.scenario, design.names[i], "rejection_rate",
                 format_rate(rate), _se_str(rate, row.m)]
            )
        for metric, value in (
            ("FPR", row.fpr), ("FWER", row.fwer), ("FDR", row.fdr),
            ("TPR", row.tpr), ("CCR", row.ccr),
        ):
            writer.writerow(
                [row.scenario, "", metric, format_rate(value), _se_str(value, row.m)]
            )
    if aggregates is not None:
        for metric, value in (
            ("BWER_avg", aggregates.bwer_avg), ("BWER_max", aggregates.bwer_max),
            ("TPR_avg", aggregates.tpr_avg), ("CCR_avg", aggregates.ccr_avg),
        ):
            writer.writerow(["aggregate", "", metric, format_rate(value), NA])
    return buf.getvalue()


def oc_report_json(
    rows: Sequence[ScenarioMetrics],
    aggregates: Optional[AggregateMetrics],
    design: DesignSpec,
) -> str:
    payload = {
        "baskets": list(design.names),
        "scenarios": [
            {
                "scenario": row.scenario,
                "m": row.m,
                "rejection_rate": list(row.rejection_rate),
                "mc_se": [mc_standard_error(r, row.m) for r in row.rejection_rate],
                "FPR": row.fpr,
                "FWER": row.fwer,
                "FDR": row.fdr,
                "TPR": row.tpr,
                "CCR": row.ccr,
            }
            for row in rows
        ],
    }
    if aggregates is not None:
        payload["aggregates"] = {
            "BWER_avg": aggregates.bwer_avg,
            "BWER_max": aggregates.bwer_max,
            "TPR_avg": aggregates.tpr_avg,
            "CCR_avg": aggregates.ccr_avg,
        }
    return json.dumps(payload, indent=2) + "\n"


def cutoffs_payload(result: CalibrationResult, design: DesignSpec) -> str:
    payload = {
        "alpha": result.alpha,
        "M": result.m,
        "baskets": list(design.names),
        "cutoffs": list(result.cutoffs),
        "groups": [[design.names[i] for i in group] for group in result.groups],
    }
    return json.dumps(payload, indent=2) + "\n"


def grid_report_csv(result: TuneResult, design: DesignSpec) -> str:
    param_names = sorted(result.report[0].params) if result.report else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        param_names
        + ["bwer_max", "tpr_avg", "ccr_avg", "objective", "feasible", "cutoffs"]
    )
    for cand in result.report:
        writer.writerow(
            [f"{cand.params[p]:g}" for p in param_names]
            + [
                format_rate(cand.bwer_max),
                format_rate(cand.tpr_avg),
                format_rate(cand.ccr_avg),
                format_rate(cand.objective),
                str(cand.feasible).lower(),
                ";".join(f"{q:.4f}" for q in cand.cutoffs),
            ]
        )
    return buf.getvalue()


def tune_payload(result: TuneResult, design: DesignSpec) -> str:
    best = result.best
    payload = {
        "params": best.params,
        "cutoffs": list(best.cutoffs),
        "baskets": list(design.names),
        "bwer_max": best.bwer_max,
        "tpr_avg": best.tpr_avg,
        "ccr_avg": best.ccr_avg,
        "objective": best.objective,
        "feasible": best.feasible,
        "candidates": len(result.report),
    }
    return json.dumps(payload, indent=2) + "\n"


def analysis_table(payload: dict) -> str:
    """Human-readable rendering of an analysis payload."""
    names = payload["baskets"]
    width = max(12, max(len(n) for n in names) + 2)
    lines = []
    lines.append("borrowing weights:")
    header = " " * width + "".join(f"{n:>{width}}" for n in names)
    lines.append(header)
    for name, row in zip(names, payload["weights"]):
        lines.append(f"{name:>{width}}" + "".join(f"{v:>{width}.3f}" for v in row))
    lines.append("")
    cols = ["y", "n", "shape1", "shape2", "prob_exceed", "borrow_factor"]
    has_decisions = payload.get("decisions") is not None
    if has_decisions:
        cols += ["cutoff", "promising"]
    lines.append(f"{'basket':>{width}}" + "".join(f"{c:>14}" for c in cols))
    for i, name in enumerate(names):
        row = [
            f"{payload['y'][i]:>14d}",
            f"{payload['n'][i]:>14d}",
            f"{payload['posterior_shape1'][i]:>14.4f}",
            f"{payload['posterior_shape2'][i]:>14.4f}",
            f"{payload['prob_exceed'][i]:>14.4f}",
            f"{payload['borrowing_factor'][i]:>14.4f}",
        ]
        if has_decisions:
            row.append(f"{payload['cutoffs'][i]:>14.4f}")
            row.append(f"{str(payload['decisions'][i]):>14}")
        lines.append(f"{name:>{width}}" + "".join(row))
    return "\n".join(lines) + "\n"
