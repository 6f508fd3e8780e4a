"""Operating-characteristic metrics from replicate outcomes.

Truth labels derive from the scenario: a basket is truly promising when its
true response rate exceeds the null rate.  Per-scenario metrics follow the
usual error-rate taxonomy:

* rejection rate per basket (type I error or power depending on truth);
* FPR, the mean rejection rate over truly non-promising baskets;
* FWER, the fraction of replicates with at least one false rejection;
* FDR, the mean of V / max(R, 1) over replicates (V false and R total
  rejections; replicates without rejections contribute zero);
* TPR, the mean rejection rate over truly promising baskets;
* CCR, the mean per-basket correct-decision rate.

Metrics over an empty truth class are reported as None (printed "NA"): FPR,
FWER and FDR need a non-promising basket, TPR and CCR a promising one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .simulate import ReplicateSet, Scenario

__all__ = ["ScenarioMetrics", "AggregateMetrics", "compute_metrics", "aggregate"]


@dataclass(frozen=True)
class ScenarioMetrics:
    """One scenario's operating characteristics."""

    scenario: str
    m: int
    truth_promising: tuple[bool, ...]
    rejection_rate: tuple[float, ...]
    fpr: Optional[float]
    fwer: Optional[float]
    fdr: Optional[float]
    tpr: Optional[float]
    ccr: Optional[float]


@dataclass(frozen=True)
class AggregateMetrics:
    """Cross-scenario summaries: error rates over the null-like set, power over the alt-like set."""

    bwer_avg: Optional[float]
    bwer_max: Optional[float]
    tpr_avg: Optional[float]
    ccr_avg: Optional[float]


def compute_metrics(replicates: ReplicateSet, scenario: Scenario, p0: float) -> ScenarioMetrics:
    """Summarize one scenario's replicates into an operating-characteristic row."""
    B = replicates.n_baskets
    if len(scenario.true_orr) != B:
        raise ValueError(
            f"scenario has {len(scenario.true_orr)} baskets but replicates have {B}"
        )
    truth = np.array([p > p0 for p in scenario.true_orr])
    flags = replicates.promising
    rates = flags.mean(axis=0)

    fpr = fwer = fdr = tpr = ccr = None
    if (~truth).any():
        fpr = float(rates[~truth].mean())
        false_any = flags[:, ~truth].any(axis=1)
        fwer = float(false_any.mean())
        v = flags[:, ~truth].sum(axis=1)
        r = flags.sum(axis=1)
        fdr = float((v / np.maximum(r, 1)).mean())
    if truth.any():
        tpr = float(rates[truth].mean())
        correct = np.where(truth, rates, 1.0 - rates)
        ccr = float(correct.mean())

    return ScenarioMetrics(
        scenario=scenario.name,
        m=replicates.m,
        truth_promising=tuple(bool(t) for t in truth),
        rejection_rate=tuple(float(x) for x in rates),
        fpr=fpr,
        fwer=fwer,
        fdr=fdr,
        tpr=tpr,
        ccr=ccr,
    )


def aggregate(
    rows: Sequence[ScenarioMetrics],
    null_like: Sequence[str],
    alt_like: Sequence[str],
) -> AggregateMetrics:
    """Cross-scenario aggregates.

    ``bwer_avg``/``bwer_max`` average and maximize the per-basket rejection
    rates of truly non-promising baskets across the ``null_like`` scenarios;
    ``tpr_avg``/``ccr_avg`` average the TPR and CCR across the ``alt_like``
    scenarios (skipping rows where they are not applicable).
    """
    if not null_like or not alt_like:
        raise ValueError("scenario subsets must be nonempty")
    by_name = {row.scenario: row for row in rows}
    for name in tuple(null_like) + tuple(alt_like):
        if name not in by_name:
            raise ValueError(f"no metrics row for scenario {name!r}")

    bwers = [
        rate
        for name in null_like
        for rate, prom in zip(by_name[name].rejection_rate, by_name[name].truth_promising)
        if not prom
    ]
    tprs = [by_name[name].tpr for name in alt_like if by_name[name].tpr is not None]
    ccrs = [by_name[name].ccr for name in alt_like if by_name[name].ccr is not None]
    return AggregateMetrics(
        bwer_avg=float(np.mean(bwers)) if bwers else None,
        bwer_max=float(np.max(bwers)) if bwers else None,
        tpr_avg=float(np.mean(tprs)) if tprs else None,
        ccr_avg=float(np.mean(ccrs)) if ccrs else None,
    )
