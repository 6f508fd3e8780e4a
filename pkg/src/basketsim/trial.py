"""Single-trial mechanics: interim futility stops and the final analysis.

A trial consumes one pre-generated response sequence per basket.  Each basket
is checked at its scheduled interim looks on raw cumulative counts (no
borrowing at interim); a basket whose responses fall at or below the futility
boundary stops enrolling and leaves the final-analysis set.  At the final
analysis the surviving baskets borrow from each other, and each is claimed
promising when its posterior probability of exceeding the null response rate
strictly beats its efficacy cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .posterior import BasketData, BetaParams, posterior_params, prob_exceed
from .weights import BorrowingConfig, build_weight_matrix

__all__ = [
    "Look",
    "DesignSpec",
    "BasketOutcome",
    "TrialOutcome",
    "apply_interims",
    "final_analysis",
]


@dataclass(frozen=True)
class Look:
    """One interim analysis: stop the basket if responses <= the boundary."""

    size: int
    futility_max_responses: int

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValueError(f"look size must be positive, got {self.size}")
        if not 0 <= self.futility_max_responses <= self.size:
            raise ValueError(
                f"futility boundary {self.futility_max_responses} outside [0, {self.size}]"
            )


@dataclass(frozen=True)
class DesignSpec:
    """Trial design: per-basket maximum sample sizes, interim schedules, null rate, alpha."""

    n_max: tuple[int, ...]
    looks: tuple[tuple[Look, ...], ...]
    p0: float
    alpha: float
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_max", tuple(int(v) for v in self.n_max))
        object.__setattr__(self, "looks", tuple(tuple(lk) for lk in self.looks))
        if not self.n_max:
            raise ValueError("design needs at least one basket")
        if len(self.looks) != len(self.n_max):
            raise ValueError("looks and n_max must have one entry per basket")
        for i, (nm, basket_looks) in enumerate(zip(self.n_max, self.looks)):
            if nm <= 0:
                raise ValueError(f"basket {i}: maximum sample size must be positive")
            prev = 0
            for lk in basket_looks:
                if lk.size <= prev:
                    raise ValueError(f"basket {i}: look sizes must be strictly increasing")
                if lk.size >= nm:
                    raise ValueError(f"basket {i}: look size {lk.size} must be < n_max {nm}")
                prev = lk.size
        if not 0.0 < self.p0 < 1.0:
            raise ValueError(f"p0 must lie in (0, 1), got {self.p0!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not self.names:
            object.__setattr__(
                self, "names", tuple(f"basket{i + 1}" for i in range(len(self.n_max)))
            )
        elif len(self.names) != len(self.n_max):
            raise ValueError("names must have one entry per basket")

    @property
    def n_baskets(self) -> int:
        return len(self.n_max)

    @classmethod
    def equal(
        cls,
        n_baskets: int,
        n_max: int,
        looks: Sequence[Look],
        p0: float,
        alpha: float,
    ) -> "DesignSpec":
        """Identical sample size and interim schedule for every basket."""
        return cls(
            (n_max,) * n_baskets,
            (tuple(looks),) * n_baskets,
            p0,
            alpha,
        )


@dataclass(frozen=True)
class BasketOutcome:
    stopped_at_look: Optional[int]
    final_y: int
    final_n: int
    posterior: BetaParams
    post_prob: float
    promising: bool


@dataclass(frozen=True)
class TrialOutcome:
    baskets: tuple[BasketOutcome, ...]

    @property
    def q(self) -> tuple[float, ...]:
        return tuple(b.post_prob for b in self.baskets)

    @property
    def promising(self) -> tuple[bool, ...]:
        return tuple(b.promising for b in self.baskets)

    @property
    def stopped(self) -> tuple[bool, ...]:
        return tuple(b.stopped_at_look is not None for b in self.baskets)


def apply_interims(accrual: Sequence[Sequence[int]], design: DesignSpec) -> BasketData:
    """Run each basket's interim schedule on its potential response sequence.

    ``accrual[i]`` holds basket i's responses (0/1) for the full potential
    enrollment; it must be at least ``n_max[i]`` long (a padded rectangular
    array is fine, the tail is ignored).  Looks are evaluated in order on
    cumulative counts; the first violated boundary freezes the basket at that
    look's size and drops it from the final-analysis set.
    """
    B = design.n_baskets
    if len(accrual) != B:
        raise ValueError(f"expected {B} response sequences, got {len(accrual)}")
    y_out = []
    n_out = []
    active_out = []
    stopped_out: list[Optional[int]] = []
    for i in range(B):
        seq = np.asarray(accrual[i], dtype=np.int64)
        nm = design.n_max[i]
        if seq.shape[0] < nm:
            raise ValueError(
                f"basket {i}: response sequence of length {seq.shape[0]} is shorter "
                f"than n_max {nm}"
            )
        cum = np.cumsum(seq[:nm])
        stopped_at: Optional[int] = None
        for k, lk in enumerate(design.looks[i]):
            if cum[lk.size - 1] <= lk.futility_max_responses:
                stopped_at = k
                y_out.append(int(cum[lk.size - 1]))
                n_out.append(lk.size)
                break
        if stopped_at is None:
            y_out.append(int(cum[nm - 1]))
            n_out.append(nm)
        active_out.append(stopped_at is None)
        stopped_out.append(stopped_at)
    return BasketData(tuple(y_out), tuple(n_out), tuple(active_out), tuple(stopped_out))


def final_analysis(
    data: BasketData,
    config: BorrowingConfig,
    cutoffs: Optional[Sequence[float]],
    p0: float,
) -> TrialOutcome:
    """Borrow among active baskets, compute posteriors and efficacy decisions.

    Basket i is promising iff it survived the interims and its posterior
    probability of exceeding ``p0`` strictly exceeds its cutoff.  Stopped
    baskets record probability 0 and can never be promising; their own-data
    posterior is still reported.  With ``cutoffs=None`` only the posterior
    probabilities are produced and no basket is flagged promising.
    """
    B = data.n_baskets
    if cutoffs is not None:
        cutoffs = tuple(float(c) for c in cutoffs)
        if len(cutoffs) != B:
            raise ValueError(f"expected {B} cutoffs, got {len(cutoffs)}")
        for c in cutoffs:
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"cutoffs must lie in [0, 1], got {c!r}")
    weights = build_weight_matrix(config, data)
    stopped_at = data.stopped_at or (None,) * B
    outcomes = []
    for i in range(B):
        posterior = posterior_params(i, data, config.prior, weights)
        if data.active[i]:
            q = prob_exceed(posterior, p0)
            promising = cutoffs is not None and q > cutoffs[i]
        else:
            q = 0.0
            promising = False
        outcomes.append(
            BasketOutcome(
                stopped_at_look=stopped_at[i],
                final_y=data.y[i],
                final_n=data.n[i],
                posterior=posterior,
                post_prob=q,
                promising=promising,
            )
        )
    return TrialOutcome(tuple(outcomes))
