"""Borrowing-weight engines.

Five ways to fill the off-diagonal of the B x B borrowing matrix:

* independent model - all zeros, no borrowing;
* pairwise empirical Bayes (PEB) - each pair's similarity maximizes its own
  two-basket marginal likelihood;
* global empirical Bayes (GEB) - one joint maximization per basket treating
  all other baskets as pooled historical data;
* the 3-component local power prior - an EB similarity matrix rescaled by a
  global borrowing cap and gated by an observed-difference threshold;
* Jensen-Shannon divergence between single-basket posteriors, raised to a
  power and thresholded.

Marginal likelihoods are maximized by a deterministic scan-then-refine
routine: a coarse 101-point scan of [0, 1] followed by golden-section
refinement on the bracketing interval.  Near-equal maxima resolve to the
smallest similarity (conservative borrowing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln

from .posterior import BasketData, BetaParams, PriorSpec

__all__ = [
    "NumericError",
    "IndependentModel",
    "PowerPriorPEB",
    "PowerPriorGEB",
    "LocalPowerPrior",
    "JSDWeights",
    "BorrowingConfig",
    "peb_weight",
    "geb_weights",
    "three_component_adjust",
    "jsd_weight",
    "build_weight_matrix",
    "clear_caches",
]

SCAN_POINTS = 101
GOLDEN_TOL = 1e-6
TIE_TOL = 1e-12
COORD_TOL = 1e-4
MAX_SWEEPS = 100
JSD_QUAD_TOL = 1e-8

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class NumericError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""


# ---------------------------------------------------------------------------
# method configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndependentModel:
    """No borrowing: zero off-diagonal weights."""


@dataclass(frozen=True)
class PowerPriorPEB:
    """Raw pairwise empirical Bayes weights, no cap or threshold."""


@dataclass(frozen=True)
class PowerPriorGEB:
    """Raw global empirical Bayes weights, no cap or threshold."""


@dataclass(frozen=True)
class LocalPowerPrior:
    """3-component weights: cap(a) * similarity * threshold(delta).

    ``base`` selects the similarity engine ("peb" or "geb"), ``a`` bounds the
    borrowing factor globally and ``delta`` suppresses borrowing between
    baskets whose observed response rates differ by delta or more.
    """

    base: str
    a: float
    delta: float

    def __post_init__(self) -> None:
        if self.base not in ("peb", "geb"):
            raise ValueError(f"base must be 'peb' or 'geb', got {self.base!r}")
        if not self.a >= 0.0:
            raise ValueError(f"a must be nonnegative, got {self.a!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta!r}")


@dataclass(frozen=True)
class JSDWeights:
    """Jensen-Shannon similarity raised to ``epsilon`` and thresholded at ``tau``."""

    epsilon: float
    tau: float

    def __post_init__(self) -> None:
        if not self.epsilon >= 1.0:
            raise ValueError(f"epsilon must be >= 1, got {self.epsilon!r}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau!r}")


Method = Union[IndependentModel, PowerPriorPEB, PowerPriorGEB, LocalPowerPrior, JSDWeights]


@dataclass(frozen=True)
class BorrowingConfig:
    """A weight engine plus the per-basket beta prior it operates under."""

    method: Method
    prior: PriorSpec


# ---------------------------------------------------------------------------
# 1-D marginal-likelihood maximization on [0, 1]
# ---------------------------------------------------------------------------


def _golden_bracket(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    # Golden-section shrink of [lo, hi] around a maximum of f.  Ties move the
    # right edge, biasing toward smaller arguments.
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return a, b


def _argmax_unit(f_scalar, f_grid) -> float:
    """Maximize over [0, 1]: coarse scan, then golden-section refinement.

    ``f_grid`` evaluates the objective on an array of points, ``f_scalar`` on
    one point.  Among near-equal maxima the smallest argument wins.
    """
    grid = np.linspace(0.0, 1.0, SCAN_POINTS)
    vals = np.asarray(f_grid(grid), dtype=float)
    vmax = float(np.max(vals))
    k = int(np.nonzero(vals >= vmax - TIE_TOL)[0][0])
    lo = grid[k - 1] if k > 0 else grid[0]
    hi = grid[k + 1] if k < SCAN_POINTS - 1 else grid[-1]
    a, b = _golden_bracket(f_scalar, lo, hi, GOLDEN_TOL)
    refined = 0.5 * (a + b)
    # candidates in ascending order so ties resolve to the smallest s
    best_s, best_f = None, -math.inf
    for s in sorted((grid[k], refined)):
        fs = f_scalar(s)
        if fs > best_f + TIE_TOL:
            best_s, best_f = s, fs
    return float(best_s)


def _log_marginal_scalar(s, y_i, n_i, y_j, n_j, b1, b2):
    a1 = b1 + s * y_j
    a2 = b2 + s * (n_j - y_j)
    return (
        math.lgamma(a1 + y_i)
        + math.lgamma(a2 + n_i - y_i)
        - math.lgamma(a1 + a2 + n_i)
        - math.lgamma(a1)
        - math.lgamma(a2)
        + math.lgamma(a1 + a2)
    )


def _log_marginal_grid(s, y_i, n_i, y_j, n_j, b1, b2):
    a1 = b1 + s * y_j
    a2 = b2 + s * (n_j - y_j)
    return (
        gammaln(a1 + y_i)
        + gammaln(a2 + n_i - y_i)
        - gammaln(a1 + a2 + n_i)
        - gammaln(a1)
        - gammaln(a2)
        + gammaln(a1 + a2)
    )


def _check_counts(y: int, n: int, label: str) -> None:
    if n <= 0 or not 0 <= y <= n:
        raise ValueError(f"invalid counts for {label}: y={y}, n={n}")


def peb_weight(y_i: int, n_i: int, y_j: int, n_j: int, b1: float, b2: float) -> float:
    """Pairwise empirical Bayes similarity of basket j's data for basket i.

    Maximizes the marginal likelihood of observing basket i's data given
    basket j's data discounted by s, over s in [0, 1].  Asymmetric in (i, j)
    by construction.
    """
    _check_counts(y_i, n_i, "basket i")
    _check_counts(y_j, n_j, "basket j")
    return _argmax_unit(
        lambda s: _log_marginal_scalar(s, y_i, n_i, y_j, n_j, b1, b2),
        lambda s: _log_marginal_grid(s, y_i, n_i, y_j, n_j, b1, b2),
    )


def geb_weights(i: int, data: BasketData, prior: PriorSpec) -> np.ndarray:
    """Global empirical Bayes similarities of all other baskets for basket ``i``.

    Jointly maximizes the pooled-historical marginal likelihood over the box
    [0, 1]^(B-1) by cyclic coordinate ascent (ascending basket index, each
    coordinate solved by the scan-and-refine routine, started from all
    zeros).  Returns a full length-B vector with 1 at position ``i``; entries
    for futility-stopped baskets stay 0.
    """
    B = data.n_baskets
    if not 0 <= i < B:
        raise IndexError(f"basket index {i} out of range for {B} baskets")
    if prior.n_baskets != B:
        raise ValueError("prior and data disagree on the number of baskets")
    out = np.zeros(B)
    out[i] = 1.0
    neighbors = [j for j in range(B) if j != i and data.active[j]]
    if not neighbors:
        return out
    y_i, n_i = data.y[i], data.n[i]
    b1, b2 = prior.b1[i], prior.b2[i]
    yj = np.array([data.y[j] for j in neighbors], dtype=float)
    fj = np.array([data.n[j] - data.y[j] for j in neighbors], dtype=float)
    s = np.zeros(len(neighbors))

    for _ in range(MAX_SWEEPS):
        largest_move = 0.0
        for k in range(len(neighbors)):
            sy = float(np.dot(s, yj) - s[k] * yj[k])
            sf = float(np.dot(s, fj) - s[k] * fj[k])

            def f_scalar(x, sy=sy, sf=sf, yk=yj[k], fk=fj[k]):
                a1 = b1 + sy + x * yk
                a2 = b2 + sf + x * fk
                return (
                    math.lgamma(a1 + y_i)
                    + math.lgamma(a2 + n_i - y_i)
                    - math.lgamma(a1 + a2 + n_i)
                    - math.lgamma(a1)
                    - math.lgamma(a2)
                    + math.lgamma(a1 + a2)
                )

            def f_grid(x, sy=sy, sf=sf, yk=yj[k], fk=fj[k]):
                a1 = b1 + sy + x * yk
                a2 = b2 + sf + x * fk
                return (
                    gammaln(a1 + y_i)
                    + gammaln(a2 + n_i - y_i)
                    - gammaln(a1 + a2 + n_i)
                    - gammaln(a1)
                    - gammaln(a2)
                    + gammaln(a1 + a2)
                )

            new = _argmax_unit(f_scalar, f_grid)
            largest_move = max(largest_move, abs(new - s[k]))
            s[k] = new
        if largest_move < COORD_TOL:
            break

    for k, j in enumerate(neighbors):
        out[j] = s[k]
    return out


def three_component_adjust(
    s: np.ndarray, data: BasketData, a: float, delta: float
) -> np.ndarray:
    """Rescale a similarity matrix by the global cap and difference threshold.

    w_ij = min(a * n_i / n_-i, 1) * s_ij * 1{|phat_i - phat_j| < delta} for
    i != j, where n_-i sums the other active baskets' sample sizes.  The
    indicator uses the observed proportions of the data as analyzed; rows and
    columns of futility-stopped baskets are forced to zero off the diagonal.
    """
    if not a >= 0.0:
        raise ValueError(f"a must be nonnegative, got {a!r}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta!r}")
    B = data.n_baskets
    s = np.asarray(s, dtype=float)
    if s.shape != (B, B):
        raise ValueError(f"similarity matrix must be {B}x{B}, got {s.shape}")
    phat = [data.y[i] / data.n[i] for i in range(B)]
    out = np.eye(B)
    for i in range(B):
        if not data.active[i]:
            continue
        n_other = sum(data.n[k] for k in range(B) if k != i and data.active[k])
        if n_other == 0:
            continue
        cap = min(a * data.n[i] / n_other, 1.0)
        for j in range(B):
            if j == i or not data.active[j]:
                continue
            inside = 1.0 if abs(phat[i] - phat[j]) < delta else 0.0
            out[i, j] = cap * s[i, j] * inside
    return out


# ---------------------------------------------------------------------------
# Jensen-Shannon divergence between beta densities
# ---------------------------------------------------------------------------


def _log_beta_arr(a: float, b: float) -> float:
    return float(gammaln(a) + gammaln(b) - gammaln(a + b))


_LN2 = math.log(2.0)
_LNPI = math.log(math.pi)
# With |t| <= 6 the inner argument (pi/2) sinh t stays below 320, so every
# exp/log1p below is finite, while the neglected tails are < 1e-30.
_T_MAX = 6.0


def _node_t(x: float) -> float:
    # inverse of the double-exponential map, for interior x only
    return math.asinh(2.0 * math.atanh(2.0 * x - 1.0) / math.pi)


def _initial_nodes(a1: float, b1: float, a2: float, b2: float) -> np.ndarray:
    """Initial partition of [-T_MAX, T_MAX]: a uniform grid plus extra nodes
    around each density's bulk so that sharply concentrated posteriors are
    never missed by the coarse scan."""
    nodes = list(np.linspace(-_T_MAX, _T_MAX, 25))
    for a, b in ((a1, b1), (a2, b2)):
        center = a / (a + b)
        sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))
        for k in (-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0):
            x = min(max(center + k * sd, 1e-6), 1.0 - 1e-6)
            nodes.append(_node_t(x))
    nodes = sorted(set(nodes))
    out = [nodes[0]]
    for t in nodes[1:]:
        if t - out[-1] > 1e-4:
            out.append(t)
    return np.array(out)


def _kl_to_mixture(a1: float, b1: float, a2: float, b2: float, tol: float) -> float:
    """KL(f || (f+g)/2) for beta densities f, g to absolute tolerance ``tol``.

    The integral over (0, 1) is evaluated by adaptive bisection Simpson after
    the double-exponential substitution x = (1 + tanh((pi/2) sinh t)) / 2,
    which turns integrable endpoint singularities of the densities (shapes
    below 1) into smooth, double-exponentially decaying tails in t.  Each
    subinterval is bisected until its Simpson error estimate clears its share
    of the tolerance.
    """
    ln_be1 = _log_beta_arr(a1, b1)
    ln_be2 = _log_beta_arr(a2, b2)

    def integrand(t: np.ndarray) -> np.ndarray:
        s2 = math.pi * np.sinh(t)  # 2 * (pi/2) sinh t
        ln_x = -np.log1p(np.exp(-s2))
        ln_1mx = -np.log1p(np.exp(s2))
        lf = (a1 - 1.0) * ln_x + (b1 - 1.0) * ln_1mx - ln_be1
        lg = (a2 - 1.0) * ln_x + (b2 - 1.0) * ln_1mx - ln_be2
        lm = np.logaddexp(lf, lg) - _LN2
        ln_jac = _LNPI + np.log(np.cosh(t)) + ln_x + ln_1mx
        # f(x) dx/dt in one exp keeps singular-density overflow at bay
        return np.exp(lf + ln_jac) * (lf - lm)

    nodes = _initial_nodes(a1, b1, a2, b2)
    lo = nodes[:-1]
    hi = nodes[1:]
    mid = 0.5 * (lo + hi)
    flo = integrand(lo)
    fmid = integrand(mid)
    fhi = integrand(hi)
    ltol = tol * (hi - lo) / (2.0 * _T_MAX)
    total = 0.0
    converged = False
    for _ in range(64):
        h = hi - lo
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        flm = integrand(lmid)
        frm = integrand(rmid)
        whole = h / 6.0 * (flo + 4.0 * fmid + fhi)
        left = h / 12.0 * (flo + 4.0 * flm + fmid)
        right = h / 12.0 * (fmid + 4.0 * frm + fhi)
        err = left + right - whole
        done = np.abs(err) <= 15.0 * ltol
        total += float(np.sum((left + right + err / 15.0)[done]))
        keep = ~done
        if not np.any(keep):
            converged = True
            break
        # split every unconverged interval in two
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        flo = np.concatenate([flo[keep], fmid[keep]])
        fhi = np.concatenate([fmid[keep], fhi[keep]])
        mid = np.concatenate([lmid[keep], rmid[keep]])
        fmid = np.concatenate([flm[keep], frm[keep]])
        ltol = np.concatenate([ltol[keep] / 2.0, ltol[keep] / 2.0])
    if not converged:
        raise NumericError(
            "JSD quadrature did not converge for beta shapes "
            f"({a1:g}, {b1:g}) vs ({a2:g}, {b2:g})"
        )
    return total


def _jsd_similarity(a1: float, b1: float, a2: float, b2: float) -> float:
    # 1 - JS(f, g) with natural-log KL; symmetric, in [1 - ln 2, 1]
    kl1 = _kl_to_mixture(a1, b1, a2, b2, JSD_QUAD_TOL)
    kl2 = _kl_to_mixture(a2, b2, a1, b1, JSD_QUAD_TOL)
    w_star = 1.0 - 0.5 * (kl1 + kl2)
    return min(max(w_star, 0.0), 1.0)


def jsd_weight(post_i: BetaParams, post_j: BetaParams, epsilon: float, tau: float) -> float:
    """Borrowing weight from the Jensen-Shannon similarity of two posteriors.

    The similarity w* = 1 - JS(f_i, f_j) is computed with natural-log KL
    divergences (so w* ranges from 1 - ln 2 to 1), raised to ``epsilon`` and
    zeroed unless it strictly exceeds ``tau``.
    """
    if not epsilon >= 1.0:
        raise ValueError(f"epsilon must be >= 1, got {epsilon!r}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    w_star = _jsd_similarity(post_i.shape1, post_i.shape2, post_j.shape1, post_j.shape2)
    powered = w_star**epsilon
    return powered if powered > tau else 0.0


# ---------------------------------------------------------------------------
# matrix assembly with per-process memoization
# ---------------------------------------------------------------------------

# Weight computations depend only on counts and prior hyperparameters, so in
# a simulation the same small set of keys recurs across thousands of
# replicates.  Plain dicts; each worker process owns its own copy.
_PEB_CACHE: dict = {}
_GEB_CACHE: dict = {}
_JSD_CACHE: dict = {}


def clear_caches() -> None:
    """Drop all memoized weight computations (mainly for tests)."""
    _PEB_CACHE.clear()
    _GEB_CACHE.clear()
    _JSD_CACHE.clear()


def _peb_cached(y_i, n_i, y_j, n_j, b1, b2) -> float:
    key = (y_i, n_i, y_j, n_j, b1, b2)
    try:
        return _PEB_CACHE[key]
    except KeyError:
        val = peb_weight(y_i, n_i, y_j, n_j, b1, b2)
        _PEB_CACHE[key] = val
        return val


def _geb_row_cached(i: int, data: BasketData, prior: PriorSpec) -> np.ndarray:
    neighbors = tuple(
        (j, data.y[j], data.n[j]) for j in range(data.n_baskets) if j != i and data.active[j]
    )
    key = (data.y[i], data.n[i], prior.b1[i], prior.b2[i], i, neighbors)
    try:
        return _GEB_CACHE[key]
    except KeyError:
        row = geb_weights(i, data, prior)
        _GEB_CACHE[key] = row
        return row


def _jsd_star_cached(p_i: BetaParams, p_j: BetaParams) -> float:
    pair = ((p_i.shape1, p_i.shape2), (p_j.shape1, p_j.shape2))
    key = (min(pair), max(pair))
    try:
        return _JSD_CACHE[key]
    except KeyError:
        val = _jsd_similarity(p_i.shape1, p_i.shape2, p_j.shape1, p_j.shape2)
        _JSD_CACHE[key] = val
        return val


def build_weight_matrix(config: BorrowingConfig, data: BasketData) -> np.ndarray:
    """Assemble the full B x B borrowing matrix for the configured method.

    Weights are computed only among active baskets; rows and columns touching
    a futility-stopped basket are zero off the diagonal, and the diagonal is
    always 1.
    """
    B = data.n_baskets
    if config.prior.n_baskets != B:
        raise ValueError("prior and data disagree on the number of baskets")
    method = config.method
    w = np.eye(B)
    if isinstance(method, IndependentModel):
        return w
    active = [i for i in range(B) if data.active[i]]

    if isinstance(method, (PowerPriorPEB, PowerPriorGEB, LocalPowerPrior)):
        use_peb = isinstance(method, PowerPriorPEB) or (
            isinstance(method, LocalPowerPrior) and method.base == "peb"
        )
        if use_peb:
            for i in active:
                for j in active:
                    if i != j:
                        w[i, j] = _peb_cached(
                            data.y[i], data.n[i], data.y[j], data.n[j],
                            config.prior.b1[i], config.prior.b2[i],
                        )
        else:
            for i in active:
                row = _geb_row_cached(i, data, config.prior)
                for j in active:
                    if i != j:
                        w[i, j] = row[j]
        if isinstance(method, LocalPowerPrior):
            w = three_component_adjust(w, data, method.a, method.delta)
        return w

    if isinstance(method, JSDWeights):
        posts = {
            i: BetaParams(
                config.prior.b1[i] + data.y[i],
                config.prior.b2[i] + data.n[i] - data.y[i],
            )
            for i in active
        }
        for ai in range(len(active)):
            for aj in range(ai + 1, len(active)):
                i, j = active[ai], active[aj]
                star = _jsd_star_cached(posts[i], posts[j])
                powered = star**method.epsilon
                val = powered if powered > method.tau else 0.0
                w[i, j] = val
                w[j, i] = val
        return w

    raise TypeError(f"unknown borrowing method: {method!r}")
