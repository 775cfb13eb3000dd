"""Exact evaluation of the coverage-percolation series and its bounds.

The central object is the partial generating-function series

    S_0 = 1,   S_n = E prod_{i=0..n-1} alpha_i^(xi_{i+1}),   n >= 1,

computed by an exact forward recursion over the house-of-cards state: a
mass vector w(s) is propagated one site at a time, sending
w(s) * (1-q_s) * alpha_i to state 0 and w(s) * q_s to state s+1, so that
S_{i+1} is the total surviving mass.  The series has three faces:

* dual law: S_{n} is the survival function P(T_Y >= n+1) of the
  inter-arrival time of the dual relay process, so f_k = S_{k-1} - S_k is
  its pmf and the dual occupancy v_n follows the renewal recursion;
* coverage probability: P(cover all of N) = (1 + sum_{n>=1} S_n)^(-1),
  so the truncated sum gives the rigorous upper endpoint
  hi = (1 + partial_sum)^(-1) for free, and any upper bound on the tail
  sum_{n>N} S_n gives a lower endpoint;
* closed bounds: Jensen gives S_n >= prod alpha_i^(u_{i+1}), the
  coalescence-based concentration inequality gives
  S_n <= prod alpha_i^(u_{i+1}) * exp(C_n * sum_i (log alpha_i)^2),
  and for nondecreasing q the FKG inequality gives
  S_n >= prod [1 - u_{i+1} (1 - alpha_i)].

Sites with alpha_i = 0 annihilate the Jensen product and are excluded
from the concentration exponent (alpha^xi <= 1 on those coordinates keeps
the inequality valid); all exponent products are accumulated in log space.

Tail certification: the bracket's lower endpoint is certified only when
the concentration terms were summed to numerical exhaustion (explicit
terms plus a geometric remainder below 1e-15 of the denominator).
Geometric extrapolation of the last decade of S is reported with
certified=False, except in the exact case S_N = 0, where the tail is
identically zero because S is nonincreasing.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    InternalConsistencyError,
    MonotonicityError,
    UnboundedRadiusError,
    ValidationError,
)
from .radius import RadiusModel
from .renewal import (
    ConstantQ,
    QSequence,
    ck_at,
    ck_sequence,
    interarrival,
    renewal_probabilities,
    survival_products,
)

TAIL_CONCENTRATION = "concentration"
TAIL_GEOMETRIC = "geometric-extrapolation"
TAIL_NONE = "none"
_TAIL_CHOICES = ("auto", TAIL_CONCENTRATION, TAIL_GEOMETRIC, TAIL_NONE)

VERDICT_EXTINCT_INFINITE_MEAN = "extinct-infinite-mean"
VERDICT_EXTINCT_TAIL = "extinct-tail-evidence"
VERDICT_SURVIVE_TAIL = "survive-tail-evidence"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GfTable:
    """The series S_0..S_N; S is nonincreasing with S_0 = 1."""

    S: np.ndarray
    horizon: int
    partial_sum: float


def gf_partial(spec: QSequence, model: RadiusModel, horizon: int) -> GfTable:
    """Exact S_1..S_N by the weighted house-of-cards recursion.

    O(N^2) time, O(N) space; exact up to floating rounding.
    """
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    n = horizon
    qs = spec.q_array(n)
    omqs = 1.0 - qs
    alph = model.alpha_array(n)
    w = np.zeros(n + 1)
    w[0] = 1.0
    S = np.empty(n + 1)
    S[0] = 1.0
    for i in range(n):
        head = w[: i + 1]
        renew = head @ omqs[: i + 1]
        climb = head * qs[: i + 1]
        w[1 : i + 2] = climb
        w[0] = alph[i] * renew
        S[i + 1] = w[0] + climb.sum()
    return GfTable(S=S, horizon=n, partial_sum=float(S[1:].sum()))


@dataclass(frozen=True)
class DualLaw:
    """Inter-arrival pmf f and occupancy v of the dual relay process.

    f[k] = P(T_Y = k) = S_{k-1} - S_k (f[0] is zero-padding) and v_n
    solves the renewal recursion v_n = sum_k f_k v_{n-k} with v_0 = 1, so
    v_n = P(site n is reached) equals the forward connectivity P(0 <-> n).
    """

    f: np.ndarray
    v: np.ndarray
    mean_partial: float
    horizon: int


def dual_law(gf: GfTable, spec: QSequence, model: RadiusModel) -> DualLaw:
    """Dual inter-arrival law from the series, cross-checked at k = 1.

    Requires the table to come from the same (spec, model) pair; the
    closed form P(T_Y = 1) = (1 - q_0)(1 - alpha_0) is re-derived and any
    disagreement beyond 1e-10 raises.
    """
    S = gf.S
    f = np.empty_like(S)
    f[0] = 0.0
    np.subtract(S[:-1], S[1:], out=f[1:])
    if f[1:].size and float(f[1:].min()) < -1e-12:
        raise InternalConsistencyError("series is not nonincreasing: negative dual pmf mass")
    np.maximum(f, 0.0, out=f)
    closed = (1.0 - spec.q_at(0)) * (1.0 - model.alpha(0))
    if abs(f[1] - closed) > 1e-10:
        raise InternalConsistencyError(
            f"dual pmf f_1 = {f[1]!r} disagrees with closed form {closed!r}; "
            "was the table computed from the same law?"
        )
    horizon = gf.horizon
    v = np.empty_like(S)
    v[0] = 1.0
    rev = np.empty_like(S)
    rev[horizon] = 1.0
    for n in range(1, horizon + 1):
        value = f[1 : n + 1] @ rev[horizon - n + 1 :]
        v[n] = value
        rev[horizon - n] = value
    return DualLaw(f=f, v=v, mean_partial=1.0 + gf.partial_sum, horizon=horizon)


@dataclass(frozen=True)
class PercolationBracket:
    """Certified interval [lo, hi] for the coverage probability.

    hi is always (1 + partial_sum)^(-1); lo folds in a tail bound whose
    provenance is recorded in tail_method/certified (see module docstring).
    """

    lo: float
    hi: float
    horizon: int
    tail_method: str
    certified: bool
    notes: tuple = ()


@functools.lru_cache(maxsize=16)
def _cached_ck(spec: QSequence, kmax: int) -> np.ndarray:
    return ck_sequence(spec, kmax).c


def _complete_tail(terms: np.ndarray, scale: float):
    """Sum explicit tail terms and close with a geometric remainder.

    Returns (tail, certified, notes) or None when the terms show no decay
    at the end of the window (divergence evidence).
    """
    if terms.size == 0:
        return 0.0, True, ()
    if not np.isfinite(terms).all():
        return None
    explicit = float(terms.sum())
    last = float(terms[-1])
    if last == 0.0:
        return explicit, True, ("tail terms vanish within the secondary horizon",)
    w = min(max(3, terms.size // 10), terms.size - 1)
    if w < 1:
        return None
    prev = float(terms[-1 - w])
    if prev <= 0.0 or last >= prev:
        return None
    r = (last / prev) ** (1.0 / w)
    if r >= 1.0 - 1e-9:
        return None
    remainder = last * r / (1.0 - r)
    cutoff = 1e-15 * scale
    certified = last < cutoff and remainder < cutoff
    notes = ()
    if not certified:
        notes = ("tail completed geometrically beyond the secondary horizon",)
    return explicit + remainder, certified, notes


def _concentration_series(
    spec: QSequence,
    model: RadiusModel,
    horizon: int,
    u: np.ndarray,
    secondary: int,
):
    """Per-term concentration upper bounds on S_n.

    Returns (head, tail) with head[n-1] bounding S_n for n = 1..N and tail
    bounding S_n for n = N+1..secondary, or None when every alpha within
    the secondary horizon is zero (the exponent is undefined everywhere).

    Beyond the computed renewal table the exponent uses a lower bound
    u_lb = min(window) - spread(window) for the renewal probabilities,
    which only weakens the bound; alpha_i = 0 coordinates are excluded.
    """
    n2 = secondary
    alph = model.alpha_array(n2)
    pos = alph > 0.0
    if not pos.any():
        return None
    log_a = np.zeros(n2)
    log_a[pos] = np.log(alph[pos])
    window = u[max(1, horizon // 2) :]
    u_lb = max(0.0, float(window.min()) - float(window.max() - window.min()))
    weights = np.empty(n2)
    weights[:horizon] = u[1 : horizon + 1]
    weights[horizon:] = u_lb
    lam = np.cumsum(weights * log_a)
    sig = np.cumsum(log_a * log_a)
    c = _cached_ck(spec, n2)
    with np.errstate(over="ignore"):
        head = np.exp(lam[:horizon] + c[1 : horizon + 1] * sig[:horizon])
        tail = np.exp(lam[horizon:] + c[horizon + 1 :] * sig[horizon:])
    return head, tail


def _geometric_tail(S: np.ndarray):
    """Tail estimate from the decay of the last decade of S, or None."""
    n = len(S) - 1
    last = float(S[n])
    if last == 0.0:
        return 0.0, True, ("series terms are exactly zero at the horizon",)
    if n < 2:
        return None
    w = min(max(3, n // 10), n - 1)
    prev = float(S[n - w])
    if prev <= 0.0 or last >= prev:
        return None
    r = (last / prev) ** (1.0 / w)
    if r >= 1.0 - 1e-9:
        return None
    return last * r / (1.0 - r), False, ("tail extrapolated from the last decade of S",)


def _default_secondary(horizon: int) -> int:
    return horizon + max(1000, min(horizon, 100_000))


def percolation_probability(
    gf: GfTable,
    spec: QSequence,
    model: RadiusModel,
    tail: str = "auto",
    *,
    secondary_horizon: Optional[int] = None,
) -> PercolationBracket:
    """Two-sided bracket for the coverage probability from a series table.

    hi = (1 + partial_sum)^(-1) always.  The lower endpoint subtracts a
    tail bound chosen by ``tail``: "concentration" (preferred; rigorous
    given the C_k inputs), "geometric-extrapolation" (heuristic, never
    certified), "none" (lo = 0), or "auto" (concentration, then geometric,
    then none, with every fallback recorded in notes).
    """
    if tail not in _TAIL_CHOICES:
        raise ValidationError(f"tail must be one of {_TAIL_CHOICES}, got {tail!r}")
    n = gf.horizon
    partial = gf.partial_sum
    hi = 1.0 / (1.0 + partial)
    scale = 1.0 + partial
    notes: list = []

    def bracket(lo: float, method: str, certified: bool) -> PercolationBracket:
        return PercolationBracket(
            lo=lo, hi=hi, horizon=n, tail_method=method, certified=certified,
            notes=tuple(notes),
        )

    if tail == TAIL_NONE:
        notes.append("no tail bound requested; lower endpoint is trivial")
        return bracket(0.0, TAIL_NONE, False)

    if float(gf.S[n]) == 0.0:
        notes.append("series terms are exactly zero at the horizon")
        return bracket(hi, TAIL_GEOMETRIC, True)

    if tail in ("auto", TAIL_CONCENTRATION):
        secondary = secondary_horizon or _default_secondary(n)
        u = renewal_probabilities(spec, n).u
        series = _concentration_series(spec, model, n, u, secondary)
        if series is None:
            notes.append("concentration bound unavailable: alpha identically zero")
        else:
            completed = _complete_tail(series[1], scale)
            if completed is None:
                notes.append("concentration tail terms show no decay at the secondary horizon")
            else:
                tail_value, certified, extra = completed
                notes.extend(extra)
                return bracket(1.0 / (scale + tail_value), TAIL_CONCENTRATION, certified)
        if tail == TAIL_CONCENTRATION:
            notes.append("warning: concentration tail failed; lower endpoint dropped to 0")
            return bracket(0.0, TAIL_NONE, False)

    geo = _geometric_tail(gf.S)
    if geo is None:
        notes.append("warning: series not decaying at the horizon; lower endpoint dropped to 0")
        return bracket(0.0, TAIL_NONE, False)
    tail_value, certified, extra = geo
    notes.extend(extra)
    return bracket(1.0 / (scale + tail_value), TAIL_GEOMETRIC, certified)


def iid_closed_form(
    p: float,
    model: RadiusModel,
    horizon: int,
    tail: str = "auto",
) -> PercolationBracket:
    """Bracket for i.i.d. marks with density p via the factorized series.

    Independence factorizes every series term into
    S_n = prod_{i<n} [1 - p (1 - alpha_i)], so no state recursion is
    needed; the bracket mechanics are shared with the general path (the
    matching house-of-cards law is Constant(1 - p)).
    """
    if not (0.0 < p <= 1.0):
        raise ValidationError(f"p must lie in (0, 1], got {p!r}")
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    alph = model.alpha_array(horizon)
    factors = 1.0 - p * (1.0 - alph)
    S = np.empty(horizon + 1)
    S[0] = 1.0
    np.cumprod(factors, out=S[1:])
    gf = GfTable(S=S, horizon=horizon, partial_sum=float(S[1:].sum()))
    return percolation_probability(gf, ConstantQ(1.0 - p), model, tail=tail)


@dataclass(frozen=True)
class BoundsReport:
    """Closed-product bounds on the coverage probability at one horizon.

    jensen_upper and fkg_upper truncate series of per-term lower bounds on
    S_n, so they are valid upper bounds at any horizon; concentration_lower
    needs its series summed to (near) convergence and is reported as 0.0
    when the series shows no decay.  Optional entries are None when the
    bound does not apply (non-monotone law, all-zero alpha, non-constant q).
    """

    jensen_upper: float
    fkg_upper: Optional[float]
    concentration_lower: Optional[float]
    iid_closed: Optional[float]
    horizon: int
    notes: tuple = ()


def bounds_report(
    spec: QSequence,
    model: RadiusModel,
    horizon: int,
    fkg: Optional[bool] = None,
    *,
    secondary_horizon: Optional[int] = None,
) -> BoundsReport:
    """Evaluate the Jensen, FKG, and concentration bounds by direct summation.

    ``fkg`` requests the monotone-only FKG bound explicitly (True raises
    MonotonicityError on a non-monotone law); None computes it only when
    the law is monotone.
    """
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    n = horizon
    notes: list = []
    u = renewal_probabilities(spec, n).u
    alph = model.alpha_array(n)
    pos = alph > 0.0
    with np.errstate(divide="ignore"):
        log_a_full = np.where(pos, np.log(np.where(pos, alph, 1.0)), -np.inf)
    with np.errstate(invalid="ignore"):
        jensen_terms = np.exp(np.cumsum(u[1:] * log_a_full))
    jensen_upper = 1.0 / (1.0 + float(jensen_terms.sum()))

    monotone = spec.is_monotone
    if fkg is True and not monotone:
        raise MonotonicityError("FKG bound requires a nondecreasing q sequence")
    fkg_upper = None
    if fkg is True or (fkg is None and monotone):
        fkg_terms = np.cumprod(1.0 - u[1:] * (1.0 - alph))
        fkg_upper = 1.0 / (1.0 + float(fkg_terms.sum()))

    concentration_lower = None
    secondary = secondary_horizon or _default_secondary(n)
    series = _concentration_series(spec, model, n, u, secondary)
    if series is None:
        notes.append("concentration bound skipped: alpha identically zero (log undefined)")
    else:
        head, tail_terms = series
        if not np.isfinite(head).all():
            concentration_lower = 0.0
            notes.append("concentration terms overflow (exploding C_k); bound dropped to 0")
        else:
            completed = _complete_tail(tail_terms, 1.0 + float(head.sum()))
            if completed is None:
                concentration_lower = 0.0
                notes.append("concentration series shows no decay; bound dropped to 0")
            else:
                tail_value, _, extra = completed
                notes.extend(extra)
                concentration_lower = 1.0 / (1.0 + float(head.sum()) + tail_value)

    iid_closed = None
    if isinstance(spec, ConstantQ):
        p = 1.0 - spec.q
        if p > 0.0:
            terms = np.cumprod(1.0 - p * (1.0 - alph))
            iid_closed = 1.0 / (1.0 + float(terms.sum()))

    return BoundsReport(
        jensen_upper=jensen_upper,
        fkg_upper=fkg_upper,
        concentration_lower=concentration_lower,
        iid_closed=iid_closed,
        horizon=n,
        notes=tuple(notes),
    )


def forward_connectivity(spec: QSequence, model: RadiusModel, n: int) -> float:
    """P(0 <-> n): site n is marked and every site 1..n is covered.

    Exact dynamic program over (house-of-cards height, reach excess),
    where the reach excess is the furthest interval endpoint minus the
    current site, capped by the radius support bound m.  O(n^2 m^2) time.
    Requires bounded radius support; unbounded models should go through
    the series/dual path instead.
    """
    if n < 0:
        raise ValidationError("site index must be nonnegative")
    m = model.support_bound
    if m is None:
        raise UnboundedRadiusError(
            "forward connectivity DP needs bounded radius support; "
            "use the series/dual path for unbounded laws"
        )
    if n == 0:
        return 1.0
    pR = model.pmf_array()
    cdf = np.cumsum(pR)
    q = spec.q_array(n)
    W = np.zeros((n + 1, m + 1))
    W[0, :] = pR
    for j in range(1, n + 1):
        new = np.zeros_like(W)
        for s in range(j):
            row = W[s, 1:]
            if not row.any():
                continue
            qs = q[s]
            if m >= 1:
                new[s + 1, : m] += row * qs
            marked = row * (1.0 - qs)
            for ei in range(1, m + 1):
                mass = marked[ei - 1]
                if mass == 0.0:
                    continue
                new[0, ei - 1] += mass * cdf[ei - 1]
                new[0, ei:] += mass * pR[ei:]
        W = new
    return float(W[0, :].sum())


@dataclass(frozen=True)
class ClassifyReport:
    """Finite-horizon survival/extinction diagnosis.

    Every verdict except the infinite-mean one is finite-horizon evidence,
    not proof; the windows record the statistics behind it.
    """

    mean: float
    mean_converged: bool
    tail_product: float
    ratio_window: tuple
    ck_window: tuple
    verdict: str
    notes: tuple = ()


# A partial product still this large at the mean horizon is taken as
# divergence of E T (the uninteresting regime where coverage dies).
_DIVERGENCE_FLOOR = 1e-6


def classify(spec: QSequence, model: RadiusModel, horizon: int) -> ClassifyReport:
    """Three-way survival diagnosis from the tail-criterion windows.

    Checks, in order: divergent mean (extinction, no tail analysis
    needed); window maximum of n (1 - alpha_n) / E T below 1 (extinction
    evidence); window minimum above 1 together with a nonincreasing
    C_k / k trend (survival evidence); otherwise inconclusive.
    """
    if horizon < 4:
        raise ValidationError(f"horizon must be >= 4, got {horizon}")
    notes: list = []
    mean_horizon = max(1000, min(horizon, 50_000))
    summary = interarrival(spec, mean_horizon, tol=1e-12)
    tail_product = float(survival_products(spec, mean_horizon)[mean_horizon])
    if not summary.converged:
        if tail_product >= _DIVERGENCE_FLOOR:
            notes.append("partial products bounded away from zero at the horizon")
            return ClassifyReport(
                mean=summary.mean, mean_converged=False, tail_product=tail_product,
                ratio_window=(), ck_window=(),
                verdict=VERDICT_EXTINCT_INFINITE_MEAN, notes=tuple(notes),
            )
        notes.append("mean neither converged nor clearly divergent at the horizon")
        return ClassifyReport(
            mean=summary.mean, mean_converged=False, tail_product=tail_product,
            ratio_window=(), ck_window=(),
            verdict=VERDICT_INCONCLUSIVE, notes=tuple(notes),
        )

    mean = summary.mean
    grid = sorted({max(2, int(horizon * g)) for g in (0.5, 0.62, 0.75, 0.88, 1.0)})
    ratio_window = tuple(
        (k, k * (1.0 - model.alpha(k)) / mean) for k in grid
    )
    ck_window = tuple((k, ck_at(spec, k) / k) for k in grid)
    ratios = [r for _, r in ratio_window]
    rmin, rmax = min(ratios), max(ratios)
    ck_trend_ok = ck_window[-1][1] <= ck_window[0][1] + 1e-12
    # the truncated mean carries ~1e-12 relative error, so ratios within
    # this band of the threshold cannot be called either way
    margin = 1e-9
    if rmax < 1.0 - margin:
        verdict = VERDICT_EXTINCT_TAIL
    elif rmin > 1.0 + margin and ck_trend_ok:
        verdict = VERDICT_SURVIVE_TAIL
    else:
        verdict = VERDICT_INCONCLUSIVE
        if rmin > 1.0 and not ck_trend_ok:
            notes.append("tail ratio above 1 but C_k / k not settling; no survival evidence")
    return ClassifyReport(
        mean=mean, mean_converged=True, tail_product=tail_product,
        ratio_window=ratio_window, ck_window=ck_window,
        verdict=verdict, notes=tuple(notes),
    )
