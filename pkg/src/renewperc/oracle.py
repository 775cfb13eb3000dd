"""Exhaustive enumeration oracles for tiny instances.

Ground truth against the exact engine and the simulator.  The code here
deliberately shares no arithmetic kernels with the engine: path
probabilities come from a scalar walk of the house-of-cards chain, the
coverage test unions intervals site by site, and the relay test applies
the gap rule directly.  Radii are enumerated only at marked sites (they
are irrelevant elsewhere) and only through their endpoint truncated at
the last site that can matter, with the truncated outcome carrying the
aggregated tail probability; both reductions are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationCapError, UnboundedRadiusError, ValidationError
from .radius import FiniteTableRadius, RadiusModel
from .renewal import ConstantQ, MarkovQ, PolynomialMonotoneQ, QSequence, TableQ

_GF_SITE_LIMIT = 12
_SITE_LIMIT = 8


@dataclass(frozen=True)
class TinyConfig:
    """A problem instance small enough for exhaustive enumeration."""

    spec: QSequence
    model: RadiusModel
    n: int
    cap: int = 10**8

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValidationError("site index must be nonnegative")


def _path_probability(spec: QSequence, bits) -> float:
    """P(xi_1..xi_k = bits | xi_0 = 1) by walking the chain."""
    prob = 1.0
    state = 0
    for b in bits:
        q = spec.q_at(state)
        if b:
            prob *= 1.0 - q
            state = 0
        else:
            prob *= q
            state += 1
    return prob


def enumerate_gf(cfg: TinyConfig) -> np.ndarray:
    """S_0..S_n as the full sum over all 2^k mark vectors per term."""
    n = cfg.n
    if n > _GF_SITE_LIMIT:
        raise ValidationError(f"series enumeration is limited to n <= {_GF_SITE_LIMIT}")
    if 2 ** (n + 1) > cfg.cap:
        raise EnumerationCapError(f"2^{n + 1} terms exceed the cap {cfg.cap}")
    alph = [cfg.model.alpha(i) for i in range(max(n, 1))]
    S = np.empty(n + 1)
    S[0] = 1.0
    for k in range(1, n + 1):
        total = 0.0
        for bits in itertools.product((0, 1), repeat=k):
            term = _path_probability(cfg.spec, bits)
            for i, b in enumerate(bits):
                if b:
                    term *= alph[i]
            total += term
        S[k] = total
    return S


def _marked_outcomes(model: RadiusModel, truncate_at: int):
    """Radius outcomes (value, probability) with the top value aggregated.

    Values above ``truncate_at`` act exactly like ``truncate_at`` for the
    event being enumerated, so they are merged into one outcome carrying
    P(R >= truncate_at).
    """
    m = model.support_bound
    t = min(m, truncate_at)
    pmf = model.pmf_array()
    outcomes = [(v, float(pmf[v])) for v in range(t)]
    top = 1.0 - (model.alpha(t - 1) if t >= 1 else 0.0)
    outcomes.append((t, top))
    return [(v, p) for v, p in outcomes if p > 0.0]


def _check_support(cfg: TinyConfig) -> int:
    if cfg.n > _SITE_LIMIT:
        raise ValidationError(f"enumeration is limited to n <= {_SITE_LIMIT}")
    m = cfg.model.support_bound
    if m is None:
        raise UnboundedRadiusError("enumeration needs bounded radius support")
    return m


def enumerate_connectivity(cfg: TinyConfig) -> float:
    """P(0 <-> n): full enumeration of mark vectors and radius assignments.

    For each mark vector the radii at marked sites left of n are
    enumerated and each assignment is tested for coverage of {1..n} by a
    literal union of the opened intervals.
    """
    _check_support(cfg)
    n = cfg.n
    if n == 0:
        return 1.0
    target = set(range(1, n + 1))
    total = 0.0
    budget = cfg.cap
    for bits in itertools.product((0, 1), repeat=n):
        if bits[-1] != 1:
            continue
        p_marks = _path_probability(cfg.spec, bits)
        if p_marks == 0.0:
            continue
        marked = [0] + [i for i in range(1, n) if bits[i - 1]]
        outcome_lists = [_marked_outcomes(cfg.model, n - site) for site in marked]
        size = 1
        for lst in outcome_lists:
            size *= len(lst)
        budget -= size
        if budget < 0:
            raise EnumerationCapError(f"enumeration exceeds the cap {cfg.cap}")
        for assignment in itertools.product(*outcome_lists):
            covered = set()
            weight = p_marks
            for site, (radius, p) in zip(marked, assignment):
                weight *= p
                covered.update(range(site + 1, site + radius + 1))
            if target <= covered:
                total += weight
    return total


def enumerate_dual(cfg: TinyConfig) -> float:
    """P(Y_n = 1): full enumeration of the relay propagation.

    Site 0 starts informed; site i becomes informed iff it is marked and
    its radius reaches the last informed site (R_i >= i - last).  The
    radius at site 0 is never consulted.
    """
    _check_support(cfg)
    n = cfg.n
    if n == 0:
        return 1.0
    total = 0.0
    budget = cfg.cap
    for bits in itertools.product((0, 1), repeat=n):
        if bits[-1] != 1:
            continue
        p_marks = _path_probability(cfg.spec, bits)
        if p_marks == 0.0:
            continue
        marked = [i for i in range(1, n + 1) if bits[i - 1]]
        outcome_lists = [_marked_outcomes(cfg.model, site) for site in marked]
        size = 1
        for lst in outcome_lists:
            size *= len(lst)
        budget -= size
        if budget < 0:
            raise EnumerationCapError(f"enumeration exceeds the cap {cfg.cap}")
        for assignment in itertools.product(*outcome_lists):
            weight = p_marks
            last = 0
            for site, (radius, p) in zip(marked, assignment):
                weight *= p
                if radius >= site - last:
                    last = site
            if last == n:
                total += weight
    return total


def random_tiny_configs(
    count: int,
    seed: int,
    n_max: int = 8,
    support_max: int = 4,
) -> list:
    """A reproducible battery of randomized tiny instances.

    Mark laws rotate over the four families and radius laws are random
    finite tables with support bound <= support_max; the same (count,
    seed) always yields the same battery.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    configs = []
    for idx in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx]))
        kind = idx % 4
        if kind == 0:
            spec: QSequence = ConstantQ(q=float(rng.uniform(0.05, 0.85)))
        elif kind == 1:
            spec = MarkovQ(q0=float(rng.uniform(0.05, 0.8)), q1=float(rng.uniform(0.05, 0.8)))
        elif kind == 2:
            values = tuple(float(v) for v in rng.uniform(0.05, 0.9, size=int(rng.integers(2, 5))))
            spec = TableQ(values=values, tail="repeat_last")
        else:
            spec = PolynomialMonotoneQ(beta=float(rng.uniform(0.15, 0.45)), i0=2)
        m = int(rng.integers(1, support_max + 1))
        pmf = rng.dirichlet(np.ones(m + 1))
        model = FiniteTableRadius(p=tuple(float(v) for v in pmf / pmf.sum()))
        n = int(rng.integers(2, n_max + 1))
        configs.append(TinyConfig(spec=spec, model=model, n=n))
    return configs
