"""Monte Carlo tails and quantiles, bound-vs-truth tables, and calibration of
the unspecified constants against exact enumerated laws."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import beta

from . import bounds
from .chaos import clean_values, eval_chaos_batch, tail_mask
from .coeff import CoefficientMatrix, max_abs, sigma
from .oracle import DiscreteLaw, exact_chaos_law, exact_tail
from .samplers import RngSpec, canonical_scheme, map_blocks, sign_block

log = logging.getLogger(__name__)


def clopper_pearson(k: int, n: int, conf: float = 0.99) -> tuple[float, float]:
    """Exact two-sided binomial interval for k successes in n trials."""
    if not 0 < conf < 1:
        raise ValueError(f"conf must lie in (0, 1), got {conf}")
    alpha = 1.0 - conf
    lo = 0.0 if k == 0 else float(beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


@dataclass
class MonteCarloEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    reps: int
    seed: int
    conf: float
    count: int

    def to_json(self) -> dict:
        return asdict(self)


def _rows(n, scheme):
    scheme = canonical_scheme(scheme)
    if scheme != "iid" and n % 2:
        raise ValueError("balanced schemes need even n")
    return scheme


def sample_chaos(A: CoefficientMatrix, scheme: str, reps: int, rng: RngSpec, workers: int | None = None) -> np.ndarray:
    """Chaos values for replicates 0..reps-1, in replicate order."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    scheme = _rows(A.n, scheme)

    def one(b, lo, hi):
        return eval_chaos_batch(A, sign_block(A.n, scheme, rng, b)[lo:hi])

    return np.concatenate(map_blocks(one, reps, workers))


def mc_tail(
    A: CoefficientMatrix,
    t: float,
    mode: str = "one-sided",
    scheme: str = "swr",
    reps: int = 10_000,
    rng: RngSpec = RngSpec(0),
    conf: float = 0.99,
    workers: int | None = None,
) -> MonteCarloEstimate:
    if not 0 < conf < 1:
        raise ValueError(f"conf must lie in (0, 1), got {conf}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    scheme = _rows(A.n, scheme)

    def count(b, lo, hi):
        z = clean_values(A, eval_chaos_batch(A, sign_block(A.n, scheme, rng, b)[lo:hi]))
        return int(tail_mask(z, t, mode).sum())

    k = sum(map_blocks(count, reps, workers))
    lo, hi = clopper_pearson(k, reps, conf)
    return MonteCarloEstimate(k / reps, lo, hi, int(reps), int(rng.seed), float(conf), k)


def mc_quantile(
    A: CoefficientMatrix, q: float, scheme: str = "swr", reps: int = 10_000, rng: RngSpec = RngSpec(0),
    workers: int | None = None,
) -> float:
    """Lower empirical q-quantile (smallest sampled value whose ECDF >= q)."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    z = clean_values(A, sample_chaos(A, scheme, reps, rng, workers))
    return float(np.quantile(z, q, method="inverted_cdf"))


# --- bound comparison -------------------------------------------------------


@dataclass
class ComparisonRow:
    x: float
    delta: int | None
    bound: str
    mode: str
    bound_threshold: float
    bound_prob: float
    empirical_prob: float
    ci_low: float | None
    ci_high: float | None
    source: str
    violation: bool
    degenerate: bool

    def to_json(self) -> dict:
        return asdict(self)


def _violation(bound_prob, exact=None, ci_low=None):
    if bound_prob >= 1.0:
        return False
    if exact is not None:
        return bound_prob < exact
    return bound_prob < ci_low


def compare_bounds(
    A: CoefficientMatrix,
    xs,
    delta_policy: str = "default",
    constants: bounds.BoundConstants = bounds.BoundConstants(),
    scheme: str = "swr",
    engine: str = "enumeration",
    reps: int = 100_000,
    rng: RngSpec = RngSpec(0),
    conf: float = 0.99,
    delta: int | None = None,
    which=("prop1", "theorem1"),
    modes=("absolute", "one-sided"),
    target_prob: float = 1.0,
    workers: int | None = None,
) -> list[ComparisonRow]:
    """One row per (x, bound, mode): the bound's (threshold, probability)
    next to the exact or estimated probability of exceeding the threshold.

    ``degenerate`` marks thresholds <= 0, where the tail event can be sure
    even for a tiny bound; those rows are kept, never dropped.
    """
    xs = [float(x) for x in xs]
    if not xs or any(x <= 0 for x in xs):
        raise ValueError("xs must be a nonempty grid of positive values")
    scheme = canonical_scheme(scheme)
    if engine not in ("enumeration", "monte-carlo"):
        raise ValueError(f"unknown engine {engine!r}")
    law = exact_chaos_law(A, scheme) if engine == "enumeration" else None
    samples = clean_values(A, sample_chaos(A, scheme, reps, rng, workers)) if law is None else None
    M = max_abs(A)

    rows = []
    for x in xs:
        for name in which:
            if name == "prop1":
                d = bounds.select_delta(A, x, delta_policy, constants.kappa, delta, target_prob)
                thr = bounds.prop1_threshold(A, x, d, constants.kappa)
                bp = bounds.prop1_probability(A.n, d, x)
            elif name == "theorem1":
                d = None
                thr, bp = bounds.theorem1_bound(A.n, M, x, constants)
            else:
                raise ValueError(f"unknown bound {name!r}")
            for mode in modes:
                if law is not None:
                    p = exact_tail(law, thr, mode)
                    row = ComparisonRow(x, d, name, mode, thr, bp, p, None, None, "enumeration",
                                        _violation(bp, exact=p), thr <= 0)
                else:
                    k = int(tail_mask(samples, thr, mode).sum())
                    lo, hi = clopper_pearson(k, reps, conf)
                    row = ComparisonRow(x, d, name, mode, thr, bp, k / reps, lo, hi, "monte-carlo",
                                        _violation(bp, ci_low=lo), thr <= 0)
                rows.append(row)
    return rows


# --- calibration ------------------------------------------------------------


@dataclass
class CalibrationReport:
    constant_name: str
    value: float
    instances: list
    criterion: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _log_mgf(law: DiscreteLaw, scale: float) -> float:
    """log E exp(|Z| / scale) from an exact law."""
    z = np.abs(np.asarray(law.outcomes, dtype=np.float64))
    p = law.probs
    keep = p > 0
    return float(logsumexp(z[keep] / scale, b=p[keep]))


def calibrate_kappa(instances, tolerance: float = 1e-9, descriptions=None) -> CalibrationReport:
    """Smallest kappa (to ``tolerance``) with E exp(|Z'| / (kappa sigma)) <= 2
    on every instance, Z' the iid Rademacher chaos computed exactly.

    The returned value is the feasible end of the final bisection bracket.
    """
    instances = list(instances)
    if not instances:
        raise ValueError("calibration needs at least one instance")
    laws = []
    for k, A in enumerate(instances):
        s = sigma(A)
        if s == 0:
            raise ValueError(f"instance {k} has sigma = 0; kappa is undefined")
        laws.append((exact_chaos_law(A, "iid"), s))
    log2 = math.log(2.0)

    def feasible(kappa):
        return all(_log_mgf(law, kappa * s) <= log2 for law, s in laws)

    hi = 1.0
    while not feasible(hi):
        hi *= 2.0
    lo = 0.0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if mid > 0 and feasible(mid):
            hi = mid
        else:
            lo = mid
    per_instance = []
    for law, s in laws:
        per_instance.append({"sigma": s, "mgf_at_kappa": math.exp(_log_mgf(law, hi * s))})
    return CalibrationReport(
        constant_name="kappa",
        value=hi,
        instances=list(descriptions) if descriptions else [f"instance {k} (n={A.n})" for k, A in enumerate(instances)],
        criterion="E[exp(|Z'|/(kappa*sigma))] <= 2 under iid Rademacher signs, exact enumeration",
        details={"tolerance": tolerance, "per_instance": per_instance},
    )


def _critical_value(law: DiscreteLaw, target: float, mode: str) -> float | None:
    """Largest support point v with P(Z >= v) > target (|Z| in absolute mode).

    Any threshold strictly above it has tail probability <= target; None if
    no support point exceeds target (every positive threshold works)."""
    lw = law.abs() if mode == "absolute" else law
    values = np.asarray(lw.outcomes, dtype=np.float64)
    order = np.argsort(values)
    values, probs = values[order], lw.probs[order]
    tails = np.cumsum(probs[::-1])[::-1]  # P(Z >= values[k])
    bad = np.flatnonzero(tails > target)
    return float(values[bad[-1]]) if bad.size else None


def calibrate_c(
    instances,
    C_fixed: float = 8.0,
    xs=(1.0, 2.0, 4.0),
    mode: str = "one-sided",
    scheme: str = "swr",
    tolerance: float = 1e-9,
    descriptions=None,
    x_filter=None,
) -> CalibrationReport:
    """Smallest c with exact P(Z >= c n M (x + log n)) <= C_fixed e^-x for every
    instance and every x (|Z| when ``mode="absolute"``).

    The tail is nonincreasing in c, so the infimum is the largest ratio
    v / (n M (x + log n)) over critical support points v; the returned value
    sits a relative ``tolerance`` above it and is re-checked to be feasible.
    ``x_filter(n, x)`` can drop grid points per instance.
    """
    instances = list(instances)
    if not instances:
        raise ValueError("calibration needs at least one instance")
    xs = [float(x) for x in xs]
    names = list(descriptions) if descriptions else [f"instance {k} (n={A.n})" for k, A in enumerate(instances)]
    ratios, skipped, used = [], [], []
    c_inf = 0.0
    for k, A in enumerate(instances):
        law = exact_chaos_law(A, scheme)
        M, n = max_abs(A), A.n
        for x in xs:
            if x_filter is not None and not x_filter(n, x):
                continue
            target = C_fixed * math.exp(-x)
            if target >= 1.0:
                continue  # vacuous at this x
            crit = _critical_value(law, target, mode)
            scale = n * M * (x + math.log(n))
            if M == 0:
                if crit is not None and crit >= 0:
                    log.warning("instance %s: M = 0 cannot meet C e^-x < 1 at x=%g; skipped", names[k], x)
                    skipped.append({"instance": names[k], "x": x})
                continue
            r = 0.0 if crit is None else crit / scale
            ratios.append({"instance": names[k], "n": n, "M": M, "x": x, "critical_value": crit, "ratio": r})
            c_inf = max(c_inf, r)
        used.append(A)

    c = c_inf * (1.0 + tolerance) + tolerance
    # independent re-check of the returned constant on the exact laws
    for A in used:
        law = exact_chaos_law(A, scheme)
        for x in xs:
            if x_filter is not None and not x_filter(A.n, x):
                continue
            target = C_fixed * math.exp(-x)
            if target >= 1.0 or max_abs(A) == 0:
                continue
            thr = c * A.n * max_abs(A) * (x + math.log(A.n))
            if exact_tail(law, thr, mode) > target:
                raise RuntimeError("calibrated c failed its own feasibility check")
    return CalibrationReport(
        constant_name="c",
        value=c,
        instances=names,
        criterion=f"P({'|Z|' if mode == 'absolute' else 'Z'} >= c*n*M*(x+log n)) <= {C_fixed}*exp(-x), "
        f"{scheme} scheme, exact enumeration",
        details={"C": C_fixed, "xs": xs, "mode": mode, "c_infimum": c_inf, "tolerance": tolerance,
                 "ratios": ratios, "skipped": skipped},
    )
