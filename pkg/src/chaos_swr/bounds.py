"""Closed-form thresholds and probabilities for the chaos tail bounds.

The universal constants (kappa for the Rademacher chaos, c and C for the
simplified bound) have no known numeric values.  The defaults in
``BoundConstants`` are placeholders, NOT normative; calibrate them with
``chaos_swr.montecarlo`` before trusting any threshold.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .coeff import CoefficientMatrix, max_abs, truncated_norms


@dataclass(frozen=True)
class BoundConstants:
    kappa: float = 4.0
    c: float = 1.0
    C: float = 8.0

    def __post_init__(self):
        for name in ("kappa", "c", "C"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"constant {name} must be positive and finite, got {v}")


@dataclass
class BoundReport:
    x: float
    delta: int
    threshold: float
    probability: float
    probability_raw: float
    breakdown: dict = field(default_factory=dict)
    dominant: str = "none"
    assembly: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _check_x(x):
    x = float(x)
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    return x


def _check_delta(n, delta):
    if int(delta) != delta:
        raise ValueError(f"delta must be an integer, got {delta}")
    delta = int(delta)
    if not 0 <= delta <= n:
        raise ValueError(f"delta must lie in [0, {n}], got {delta}")
    return delta


def hoeffding_exponent(n: int, delta: int) -> float:
    """delta^2 / (2 (n - delta)); +inf at delta = n."""
    delta = _check_delta(n, delta)
    if delta == n:
        return math.inf
    return delta * delta / (2.0 * (n - delta))


def hoeffding_T_bound_raw(n: int, delta: int) -> float:
    """Unclipped 2 exp(-delta^2 / (2 (n - delta))), 0 when delta = n."""
    return 2.0 * math.exp(-hoeffding_exponent(n, delta))


def hoeffding_T_bound(n: int, delta: int) -> float:
    """Upper bound on P(T <= n - delta).

    At delta = n the event {T <= 0} is empty (T >= n/2), so the bound is 0.
    """
    return min(1.0, hoeffding_T_bound_raw(n, delta))


def rademacher_tail(sigma: float, x: float, kappa: float) -> tuple[float, float]:
    """(kappa sigma x, min(1, 2 e^-x)) for the iid Rademacher chaos."""
    x = _check_x(x)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return kappa * sigma * x, min(1.0, 2.0 * math.exp(-x))


def prop1_probability_raw(n: int, delta: int, x: float) -> float:
    return hoeffding_T_bound_raw(n, delta) + 6.0 * math.exp(-_check_x(x))


def prop1_probability(n: int, delta: int, x: float) -> float:
    return min(1.0, prop1_probability_raw(n, delta, x))


def _terms(A: CoefficientMatrix, x: float, delta: int, kappa: float) -> dict:
    x = _check_x(x)
    delta = _check_delta(A.n, delta)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    tn = truncated_norms(A, delta)
    if delta == 0:
        # sqrt(2(x + log delta)) multiplies two empty sums: the term is 0
        y = None
        v = w = 0.0
    else:
        y = x + math.log(delta)
        root = math.sqrt(2.0 * y)
        v = root * math.fsum(tn.col_cross)
        w = root * math.fsum(tn.row_cross)
    return {
        "rademacher_term": kappa * x * tn.prefix_sigma,
        "cross_term_v": v,
        "cross_term_w": w,
        "tail_term": tn.tail_abs,
        "y": y,
        "hoeffding_prob": hoeffding_T_bound_raw(A.n, delta),
        "chaos_prob": 2.0 * math.exp(-x),
        "cross_prob": 4.0 * math.exp(-x),
    }


def prop1_threshold(A: CoefficientMatrix, x: float, delta: int, kappa: float) -> float:
    """Threshold u + v + w + z that |Z| exceeds with probability at most
    ``prop1_probability(n, delta, x)``."""
    t = _terms(A, x, delta, kappa)
    return t["rademacher_term"] + t["cross_term_v"] + t["cross_term_w"] + t["tail_term"]


def default_delta(n: int, x: float) -> int:
    """ceil(sqrt(2 n x)) clamped to [0, n]."""
    x = _check_x(x)
    return max(0, min(int(n), math.ceil(math.sqrt(2.0 * n * x))))


def theorem1_bound(n: int, M: float, x: float, constants: BoundConstants = BoundConstants()) -> tuple[float, float]:
    """(c n M (x + log n), min(1, C e^-x)) for the one-sided tail P(Z >= .)."""
    x = _check_x(x)
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    if M < 0:
        raise ValueError("M must be nonnegative")
    return constants.c * n * M * (x + math.log(n)), min(1.0, constants.C * math.exp(-x))


def theorem1_assembly(n: int, M: float, x: float, delta: int, c: float = 1.0) -> dict:
    """The intermediate bound c (n M x + delta M sqrt(n) sqrt(x + L) + delta^2 M)
    with L = log(n x) and with L = log n.  The log(n x) form is None when
    x + log(n x) < 0."""
    inner_nx = x + math.log(n * x)
    out = {}
    for key, inner in (("log_nx", inner_nx), ("log_n", x + math.log(n))):
        if inner < 0:
            out[key] = None
        else:
            out[key] = c * (n * M * x + delta * M * math.sqrt(n) * math.sqrt(inner) + delta * delta * M)
    return out


def term_breakdown(
    A: CoefficientMatrix, x: float, delta: int, kappa: float, c: float = 1.0
) -> BoundReport:
    """Full report for one (x, delta): every term, both probability parts and
    the label of the largest threshold term."""
    t = _terms(A, x, delta, kappa)
    u, v, w, z = t["rademacher_term"], t["cross_term_v"], t["cross_term_w"], t["tail_term"]
    parts = {"rademacher": u, "cross": v + w, "tail": z}
    dominant = max(parts, key=parts.get) if max(parts.values()) > 0 else "none"
    raw = prop1_probability_raw(A.n, delta, x)
    return BoundReport(
        x=float(x),
        delta=int(delta),
        threshold=u + v + w + z,
        probability=min(1.0, raw),
        probability_raw=raw,
        breakdown=t,
        dominant=dominant,
        assembly=theorem1_assembly(A.n, max_abs(A), float(x), int(delta), c),
    )


@dataclass
class DeltaChoice:
    delta: int
    report: BoundReport
    feasible: bool


def optimize_delta(A: CoefficientMatrix, x: float, kappa: float, target_prob: float = 1.0) -> DeltaChoice:
    """Scan every delta in [0, n].

    Among deltas whose probability is <= target_prob, return the one with
    the smallest threshold (ties -> smallest delta).  If none qualifies,
    return the delta with the smallest probability and ``feasible=False``.
    """
    x = _check_x(x)
    if not 0 < target_prob <= 1:
        raise ValueError("target_prob must lie in (0, 1]")
    n = A.n
    probs = [prop1_probability(n, d, x) for d in range(n + 1)]
    feasible = [d for d in range(n + 1) if probs[d] <= target_prob]
    if feasible:
        thresholds = {d: prop1_threshold(A, x, d, kappa) for d in feasible}
        best = min(feasible, key=lambda d: (thresholds[d], d))
        return DeltaChoice(best, term_breakdown(A, x, best, kappa), True)
    best = min(range(n + 1), key=lambda d: (probs[d], d))
    return DeltaChoice(best, term_breakdown(A, x, best, kappa), False)


def select_delta(A: CoefficientMatrix, x: float, policy: str, kappa: float, delta: int | None = None,
                 target_prob: float = 1.0) -> int:
    """Resolve a delta policy: "default", "optimized" or "fixed"."""
    if policy == "default":
        return default_delta(A.n, x)
    if policy == "optimized":
        return optimize_delta(A, x, kappa, target_prob).delta
    if policy == "fixed":
        if delta is None:
            raise ValueError("the fixed delta policy needs a delta value")
        return _check_delta(A.n, delta)
    raise ValueError(f"unknown delta policy {policy!r}")
