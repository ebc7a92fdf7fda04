"""Exhaustive-enumeration ground truth for small n.

Every law here is built from integer counts divided once by the total, so
probabilities of the path-based laws are exactly dyadic.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .chaos import clean_values, eval_chaos_batch, tail_mask
from .coeff import CoefficientMatrix
from .samplers import canonical_scheme, couple_rows

SUBSET_CAP = 10**7
PATH_CAP = 24
_CHUNK = 1 << 16


class EnumerationCapError(ValueError):
    """Raised when an exhaustive enumeration would exceed its configured cap."""


@dataclass(frozen=True)
class DiscreteLaw:
    """Finite distribution.  ``kind`` is "real", "int" or "signs"; sign-vector
    outcomes are tuples of +-1."""

    kind: str
    outcomes: tuple
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (len(self.outcomes),):
            raise ValueError("outcomes and probabilities differ in length")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ValueError("support entries must be distinct")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_counts(cls, kind, outcomes, counts, total=None) -> "DiscreteLaw":
        counts = np.asarray(counts, dtype=np.float64)
        total = counts.sum() if total is None else float(total)
        return cls(kind, tuple(outcomes), counts / total)

    def as_dict(self) -> dict:
        return dict(zip(self.outcomes, self.probs.tolist()))

    def prob(self, outcome) -> float:
        return self.as_dict().get(outcome, 0.0)

    def mean(self) -> float:
        if self.kind == "signs":
            raise TypeError("mean is defined for real- or integer-valued laws only")
        return float(np.dot(np.asarray(self.outcomes, dtype=np.float64), self.probs))

    def quantile(self, q: float) -> float:
        """Lower quantile: smallest outcome whose CDF reaches q."""
        if not 0.0 < q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        order = np.argsort(np.asarray(self.outcomes, dtype=np.float64), kind="stable")
        values = np.asarray(self.outcomes, dtype=np.float64)[order]
        cdf = np.cumsum(self.probs[order])
        # tolerate the last-ulp error of a cumulative sum
        idx = int(np.searchsorted(cdf, q - 1e-12, side="left"))
        return float(values[min(idx, len(values) - 1)])

    def abs(self) -> "DiscreteLaw":
        if self.kind == "signs":
            raise TypeError("abs needs a numeric law")
        merged: dict = {}
        for o, p in zip(self.outcomes, self.probs):
            merged[abs(o)] = merged.get(abs(o), 0.0) + float(p)
        keys = sorted(merged)
        return DiscreteLaw(self.kind, tuple(keys), np.array([merged[k] for k in keys]))

    def to_json(self) -> dict:
        def enc(o):
            return list(o) if self.kind == "signs" else o

        return {
            "kind": self.kind,
            "support": [{"outcome": enc(o), "probability": float(p)} for o, p in zip(self.outcomes, self.probs)],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "probability"])
        for o, p in zip(self.outcomes, self.probs):
            w.writerow([" ".join(str(s) for s in o) if self.kind == "signs" else repr(o), repr(float(p))])
        return buf.getvalue()


# --- raw enumerations -------------------------------------------------------


def _even(n):
    n = int(n)
    if n < 2 or n % 2:
        raise ValueError(f"n must be an even integer >= 2, got {n}")
    return n


def balanced_array(n: int, cap: int = SUBSET_CAP) -> np.ndarray:
    """All C(n, n/2) balanced sign vectors, lexicographic in the picked indices."""
    n = _even(n)
    total = comb(n, n // 2)
    if total > cap:
        raise EnumerationCapError(f"C({n},{n // 2}) = {total} exceeds the subset cap {cap}")
    picked = np.array(list(combinations(range(n), n // 2)), dtype=np.intp)
    out = np.full((total, n), -1, dtype=np.int8)
    np.put_along_axis(out, picked, 1, axis=1)
    return out


def _sign_rows(codes: np.ndarray, width: int) -> np.ndarray:
    bits = (codes[:, None] >> np.arange(width, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def iter_sign_cube(width: int, chunk: int = _CHUNK):
    """Yield all 2**width sign vectors in chunks (bit i of the counter is index i)."""
    total = 1 << width
    for lo in range(0, total, chunk):
        yield _sign_rows(np.arange(lo, min(lo + chunk, total), dtype=np.int64), width)


def iter_coupled_paths(n: int, path_cap: int = PATH_CAP):
    """Yield (paths, T, coupled) over all 2**(n-1) path prefixes of length n-1.

    Entries past n-1 never matter since T <= n-1.
    """
    n = _even(n)
    if n > path_cap:
        raise EnumerationCapError(f"path enumeration at n={n} exceeds the cap n <= {path_cap}")
    for paths in iter_sign_cube(n - 1):
        T, coupled = couple_rows(paths, n)
        yield paths, T, coupled


def _codes(rows: np.ndarray) -> np.ndarray:
    return ((rows > 0).astype(np.int64) << np.arange(rows.shape[1], dtype=np.int64)).sum(axis=1)


# --- laws -------------------------------------------------------------------


def enumerate_balanced(n: int, cap: int = SUBSET_CAP) -> DiscreteLaw:
    rows = balanced_array(n, cap)
    return DiscreteLaw.from_counts("signs", [tuple(int(s) for s in r) for r in rows], np.ones(len(rows)))


def coupled_law(n: int, path_cap: int = PATH_CAP) -> DiscreteLaw:
    """Exact law of the coupled balanced vector under a uniform iid path."""
    n = _even(n)
    counts: dict = {}
    for _, _, coupled in iter_coupled_paths(n, path_cap):
        codes, c = np.unique(_codes(coupled), return_counts=True)
        for code, k in zip(codes.tolist(), c.tolist()):
            counts[code] = counts.get(code, 0) + k
    keys = sorted(counts, reverse=True)
    outcomes = [tuple(int(s) for s in _sign_rows(np.array([k]), n)[0]) for k in keys]
    return DiscreteLaw.from_counts("signs", outcomes, [counts[k] for k in keys], total=1 << (n - 1))


def exact_T_law(n: int, path_cap: int = PATH_CAP) -> DiscreteLaw:
    n = _even(n)
    counts = np.zeros(n + 1, dtype=np.int64)
    for _, T, _ in iter_coupled_paths(n, path_cap):
        counts += np.bincount(T, minlength=n + 1)
    support = [t for t in range(n + 1) if counts[t]]
    return DiscreteLaw.from_counts("int", support, counts[support], total=1 << (n - 1))


def T_cdf(law: DiscreteLaw, t: int) -> float:
    """P(T <= t) from an exact T law."""
    return float(sum(p for o, p in zip(law.outcomes, law.probs) if o <= t))


def _law_of_values(A: CoefficientMatrix, values: np.ndarray, weights: np.ndarray, total: float) -> DiscreteLaw:
    merged = clean_values(A, values)
    uniq, inv = np.unique(merged, return_inverse=True)
    counts = np.bincount(inv.ravel(), weights=weights, minlength=uniq.size)
    return DiscreteLaw.from_counts("real", [float(u) for u in uniq], counts, total=total)


def exact_chaos_law(
    A: CoefficientMatrix, scheme: str, cap: int = SUBSET_CAP, path_cap: int = PATH_CAP
) -> DiscreteLaw:
    """Exact law of the chaos under ``scheme`` ("swr", "iid" or "coupled"),
    equal values (to 12 significant digits) merged."""
    scheme = canonical_scheme(scheme)
    n = A.n
    if scheme == "swr":
        rows = balanced_array(n, cap)
        return _law_of_values(A, eval_chaos_batch(A, rows), np.ones(len(rows)), len(rows))
    if scheme == "iid":
        if n > path_cap:
            raise EnumerationCapError(f"2^{n} sign vectors exceed the cap n <= {path_cap}")
        values = np.concatenate([eval_chaos_batch(A, rows) for rows in iter_sign_cube(n)])
        return _law_of_values(A, values, np.ones(values.size), values.size)
    law = coupled_law(n, path_cap)
    rows = np.array(law.outcomes, dtype=np.int8)
    counts = law.probs * float(1 << (n - 1))
    return _law_of_values(A, eval_chaos_batch(A, rows), counts, 1 << (n - 1))


def exact_tail(law: DiscreteLaw, t: float, mode: str = "one-sided") -> float:
    if law.kind == "signs":
        raise TypeError("exact_tail needs a real-valued law")
    mask = tail_mask(np.asarray(law.outcomes, dtype=np.float64), t, mode)
    return float(law.probs[mask].sum())


def exact_mean(A: CoefficientMatrix) -> float:
    """Mean of the chaos under uniform balanced signs: E s_i s_j = -1/(n-1)."""
    return -float(A.entries.sum()) / (A.n - 1)


def tv_distance(p: DiscreteLaw, q: DiscreteLaw) -> float:
    if (p.kind == "signs") != (q.kind == "signs"):
        raise TypeError("cannot compare a sign-vector law with a numeric law")
    dp, dq = p.as_dict(), q.as_dict()
    keys = set(dp) | set(dq)
    return 0.5 * float(sum(abs(dp.get(k, 0.0) - dq.get(k, 0.0)) for k in keys))


def law_to_json_text(law: DiscreteLaw) -> str:
    return json.dumps(law.to_json(), indent=2) + "\n"
