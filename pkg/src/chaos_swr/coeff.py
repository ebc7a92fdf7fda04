"""Coefficient families (a_ij), i != j, and the norms the tail bounds consume."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CoefficientMatrix:
    """Dense n x n coefficient array with a structurally zero diagonal.

    The array is copied on construction and marked read-only, so instances
    can be shared freely.  Symmetry is not assumed.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"coefficient matrix must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise ValueError("coefficient matrix needs n >= 2")
        if np.any(np.diag(a) != 0.0):
            raise ValueError("diagonal entries must be exactly 0")
        if not np.all(np.isfinite(a)):
            raise ValueError("coefficients must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __mul__(self, lam: float) -> "CoefficientMatrix":
        return CoefficientMatrix(self.entries * float(lam))

    __rmul__ = __mul__

    def __add__(self, other: "CoefficientMatrix") -> "CoefficientMatrix":
        return CoefficientMatrix(self.entries + other.entries)

    def permuted(self, perm) -> "CoefficientMatrix":
        """Relabel indices: entry (i, j) of the result is a[perm[i], perm[j]]."""
        perm = np.asarray(perm)
        return CoefficientMatrix(self.entries[np.ix_(perm, perm)])


@dataclass(frozen=True)
class TruncatedNorms:
    """The four groups of sums at cutoff m = n - delta.

    ``col_cross[k]`` belongs to column j = m + k (0-based), ``row_cross[k]``
    to row i = m + k.
    """

    m: int
    prefix_sigma: float
    col_cross: tuple = field(default_factory=tuple)
    row_cross: tuple = field(default_factory=tuple)
    tail_abs: float = 0.0


def from_dense(values, strict: bool = False) -> CoefficientMatrix:
    """Build a CoefficientMatrix from any square array-like.

    With ``strict=False`` the diagonal is overwritten with zeros; with
    ``strict=True`` a nonzero diagonal entry raises ValueError.
    """
    a = np.array(values, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValueError("coefficient matrix needs n >= 2")
    diag = np.diag(a)
    if strict and np.any(diag != 0.0):
        bad = int(np.flatnonzero(diag != 0.0)[0])
        raise ValueError(f"nonzero diagonal entry at ({bad}, {bad}) in strict mode")
    np.fill_diagonal(a, 0.0)
    return CoefficientMatrix(a)


def zeros(n: int) -> CoefficientMatrix:
    return CoefficientMatrix(np.zeros((n, n)))


def sigma(A: CoefficientMatrix) -> float:
    """sqrt(sum_{i != j} a_ij^2)."""
    return float(np.sqrt(np.sum(A.entries**2)))


def max_abs(A: CoefficientMatrix) -> float:
    return float(np.max(np.abs(A.entries)))


def truncated_norms(A: CoefficientMatrix, delta: int) -> TruncatedNorms:
    n = A.n
    delta = int(delta)
    if not 0 <= delta <= n:
        raise ValueError(f"delta must lie in [0, {n}], got {delta}")
    m = n - delta
    sq = A.entries**2
    head = sq[:m, :m]
    col_cross = tuple(float(v) for v in np.sqrt(sq[:m, m:].sum(axis=0)))
    row_cross = tuple(float(v) for v in np.sqrt(sq[m:, :m].sum(axis=1)))
    return TruncatedNorms(
        m=m,
        prefix_sigma=float(np.sqrt(head.sum())),
        col_cross=col_cross,
        row_cross=row_cross,
        tail_abs=float(np.abs(A.entries[m:, m:]).sum()),
    )


def symmetric_part(A: CoefficientMatrix) -> CoefficientMatrix:
    return CoefficientMatrix((A.entries + A.entries.T) / 2.0)


# --- file IO ---------------------------------------------------------------


def load_matrix(path, strict: bool = False) -> CoefficientMatrix:
    """Read an n x n CSV of plain decimals (no header)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    try:
        values = [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise ValueError(f"{path}: cannot parse matrix CSV ({exc})") from None
    if len({len(r) for r in values}) > 1:
        raise ValueError(f"{path}: ragged rows in matrix CSV")
    return from_dense(values, strict=strict)


def matrix_to_csv(A: CoefficientMatrix) -> str:
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in A.entries)


def save_matrix(A: CoefficientMatrix, path) -> None:
    Path(path).write_text(matrix_to_csv(A))


# --- named ensembles -------------------------------------------------------

ENSEMBLES = ("all-ones", "uniform", "gaussian", "rank-one", "pm")


def generate(name: str, n: int, seed: int = 0, M: float = 1.0) -> CoefficientMatrix:
    """Draw an instance from a named ensemble.

    ``pm`` puts independent +-M entries off the diagonal; ``all-ones`` is the
    constant matrix M.  ``uniform`` is iid U[-M, M], ``gaussian`` iid N(0, M^2),
    ``rank-one`` the outer product u u^T with u iid U[-1, 1] scaled by M.
    """
    if name not in ENSEMBLES:
        raise ValueError(f"unknown ensemble {name!r}; choose from {', '.join(ENSEMBLES)}")
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    if name == "all-ones":
        a = np.full((n, n), float(M))
    elif name == "uniform":
        a = rng.uniform(-M, M, size=(n, n))
    elif name == "gaussian":
        a = rng.normal(0.0, M, size=(n, n))
    elif name == "rank-one":
        u = rng.uniform(-1.0, 1.0, size=n)
        a = M * np.outer(u, u)
    else:
        a = M * rng.choice([-1.0, 1.0], size=(n, n))
    return from_dense(a)
