"""Two-sample U-statistic and its permutation (sampling without replacement)
null distribution.

Convention: U sums over ORDERED pairs i != j, each unordered pair counted
twice, so U equals the chaos at the block sign vector (+1,...,+1,-1,...,-1)
exactly.  For a symmetric kernel the unordered-pair statistic is U / 2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import BoundConstants, theorem1_bound
from .chaos import clean_values, eval_chaos
from .coeff import CoefficientMatrix, from_dense, max_abs
from .montecarlo import sample_chaos
from .samplers import RngSpec


@dataclass(frozen=True)
class TwoSampleDataset:
    sample1: np.ndarray  # (p, d)
    sample2: np.ndarray  # (p, d)

    def __post_init__(self):
        s1 = _as_points(self.sample1)
        s2 = _as_points(self.sample2)
        if s1.shape[0] != s2.shape[0]:
            raise ValueError(f"unequal sample sizes: {s1.shape[0]} vs {s2.shape[0]}")
        if s1.shape[0] == 0:
            raise ValueError("samples must be nonempty")
        if s1.shape[1] != s2.shape[1]:
            raise ValueError("samples have different dimensions")
        object.__setattr__(self, "sample1", s1)
        object.__setattr__(self, "sample2", s2)

    @property
    def p(self) -> int:
        return self.sample1.shape[0]

    @property
    def n(self) -> int:
        return 2 * self.p

    @property
    def combined(self) -> np.ndarray:
        return np.concatenate([self.sample1, self.sample2], axis=0)


def _as_points(x) -> np.ndarray:
    a = np.array(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("a sample must be a list of scalars or of equal-length vectors")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Kernel:
    """``kind`` is "product" (g(x,y) = <x,y>), "gaussian" (exp(-|x-y|^2 / (2 h^2)))
    or "tabulated" (a fixed n x n table)."""

    kind: str
    bandwidth: float = 1.0
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("product", "gaussian", "tabulated"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and not self.bandwidth > 0:
            raise ValueError("gaussian bandwidth must be positive")
        if self.kind == "tabulated":
            if self.table is None:
                raise ValueError("tabulated kernel needs a table")
            t = np.array(self.table, dtype=np.float64)
            if t.ndim != 2 or t.shape[0] != t.shape[1]:
                raise ValueError("kernel table must be square")
            object.__setattr__(self, "table", t)


def kernel_matrix(data: TwoSampleDataset, g: Kernel) -> CoefficientMatrix:
    X = data.combined
    if g.kind == "product":
        a = X @ X.T
    elif g.kind == "gaussian":
        sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
        a = np.exp(-sq / (2.0 * g.bandwidth**2))
    else:
        if g.table.shape[0] != data.n:
            raise ValueError(f"kernel table is {g.table.shape[0]}x{g.table.shape[0]}, data has n={data.n}")
        a = g.table
    return from_dense(a)


def block_signs(p: int) -> np.ndarray:
    return np.concatenate([np.ones(p, dtype=np.int8), -np.ones(p, dtype=np.int8)])


def u_statistic(data: TwoSampleDataset, g: Kernel) -> float:
    """Same-sample ordered-pair sum of g minus cross-sample ordered-pair sum."""
    a = kernel_matrix(data, g).entries
    p = data.p
    same = a[:p, :p].sum() + a[p:, p:].sum()
    cross = a[:p, p:].sum() + a[p:, :p].sum()
    return float(same - cross)


@dataclass
class PermTestResult:
    u_obs: float
    p_value: float
    mc_quantiles: dict
    bound_critical: float | None
    reps: int
    seed: int
    count_ge: int
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def perm_test(
    data: TwoSampleDataset,
    g: Kernel,
    reps: int = 9999,
    rng: RngSpec = RngSpec(0, "perm-test"),
    levels=(0.05,),
    constants: BoundConstants | None = None,
    workers: int | None = None,
) -> PermTestResult:
    """Permutation test of equal distributions.

    ``levels`` are significance levels alpha; ``mc_quantiles[alpha]`` is the
    lower empirical (1 - alpha)-quantile of the null replicates.  With
    ``constants``, ``bound_critical`` is the simplified-bound threshold at
    x = log(C / alpha) for the smallest alpha.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    levels = [float(a) for a in levels]
    if any(not 0 < a < 1 for a in levels):
        raise ValueError("levels must lie in (0, 1)")
    A = kernel_matrix(data, g)
    u_obs = float(clean_values(A, [eval_chaos(A, block_signs(data.p))])[0])
    null = clean_values(A, sample_chaos(A, "swr", reps, rng, workers))
    count = int(np.sum(null >= u_obs))
    quantiles = {str(a): float(np.quantile(null, 1.0 - a, method="inverted_cdf")) for a in levels}
    critical = None
    notes = {}
    if constants is not None and levels:
        alpha = min(levels)
        x = math.log(constants.C / alpha)
        if x <= 0:
            raise ValueError(f"log(C/alpha) = {x:g} is not positive; the bound is vacuous at alpha={alpha}")
        critical = theorem1_bound(data.n, max_abs(A), x, constants)[0]
        notes = {"bound_alpha": alpha, "bound_x": x, "constants": asdict(constants)}
    return PermTestResult(
        u_obs=u_obs,
        p_value=(1 + count) / (reps + 1),
        mc_quantiles=quantiles,
        bound_critical=critical,
        reps=int(reps),
        seed=int(rng.seed),
        count_ge=count,
        notes=notes,
    )


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_dataset(path, format: str = "csv-long") -> TwoSampleDataset:
    """Read a two-sample CSV.

    ``csv-long``: rows ``sample_id, value[, value...]`` with sample_id in {1, 2};
    extra value columns make vector observations.  ``csv-two-col``: column 1
    holds sample 1, column 2 sample 2, one scalar each per row.  A header row
    is skipped when its first cell is not numeric.
    """
    with open(path, newline="") as fh:
        rows = [[c.strip() for c in r] for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    if format == "csv-long":
        groups: dict[int, list] = {1: [], 2: []}
        for k, r in enumerate(rows):
            if len(r) < 2:
                raise ValueError(f"{path}: row {k + 1} needs a sample id and at least one value")
            try:
                label = int(float(r[0]))
                values = [float(c) for c in r[1:]]
            except ValueError:
                raise ValueError(f"{path}: cannot parse row {k + 1}: {r}") from None
            if label not in groups or float(r[0]) != label:
                raise ValueError(f"{path}: unknown sample label {r[0]!r} (expected 1 or 2)")
            groups[label].append(values)
        if len(groups[1]) != len(groups[2]):
            raise ValueError(f"unequal sample sizes: {len(groups[1])} vs {len(groups[2])}")
        if len({len(v) for v in groups[1] + groups[2]}) > 1:
            raise ValueError(f"{path}: observations have different dimensions")
        return TwoSampleDataset(groups[1], groups[2])
    if format == "csv-two-col":
        try:
            s1 = [float(r[0]) for r in rows if r[0] != ""]
            s2 = [float(r[1]) for r in rows if len(r) > 1 and r[1] != ""]
        except ValueError as exc:
            raise ValueError(f"{path}: parse failure ({exc})") from None
        if len(s1) != len(s2):
            raise ValueError(f"unequal sample sizes: {len(s1)} vs {len(s2)}")
        return TwoSampleDataset(s1, s2)
    raise ValueError(f"unknown dataset format {format!r}")
