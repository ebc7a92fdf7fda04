"""Evaluation of the order-2 chaos sum_{i != j} s_i s_j a_ij."""

from __future__ import annotations

import numpy as np

from .coeff import CoefficientMatrix

SIG_DIGITS = 12


def eval_chaos_batch(A: CoefficientMatrix, draws) -> np.ndarray:
    """Chaos value for each row of ``draws`` (a (reps, n) array or a sequence
    of length-n sign vectors).  Balanced and unbalanced rows are both fine.
    """
    if isinstance(draws, np.ndarray):
        S = draws
    else:
        draws = list(draws)
        if not draws:
            return np.empty(0)
        S = np.stack([getattr(d, "signs", d) for d in draws])
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or (S.shape[0] and S.shape[1] != A.n):
        raise ValueError(f"sign vectors must have length {A.n}")
    if S.shape[0] == 0:
        return np.empty(0)
    # diagonal of A is zero, so the quadratic form is exactly the i != j sum
    return np.einsum("ri,ri->r", S @ A.entries.T, S)


def eval_chaos(A: CoefficientMatrix, signs) -> float:
    s = np.asarray(getattr(signs, "signs", signs))
    if s.ndim != 1 or s.size != A.n:
        raise ValueError(f"sign vector must have length {A.n}, got {s.size}")
    return float(eval_chaos_batch(A, s[None, :])[0])


def round_sig(values, digits: int = SIG_DIGITS) -> np.ndarray:
    """Round to ``digits`` significant digits, element-wise and deterministic."""
    v = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(v)
    nz = v != 0
    if np.any(nz):
        mag = np.floor(np.log10(np.abs(v[nz])))
        scale = 10.0 ** (digits - 1 - mag)
        out[nz] = np.round(v[nz] * scale) / scale
    return out


def clean_values(A: CoefficientMatrix, values) -> np.ndarray:
    """Snap float noise around 0 (relative to sum |a_ij|) and round to
    SIG_DIGITS, so equal chaos values coalesce deterministically."""
    v = np.asarray(values, dtype=np.float64).copy()
    v[np.abs(v) <= 1e-12 * float(np.abs(A.entries).sum())] = 0.0
    return round_sig(v)


def tail_mask(values, t: float, mode: str) -> np.ndarray:
    """Boolean mask of ``values >= t`` (one-sided) or ``|values| >= t`` (absolute).

    Both sides are rounded to SIG_DIGITS first so floating ties between an
    exact law and sampled values resolve the same way.
    """
    v = np.asarray(values, dtype=np.float64)
    if mode == "absolute":
        v = np.abs(v)
    elif mode != "one-sided":
        raise ValueError(f"mode must be 'one-sided' or 'absolute', got {mode!r}")
    return round_sig(v) >= round_sig(np.float64(t))
