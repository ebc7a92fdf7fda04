"""Sign-vector samplers: balanced (without replacement), iid Rademacher, and
the stopping-time coupling that turns an iid path into a balanced vector.

Randomness is counter based.  Replicates are grouped in fixed blocks of
``BLOCK`` consecutive indices; block ``b`` of an ``RngSpec`` owns a Philox
stream keyed by (seed, stream label, b).  A replicate's draw therefore depends
only on (seed, stream, replicate), never on which worker computed it or in
what order.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

BLOCK = 1024
SCHEMES = ("swr", "iid", "coupled")
_ALIASES = {
    "swr": "swr",
    "without-replacement": "swr",
    "iid": "iid",
    "iid-rademacher": "iid",
    "rademacher": "iid",
    "coupled": "coupled",
}


def canonical_scheme(scheme: str) -> str:
    try:
        return _ALIASES[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}") from None


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream: str = "default"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def generator(self, block: int) -> np.random.Generator:
        label = int.from_bytes(hashlib.blake2b(self.stream.encode(), digest_size=8).digest(), "little")
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(label, int(block)))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SignVector:
    signs: np.ndarray

    def __post_init__(self):
        s = np.array(self.signs, dtype=np.int8)
        if s.ndim != 1 or s.size == 0 or s.size % 2:
            raise ValueError("a balanced sign vector needs even positive length")
        if not np.all(np.abs(s) == 1):
            raise ValueError("entries must be +1 or -1")
        if int(s.sum()) != 0:
            raise ValueError("sign vector is not balanced")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @property
    def n(self) -> int:
        return self.signs.size

    def __eq__(self, other):
        return isinstance(other, SignVector) and np.array_equal(self.signs, other.signs)

    def __hash__(self):
        return hash(self.signs.tobytes())


@dataclass(frozen=True)
class RademacherPath:
    signs: np.ndarray

    def __post_init__(self):
        s = np.array(self.signs, dtype=np.int8)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("path must be a nonempty 1-d sequence")
        if not np.all(np.abs(s) == 1):
            raise ValueError("entries must be +1 or -1")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @property
    def n(self) -> int:
        return self.signs.size

    def __eq__(self, other):
        return isinstance(other, RademacherPath) and np.array_equal(self.signs, other.signs)

    def __hash__(self):
        return hash(self.signs.tobytes())


@dataclass(frozen=True)
class CoupledDraw:
    path: RademacherPath
    stopping_time: int  # 1-based, in [n/2, n-1]
    coupled: SignVector


def _check_even(n: int) -> int:
    n = int(n)
    if n < 2 or n % 2:
        raise ValueError(f"n must be an even integer >= 2, got {n}")
    return n


# --- vectorised kernels on (rows, n) arrays ---------------------------------


def stopping_times(paths: np.ndarray, n: int | None = None) -> np.ndarray:
    """1-based stopping times for each row of ``paths``.

    ``n`` defaults to the row length; a shorter row (e.g. a length n-1
    prefix) is fine because T <= n-1 always.
    """
    paths = np.asarray(paths)
    if n is None:
        n = paths.shape[1]
    half = n // 2
    plus = np.cumsum(paths == 1, axis=1)
    minus = np.cumsum(paths == -1, axis=1)
    hit = np.maximum(plus, minus) >= half
    if not np.all(hit[:, -1]):
        raise ValueError("path too short to reach the stopping time")
    return np.argmax(hit, axis=1) + 1


def couple_rows(paths: np.ndarray, n: int | None = None):
    """Apply the coupling row-wise; returns (T, coupled) with coupled of width n."""
    paths = np.asarray(paths, dtype=np.int8)
    if n is None:
        n = paths.shape[1]
    T = stopping_times(paths, n)
    rows = np.arange(paths.shape[0])
    last = paths[rows, T - 1]
    coupled = np.empty((paths.shape[0], n), dtype=np.int8)
    width = min(paths.shape[1], n)
    coupled[:, :width] = paths[:, :width]
    after = np.arange(n)[None, :] >= T[:, None]
    coupled[after] = np.broadcast_to(-last[:, None], coupled.shape)[after]
    return T, coupled


def _balanced_block(n: int, gen: np.random.Generator) -> np.ndarray:
    base = np.tile(np.repeat(np.array([1, -1], dtype=np.int8), n // 2), (BLOCK, 1))
    return gen.permuted(base, axis=1)


def _iid_block(n: int, gen: np.random.Generator) -> np.ndarray:
    return (2 * gen.integers(0, 2, size=(BLOCK, n), dtype=np.int8) - 1).astype(np.int8)


def sign_block(n: int, scheme: str, rng: RngSpec, block: int) -> np.ndarray:
    """The BLOCK x n sign array for replicates [block*BLOCK, (block+1)*BLOCK)."""
    scheme = canonical_scheme(scheme)
    gen = rng.generator(block)
    if scheme == "swr":
        return _balanced_block(n, gen)
    paths = _iid_block(n, gen)
    if scheme == "iid":
        return paths
    return couple_rows(paths, n)[1]


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get("CHAOS_SWR_THREADS", "1") or 1)
    return max(1, int(workers))


def map_blocks(fn, reps: int, workers: int | None = None) -> list:
    """Call ``fn(block, lo, hi)`` over the blocks covering replicates [0, reps).

    ``lo``/``hi`` are the row range to keep inside the block.  Results come
    back in block order whatever the worker count.
    """
    nblocks = -(-int(reps) // BLOCK)
    tasks = [(b, 0, min(BLOCK, reps - b * BLOCK)) for b in range(nblocks)]
    workers = resolve_workers(workers)
    if workers == 1 or nblocks == 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def draw_signs(n: int, scheme: str, reps: int, rng: RngSpec, workers: int | None = None) -> np.ndarray:
    """Sign vectors for replicates 0..reps-1 as a (reps, n) int8 array."""
    scheme = canonical_scheme(scheme)
    if scheme != "iid":
        _check_even(n)
    parts = map_blocks(lambda b, lo, hi: sign_block(n, scheme, rng, b)[lo:hi], reps, workers)
    return np.concatenate(parts, axis=0) if parts else np.empty((0, n), dtype=np.int8)


# --- single-draw API -------------------------------------------------------


def _row(n, scheme, rng, replicate):
    replicate = int(replicate)
    if replicate < 0:
        raise ValueError("replicate index must be >= 0")
    return sign_block(n, scheme, rng, replicate // BLOCK)[replicate % BLOCK]


def draw_without_replacement(n: int, rng: RngSpec, replicate: int = 0) -> SignVector:
    """Uniform balanced sign vector: exactly n/2 indices picked, marked +1."""
    n = _check_even(n)
    return SignVector(_row(n, "swr", rng, replicate))


def draw_iid(n: int, rng: RngSpec, replicate: int = 0) -> RademacherPath:
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    return RademacherPath(_row(int(n), "iid", rng, replicate))


def stopping_time(path: RademacherPath | np.ndarray) -> int:
    """Smallest t with max(#plus, #minus) among the first t signs equal to n/2."""
    signs = path.signs if isinstance(path, RademacherPath) else np.asarray(path)
    n = _check_even(signs.size)
    return int(stopping_times(signs[None, :], n)[0])


def couple(path: RademacherPath | np.ndarray) -> CoupledDraw:
    """Keep the path up to T, then give every later index the sign -path[T]."""
    if not isinstance(path, RademacherPath):
        path = RademacherPath(path)
    n = _check_even(path.n)
    T, coupled = couple_rows(path.signs[None, :], n)
    return CoupledDraw(path=path, stopping_time=int(T[0]), coupled=SignVector(coupled[0]))


def draw_coupled(n: int, rng: RngSpec, replicate: int = 0) -> CoupledDraw:
    # the full iid path is kept (not truncated at T) so draws stay inspectable
    n = _check_even(n)
    return couple(RademacherPath(_row(n, "iid", rng, replicate)))
