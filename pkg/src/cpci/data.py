"""Samples, datasets, splits, prediction sets and seeded random streams."""

from __future__ import annotations

import enum
import math
import zlib
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

SPLIT_NAMES = ("train", "val", "cal1", "cal2", "test")


class EmptySplitError(ValueError):
    """A requested split would contain no samples."""


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray
    outcome: float

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        if not self.outcome >= 0:
            raise ValueError(f"outcome must be non-negative, got {self.outcome}")
        object.__setattr__(self, "features", feats)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``X`` of shape (n, d) and non-negative outcomes ``y``.

    Stored column-wise so that calibration code can stay vectorized; rows can
    still be visited as :class:`LabeledSample` objects.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        # copies, so freezing below never touches the caller's arrays
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(f"incompatible shapes X{X.shape} y{y.shape}")
        if X.shape[1] == 0:
            raise ValueError("feature_dim must be positive")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if np.any(~(y >= 0)):
            raise ValueError("outcomes must be non-negative and not NaN")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample]) -> "Dataset":
        if not samples:
            raise ValueError("cannot build a Dataset from zero samples")
        X = np.vstack([s.features for s in samples])
        y = np.array([s.outcome for s in samples], dtype=float)
        return cls(X, y)

    @property
    def feature_dim(self) -> int:
        return self.X.shape[1]

    @property
    def is_nonzero(self) -> np.ndarray:
        return self.y != 0.0

    def __len__(self) -> int:
        return self.y.shape[0]

    def __iter__(self) -> Iterator[LabeledSample]:
        for i in range(len(self)):
            yield LabeledSample(self.X[i], float(self.y[i]))

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx])

    def concat(self, *others: "Dataset") -> "Dataset":
        return Dataset(
            np.vstack([self.X] + [o.X for o in others]),
            np.concatenate([self.y] + [o.y for o in others]),
        )


@dataclass(frozen=True)
class DataSplits:
    train: Dataset
    val: Dataset
    cal1: Dataset
    cal2: Dataset
    test: Dataset | None = None
    indices: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.val)

    @property
    def m(self) -> int:
        return len(self.cal1)


def split_sizes(total: int, fractions: Sequence[float]) -> list[int]:
    """Floor each share, then hand the remainder out in declaration order."""
    fractions = [float(f) for f in fractions]
    if any(f < 0 for f in fractions) or not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError(f"fractions must be non-negative and sum to 1, got {fractions}")
    sizes = [math.floor(f * total + 1e-9) for f in fractions]
    leftover = total - sum(sizes)
    i = 0
    while leftover > 0:
        if fractions[i % len(sizes)] > 0:
            sizes[i % len(sizes)] += 1
            leftover -= 1
        i += 1
    for name, f, s in zip(SPLIT_NAMES, fractions, sizes):
        if f > 0 and s == 0:
            raise EmptySplitError(f"split {name!r} is empty ({f} x {total} rounds to 0)")
    return sizes


def partition(data: Dataset, fractions: Sequence[float], seed: "SeedSpec | np.random.Generator") -> DataSplits:
    """Shuffle ``data`` and cut it into train/val/cal1/cal2[/test].

    ``fractions`` has four entries (no test split) or five.
    """
    if len(fractions) not in (4, 5):
        raise ValueError("fractions must list 4 or 5 splits")
    return partition_sizes(data, split_sizes(len(data), fractions), seed)


def partition_sizes(data: Dataset, sizes: Sequence[int], seed: "SeedSpec | np.random.Generator") -> DataSplits:
    """Like :func:`partition` but with explicit split sizes."""
    sizes = [int(s) for s in sizes]
    if len(sizes) not in (4, 5) or sum(sizes) != len(data):
        raise ValueError(f"split sizes {sizes} do not cover {len(data)} samples")
    for name, s in zip(SPLIT_NAMES, sizes):
        if s <= 0:
            raise EmptySplitError(f"split {name!r} is empty")
    rng = seed if isinstance(seed, np.random.Generator) else seed.rng(0, "partition")
    perm = rng.permutation(len(data))
    bounds = np.cumsum([0] + sizes)
    idx = {name: perm[bounds[i]:bounds[i + 1]] for i, name in enumerate(SPLIT_NAMES[: len(sizes)])}
    parts = {name: data.subset(ix) for name, ix in idx.items()}
    return DataSplits(indices=idx, **parts)


def merge_for_two_way(splits: DataSplits) -> tuple[Dataset, Dataset]:
    """Training set plus val, cal1 and cal2 pooled into one calibration set."""
    return splits.train, splits.val.concat(splits.cal1, splits.cal2)


@dataclass(frozen=True)
class SeedSpec:
    """Derives independent, reproducible streams from one master seed.

    A stream is keyed by ``(master_seed, replication_index, purpose_tag)``;
    the tag is hashed with CRC32 so the mapping is stable across processes.
    """

    master_seed: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def sequence(self, rep: int, purpose: str) -> np.random.SeedSequence:
        tag = zlib.crc32(purpose.encode("utf-8"))
        return np.random.SeedSequence(int(self.master_seed), spawn_key=(int(rep), tag))

    def rng(self, rep: int, purpose: str) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence(rep, purpose)))


class SetKind(enum.IntEnum):
    ZERO = 0
    INTERVAL = 1
    ZERO_PLUS_INTERVAL = 2
    UNBOUNDED = 3


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """``{0}``, ``[lo, hi]``, ``{0} U [lo, hi]`` or the whole real line."""

    kind: SetKind
    lo: float = math.nan
    hi: float = math.nan

    def __post_init__(self):
        kind = SetKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (SetKind.INTERVAL, SetKind.ZERO_PLUS_INTERVAL):
            if not self.lo <= self.hi:
                raise ValueError(f"interval needs lo <= hi, got [{self.lo}, {self.hi}]")

    def _key(self):
        if self.kind in (SetKind.INTERVAL, SetKind.ZERO_PLUS_INTERVAL):
            return (self.kind, self.lo, self.hi)
        return (self.kind,)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PredictionSet):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    @classmethod
    def zero(cls) -> "PredictionSet":
        return cls(SetKind.ZERO)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "PredictionSet":
        return cls(SetKind.INTERVAL, float(lo), float(hi))

    @classmethod
    def zero_plus_interval(cls, lo: float, hi: float) -> "PredictionSet":
        """``{0} U [lo, hi]``, collapsed to a plain interval when it already holds 0."""
        if lo <= 0.0 <= hi:
            return cls.interval(lo, hi)
        return cls(SetKind.ZERO_PLUS_INTERVAL, float(lo), float(hi))

    @classmethod
    def unbounded(cls) -> "PredictionSet":
        return cls(SetKind.UNBOUNDED)

    @property
    def length(self) -> float:
        if self.kind is SetKind.ZERO:
            return 0.0
        if self.kind is SetKind.UNBOUNDED:
            return math.inf
        return self.hi - self.lo

    def contains(self, y: float) -> bool:
        if self.kind is SetKind.ZERO:
            return y == 0.0
        if self.kind is SetKind.UNBOUNDED:
            return True
        in_interval = self.lo <= y <= self.hi
        if self.kind is SetKind.ZERO_PLUS_INTERVAL:
            return y == 0.0 or in_interval
        return in_interval

    def __contains__(self, y) -> bool:
        return self.contains(y)

    @property
    def contains_zero(self) -> bool:
        return self.contains(0.0)

    @property
    def is_disconnected(self) -> bool:
        return self.kind is SetKind.ZERO_PLUS_INTERVAL and not (self.lo <= 0.0 <= self.hi)


@dataclass(frozen=True)
class PredictionSets:
    """A batch of prediction sets held as parallel arrays.

    Every vectorized predictor returns one of these; indexing yields the
    scalar :class:`PredictionSet` with identical semantics.
    """

    kind: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        kind = np.asarray(self.kind, dtype=np.int8)
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if not (kind.shape == lo.shape == hi.shape) or kind.ndim != 1:
            raise ValueError("kind, lo and hi must be 1-d arrays of equal length")
        bounded = (kind == SetKind.INTERVAL) | (kind == SetKind.ZERO_PLUS_INTERVAL)
        if np.any(~(lo[bounded] <= hi[bounded])):
            raise ValueError("interval with lo > hi")
        lo = np.where(bounded, lo, np.nan)
        hi = np.where(bounded, hi, np.nan)
        # a {0} U [lo, hi] that already holds 0 is just the interval
        collapse = (kind == SetKind.ZERO_PLUS_INTERVAL) & (lo <= 0.0) & (hi >= 0.0)
        kind = np.where(collapse, np.int8(SetKind.INTERVAL), kind).astype(np.int8)
        for arr in (kind, lo, hi):
            arr.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_sets(cls, sets: Sequence[PredictionSet]) -> "PredictionSets":
        return cls(
            np.array([int(s.kind) for s in sets], dtype=np.int8),
            np.array([s.lo for s in sets], dtype=float),
            np.array([s.hi for s in sets], dtype=float),
        )

    def __len__(self) -> int:
        return self.kind.shape[0]

    def __getitem__(self, i: int) -> PredictionSet:
        return PredictionSet(SetKind(int(self.kind[i])), float(self.lo[i]), float(self.hi[i]))

    def __iter__(self) -> Iterator[PredictionSet]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PredictionSets):
            return NotImplemented
        return (
            np.array_equal(self.kind, other.kind)
            and np.array_equal(self.lo, other.lo, equal_nan=True)
            and np.array_equal(self.hi, other.hi, equal_nan=True)
        )

    __hash__ = None

    @property
    def lengths(self) -> np.ndarray:
        out = self.hi - self.lo
        out[self.kind == SetKind.ZERO] = 0.0
        out[self.kind == SetKind.UNBOUNDED] = math.inf
        return out

    def contains(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != self.kind.shape:
            raise ValueError("one outcome per prediction set is required")
        with np.errstate(invalid="ignore"):
            in_interval = (self.lo <= y) & (y <= self.hi)
        is_zero = y == 0.0
        return np.select(
            [
                self.kind == SetKind.ZERO,
                self.kind == SetKind.INTERVAL,
                self.kind == SetKind.ZERO_PLUS_INTERVAL,
            ],
            [is_zero, in_interval, is_zero | in_interval],
            default=True,
        )

    @property
    def contains_zero(self) -> np.ndarray:
        return self.contains(np.zeros(len(self)))

    @property
    def is_disconnected(self) -> np.ndarray:
        return (self.kind == SetKind.ZERO_PLUS_INTERVAL) & ~((self.lo <= 0.0) & (self.hi >= 0.0))


def interval_sets(center: np.ndarray, radius: float, clip_at_zero: bool = False) -> PredictionSets:
    """``[center - radius, center + radius]`` per point, or unbounded for infinite radius."""
    center = np.asarray(center, dtype=float)
    n = center.shape[0]
    if math.isinf(radius):
        return PredictionSets(
            np.full(n, SetKind.UNBOUNDED, dtype=np.int8), np.full(n, np.nan), np.full(n, np.nan)
        )
    lo = center - radius
    hi = center + radius
    if clip_at_zero:
        lo = np.maximum(lo, 0.0)
        # an interval entirely below 0 shrinks to the point {0}
        hi = np.maximum(hi, 0.0)
    return PredictionSets(np.full(n, SetKind.INTERVAL, dtype=np.int8), lo, hi)
