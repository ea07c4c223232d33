"""Uniform point sets on [0,1)^d: plain Monte Carlo, Sobol' points and their
randomizations (random digital shift, linear matrix scramble + shift).

Sobol' points are built as 32-bit fixed-point integers in Gray-code order and
converted to float64 at the end, so the float values are exact multiples of
2**-32.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

NBITS = 32
_SCALE = 2.0 ** -NBITS
MAX_DISCREPANCY_POINTS = 512

# spawn keys separating the random streams derived from one seed
_STREAM_MC = 0
_STREAM_RANDOMIZE = 1


class UnsupportedDimensionError(ValueError):
    pass


class EmptyRequestError(ValueError):
    pass


class CostGuardError(ValueError):
    pass


class SequenceKind(str, enum.Enum):
    MC = "mc"
    QMC = "qmc"
    RQMC_SHIFT = "rqmc-shift"
    RQMC_SCRAMBLE = "rqmc-scramble"

    @property
    def randomized(self) -> bool:
        return self in (SequenceKind.RQMC_SHIFT, SequenceKind.RQMC_SCRAMBLE)


@dataclass(frozen=True)
class UniformBatch:
    """An (n, d) block of points in [0, 1)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a non-empty (n, d) array, got shape {pts.shape}")
        if not (np.all(pts >= 0.0) and np.all(pts < 1.0)):
            raise ValueError("points must lie in [0, 1)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class DirectionTable:
    """Primitive polynomials and initial direction integers, one entry per
    dimension. Entry 0 is dimension 1 (van der Corput, all m_k = 1)."""

    degrees: tuple[int, ...]
    coeffs: tuple[int, ...]
    initial: tuple[tuple[int, ...], ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def max_dim(self) -> int:
        return len(self.degrees)

    @classmethod
    def from_file(cls, path: str | Path) -> "DirectionTable":
        return cls.from_lines(Path(path).read_text().splitlines())

    @classmethod
    def from_lines(cls, lines) -> "DirectionTable":
        degrees, coeffs, initial = [0], [0], [()]
        for raw in lines:
            line = raw.split("#", 1)[0].strip()
            if not line or line[0].isalpha():
                continue
            d, s, a, *m = (int(tok) for tok in line.split())
            if d != len(degrees) + 1:
                raise ValueError(f"direction table out of order at dimension {d}")
            if len(m) != s:
                raise ValueError(f"dimension {d}: expected {s} direction integers, got {len(m)}")
            for k, mk in enumerate(m, start=1):
                if mk % 2 == 0 or mk >= 2 ** k:
                    raise ValueError(f"dimension {d}: m_{k} = {mk} must be odd and < 2^{k}")
            degrees.append(s)
            coeffs.append(a)
            initial.append(tuple(m))
        return cls(tuple(degrees), tuple(coeffs), tuple(initial))

    def direction_integers(self, d: int) -> np.ndarray:
        """(d, NBITS) uint32 array; row j holds v_1..v_32 for dimension j+1."""
        if d < 1 or d > self.max_dim:
            raise UnsupportedDimensionError(
                f"dimension {d} outside the supported range 1..{self.max_dim}")
        if d not in self._cache:
            v = np.zeros((d, NBITS), dtype=np.uint32)
            for j in range(d):
                v[j] = self._dimension(j)
            v.setflags(write=False)
            self._cache[d] = v
        return self._cache[d]

    def _dimension(self, j: int) -> np.ndarray:
        if j == 0:
            m = [1] * NBITS
        else:
            s, a = self.degrees[j], self.coeffs[j]
            m = list(self.initial[j])
            # recurrence m_k = 2 a_1 m_{k-1} ^ ... ^ 2^{s-1} a_{s-1} m_{k-s+1} ^ 2^s m_{k-s} ^ m_{k-s}
            for k in range(s, NBITS):
                new = m[k - s] ^ (m[k - s] << s)
                for i in range(1, s):
                    if (a >> (s - 1 - i)) & 1:
                        new ^= m[k - i] << i
                m.append(new)
        return np.array([m[k] << (NBITS - 1 - k) for k in range(NBITS)], dtype=np.uint64).astype(np.uint32)


@functools.lru_cache(maxsize=None)
def default_table() -> DirectionTable:
    text = resources.files("qmcvi").joinpath("data/joe_kuo_2048.txt").read_text()
    return DirectionTable.from_lines(text.splitlines())


@dataclass(frozen=True)
class SequenceSource:
    kind: SequenceKind
    d: int
    seed: int = 0
    skip: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SequenceKind(self.kind))
        if self.d < 1:
            raise UnsupportedDimensionError(f"dimension must be >= 1, got {self.d}")
        if self.skip < 0:
            raise ValueError("skip must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _philox(seed: int, stream: int) -> np.random.Philox:
    # 128-bit key: seed in the low word, stream in the high word
    return np.random.Philox(key=seed | (stream << 64))


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(_philox(seed, stream))


def _trailing_zeros(idx: np.ndarray) -> np.ndarray:
    low = idx & -idx
    return np.log2(low.astype(np.float64)).astype(np.intp)


def _gray_sobol_ints(v: np.ndarray, skip: int, n: int) -> np.ndarray:
    """Integer Sobol' points skip..skip+n-1 for direction integers v (d, NBITS)."""
    if skip + n > 2 ** NBITS:
        raise ValueError(f"at most 2^{NBITS} points are available")
    gray = skip ^ (skip >> 1)
    first = np.zeros(v.shape[0], dtype=np.uint32)
    for b in range(NBITS):
        if (gray >> b) & 1:
            first ^= v[:, b]
    out = np.empty((n, v.shape[0]), dtype=np.uint32)
    out[0] = first
    if n > 1:
        idx = np.arange(skip + 1, skip + n, dtype=np.int64)
        out[1:] = v[:, _trailing_zeros(idx)].T
        np.bitwise_xor.accumulate(out, axis=0, out=out)
    return out


_DIGIT_SHIFTS = np.arange(NBITS - 1, -1, -1, dtype=np.uint32)
_LMS_CHUNK = 1 << 20


# row r of a lower-triangular matrix with unit diagonal: digits 0..r-1 free, digit r set
_TRIL_FREE = np.array([((1 << NBITS) - 1) ^ ((1 << (NBITS - r)) - 1) for r in range(NBITS)], dtype=np.uint32)
_DIAG = np.array([1 << (NBITS - 1 - r) for r in range(NBITS)], dtype=np.uint32)


def _lms_masks(rng: np.random.Generator, d: int) -> np.ndarray:
    """Random lower-triangular binary matrices with unit diagonal, one per
    dimension. Row r is stored as a bit mask over digits (digit 0 is the MSB)."""
    words = rng.integers(0, 2 ** NBITS, size=(d, NBITS), dtype=np.uint64).astype(np.uint32)
    return (words & _TRIL_FREE) | _DIAG


def _lms_apply(ints: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Apply per-dimension binary matrices (d, NBITS) to the digits of ints (n, d)."""
    rows = max(1, _LMS_CHUNK // (NBITS * ints.shape[-1]))
    out = np.empty_like(ints)
    for i in range(0, ints.shape[0], rows):
        chunk = ints[i:i + rows, :, None] & masks
        digits = (np.bitwise_count(chunk) & 1).astype(np.uint32) << _DIGIT_SHIFTS
        out[i:i + rows] = np.bitwise_or.reduce(digits, axis=-1)
    return out


def _randomizer(seed: int, d: int, mode: str):
    rng = _rng(seed, _STREAM_RANDOMIZE)
    masks = _lms_masks(rng, d) if mode == "scramble" else None
    shift = rng.integers(0, 2 ** NBITS, size=d, dtype=np.uint64).astype(np.uint32)
    return masks, shift


def _to_float(ints: np.ndarray) -> np.ndarray:
    return ints.astype(np.float64) * _SCALE


def generate(source: SequenceSource, n: int, table: DirectionTable | None = None) -> UniformBatch:
    """Return n points of the sequence described by ``source``."""
    if n < 1:
        raise EmptyRequestError(f"requested {n} points")
    kind, d = source.kind, source.d
    if kind is SequenceKind.MC:
        # Philox is counter-based: one uint64 per double, four per counter step
        bitgen = _philox(source.seed, _STREAM_MC)
        offset = source.skip * d
        bitgen.advance(offset // 4)
        gen = np.random.Generator(bitgen)
        if offset % 4:
            gen.random(offset % 4)
        return UniformBatch(gen.random((n, d)))

    table = table or default_table()
    v = table.direction_integers(d)
    if kind is SequenceKind.QMC:
        return UniformBatch(_to_float(_gray_sobol_ints(v, source.skip, n)))

    mode = "scramble" if kind is SequenceKind.RQMC_SCRAMBLE else "shift"
    masks, shift = _randomizer(source.seed, d, mode)
    if masks is not None:
        # the scramble is linear over GF(2): scrambling the direction integers
        # is equivalent to scrambling every point
        v = _lms_apply(v.T, masks).T
    return UniformBatch(_to_float(_gray_sobol_ints(v, source.skip, n) ^ shift))


def randomize(base: UniformBatch, mode: str, seed: int) -> UniformBatch:
    """Digital shift (``mode="shift"``) or linear matrix scramble followed by a
    digital shift (``mode="scramble"``) of a 32-bit QMC point set."""
    if mode not in ("shift", "scramble"):
        raise ValueError(f"unknown randomization mode {mode!r}")
    scaled = base.points * 2.0 ** NBITS
    ints = scaled.astype(np.uint32)
    if not np.array_equal(ints, scaled):
        raise ValueError("base points are not 32-bit fixed-point values")
    masks, shift = _randomizer(seed, base.d, mode)
    if masks is not None:
        ints = _lms_apply(ints, masks)
    return UniformBatch(_to_float(ints ^ shift))


def sobol(n: int, d: int, skip: int = 0) -> UniformBatch:
    return generate(SequenceSource(SequenceKind.QMC, d, skip=skip), n)


def star_discrepancy_2d(batch: UniformBatch) -> float:
    """Exact star discrepancy of a 2-d point set.

    The supremum over anchored boxes [0, b) is attained on the grid formed by
    the point coordinates and 1; both closed and open box counts are checked.
    """
    if batch.d != 2:
        raise UnsupportedDimensionError("star discrepancy is implemented for d = 2 only")
    if batch.n > MAX_DISCREPANCY_POINTS:
        raise CostGuardError(f"n = {batch.n} exceeds the limit of {MAX_DISCREPANCY_POINTS} points")
    x, y = batch.points[:, 0], batch.points[:, 1]
    gx = np.append(np.unique(x), 1.0)
    gy = np.append(np.unique(y), 1.0)
    n = batch.n
    closed = (x[:, None] <= gx).astype(np.int64).T @ (y[:, None] <= gy).astype(np.int64)
    opened = (x[:, None] < gx).astype(np.int64).T @ (y[:, None] < gy).astype(np.int64)
    vol = np.outer(gx, gy)
    return float(max(np.max(closed / n - vol), np.max(vol - opened / n)))
