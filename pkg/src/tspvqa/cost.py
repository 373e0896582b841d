"""Route-length plus subtour-elimination cost evaluated on a correlation matrix.

Subsets of cities are bitmasks over 0-based city indices (bit k = city k+1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import CapacityError, DimensionError
from .oracle import RoutePermutation
from .state import qubits_per_register

DEFAULT_DIAG_PENALTY = 100.0
DEFAULT_A_SUB = 50.0
FULL_MODE_MAX_N = 20
_CHUNK = 1 << 14


@dataclass(frozen=True)
class DistanceMatrix:
    d: np.ndarray
    diag_penalty: float = DEFAULT_DIAG_PENALTY

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DimensionError("distance matrix must be square")
        if d.shape[0] < 3:
            raise ValueError("no fixed-point-free tour exists for fewer than 3 cities")
        if not np.all(np.isfinite(d)) or np.min(d) < 0:
            raise ValueError("distances must be finite and nonnegative")
        np.fill_diagonal(d, self.diag_penalty)
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n_cities(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class CostConfig:
    a_sub: float = DEFAULT_A_SUB
    subtour_mode: Literal["full", "lazy", "off"] = "lazy"
    active_subsets: tuple[int, ...] = ()

    def __post_init__(self):
        if self.subtour_mode not in ("full", "lazy", "off"):
            raise ValueError(f"unknown subtour mode {self.subtour_mode!r}")
        if self.a_sub < 0:
            raise ValueError("a_sub must be >= 0")
        object.__setattr__(self, "active_subsets", tuple(sorted(set(subset_mask(s) for s in self.active_subsets))))

    def with_subsets(self, extra: Iterable) -> "CostConfig":
        return CostConfig(self.a_sub, self.subtour_mode, self.active_subsets + tuple(subset_mask(s) for s in extra))


def subset_mask(s) -> int:
    """Accept a bitmask or an iterable of 1-based city labels."""
    if isinstance(s, (int, np.integer)):
        return int(s)
    mask = 0
    for c in s:
        if int(c) < 1:
            raise ValueError(f"city labels are 1-based, got {c}")
        mask |= 1 << (int(c) - 1)
    return mask


def mask_to_cities(mask: int) -> frozenset[int]:
    return frozenset(k + 1 for k in range(mask.bit_length()) if mask >> k & 1)


@dataclass(frozen=True)
class PaddedProblem:
    d: np.ndarray
    n_cities: int

    @property
    def dim(self) -> int:
        return self.d.shape[0]

    @property
    def spectators(self) -> range:
        return range(self.n_cities, self.dim)


def pad_problem(problem: DistanceMatrix) -> PaddedProblem:
    n = problem.n_cities
    dim = 2 ** qubits_per_register(n)
    d = np.zeros((dim, dim))
    d[:n, :n] = problem.d
    d.setflags(write=False)
    return PaddedProblem(d, n)


def proper_subsets(n: int) -> range:
    """Masks of all proper nonempty subsets of n cities."""
    if n > FULL_MODE_MAX_N:
        raise CapacityError(f"full subtour enumeration limited to N <= {FULL_MODE_MAX_N}, got {n}")
    return range(1, (1 << n) - 1)


def _values(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


def route_length_term(padded: PaddedProblem, x) -> float:
    v = _values(x)
    if v.shape != padded.d.shape:
        raise DimensionError(f"X is {v.shape}, distances {padded.d.shape}")
    return float(np.sum(padded.d * v))


def crossing_weight(x, masks: Sequence[int], n: int) -> float:
    """Sum over the given subsets S of sum_{i in S, j in cities \\ S} X_ij.

    Summation order is fixed: per-chunk totals in mask order, then a
    sequential sum of the chunk totals.
    """
    v = _values(x)[:n, :n]
    masks = np.asarray(masks, dtype=np.int64)
    if masks.size == 0:
        return 0.0
    bits = np.int64(1) << np.arange(n, dtype=np.int64)
    totals = []
    for start in range(0, masks.size, _CHUNK):
        m = (masks[start : start + _CHUNK, None] & bits) != 0
        inside = m.astype(float)
        outside = 1.0 - inside
        totals.append(float(np.einsum("si,ij,sj->", inside, v, outside)))
    return float(sum(totals))


def _check_masks(masks: Iterable[int], n: int) -> list[int]:
    out = []
    full = (1 << n) - 1
    for m in masks:
        if m <= 0 or m & ~full:
            raise ValueError(f"subset {sorted(mask_to_cities(m))} is empty or has cities outside 1..{n}")
        if m == full:
            raise ValueError("subset must be a proper subset of the cities")
        out.append(m)
    return out


def subtour_term(x, config: CostConfig, n: int) -> float:
    if config.subtour_mode == "off":
        raise ValueError("subtour term requested with subtour_mode='off'")
    if config.subtour_mode == "full":
        return crossing_weight(x, proper_subsets(n), n)
    return crossing_weight(x, _check_masks(config.active_subsets, n), n)


def total_cost(padded: PaddedProblem, x, config: CostConfig) -> float:
    length = route_length_term(padded, x)
    if config.subtour_mode == "off" or config.a_sub == 0:
        return length
    return length - config.a_sub * subtour_term(x, config, padded.n_cities)


def detect_violated_subsets(x: RoutePermutation, n_cities: int | None = None) -> list[frozenset[int]]:
    """City sets (1-based) of every cycle shorter than the full tour.

    Spectator indices (>= n_cities) are ignored.
    """
    n = x.n if n_cities is None else n_cities
    cycles = [c for c in x.cycles() if all(k < n for k in c)]
    if len(cycles) == 1 and len(cycles[0]) == n:
        return []
    out = [frozenset(k + 1 for k in c) for c in cycles if len(c) < n]
    return sorted(out, key=lambda s: sorted(s))


def total_cost_batch(padded: PaddedProblem, xs: np.ndarray, config: CostConfig) -> np.ndarray:
    """``total_cost`` for a stack of X matrices, shape (B, dim, dim)."""
    xs = np.asarray(xs, dtype=float)
    out = np.einsum("ij,bij->b", padded.d, xs)
    if config.subtour_mode == "off" or config.a_sub == 0:
        return out
    n = padded.n_cities
    if config.subtour_mode == "full":
        masks = np.asarray(proper_subsets(n), dtype=np.int64)
    else:
        masks = np.asarray(_check_masks(config.active_subsets, n), dtype=np.int64)
    if masks.size == 0:
        return out
    bits = np.int64(1) << np.arange(n, dtype=np.int64)
    sub = np.zeros(xs.shape[0])
    v = xs[:, :n, :n]
    for start in range(0, masks.size, _CHUNK):
        inside = ((masks[start : start + _CHUNK, None] & bits) != 0).astype(float)
        sub = sub + np.einsum("si,bij,sj->b", inside, v, 1.0 - inside)
    return out - config.a_sub * sub
