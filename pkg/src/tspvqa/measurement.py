"""Correlation matrix X of the two registers, exact or from coincidence counts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .errors import DimensionError
from .oracle import RoutePermutation
from .state import Statevector

DEFAULT_SHOTS = 2000


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    mode: Literal["exact", "sampled"] = "exact"
    shots: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionError("X must be square")
        if np.min(v) < 0:
            raise ValueError("X entries must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CoincidenceRecord:
    counts: np.ndarray
    seed: int
    total: int = field(init=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(counts.sum()))


def correlation_exact(state: Statevector) -> CorrelationMatrix:
    probs = np.abs(state.as_matrix()) ** 2
    return CorrelationMatrix(state.dim * probs, "exact")


def _counts_from_uniforms(flat: np.ndarray, u_sorted: np.ndarray) -> np.ndarray:
    # outcome i collects the uniforms in [cdf[i-1], cdf[i]); the last bin is
    # open above so rounding in the cumulative sum cannot lose events
    cdf = np.cumsum(flat, axis=-1)
    cdf /= cdf[..., -1:]
    cdf[..., -1] = np.inf
    below = np.searchsorted(u_sorted, cdf.ravel(), side="left").reshape(cdf.shape)
    return np.diff(below, axis=-1, prepend=0)


def _uniforms(shots: int, seed) -> np.ndarray:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return np.sort(np.random.default_rng(seed).random(shots))


def sample_counts(probs: np.ndarray, shots: int, seed) -> np.ndarray:
    """Multinomial draw by inverse-CDF lookup of ``shots`` uniforms.

    Reusing a seed across nearby probability vectors reuses the same
    uniforms, so counts move smoothly with the probabilities.
    """
    u = _uniforms(shots, seed)
    p = np.clip(np.asarray(probs, dtype=float).ravel(), 0.0, None)
    return _counts_from_uniforms(p, u).reshape(np.shape(probs))


def sample_counts_batch(probs: np.ndarray, shots: int, seed) -> np.ndarray:
    """``sample_counts`` applied to each leading-axis slice with the same uniforms."""
    u = _uniforms(shots, seed)
    probs = np.asarray(probs, dtype=float)
    flat = np.clip(probs.reshape(probs.shape[0], -1), 0.0, None)
    return _counts_from_uniforms(flat, u).reshape(probs.shape)


def x_from_counts(counts: np.ndarray, shots_mode: Optional[int] = None) -> CorrelationMatrix:
    counts = np.asarray(counts)
    dim = counts.shape[0]
    total = counts.sum()
    return CorrelationMatrix(dim * counts / total, "sampled", int(total) if shots_mode is None else shots_mode)


def correlation_sampled(state: Statevector, shots: int = DEFAULT_SHOTS, seed=0) -> tuple[CorrelationMatrix, CoincidenceRecord]:
    probs = np.abs(state.as_matrix()) ** 2
    counts = sample_counts(probs, shots, seed)
    return x_from_counts(counts), CoincidenceRecord(counts, seed if isinstance(seed, int) else -1)


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, CorrelationMatrix) else np.asarray(x, dtype=float)


def overlap(x_hat, x_ref) -> float:
    """(1/dim) Tr[X x^T]."""
    x = _values(x_hat)
    ref = x_ref.matrix if isinstance(x_ref, RoutePermutation) else np.asarray(x_ref, dtype=float)
    if ref.shape != x.shape:
        if ref.shape[0] < x.shape[0]:
            # route over cities only: spectator modes map to themselves
            pad = np.eye(x.shape[0])
            pad[: ref.shape[0], : ref.shape[0]] = ref
            ref = pad
        else:
            raise DimensionError(f"X is {x.shape}, reference {ref.shape}")
    return float(np.sum(x * ref) / x.shape[0])


@dataclass(frozen=True)
class StochasticityReport:
    row_deviation: float
    col_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.row_deviation <= self.tol and self.col_deviation <= self.tol

    def __bool__(self) -> bool:
        return self.passed


def sampling_tolerance(dim: int, shots: int, sigmas: float = 5.0) -> float:
    """Row/column-sum tolerance for a sampled X.

    A row sum is dim * Binomial(shots, 1/dim) / shots, with standard deviation
    sqrt((dim - 1) / shots).
    """
    return sigmas * float(np.sqrt((dim - 1) / shots))


def assert_doubly_stochastic(x, tol: float = 1e-10) -> StochasticityReport:
    v = _values(x)
    return StochasticityReport(
        float(np.max(np.abs(v.sum(axis=1) - 1))),
        float(np.max(np.abs(v.sum(axis=0) - 1))),
        tol,
    )
