"""Exact classical TSP solvers, route/matrix conversions, rounding and
Birkhoff-von Neumann peeling.

Cities are 1-based in every user-facing sequence and 0-based in ``sigma``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CapacityError, DimensionError

BRUTE_FORCE_MAX_N = 11
HELD_KARP_MAX_N = 20


@dataclass(frozen=True)
class RoutePermutation:
    """Permutation ``sigma`` where ``sigma[k]`` is the city after city ``k`` (0-based)."""

    sigma: tuple[int, ...]

    def __post_init__(self):
        sigma = tuple(int(s) for s in self.sigma)
        if sorted(sigma) != list(range(len(sigma))):
            raise ValueError(f"not a permutation: {sigma}")
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def matrix(self) -> np.ndarray:
        x = np.zeros((self.n, self.n))
        x[np.arange(self.n), self.sigma] = 1.0
        return x

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * self.n
        out = []
        for start in range(self.n):
            if seen[start]:
                continue
            cyc = []
            k = start
            while not seen[k]:
                seen[k] = True
                cyc.append(k)
                k = self.sigma[k]
            out.append(tuple(cyc))
        return out

    @property
    def valid_tour(self) -> bool:
        return self.n >= 2 and len(self.cycles()) == 1

    def length(self, d: np.ndarray) -> float:
        d = np.asarray(d, dtype=float)
        return float(sum(d[k, s] for k, s in enumerate(self.sigma)))

    @classmethod
    def from_matrix(cls, x: np.ndarray) -> "RoutePermutation":
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise DimensionError("route matrix must be square")
        ones = np.isclose(x, 1.0)
        if not (np.all(ones | np.isclose(x, 0.0)) and np.all(ones.sum(0) == 1) and np.all(ones.sum(1) == 1)):
            raise ValueError("matrix is not a permutation matrix")
        return cls(tuple(int(j) for j in np.argmax(ones, axis=1)))


def route_to_matrix(cities: Sequence[int]) -> RoutePermutation:
    """Closed route given as 1-based cities, e.g. ``[1, 2, 3, 4]`` for 1->2->3->4->1.

    A trailing repeat of the first city is accepted.
    """
    seq = [int(c) for c in cities]
    if len(seq) > 1 and seq[-1] == seq[0]:
        seq = seq[:-1]
    n = len(seq)
    if sorted(seq) != list(range(1, n + 1)):
        raise ValueError(f"route must visit each of cities 1..{n} exactly once, got {list(cities)}")
    sigma = [0] * n
    for a, b in zip(seq, seq[1:] + seq[:1]):
        sigma[a - 1] = b - 1
    return RoutePermutation(tuple(sigma))


def matrix_to_route(x: RoutePermutation | np.ndarray) -> list[int]:
    """Canonical 1-based city sequence starting at city 1 (without the return)."""
    perm = x if isinstance(x, RoutePermutation) else RoutePermutation.from_matrix(x)
    if not perm.valid_tour:
        raise ValueError("not a single cycle: route contains subtours or fixed points")
    seq = [0]
    while len(seq) < perm.n:
        seq.append(perm.sigma[seq[-1]])
    return [k + 1 for k in seq]


def _check_instance(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionError("distance matrix must be square")
    if d.shape[0] < 3:
        raise ValueError("no fixed-point-free tour exists for fewer than 3 cities")
    return d


def brute_force_tsp(d: np.ndarray) -> tuple[RoutePermutation, float]:
    """Enumerate all (N-1)! tours starting at city 1.

    Ties go to the lexicographically smallest city sequence, which is the
    enumeration order of ``itertools.permutations``.
    """
    d = _check_instance(d)
    n = d.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise CapacityError(f"brute force limited to N <= {BRUTE_FORCE_MAX_N}, got {n}")
    best_len, best_seq = np.inf, None
    for rest in itertools.permutations(range(1, n)):
        seq = (0,) + rest
        length = sum(d[seq[k], seq[(k + 1) % n]] for k in range(n))
        if length < best_len:
            best_len, best_seq = length, seq
    return route_to_matrix([k + 1 for k in best_seq]), float(best_len)


def held_karp(d: np.ndarray) -> float:
    """Optimal tour length by DP over (visited subset, last city), O(N^2 2^N)."""
    d = _check_instance(d)
    n = d.shape[0]
    if n > HELD_KARP_MAX_N:
        raise CapacityError(f"Held-Karp limited to N <= {HELD_KARP_MAX_N}, got {n}")
    m = n - 1  # city 0 is the fixed start; bit k encodes city k+1
    full = 1 << m
    cost = np.full((full, m), np.inf)
    for k in range(m):
        cost[1 << k, k] = d[0, k + 1]
    dd = d[1:, 1:]
    for mask in range(1, full):
        row = cost[mask]
        if not np.isfinite(row).any():
            continue
        free = [k for k in range(m) if not mask & (1 << k)]
        if not free:
            continue
        # relax all transitions last -> nxt at once
        cand = row[:, None] + dd[:, free]
        best = cand.min(axis=0)
        for idx, nxt in enumerate(free):
            nm = mask | (1 << nxt)
            if best[idx] < cost[nm, nxt]:
                cost[nm, nxt] = best[idx]
    return float(np.min(cost[full - 1] + d[1:, 0]))


def _lexicographic_assignment(w: np.ndarray, tol: float) -> tuple[int, ...]:
    """Maximum-weight assignment, ties broken toward the smallest sigma."""
    n = w.shape[0]
    r, c = linear_sum_assignment(w, maximize=True)
    target = w[r, c].sum()
    sigma: list[int] = []
    used: set[int] = set()
    fixed = 0.0
    for i in range(n):
        for j in range(n):
            if j in used:
                continue
            rows = [k for k in range(i + 1, n)]
            cols = [k for k in range(n) if k not in used and k != j]
            rest = 0.0
            if rows:
                sub = w[np.ix_(rows, cols)]
                rr, cc = linear_sum_assignment(sub, maximize=True)
                rest = sub[rr, cc].sum()
            if fixed + w[i, j] + rest >= target - tol:
                sigma.append(j)
                used.add(j)
                fixed += w[i, j]
                break
    return tuple(sigma)


def nearest_permutation(x: np.ndarray, tol: float = 1e-12) -> RoutePermutation:
    """Permutation maximising Tr[X x^T]."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError("X must be square")
    scale = max(float(np.max(np.abs(x))), 1.0)
    return RoutePermutation(_lexicographic_assignment(x, tol * scale * x.shape[0]))


@dataclass(frozen=True)
class BirkhoffDecomposition:
    terms: tuple[tuple[float, RoutePermutation], ...]
    residual: float

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    def reconstruct(self) -> np.ndarray:
        n = self.terms[0][1].n
        out = np.zeros((n, n))
        for w, p in self.terms:
            out += w * p.matrix
        return out


def doubly_stochastic_deviation(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(max(np.max(np.abs(x.sum(0) - 1)), np.max(np.abs(x.sum(1) - 1))))


def birkhoff_decompose(x: np.ndarray, zero_tol: float = 1e-13) -> BirkhoffDecomposition:
    """Greedy peeling of permutation matrices off the positive support."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError("X must be square")
    dev = doubly_stochastic_deviation(x)
    if dev > 1e-6 or np.min(x) < -1e-12:
        raise ValueError(f"matrix is not doubly stochastic (max row/col deviation {dev:.3g})")
    n = x.shape[0]
    rest = np.where(x > zero_tol, x, 0.0)
    terms: list[tuple[float, RoutePermutation]] = []
    for _ in range((n - 1) ** 2 + 1):
        if rest.max() <= zero_tol:
            break
        support = rest > zero_tol
        # count of support entries dominates; the entry size breaks ties toward large weights
        w = support.astype(float) + 1e-3 * rest
        r, c = linear_sum_assignment(w, maximize=True)
        if not support[r, c].all():
            break
        lam = float(rest[r, c].min())
        terms.append((lam, RoutePermutation(tuple(int(j) for j in c))))
        rest[r, c] -= lam
        rest[rest <= zero_tol] = 0.0
    dec = BirkhoffDecomposition(tuple(terms), 0.0)
    residual = float(np.max(np.abs(x - dec.reconstruct()))) if terms else float(np.max(np.abs(x)))
    return BirkhoffDecomposition(tuple(terms), residual)


def all_permutations(n: int) -> Iterable[RoutePermutation]:
    for p in itertools.permutations(range(n)):
        yield RoutePermutation(p)
