"""Closed forms for four cities and the 16-projector measurement scheme.

The six parameters split as ``(a1, a2, a3)`` for the departure register and
``(a4, a5, a6)`` for the arrival register. ``u_d_4`` fixes city 1 as first
departure (U_d e1 = e1) and ``u_a_4`` makes it the last arrival (U_a e4 = e1).

Projective scheme: each register passes a three-block triangular mesh
u(2,3).u(1,2).u(3,4) and a single detector sits on output mode 2. Setting
``j`` of the idler (departure) mesh makes that output row equal row ``j`` of
U_d, and likewise for the signal (arrival) mesh and U_a, so the coincidence
rate of the pair (j_i, j_s) is X[j_i, j_s] / 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy import cos, sin

from .errors import ConsistencyError
from .linalg import triangular_mesh
from .measurement import CorrelationMatrix, sample_counts, sample_counts_batch, x_from_counts
from .oracle import RoutePermutation, route_to_matrix

HALF_PI = np.pi / 2
DETECTED_MODE = 1  # output mode 2, 0-based
ARC_TOL = 1e-9
DEGENERATE_TOL = 1e-12


def _rows(*rows) -> np.ndarray:
    """Stack broadcastable entries into (..., 4, 4)."""
    entries = np.broadcast_arrays(*[e for row in rows for e in row])
    return np.stack(entries, axis=-1).reshape(entries[0].shape + (4, 4))


def u_d_4(a1, a2, a3) -> np.ndarray:
    """Departure-register matrix; accepts scalars or equal-shape arrays."""
    s1, c1, s2, c2, s3, c3 = sin(a1), cos(a1), sin(a2), cos(a2), sin(a3), cos(a3)
    o, z = np.ones_like(s1), np.zeros_like(s1)
    return _rows(
        (o, z, z, z),
        (z, s1 * s3 - c1 * s2 * c3, s1 * c3 + c1 * s2 * s3, -c1 * c2),
        (z, -c1 * s3 - s1 * s2 * c3, -c1 * c3 + s1 * s2 * s3, -s1 * c2),
        (z, -c2 * c3, c2 * s3, s2),
    )


def u_a_4(a4, a5, a6) -> np.ndarray:
    """Arrival-register matrix; accepts scalars or equal-shape arrays."""
    s4, c4, s5, c5, s6, c6 = sin(a4), cos(a4), sin(a5), cos(a5), sin(a6), cos(a6)
    o, z = np.ones_like(s4), np.zeros_like(s4)
    return _rows(
        (z, z, z, o),
        (s5, c5 * s6, c5 * c6, z),
        (s4 * c5, c4 * c6 - s4 * s5 * s6, -c4 * s6 - s4 * s5 * c6, z),
        (c4 * c5, -s4 * c6 - c4 * s5 * s6, s4 * s6 - c4 * s5 * c6, z),
    )


def x_4_analytic(params) -> CorrelationMatrix:
    a1, a2, a3, a4, a5, a6 = np.asarray(params, dtype=float)
    s, c = sin, cos
    d = a6 - a3
    x = np.empty((4, 4))
    x[0, 0] = 0.0
    x[0, 1] = s(a5) ** 2
    x[0, 2] = s(a4) ** 2 * c(a5) ** 2
    x[0, 3] = c(a4) ** 2 * c(a5) ** 2
    x[1, 0] = c(a1) ** 2 * c(a2) ** 2
    x[1, 1] = c(a5) ** 2 * (s(a1) * c(d) - c(a1) * s(a2) * s(d)) ** 2
    x[1, 2] = ((c(a4) * c(a6) - s(a4) * s(a5) * s(a6)) * (s(a1) * s(a3) - c(a1) * s(a2) * c(a3))
               - (c(a4) * s(a6) + s(a4) * s(a5) * c(a6)) * (s(a1) * c(a3) + c(a1) * s(a2) * s(a3))) ** 2
    x[1, 3] = (c(d) * (s(a4) * c(a1) * s(a2) - c(a4) * s(a5) * s(a1))
               + s(d) * (c(a4) * s(a5) * c(a1) * s(a2) + s(a4) * s(a1))) ** 2
    x[2, 0] = s(a1) ** 2 * c(a2) ** 2
    x[2, 1] = c(a5) ** 2 * (s(a1) * s(a2) * s(d) + c(a1) * c(d)) ** 2
    x[2, 2] = ((s(a4) * s(a5) * c(a6) + c(a4) * s(a6)) * (c(a1) * c(a3) - s(a1) * s(a2) * s(a3))
               - (c(a4) * c(a6) - s(a4) * s(a5) * s(a6)) * (s(a1) * s(a2) * c(a3) + c(a1) * s(a3))) ** 2
    x[2, 3] = (c(d) * (c(a4) * s(a5) * c(a1) + s(a4) * s(a1) * s(a2))
               + s(d) * (c(a4) * s(a5) * s(a1) * s(a2) - s(a4) * c(a1))) ** 2
    x[3, 0] = s(a2) ** 2
    x[3, 1] = c(a5) ** 2 * c(a2) ** 2 * s(d) ** 2
    x[3, 2] = c(a2) ** 2 * (s(a4) * s(a5) * s(d) - c(a4) * c(d)) ** 2
    x[3, 3] = c(a2) ** 2 * (c(a4) * s(a5) * s(d) + s(a4) * c(d)) ** 2
    return CorrelationMatrix(x, "exact")


# Table S1: departure and arrival settings of the six tours starting at city 1.
_TABLE_S1 = {
    (1, 2, 3, 4): (HALF_PI, HALF_PI, HALF_PI, HALF_PI, HALF_PI, HALF_PI),
    (1, 2, 4, 3): (HALF_PI, 0.0, HALF_PI, HALF_PI, HALF_PI, 0.0),
    (1, 3, 2, 4): (HALF_PI, HALF_PI, 0.0, HALF_PI, 0.0, HALF_PI),
    (1, 3, 4, 2): (0.0, 0.0, HALF_PI, HALF_PI, 0.0, 0.0),
    (1, 4, 2, 3): (HALF_PI, 0.0, 0.0, 0.0, 0.0, HALF_PI),
    (1, 4, 3, 2): (0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
}


def table_s1_settings(route: RoutePermutation) -> np.ndarray:
    if route.n != 4 or not route.valid_tour:
        raise ValueError("route must be one of the six valid 4-city tours")
    seq = [k + 1 for k in _sequence(route)]
    return np.array(_TABLE_S1[tuple(seq)])


def table_s1_routes() -> list[RoutePermutation]:
    return [route_to_matrix(seq) for seq in _TABLE_S1]


def _sequence(route: RoutePermutation) -> list[int]:
    seq = [0]
    while len(seq) < route.n:
        seq.append(route.sigma[seq[-1]])
    return seq


@dataclass(frozen=True)
class ProjectorSettings:
    """Triangular-mesh angles for the four idler and four signal settings."""

    idler: tuple[tuple[float, float, float], ...]
    signal: tuple[tuple[float, float, float], ...]


def _arc(fn, arg):
    arg = np.asarray(arg, dtype=float)
    if np.any(~np.isfinite(arg)) or np.any(np.abs(arg) > 1 + ARC_TOL):
        raise ConsistencyError(f"{fn.__name__} argument outside [-1, 1]: max |arg| = {np.max(np.abs(arg))!r}")
    return fn(np.clip(arg, -1.0, 1.0))


def _free_angle(y, x, norm):
    # zero-amplitude branch: the angle has no effect on any detected rate
    return np.where(np.asarray(norm) < DEGENERATE_TOL, HALF_PI, np.arctan2(y, x))


def projector_angles(alphas) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``projector_settings``: (B, 6) -> idler and signal angles, each (B, 4, 3).

    The arcsin/arccos of the published table are evaluated as ``arctan2``
    of the same row components, which stays accurate where the arc
    arguments approach +-1.
    """
    a = np.atleast_2d(np.asarray(alphas, dtype=float))
    ud, ua = u_d_4(*a[:, :3].T), u_a_4(*a[:, 3:].T)
    b = a.shape[0]
    idler = np.empty((b, 4, 3))
    signal = np.empty((b, 4, 3))
    idler[:, 0] = (HALF_PI, 0.0, HALF_PI)
    signal[:, 0] = (0.0, HALF_PI, 0.0)
    # detected idler row (0, -sin t1, cos t1 sin t3, cos t1 cos t3); the last
    # entry is matched up to sign, which no signal row with j>1 can see
    r = ud[:, 1:]
    rest = np.hypot(r[..., 2], r[..., 3])
    _arc(np.arcsin, -r[..., 1])  # consistency guard only
    idler[:, 1:, 0] = np.arctan2(-r[..., 1], rest)
    idler[:, 1:, 1] = HALF_PI
    num = r[..., 3] * np.array([-1.0, -1.0, 1.0])
    idler[:, 1:, 2] = _free_angle(r[..., 2], num, rest)
    # detected signal row (sin t1 cos t2, -sin t1 sin t2, cos t1, 0)
    r = ua[:, 1:]
    rest = np.hypot(r[..., 0], r[..., 1])
    _arc(np.arccos, r[..., 2])
    signal[:, 1:, 0] = np.arctan2(rest, r[..., 2])
    signal[:, 1:, 1] = _free_angle(-r[..., 1], r[..., 0], rest)
    signal[:, 1:, 2] = HALF_PI
    return idler, signal


def projector_settings(params) -> ProjectorSettings:
    """Mesh angles whose detected rows reproduce the rows of U_d and U_a.

    The arc arguments agree with the published table up to sign. The
    dependent angle of each setting comes from ``arctan2`` instead of
    ``arccos`` so the sign of the remaining row component survives; the two
    coincide whenever that component has the sign ``arccos`` implies.
    """
    idler, signal = projector_angles(np.asarray(params, dtype=float)[None])
    as_tuples = lambda m: tuple(tuple(float(v) for v in row) for row in m)
    return ProjectorSettings(as_tuples(idler[0]), as_tuples(signal[0]))


def _published_idler_numerator(a: np.ndarray, j: int) -> float:
    a1, a2, a3 = a[:3]
    return {1: cos(a1) * cos(a2), 2: sin(a1) * cos(a2), 3: sin(a2)}[j]


def published_projector_settings(params) -> ProjectorSettings:
    """Literal transcription of the published arcsin/arccos angle table.

    Reproduces every component magnitude of the target rows but not every
    sign, so it matches X only on part of parameter space (including all
    Table S1 points). Kept for comparison; use ``projector_settings``.
    """
    a1, a2, a3, a4, a5, a6 = np.asarray(params, dtype=float)

    def dep(q, num):
        den = np.sqrt(max(1 - q * q, 0.0))
        ratio = 1.0 if den < DEGENERATE_TOL else num / den
        return _arc(np.arccos, ratio)

    q2 = cos(a1) * sin(a2) * cos(a3) - sin(a1) * sin(a3)
    q3 = sin(a1) * sin(a2) * cos(a3) + cos(a1) * sin(a3)
    q4 = cos(a2) * cos(a3)
    idler = (
        (HALF_PI, 0.0, HALF_PI),
        (_arc(np.arcsin, q2), HALF_PI, dep(q2, cos(a1) * cos(a2))),
        (_arc(np.arcsin, q3), HALF_PI, dep(q3, sin(a1) * cos(a2))),
        (_arc(np.arcsin, q4), HALF_PI, dep(q4, sin(a2))),
    )
    p2 = cos(a5) * cos(a6)
    p3 = sin(a4) * sin(a5) * cos(a6) + cos(a4) * sin(a6)
    p4 = cos(a4) * sin(a5) * cos(a6) - sin(a4) * sin(a6)
    signal = (
        (0.0, HALF_PI, 0.0),
        (_arc(np.arccos, p2), dep(p2, sin(a5)), HALF_PI),
        (_arc(np.arccos, p3), dep(p3, sin(a4) * cos(a5)), HALF_PI),
        (_arc(np.arccos, p4), dep(p4, cos(a4) * cos(a5)), HALF_PI),
    )
    return ProjectorSettings(idler, signal)


def detected_row(thetas) -> np.ndarray:
    """Output-mode-2 row of ``triangular_mesh(thetas)`` without building the mesh."""
    t1, t2, t3 = np.moveaxis(np.asarray(thetas, dtype=float), -1, 0)
    return np.stack([sin(t1) * cos(t2), -sin(t1) * sin(t2), cos(t1) * sin(t3), cos(t1) * cos(t3)], axis=-1)


def projector_rates(settings: ProjectorSettings) -> np.ndarray:
    """Coincidence probability of each of the 16 (idler, signal) settings.

    Each run sends the source state (1/2) sum_k |k>|k> through the two meshes
    and detects output mode 2 of both photons.
    """
    rows_i = detected_row(settings.idler)
    rows_s = detected_row(settings.signal)
    return (rows_i @ rows_s.T) ** 2 / 4.0


def projector_rates_batch(alphas) -> np.ndarray:
    """Rates of the 16 settings for each parameter vector, shape (B, 4, 4)."""
    idler, signal = projector_angles(alphas)
    rows_i, rows_s = detected_row(idler), detected_row(signal)
    return (rows_i @ np.swapaxes(rows_s, 1, 2)) ** 2 / 4.0


def emulate_16_projectors_batch(alphas, shots: Optional[int] = None, seed=0) -> np.ndarray:
    """Projector-protocol X for each row of ``alphas``, one shared seed."""
    rates = projector_rates_batch(alphas)
    if shots is None:
        return 4.0 * rates / rates.sum(axis=(1, 2), keepdims=True)
    counts = sample_counts_batch(rates, shots, seed)
    return 4.0 * counts / counts.sum(axis=(1, 2), keepdims=True)


def projector_rates_by_mesh(settings: ProjectorSettings) -> np.ndarray:
    """Same as ``projector_rates`` but through full mesh composition."""
    rows_i = np.array([triangular_mesh(t)[DETECTED_MODE] for t in settings.idler])
    rows_s = np.array([triangular_mesh(t)[DETECTED_MODE] for t in settings.signal])
    return (rows_i @ rows_s.T) ** 2 / 4.0


def emulate_16_projectors(params, shots: Optional[int] = None, seed=0,
                          settings: Optional[ProjectorSettings] = None) -> CorrelationMatrix:
    """X assembled from the 16 projective runs; ``shots=None`` is exact.

    In sampled mode the 16 runs together collect ``shots`` coincidences,
    split according to their rates: one multinomial draw over the settings.
    """
    rates = projector_rates(settings if settings is not None else projector_settings(params))
    if shots is None:
        return CorrelationMatrix(4.0 * rates / rates.sum(), "exact")
    return x_from_counts(sample_counts(rates, shots, seed))
