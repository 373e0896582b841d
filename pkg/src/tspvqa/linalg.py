"""Two-mode interferometer blocks and their composition into meshes.

Convention: a mesh is written as the matrix product

    U = B[0] @ B[1] @ ... @ B[-1]

exactly as the factors appear left to right on paper. ``MeshSpec.blocks``
stores them in that written order, so the *last* block is the first one a
photon meets. Mode indices are 0-based internally; a block on ``pair=(k, k+1)``
corresponds to the 1-based superscript ``(k+1, k+2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError

UNITARY_TOL = 1e-12


@dataclass(frozen=True)
class Su2Block:
    theta: float
    phi1: float = 0.0
    phi2: float = 0.0
    pair: tuple[int, int] = (0, 1)

    def __post_init__(self):
        k, l = self.pair
        if l != k + 1 or k < 0:
            raise DimensionError(f"block pair must be adjacent (k, k+1), got {self.pair}")
        if not all(np.isfinite([self.theta, self.phi1, self.phi2])):
            raise ValueError("block angles must be finite")


@dataclass(frozen=True)
class MeshSpec:
    dim: int
    blocks: tuple[Su2Block, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        for b in self.blocks:
            if b.pair[1] >= self.dim:
                raise DimensionError(f"block {b.pair} does not fit a {self.dim}-mode mesh")


def su2_block_matrix(block: Su2Block) -> np.ndarray:
    s, c = np.sin(block.theta), np.cos(block.theta)
    e1, e2 = np.exp(1j * block.phi1), np.exp(1j * block.phi2)
    return np.array([[e1 * s, e2 * c], [np.conj(e2) * c, -np.conj(e1) * s]], dtype=complex)


def embed_block(block: Su2Block, dim: int) -> np.ndarray:
    k, l = block.pair
    if l >= dim:
        raise DimensionError(f"block {block.pair} out of range for dim={dim}")
    out = np.eye(dim, dtype=complex)
    out[k : l + 1, k : l + 1] = su2_block_matrix(block)
    return out


def compose_mesh(spec: MeshSpec) -> np.ndarray:
    out = np.eye(spec.dim, dtype=complex)
    for b in spec.blocks:
        out = out @ embed_block(b, spec.dim)
    return out


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or not np.all(np.isfinite(u)):
        return False
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))) <= tol


def real_mesh(dim: int, pairs: Sequence[int], thetas: Sequence[float]) -> np.ndarray:
    """Real orthogonal mesh with all external phases zero.

    ``pairs[m]`` is the lower mode index of the m-th written factor.
    """
    if len(pairs) != len(thetas):
        raise DimensionError("one angle per block required")
    blocks = [Su2Block(float(t), pair=(k, k + 1)) for k, t in zip(pairs, thetas)]
    return compose_mesh(MeshSpec(dim, tuple(blocks))).real


def rectangular_pairs(m: int) -> list[int]:
    """Block layout of an m-mode rectangular mesh, in written order.

    Columns alternate between pairs (0,1),(2,3),... and (1,2),(3,4),...,
    giving m(m-1)/2 blocks. For m=4 this is (1,2)(3,4)(2,3)(1,2)(3,4)(2,3)
    in 1-based notation.
    """
    pairs: list[int] = []
    for col in range(m):
        pairs.extend(range(col % 2, m - 1, 2))
    return pairs


def rectangular_mesh(m: int, thetas: Sequence[float]) -> np.ndarray:
    return real_mesh(m, rectangular_pairs(m), thetas)


TRIANGULAR_PAIRS = (1, 0, 2)  # u(2,3) . u(1,2) . u(3,4)


def triangular_mesh(thetas: Sequence[float]) -> np.ndarray:
    """The 4-mode three-block mesh used for projective measurements."""
    return real_mesh(4, TRIANGULAR_PAIRS, thetas)
