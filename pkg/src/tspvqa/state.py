"""Two-register trial states.

Amplitudes are stored as a flat vector indexed ``i * 2**n + j`` where ``i`` is
the departure-register basis state and ``j`` the arrival-register one, i.e.
city ``i+1`` departing towards city ``j+1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DimensionError
from .linalg import UNITARY_TOL, is_unitary, rectangular_mesh

MAX_QUBITS_PER_REGISTER = 13


def qubits_per_register(n_cities: int) -> int:
    if n_cities < 1:
        raise ValueError("need at least one city")
    return max(1, math.ceil(math.log2(n_cities)))


@dataclass(frozen=True)
class Statevector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (4**self.n,):
            raise DimensionError(f"expected {4 ** self.n} amplitudes for n={self.n}, got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n

    def as_matrix(self) -> np.ndarray:
        """Amplitudes reshaped to (departure, arrival)."""
        return self.amplitudes.reshape(self.dim, self.dim)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class RegisterUnitaries:
    u_d: np.ndarray
    u_a: np.ndarray
    n_cities: int

    def __post_init__(self):
        for name in ("u_d", "u_a"):
            u = np.asarray(getattr(self, name), dtype=complex)
            if not is_unitary(u, UNITARY_TOL):
                raise ValueError(f"{name} is not unitary")
            object.__setattr__(self, name, u)
        if self.u_d.shape != self.u_a.shape:
            raise DimensionError("register unitaries differ in size")
        dim = self.u_d.shape[0]
        if dim < self.n_cities:
            raise DimensionError("register too small for the number of cities")
        spec = slice(self.n_cities, dim)
        for u in (self.u_d, self.u_a):
            eye = np.eye(dim)
            if np.max(np.abs(u[spec, :] - eye[spec, :]), initial=0) > UNITARY_TOL or \
                    np.max(np.abs(u[:, spec] - eye[:, spec]), initial=0) > UNITARY_TOL:
                raise ValueError("spectator modes must be left untouched")


def prepare_bell_registers(n: int) -> Statevector:
    if not 1 <= n <= MAX_QUBITS_PER_REGISTER:
        raise CapacityError(f"register size must be in [1, {MAX_QUBITS_PER_REGISTER}], got {n}")
    dim = 2**n
    amps = np.zeros(dim * dim, dtype=complex)
    amps[np.arange(dim) * (dim + 1)] = 2 ** (-n / 2)
    return Statevector(n, amps)


def apply_register_unitaries(state: Statevector, regs: RegisterUnitaries) -> Statevector:
    if regs.u_d.shape[0] != state.dim:
        raise DimensionError(f"unitaries are {regs.u_d.shape[0]}-dimensional, state registers {state.dim}")
    # (U_d (x) U_a) vec(M) == vec(U_d M U_a^T) for row-major vec
    m = regs.u_d @ state.as_matrix() @ regs.u_a.T
    return Statevector(state.n, m.reshape(-1))


def general_param_count(n_cities: int) -> int:
    return n_cities * (n_cities - 1)


def param_count(n_cities: int) -> int:
    return 6 if n_cities == 4 else general_param_count(n_cities)


def _padded(u: np.ndarray, dim: int) -> np.ndarray:
    out = np.eye(dim)
    out[: u.shape[0], : u.shape[0]] = u
    return out


def register_unitaries(n_cities: int, params) -> RegisterUnitaries:
    """Map a parameter vector to (U_d, U_a).

    N=4 uses the six-angle form that pins city 1 as first departure. Any
    other N uses two unconstrained rectangular meshes over the city modes,
    N(N-1)/2 angles each, padded with identity on spectator modes.
    """
    alpha = np.asarray(params, dtype=float)
    if n_cities < 3:
        raise ValueError("no fixed-point-free tour exists for fewer than 3 cities")
    if alpha.shape != (param_count(n_cities),):
        raise ValueError(f"N={n_cities} needs {param_count(n_cities)} parameters, got {alpha.size}")
    dim = 2 ** qubits_per_register(n_cities)
    if n_cities == 4:
        from .fourcity import u_a_4, u_d_4

        return RegisterUnitaries(u_d_4(*alpha[:3]), u_a_4(*alpha[3:]), 4)
    half = alpha.size // 2
    u_d = _padded(rectangular_mesh(n_cities, alpha[:half]), dim)
    u_a = _padded(rectangular_mesh(n_cities, alpha[half:]), dim)
    return RegisterUnitaries(u_d, u_a, n_cities)


def build_trial_state(n_cities: int, params) -> Statevector:
    regs = register_unitaries(n_cities, params)
    return apply_register_unitaries(prepare_bell_registers(qubits_per_register(n_cities)), regs)


def reduced_density_matrix(state: Statevector, keep: str = "d") -> np.ndarray:
    m = state.as_matrix()
    if keep == "d":
        return m @ m.conj().T
    if keep == "a":
        return m.T @ m.conj()
    raise ValueError("keep must be 'd' or 'a'")


def _rectangular_batch(m: int, thetas: np.ndarray) -> np.ndarray:
    """Batched ``rectangular_mesh``: thetas (B, m(m-1)/2) -> (B, m, m)."""
    from .linalg import rectangular_pairs

    b = thetas.shape[0]
    u = np.broadcast_to(np.eye(m), (b, m, m)).copy()
    s, c = np.sin(thetas), np.cos(thetas)
    for idx, k in enumerate(rectangular_pairs(m)):
        # right-multiply by the embedded block acting on columns k, k+1
        left, right = u[:, :, k].copy(), u[:, :, k + 1]
        sk, ck = s[:, idx, None], c[:, idx, None]
        u[:, :, k] = left * sk + right * ck
        u[:, :, k + 1] = left * ck - right * sk
    return u


def register_unitaries_batch(n_cities: int, alphas) -> tuple[np.ndarray, np.ndarray]:
    """Real (U_d, U_a) stacks for a batch of parameter vectors, unvalidated."""
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    if alphas.shape[1] != param_count(n_cities):
        raise ValueError(f"N={n_cities} needs {param_count(n_cities)} parameters, got {alphas.shape[1]}")
    if n_cities == 4:
        from .fourcity import u_a_4, u_d_4

        return u_d_4(*alphas[:, :3].T), u_a_4(*alphas[:, 3:].T)
    dim = 2 ** qubits_per_register(n_cities)
    half = alphas.shape[1] // 2
    out = []
    for part in (alphas[:, :half], alphas[:, half:]):
        u = np.broadcast_to(np.eye(dim), (alphas.shape[0], dim, dim)).copy()
        u[:, :n_cities, :n_cities] = _rectangular_batch(n_cities, part)
        out.append(u)
    return out[0], out[1]


def correlation_batch(n_cities: int, alphas) -> np.ndarray:
    """Exact X for each parameter vector: |U_d U_a^T|^2, shape (B, dim, dim)."""
    u_d, u_a = register_unitaries_batch(n_cities, alphas)
    return np.abs(u_d @ np.swapaxes(u_a, 1, 2)) ** 2
