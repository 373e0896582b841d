import numpy as np
import pytest
from hypothesis import given, strategies as st

from tspvqa.errors import DimensionError
from tspvqa.measurement import (
    CorrelationMatrix,
    assert_doubly_stochastic,
    correlation_exact,
    correlation_sampled,
    overlap,
    sample_counts,
    sample_counts_batch,
    sampling_tolerance,
    x_from_counts,
)
from tspvqa.oracle import route_to_matrix
from tspvqa.state import Statevector, build_trial_state, prepare_bell_registers, register_unitaries

alphas6 = st.lists(st.floats(0, 2 * np.pi), min_size=6, max_size=6)


def route_state(route, phases=None):
    sigma = route.sigma
    amps = np.zeros(16, dtype=complex)
    for k, s in enumerate(sigma):
        amps[k * 4 + s] = 0.5 * (1 if phases is None else np.exp(1j * phases[k]))
    return Statevector(2, amps)


def test_bell_state_gives_identity():
    assert np.allclose(correlation_exact(prepare_bell_registers(2)).values, np.eye(4))


def test_route_state_gives_permutation():
    r = route_to_matrix([1, 2, 3, 4])
    assert np.array_equal(correlation_exact(route_state(r)).values, r.matrix)


@given(st.lists(st.floats(-np.pi, np.pi), min_size=4, max_size=4))
def test_route_phases_invisible(phases):
    r = route_to_matrix([1, 3, 2, 4])
    assert np.allclose(correlation_exact(route_state(r, phases)).values, r.matrix, atol=1e-12)


@given(alphas6)
def test_exact_x_is_squared_product(alpha):
    regs = register_unitaries(4, alpha)
    x = correlation_exact(build_trial_state(4, alpha)).values
    assert np.allclose(x, np.abs(regs.u_d @ regs.u_a.T) ** 2, atol=1e-12)


@given(alphas6)
def test_exact_x_doubly_stochastic(alpha):
    for n in (3, 4):
        assert assert_doubly_stochastic(correlation_exact(build_trial_state(n, alpha)), 1e-10)


@given(alphas6)
def test_three_city_block_diagonal(alpha):
    x = correlation_exact(build_trial_state(3, alpha)).values
    assert abs(x[3, 3] - 1) <= 1e-10
    assert np.max(x[3, :3]) <= 1e-10 and np.max(x[:3, 3]) <= 1e-10


def test_sampled_sums_and_determinism():
    s = build_trial_state(4, [0.3, 1.1, 2.0, 0.4, 0.9, 2.5])
    x1, rec1 = correlation_sampled(s, 2000, seed=3)
    x2, rec2 = correlation_sampled(s, 2000, seed=3)
    assert abs(x1.values.sum() - 4.0) <= 1e-12
    assert rec1.total == 2000 and np.array_equal(rec1.counts, rec2.counts)
    assert np.array_equal(x1.values, x2.values)
    assert x1.mode == "sampled" and x1.shots == 2000


def test_sampled_rejects_zero_shots():
    with pytest.raises(ValueError):
        correlation_sampled(prepare_bell_registers(2), 0, seed=0)


def test_million_shots_close_to_route():
    s = route_state(route_to_matrix([1, 2, 3, 4]))
    worst = max(np.max(np.abs(correlation_sampled(s, 10**6, seed=k)[0].values - correlation_exact(s).values))
                for k in range(20))
    assert worst <= 0.01


def test_sampled_row_sums_need_loose_tolerance():
    s = build_trial_state(4, [0.3, 1.1, 2.0, 0.4, 0.9, 2.5])
    reports = [assert_doubly_stochastic(correlation_sampled(s, 2000, k)[0], 1e-3) for k in range(20)]
    assert not any(reports)
    tol = sampling_tolerance(4, 2000)
    assert 0.1 <= tol <= 0.25
    assert all(assert_doubly_stochastic(correlation_sampled(s, 2000, k)[0], tol) for k in range(20))


def test_stochasticity_report_deviation():
    m = np.eye(3)
    m[0, 1] = 0.5
    rep = assert_doubly_stochastic(m, 1e-10)
    assert not rep.passed
    assert rep.row_deviation == pytest.approx(0.5)
    assert rep.col_deviation == pytest.approx(0.5)


def test_overlap_examples():
    r = route_to_matrix([1, 2, 3, 4])
    assert overlap(r.matrix, r) == 1.0
    assert overlap(np.eye(4), r) == 0.0
    mix = 0.75 * r.matrix + 0.25 * route_to_matrix([1, 4, 3, 2]).matrix
    assert overlap(mix, r) == pytest.approx(0.75)


def test_overlap_pads_spectators():
    r3 = route_to_matrix([1, 2, 3])
    x = np.eye(4)
    x[:3, :3] = r3.matrix
    assert overlap(x, r3) == 1.0
    with pytest.raises(DimensionError):
        overlap(np.eye(3), route_to_matrix([1, 2, 3, 4]))


def test_correlation_matrix_rejects_negative():
    with pytest.raises(ValueError):
        CorrelationMatrix(-np.eye(2))


@given(st.integers(1, 5000), st.integers(0, 2**32 - 1))
def test_counts_total_and_batch_agree(shots, seed):
    p = np.random.default_rng(seed).dirichlet(np.ones(16)).reshape(4, 4)
    c = sample_counts(p, shots, seed)
    assert c.sum() == shots and c.shape == (4, 4)
    batch = sample_counts_batch(np.stack([p, p[::-1]]), shots, seed)
    assert np.array_equal(batch[0], c)
    assert np.array_equal(batch[1], sample_counts(p[::-1], shots, seed))


def test_counts_follow_probabilities():
    p = np.array([0.5, 0.25, 0.25, 0.0])
    c = sample_counts(p, 40000, 1)
    assert c[3] == 0
    assert np.allclose(c / 40000, p, atol=0.01)


def test_x_from_counts_normalisation():
    x = x_from_counts(np.array([[1, 3], [0, 4]]))
    assert x.values.sum() == 2.0 and x.shots == 8
