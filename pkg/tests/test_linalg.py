import numpy as np
import pytest
from hypothesis import given, strategies as st

from tspvqa.errors import DimensionError
from tspvqa.linalg import (
    MeshSpec,
    Su2Block,
    compose_mesh,
    embed_block,
    is_unitary,
    rectangular_mesh,
    rectangular_pairs,
    su2_block_matrix,
    triangular_mesh,
)

angle = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
R2 = np.sqrt(2) / 2


@pytest.mark.parametrize("theta, expected", [
    (0.0, [[0, 1], [1, 0]]),
    (np.pi / 2, [[1, 0], [0, -1]]),
    (np.pi / 4, [[R2, R2], [R2, -R2]]),
])
def test_su2_block_examples(theta, expected):
    assert np.allclose(su2_block_matrix(Su2Block(theta)), expected, atol=1e-15)


@given(angle, angle, angle)
def test_su2_block_unitary(t, p1, p2):
    assert is_unitary(su2_block_matrix(Su2Block(t, p1, p2)))


def test_block_rejects_non_adjacent_pair():
    with pytest.raises(DimensionError):
        Su2Block(0.1, pair=(0, 2))


def test_embed_swap_and_sign():
    swap = embed_block(Su2Block(0.0, pair=(0, 1)), 4)
    assert np.array_equal(swap.real, np.eye(4)[[1, 0, 2, 3]])
    assert np.allclose(embed_block(Su2Block(np.pi / 2, pair=(2, 3)), 4), np.diag([1, 1, 1, -1]), atol=1e-15)


def test_embed_out_of_range():
    with pytest.raises(DimensionError):
        embed_block(Su2Block(0.3, pair=(3, 4)), 4)
    with pytest.raises(DimensionError):
        MeshSpec(3, (Su2Block(0.3, pair=(2, 3)),))


def test_empty_mesh_is_identity():
    assert np.array_equal(compose_mesh(MeshSpec(4, ())), np.eye(4))


def test_triangular_zero_angles_permutation():
    u = triangular_mesh((0.0, 0.0, 0.0))
    # columns are images of e1..e4: e1->e3, e2->e1, e3->e4, e4->e2
    expected = np.zeros((4, 4))
    for src, dst in [(0, 2), (1, 0), (2, 3), (3, 1)]:
        expected[dst, src] = 1
    assert np.allclose(u, expected, atol=1e-15)


def test_rectangular_layout_four_modes():
    assert rectangular_pairs(4) == [0, 2, 1, 0, 2, 1]
    for m in range(2, 9):
        assert len(rectangular_pairs(m)) == m * (m - 1) // 2


@given(st.lists(angle, min_size=6, max_size=6), st.lists(angle, min_size=12, max_size=12))
def test_meshes_unitary_with_phases(thetas, phis):
    blocks = [Su2Block(t, phis[2 * i], phis[2 * i + 1], (k, k + 1))
              for i, (t, k) in enumerate(zip(thetas, rectangular_pairs(4)))]
    assert is_unitary(compose_mesh(MeshSpec(4, blocks)))


@given(st.integers(2, 7), st.data())
def test_zero_phase_meshes_real_orthogonal(m, data):
    thetas = data.draw(st.lists(angle, min_size=m * (m - 1) // 2, max_size=m * (m - 1) // 2))
    spec = MeshSpec(m, [Su2Block(t, pair=(k, k + 1)) for t, k in zip(thetas, rectangular_pairs(m))])
    u = compose_mesh(spec)
    assert np.max(np.abs(u.imag)) <= 1e-12
    assert np.allclose(u.real @ u.real.T, np.eye(m), atol=1e-12)
    assert np.allclose(rectangular_mesh(m, thetas), u.real, atol=1e-15)


@given(st.lists(angle, min_size=5, max_size=5))
def test_compose_matches_product_of_embeddings(thetas):
    pairs = [0, 1, 2, 1, 0]
    blocks = [Su2Block(t, 0.3 * i, -0.2 * i, (k, k + 1)) for i, (t, k) in enumerate(zip(thetas, pairs))]
    product = np.eye(4, dtype=complex)
    for b in blocks:
        product = product @ embed_block(b, 4)
    assert np.allclose(compose_mesh(MeshSpec(4, blocks)), product, atol=1e-12)


def test_is_unitary_rejects_non_unitary():
    assert not is_unitary(np.array([[1.0, 0.1], [0.0, 1.0]]))
    assert not is_unitary(np.ones((2, 3)))
    assert not is_unitary(np.array([[np.nan, 0], [0, 1]]))
