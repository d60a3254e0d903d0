import numpy as np
import pytest
from pytest import approx

from distributed_tracking.utils import linalg as la
from distributed_tracking.harness.verify import random_block_tridiagonal_spd
from test.utils_for_test import random_spd


def test_is_spd():
    assert la.is_spd(np.eye(3))
    assert not la.is_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not la.is_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))
    assert not la.is_spd(np.ones((2, 3)))
    assert not la.is_spd(np.eye(2), tol=1.0)


def test_cho_inverse():
    mat = random_spd(np.random.default_rng(0), 5)
    assert la.cho_inverse(mat) == approx(np.linalg.inv(mat))
    with pytest.raises(np.linalg.LinAlgError):
        la.cho_inverse(-np.eye(2))


def test_block_indexing():
    assert la.block_slice(2, 3) == slice(6, 9)
    mat = random_block_tridiagonal_spd(np.random.default_rng(1), 2, 4)
    diag, sub = la.tridiagonal_blocks(mat, 2)
    assert len(diag) == 4 and len(sub) == 3
    assert sub[0] == approx(mat[2:4, 0:2])


def test_marginalize_first_block():
    rng = np.random.default_rng(2)
    info = random_spd(rng, 6)
    vec = rng.standard_normal(6)
    cov = np.linalg.inv(info)
    mean = cov @ vec

    info_r, vec_r = la.marginalize_first_block(info, vec, 2)
    assert info_r == approx(np.linalg.inv(cov[2:, 2:]))
    assert np.linalg.solve(info_r, vec_r) == approx(mean[2:])

    info_r, vec_r = la.marginalize_first_block(info, None, 2)
    assert vec_r is None

    # Uncoupled first block is just dropped
    block = np.diag([1.0, 2.0, 3.0])
    assert la.marginalize_first_block(block, None, 1)[0] == approx(np.diag([2.0, 3.0]))


def test_block_tridiagonal_cholesky():
    rng = np.random.default_rng(3)
    for n, num_blocks in [(1, 1), (3, 5), (2, 12)]:
        mat = random_block_tridiagonal_spd(rng, n, num_blocks)
        rhs = rng.standard_normal(n * num_blocks)
        factor = la.BlockTridiagonalCholesky.from_dense(mat, n)
        assert factor.num_blocks == num_blocks
        assert factor.solve(rhs) == approx(np.linalg.solve(mat, rhs))


def test_band_mask():
    mask = la.band_mask(6, 2)
    assert mask[:2, :4].all()
    assert not mask[:2, 4:].any()
    assert np.array_equal(mask, mask.T)
    assert la.band_mask(3, 1).sum() == 7


def test_block_tridiagonal_cholesky_errors():
    with pytest.raises(np.linalg.LinAlgError, match='Block 1'):
        la.BlockTridiagonalCholesky([np.eye(2), -np.eye(2)], [np.zeros((2, 2))])
    with pytest.raises(ValueError):
        la.BlockTridiagonalCholesky([np.eye(2), np.eye(2)], [])
    # Coupling of the first and the last timestep is not block-tridiagonal
    mat = np.eye(6)
    mat[0, 5] = mat[5, 0] = 0.1
    with pytest.raises(ValueError, match='not block-tridiagonal'):
        la.BlockTridiagonalCholesky.from_dense(mat, 2)
    mat[0, 5] = mat[5, 0] = 1.e-15
    assert la.BlockTridiagonalCholesky.from_dense(mat, 2).num_blocks == 3
