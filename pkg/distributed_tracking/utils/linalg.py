""" Linear algebra helpers shared by the estimators: SPD checks, Cholesky based
inverses, block indexing of stacked window vectors and a block-tridiagonal
Cholesky solver.
"""
import numpy as np
from scipy import linalg


def is_spd(mat, tol=0.0):
    """ Check that a matrix is symmetric positive definite by its smallest eigenvalue

    :param mat: Square matrix to check
    :type mat: np.ndarray

    :param tol: The smallest eigenvalue must be strictly larger than this value
    :type tol: float

    :returns: True if ``mat`` is symmetric and its smallest eigenvalue exceeds ``tol``
    :rtype: bool
    """
    mat = np.atleast_2d(mat)
    if mat.shape[0] != mat.shape[1]:
        return False
    if not np.allclose(mat, mat.T, rtol=1.e-10, atol=1.e-12 * max(1.0, np.max(np.abs(mat)))):
        return False
    return bool(np.min(np.linalg.eigvalsh(mat)) > tol)


def is_singular(mat, rel_tol=1.e-12):
    """ True if the smallest eigenvalue of a symmetric matrix is not above ``rel_tol`` times the largest"""
    eig = np.linalg.eigvalsh(mat)
    return not eig[0] > rel_tol * max(eig[-1], 0.0)


def symmetrize(mat):
    return 0.5 * (mat + mat.T)


def cho_inverse(mat):
    """ Inverse of an SPD matrix through its Cholesky factorization.
    Raises ``np.linalg.LinAlgError`` if ``mat`` is not positive definite.
    """
    factor = linalg.cho_factor(mat, lower=True)
    return symmetrize(linalg.cho_solve(factor, np.eye(mat.shape[0])))


def block_slice(k, n):
    """ Slice of timestep block ``k`` in a stacked vector with block size ``n``"""
    return slice(k * n, (k + 1) * n)


def tridiagonal_blocks(mat, n):
    """ Extract the diagonal and sub-diagonal blocks of a block-tridiagonal matrix

    :param mat: Symmetric matrix of size (n*K, n*K)
    :type mat: np.ndarray

    :param n: Block size
    :type n: int

    :returns: list of K diagonal blocks and list of K-1 sub-diagonal blocks, where
              the k-th sub-diagonal block is ``mat[k+1, k]``
    :rtype: list[ np.ndarray ], list[ np.ndarray ]
    """
    num_blocks = mat.shape[0] // n
    diag = [mat[block_slice(k, n), block_slice(k, n)] for k in range(num_blocks)]
    sub = [mat[block_slice(k + 1, n), block_slice(k, n)] for k in range(num_blocks - 1)]
    return diag, sub


def band_mask(size, n):
    """ True on the diagonal, sub- and super-diagonal blocks of a (size x size) matrix with block size ``n``"""
    blocks = np.arange(size) // n
    return np.abs(blocks[:, None] - blocks[None, :]) <= 1


def marginalize_first_block(info, vec, n):
    """ Eliminate the first block of a Gaussian in information form (Schur complement).

    :param info: Information matrix over K blocks
    :type info: np.ndarray

    :param vec: Information vector over K blocks, or None
    :type vec: np.ndarray

    :param n: Block size
    :type n: int

    :returns: Information matrix and vector (None if ``vec`` is None) over the
              remaining K-1 blocks
    :rtype: np.ndarray, np.ndarray
    """
    i00 = info[:n, :n]
    i0r = info[:n, n:]
    irr = info[n:, n:]
    vec_r = None if vec is None else vec[n:].copy()
    if not np.any(i0r):
        return irr.copy(), vec_r

    try:
        factor = linalg.cho_factor(i00, lower=True)
        gain = linalg.cho_solve(factor, i0r)
        gain_vec = None if vec is None else linalg.cho_solve(factor, vec[:n])
    except np.linalg.LinAlgError:
        # Coupled but rank deficient first block
        i00_pinv = linalg.pinvh(i00)
        gain = i00_pinv @ i0r
        gain_vec = None if vec is None else i00_pinv @ vec[:n]

    marginal = symmetrize(irr - i0r.T @ gain)
    if vec is not None:
        vec_r = vec_r - i0r.T @ gain_vec
    return marginal, vec_r


class BlockTridiagonalCholesky:
    """ Cholesky factorization :math:`M = L L^T` of a symmetric positive definite
    block-tridiagonal matrix. The factor is lower block-bidiagonal with diagonal
    blocks :math:`L_k` and sub-diagonal blocks :math:`L_{k,k-1}`:

    .. math::

        L_k L_k^T = D_k - L_{k,k-1} L_{k,k-1}^T, \\quad
        L_{k,k-1} L_{k-1}^T = S_k

    Factorization and each solve cost :math:`O(K n^3)` for K blocks of size n,
    i.e. linear in the number of blocks.

    :param diag: Diagonal blocks :math:`D_k`
    :type diag: list[ np.ndarray ]

    :param sub: Sub-diagonal blocks :math:`S_k = M_{k, k-1}`, one less than ``diag``
    :type sub: list[ np.ndarray ]
    """

    def __init__(self, diag, sub):
        if len(sub) != len(diag) - 1:
            raise ValueError('Need exactly one sub-diagonal block less than diagonal blocks, got '
                             + str(len(sub)) + ' and ' + str(len(diag)))
        self.num_blocks = len(diag)
        self.n = diag[0].shape[0]
        self.diag_factors = []
        self.sub_factors = []

        for k, d_k in enumerate(diag):
            if k == 0:
                schur = d_k
            else:
                l_sub = linalg.solve_triangular(self.diag_factors[k-1], sub[k-1].T, lower=True).T
                self.sub_factors.append(l_sub)
                schur = d_k - l_sub @ l_sub.T
            try:
                self.diag_factors.append(linalg.cholesky(symmetrize(schur), lower=True))
            except np.linalg.LinAlgError as err:
                raise np.linalg.LinAlgError('Block ' + str(k) + ' of ' + str(self.num_blocks)
                                            + ' is not positive definite during the forward pass ('
                                            + str(err) + ')')

    @classmethod
    def from_dense(cls, mat, n, rel_tol=1.e-12):
        """ Factor a dense block-tridiagonal matrix

        :raises ValueError: If a block outside the three central block diagonals is
                            larger than ``rel_tol`` times the largest entry
        """
        off = np.abs(mat[~band_mask(mat.shape[0], n)])
        if off.size and np.max(off) > rel_tol * np.max(np.abs(mat)):
            raise ValueError('Matrix is not block-tridiagonal with block size ' + str(n))
        return cls(*tridiagonal_blocks(mat, n))

    def forward(self, rhs):
        """ Solve :math:`L \\sigma = b` block by block"""
        n = self.n
        sigma = np.zeros(self.num_blocks * n)
        for k in range(self.num_blocks):
            b_k = rhs[block_slice(k, n)]
            if k > 0:
                b_k = b_k - self.sub_factors[k-1] @ sigma[block_slice(k-1, n)]
            sigma[block_slice(k, n)] = linalg.solve_triangular(self.diag_factors[k], b_k, lower=True)
        return sigma

    def backward(self, sigma):
        """ Solve :math:`L^T x = \\sigma` block by block, last block first"""
        n = self.n
        x = np.zeros(self.num_blocks * n)
        for k in range(self.num_blocks - 1, -1, -1):
            s_k = sigma[block_slice(k, n)]
            if k < self.num_blocks - 1:
                s_k = s_k - self.sub_factors[k].T @ x[block_slice(k+1, n)]
            x[block_slice(k, n)] = linalg.solve_triangular(self.diag_factors[k], s_k, lower=True, trans='T')
        return x

    def solve(self, rhs):
        return self.backward(self.forward(rhs))

