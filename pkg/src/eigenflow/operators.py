"""Finite-difference stencils and their adjoints.

The first-order gradient is the forward difference with a zero last
row/column:

    (grad u)^1_{i,j} = u_{i+1,j} - u_{i,j}  if i < last,  0 at the last row

and the divergence is its negative adjoint (backward differences with the
matching boundary cases), so <grad u, z> + <u, div z> = 0 exactly.

The second-order pair (sym_grad, div2) used by TGV2 is built the same way:
div2 is defined as the exact negative adjoint of sym_grad under the field
inner products.  The sym_grad stencils are chosen so that the symmetrized
derivative of the (forward-difference) gradient of an affine field
vanishes, which makes affine functions the TGV2 null space on the discrete
grid: diagonal entries use backward differences zeroed at both boundary
rows, off-diagonals use backward differences zeroed at the first row only,
symmetrized with 1/2 weights.
"""

from __future__ import annotations

import numpy as np

from .grid import GridField, SymTensorField, VecField

# ---------------------------------------------------------------------------
# raw array kernels (used directly by the inner solvers for speed)


def grad_arrays(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g1 = np.zeros_like(u)
    g1[:-1, :] = u[1:, :] - u[:-1, :]
    g2 = np.zeros_like(u)
    g2[:, :-1] = u[:, 1:] - u[:, :-1]
    return g1, g2


def div_arrays(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    d1 = z1.copy()
    d1[-1, :] = 0.0
    d1[1:, :] -= z1[:-1, :]
    d2 = z2.copy()
    d2[:, -1] = 0.0
    d2[:, 1:] -= z2[:, :-1]
    return d1 + d2


def _diff_center(v: np.ndarray, axis: int) -> np.ndarray:
    # backward difference, zeroed at both boundary slices along `axis`
    out = np.zeros_like(v)
    if axis == 0:
        out[1:-1, :] = v[1:-1, :] - v[:-2, :]
    else:
        out[:, 1:-1] = v[:, 1:-1] - v[:, :-2]
    return out


def _diff_center_t(s: np.ndarray, axis: int) -> np.ndarray:
    out = np.zeros_like(s)
    if axis == 0:
        out[1:-1, :] = s[1:-1, :]
        out[:-2, :] -= s[1:-1, :]
    else:
        out[:, 1:-1] = s[:, 1:-1]
        out[:, :-2] -= s[:, 1:-1]
    return out


def _diff_back(v: np.ndarray, axis: int) -> np.ndarray:
    # backward difference, zeroed at the first slice along `axis`
    out = np.zeros_like(v)
    if axis == 0:
        out[1:, :] = v[1:, :] - v[:-1, :]
    else:
        out[:, 1:] = v[:, 1:] - v[:, :-1]
    return out


def _diff_back_t(s: np.ndarray, axis: int) -> np.ndarray:
    out = np.zeros_like(s)
    if axis == 0:
        out[1:, :] = s[1:, :]
        out[:-1, :] -= s[1:, :]
    else:
        out[:, 1:] = s[:, 1:]
        out[:, :-1] -= s[:, 1:]
    return out


def sym_grad_arrays(w1, w2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    e11 = _diff_center(w1, 0)
    e22 = _diff_center(w2, 1)
    e12 = 0.5 * (_diff_back(w1, 1) + _diff_back(w2, 0))
    return e11, e22, e12


def div2_arrays(t11, t22, t12) -> tuple[np.ndarray, np.ndarray]:
    # exact negative adjoint of sym_grad under the weight-2 tensor pairing
    v1 = -(_diff_center_t(t11, 0) + _diff_back_t(t12, 1))
    v2 = -(_diff_center_t(t22, 1) + _diff_back_t(t12, 0))
    return v1, v2


# ---------------------------------------------------------------------------
# field-level API


def grad(u: GridField) -> VecField:
    g1, g2 = grad_arrays(u.values)
    return VecField(g1, g2)


def div(z: VecField) -> GridField:
    return GridField(div_arrays(z.d1, z.d2))


def sym_grad(w: VecField) -> SymTensorField:
    return SymTensorField(*sym_grad_arrays(w.d1, w.d2))


def div2(t: SymTensorField) -> VecField:
    return VecField(*div2_arrays(t.t11, t.t22, t.t12))


def neg_laplacian(u: GridField) -> GridField:
    """-div(grad(u)); positive semidefinite, annihilates constants."""
    g1, g2 = grad_arrays(u.values)
    return GridField(-div_arrays(g1, g2))


# ---------------------------------------------------------------------------
# dense debug paths (small grids only; every adjoint/eigen claim becomes
# mechanically checkable against these matrices)

_MAX_DENSE = 32 * 32


def _check_dense(shape):
    rows, cols = shape
    if rows * cols > _MAX_DENSE:
        raise ValueError(f"dense assembly limited to {_MAX_DENSE} sites, got {shape}")


def assemble_scalar_operator(shape, fn) -> np.ndarray:
    """Dense matrix of a GridField -> GridField linear map by basis probing."""
    _check_dense(shape)
    rows, cols = shape
    n = rows * cols
    mat = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        mat[:, k] = fn(GridField(e.reshape(shape))).values.ravel()
    return mat


def grad_matrix(shape) -> np.ndarray:
    """(2N x N) matrix of grad; rows stacked as [g1; g2]."""
    _check_dense(shape)
    rows, cols = shape
    n = rows * cols
    mat = np.zeros((2 * n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        g1, g2 = grad_arrays(e.reshape(shape))
        mat[:n, k] = g1.ravel()
        mat[n:, k] = g2.ravel()
    return mat


def div_matrix(shape) -> np.ndarray:
    """(N x 2N) matrix of div acting on stacked [z1; z2]."""
    _check_dense(shape)
    rows, cols = shape
    n = rows * cols
    mat = np.zeros((n, 2 * n))
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = 1.0
        mat[:, k] = div_arrays(
            e[:n].reshape(shape), e[n:].reshape(shape)
        ).ravel()
    return mat


def sym_grad_matrix(shape) -> np.ndarray:
    """(3N x 2N) matrix of sym_grad; rows stacked as [t11; t22; t12]."""
    _check_dense(shape)
    rows, cols = shape
    n = rows * cols
    mat = np.zeros((3 * n, 2 * n))
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = 1.0
        e11, e22, e12 = sym_grad_arrays(e[:n].reshape(shape), e[n:].reshape(shape))
        mat[:, k] = np.concatenate([e11.ravel(), e22.ravel(), e12.ravel()])
    return mat


def div2_matrix(shape) -> np.ndarray:
    """(2N x 3N) matrix of div2 acting on stacked [t11; t22; t12]."""
    _check_dense(shape)
    rows, cols = shape
    n = rows * cols
    mat = np.zeros((2 * n, 3 * n))
    for k in range(3 * n):
        e = np.zeros(3 * n)
        e[k] = 1.0
        v1, v2 = div2_arrays(
            e[:n].reshape(shape),
            e[n : 2 * n].reshape(shape),
            e[2 * n :].reshape(shape),
        )
        mat[:, k] = np.concatenate([v1.ravel(), v2.ravel()])
    return mat


def neg_laplacian_matrix(shape) -> np.ndarray:
    return assemble_scalar_operator(shape, neg_laplacian)
