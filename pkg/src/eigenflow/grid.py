"""Value-semantic scalar/vector/tensor fields on regular 1D and 2D grids.

A 1D signal of length N is stored as an N x 1 grid so that every operator
has a single code path.  Grid spacing is 1 in both directions and all
inner products are plain sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"expected a 1D or 2D array, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("field contains NaN or Inf")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridField:
    """Real scalar field u on a rows x cols grid (cols = 1 for 1D)."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def is_1d(self) -> bool:
        return self.cols == 1 or self.rows == 1

    @staticmethod
    def zeros(shape) -> "GridField":
        if isinstance(shape, int):
            shape = (shape, 1)
        return GridField(np.zeros(shape))

    def __add__(self, other: "GridField") -> "GridField":
        _check_same_shape(self, other)
        return GridField(self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        _check_same_shape(self, other)
        return GridField(self.values - other.values)

    def __mul__(self, c: float) -> "GridField":
        return GridField(self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "GridField":
        return GridField(self.values / float(c))

    def __neg__(self) -> "GridField":
        return GridField(-self.values)


@dataclass(frozen=True)
class VecField:
    """Per-site vector field (d1, d2); d2 is identically zero on 1D grids."""

    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d1", _freeze(self.d1))
        object.__setattr__(self, "d2", _freeze(self.d2))
        if self.d1.shape != self.d2.shape:
            raise ShapeMismatchError("vector components differ in shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.d1.shape

    @staticmethod
    def zeros(shape) -> "VecField":
        return VecField(np.zeros(shape), np.zeros(shape))


@dataclass(frozen=True)
class SymTensorField:
    """Symmetric 2-tensor field; t12 stored once (symmetry is structural)."""

    t11: np.ndarray
    t22: np.ndarray
    t12: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t11", _freeze(self.t11))
        object.__setattr__(self, "t22", _freeze(self.t22))
        object.__setattr__(self, "t12", _freeze(self.t12))
        if not (self.t11.shape == self.t22.shape == self.t12.shape):
            raise ShapeMismatchError("tensor components differ in shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.t11.shape

    @staticmethod
    def zeros(shape) -> "SymTensorField":
        z = np.zeros(shape)
        return SymTensorField(z, z.copy(), z.copy())


def _check_same_shape(u, v):
    if u.shape != v.shape:
        raise ShapeMismatchError(f"shape mismatch: {u.shape} vs {v.shape}")


def inner(u: GridField, v: GridField) -> float:
    """<u, v> = sum_i u_i v_i."""
    _check_same_shape(u, v)
    return float(np.sum(u.values * v.values))


def norm(u: GridField) -> float:
    """||u|| = sqrt(<u, u>)."""
    return float(np.sqrt(np.sum(u.values * u.values)))


def vec_inner(a: VecField, b: VecField) -> float:
    _check_same_shape(a, b)
    return float(np.sum(a.d1 * b.d1) + np.sum(a.d2 * b.d2))


def vec_norm(a: VecField) -> float:
    return float(np.sqrt(vec_inner(a, a)))


def tensor_inner(s: SymTensorField, t: SymTensorField) -> float:
    # Frobenius pairing; the off-diagonal entry counts twice.
    _check_same_shape(s, t)
    return float(
        np.sum(s.t11 * t.t11) + np.sum(s.t22 * t.t22) + 2.0 * np.sum(s.t12 * t.t12)
    )


def tensor_norm(s: SymTensorField) -> float:
    return float(np.sqrt(tensor_inner(s, s)))


def _null_basis(shape: tuple[int, int], kind_name: str) -> np.ndarray:
    """Columns spanning the null space: {1} for TV, affine {1, x, y} for TGV2."""
    rows, cols = shape
    n = rows * cols
    ones = np.ones(n)
    if kind_name == "tv":
        return ones[:, None]
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    basis = [ones]
    if rows > 1:
        basis.append(ii.ravel().astype(np.float64))
    if cols > 1:
        basis.append(jj.ravel().astype(np.float64))
    return np.stack(basis, axis=1)


def null_project(f: GridField, kind) -> GridField:
    """Remove the null-space component of f for the given functional.

    TV: subtracts the mean so <f, 1> = 0.  TGV2: subtracts the least-squares
    affine fit over {1, x, y}.  The result is orthogonal to the null-space
    basis and the projection is idempotent.
    """
    kind_name = getattr(kind, "name", kind)
    if kind_name not in ("tv", "tgv2"):
        raise ValueError(f"unknown functional kind {kind_name!r}")
    basis = _null_basis(f.shape, kind_name)
    flat = f.values.ravel()
    coef, *_ = np.linalg.lstsq(basis, flat, rcond=None)
    return GridField((flat - basis @ coef).reshape(f.shape))
