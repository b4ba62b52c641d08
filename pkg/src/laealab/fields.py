"""Grid-sampled fields and their linear-operator twins.

``ScalarField`` wraps an (nx, ny) array of binary64 node values.  ``OpScalar``
wraps a sparse matrix mapping some fixed vector of unknowns to the node values
of a scalar, so that any expression built from +, -, scaling by coefficient
arrays, d/dx and d/dy can be evaluated either pointwise (ScalarField) or
assembled into a sparse operator (OpScalar) from the same source line.  Both
use the grid's DX/DY matrices, so the two evaluation paths agree to the last
bit.

``VectorField`` holds contravariant components (u1, u2); ``Tensor11Field``
holds mixed components T[i][j] = T^i_j.  The containers are generic over the
scalar backend.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import Grid


class ScalarField:
    __slots__ = ("grid", "data")

    def __init__(self, grid: Grid, data: np.ndarray):
        data = np.asarray(data, dtype=np.float64)
        if data.shape != (grid.nx, grid.ny):
            raise ValueError(f"shape {data.shape} != grid {(grid.nx, grid.ny)}")
        self.grid = grid
        self.data = data

    def dx(self) -> "ScalarField":
        return ScalarField(self.grid, self.grid.ddx(self.data))

    def dy(self) -> "ScalarField":
        return ScalarField(self.grid, self.grid.ddy(self.data))

    def __add__(self, other):
        return ScalarField(self.grid, self.data + _raw(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.data - _raw(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.data)

    def __mul__(self, w):
        return ScalarField(self.grid, self.data * _raw(w))

    __rmul__ = __mul__

    def linf(self) -> float:
        return float(np.max(np.abs(self.data)))


class OpScalar:
    """A scalar-valued linear map of the unknown vector, as a sparse matrix."""

    __slots__ = ("grid", "mat")

    def __init__(self, grid: Grid, mat):
        self.grid = grid
        self.mat = mat.tocsr() if not sp.issparse(mat) or mat.format != "csr" else mat

    def dx(self) -> "OpScalar":
        return OpScalar(self.grid, self.grid.DX @ self.mat)

    def dy(self) -> "OpScalar":
        return OpScalar(self.grid, self.grid.DY @ self.mat)

    def __add__(self, other):
        return OpScalar(self.grid, self.mat + other.mat)

    def __sub__(self, other):
        return OpScalar(self.grid, self.mat - other.mat)

    def __neg__(self):
        return OpScalar(self.grid, -self.mat)

    def __mul__(self, w):
        if isinstance(w, OpScalar):
            raise TypeError("product of two operator scalars is not linear")
        w = _raw(w)
        if np.isscalar(w) or np.ndim(w) == 0:
            return OpScalar(self.grid, float(w) * self.mat)
        return OpScalar(self.grid, sp.diags(np.asarray(w).ravel()) @ self.mat)

    __rmul__ = __mul__


def _raw(v):
    if isinstance(v, ScalarField):
        return v.data
    return v


def zero_like(s):
    if isinstance(s, ScalarField):
        return ScalarField(s.grid, np.zeros((s.grid.nx, s.grid.ny)))
    return OpScalar(s.grid, sp.csr_matrix(s.mat.shape))


class VectorField:
    __slots__ = ("grid", "c1", "c2")

    def __init__(self, grid: Grid, c1, c2):
        self.grid = grid
        self.c1 = c1
        self.c2 = c2

    @classmethod
    def from_arrays(cls, grid: Grid, a1: np.ndarray, a2: np.ndarray) -> "VectorField":
        return cls(grid, ScalarField(grid, a1), ScalarField(grid, a2))

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        z = np.zeros((grid.nx, grid.ny))
        return cls.from_arrays(grid, z, z.copy())

    def comps(self):
        return (self.c1, self.c2)

    def arrays(self):
        return (self.c1.data, self.c2.data)

    def flat(self) -> np.ndarray:
        """Stacked DOF vector (u1 nodes, then u2 nodes)."""
        return np.concatenate([self.c1.data.ravel(), self.c2.data.ravel()])

    @classmethod
    def from_flat(cls, grid: Grid, v: np.ndarray) -> "VectorField":
        n = grid.n_nodes
        return cls.from_arrays(grid, v[:n].reshape(grid.nx, grid.ny),
                               v[n:].reshape(grid.nx, grid.ny))

    def __add__(self, other):
        return VectorField(self.grid, self.c1 + other.c1, self.c2 + other.c2)

    def __sub__(self, other):
        return VectorField(self.grid, self.c1 - other.c1, self.c2 - other.c2)

    def __neg__(self):
        return VectorField(self.grid, -self.c1, -self.c2)

    def __mul__(self, w):
        return VectorField(self.grid, self.c1 * w, self.c2 * w)

    __rmul__ = __mul__

    def linf(self) -> float:
        return max(self.c1.linf(), self.c2.linf())

    def copy(self) -> "VectorField":
        return VectorField.from_arrays(self.grid, self.c1.data.copy(), self.c2.data.copy())


class Tensor11Field:
    """Mixed (1,1)-tensor with components t[i][j] = T^i_j."""

    __slots__ = ("grid", "t")

    def __init__(self, grid: Grid, t11, t12, t21, t22):
        self.grid = grid
        self.t = ((t11, t12), (t21, t22))

    def __getitem__(self, ij):
        i, j = ij
        return self.t[i][j]

    def apply(self, v: VectorField) -> VectorField:
        """T(v), components T^i_j v^j."""
        return VectorField(self.grid,
                           self.t[0][0] * v.c1 + self.t[0][1] * v.c2,
                           self.t[1][0] * v.c1 + self.t[1][1] * v.c2)

    def matmul(self, other: "Tensor11Field") -> "Tensor11Field":
        """Composition (self . other)^i_j = self^i_k other^k_j."""
        a, b = self.t, other.t
        return Tensor11Field(
            self.grid,
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )

    def __add__(self, other):
        a, b = self.t, other.t
        return Tensor11Field(self.grid, a[0][0] + b[0][0], a[0][1] + b[0][1],
                             a[1][0] + b[1][0], a[1][1] + b[1][1])

    def __sub__(self, other):
        a, b = self.t, other.t
        return Tensor11Field(self.grid, a[0][0] - b[0][0], a[0][1] - b[0][1],
                             a[1][0] - b[1][0], a[1][1] - b[1][1])

    def __mul__(self, w):
        a = self.t
        return Tensor11Field(self.grid, a[0][0] * w, a[0][1] * w, a[1][0] * w, a[1][1] * w)

    __rmul__ = __mul__

    def trace(self):
        return self.t[0][0] + self.t[1][1]


def op_vector_unknown(grid: Grid) -> VectorField:
    """The identity vector field over stacked (u1, u2) unknowns, OpScalar-backed.

    Feeding this through any linear combination of calculus operators yields
    the assembled sparse matrix of that operator.
    """
    n = grid.n_nodes
    eye = sp.identity(n, format="csr")
    z = sp.csr_matrix((n, n))
    e1 = OpScalar(grid, sp.hstack([eye, z], format="csr"))
    e2 = OpScalar(grid, sp.hstack([z, eye], format="csr"))
    return VectorField(grid, e1, e2)
