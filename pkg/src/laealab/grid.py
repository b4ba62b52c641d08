"""Uniform structured grids on the flat chart of a 2-D torus or channel.

Two domain kinds are supported:

* torus:   periodic in x and y, nodes x_i = i*hx (i < nx), y_j = j*hy (j < ny),
           hx = Lx/nx, hy = Ly/ny.
* channel: periodic in x, walls at y = 0 and y = Ly, hy = Ly/(ny-1) with the
           wall nodes included.

All differentiation goes through two cached sparse matrices DX, DY acting on
flattened (nx, ny) node arrays (C order).  Interior rows are centered
second-order stencils; wall rows of DY use a one-sided 4-point stencil (third
order) so that composed second derivatives stay second-order accurate up to
the walls.  Quadrature is the rectangle rule in periodic directions and the
trapezoid rule across the channel.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def _d1_periodic(n: int, h: float) -> sp.csr_matrix:
    main = np.zeros(n)
    up = np.full(n, 1.0 / (2.0 * h))
    lo = np.full(n, -1.0 / (2.0 * h))
    d = sp.diags([lo, main, up], offsets=[-1, 0, 1], shape=(n, n), format="lil")
    d[0, n - 1] = -1.0 / (2.0 * h)
    d[n - 1, 0] = 1.0 / (2.0 * h)
    return d.tocsr()


def _d1_wall(n: int, h: float) -> sp.csr_matrix:
    """Centered differences inside, 4-point one-sided rows at both walls.

    The wall closure (-2, 7/2, -2, 1/2)/h is chosen so its truncation error
    +h^2/6 f''' matches the interior centered stencil; the error profile then
    stays smooth across the wall and composed second derivatives remain
    second-order accurate up to the boundary.
    """
    d = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        d[i, i - 1] = -1.0 / (2.0 * h)
        d[i, i + 1] = 1.0 / (2.0 * h)
    c = np.array([-2.0, 3.5, -2.0, 0.5]) / h
    d[0, 0:4] = c
    d[n - 1, n - 4:n] = -c[::-1]
    return d.tocsr()


class Grid:
    """Node coordinates, sparse derivative operators and quadrature weights."""

    def __init__(self, nx: int, ny: int, Lx: float, Ly: float, periodic_y: bool):
        if nx < 8 or ny < 8:
            raise ValueError(f"need nx, ny >= 8 (got {nx}, {ny})")
        self.nx, self.ny = nx, ny
        self.Lx, self.Ly = float(Lx), float(Ly)
        self.periodic_x = True
        self.periodic_y = periodic_y
        self.hx = self.Lx / nx
        self.hy = self.Ly / ny if periodic_y else self.Ly / (ny - 1)
        self.x = self.hx * np.arange(nx)
        self.y = self.hy * np.arange(ny)
        self.X, self.Y = np.meshgrid(self.x, self.y, indexing="ij")

        dx1 = _d1_periodic(nx, self.hx)
        dy1 = _d1_periodic(ny, self.hy) if periodic_y else _d1_wall(ny, self.hy)
        self.DX = sp.kron(dx1, sp.identity(ny), format="csr")
        self.DY = sp.kron(sp.identity(nx), dy1, format="csr")

        wx = np.full(nx, self.hx)
        if periodic_y:
            wy = np.full(ny, self.hy)
        else:
            wy = np.full(ny, self.hy)
            wy[0] = wy[-1] = 0.5 * self.hy
        self.wx, self.wy = wx, wy
        self.weights = np.outer(wx, wy)

    # -- derivative application on (nx, ny) arrays ---------------------------

    def ddx(self, a: np.ndarray) -> np.ndarray:
        return (self.DX @ a.ravel()).reshape(self.nx, self.ny)

    def ddy(self, a: np.ndarray) -> np.ndarray:
        return (self.DY @ a.ravel()).reshape(self.nx, self.ny)

    # -- helpers -------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    def wall_flat_indices(self, wall: str) -> np.ndarray:
        """Flat node indices of a wall row ('y0' or 'yL'), channel only."""
        if self.periodic_y:
            raise ValueError("torus grid has no walls")
        j = 0 if wall == "y0" else self.ny - 1
        return np.arange(self.nx) * self.ny + j

    def integrate(self, f: np.ndarray) -> float:
        """Quadrature of a nodal scalar against the coordinate area element."""
        return float(np.sum(self.weights * f))

    def __repr__(self) -> str:
        kind = "torus" if self.periodic_y else "channel"
        return f"Grid({kind} {self.nx}x{self.ny}, Lx={self.Lx}, Ly={self.Ly})"
