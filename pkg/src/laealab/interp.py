"""Bicubic (cubic-convolution) interpolation of nodal fields.

Keys' kernel with a = -1/2 is third-order accurate and C^1; its derivative
supplies the Jacobians needed by Newton inversion of flow maps.  Periodic
directions wrap; across channel walls the array is extended by two ghost rows
of cubic extrapolation so accuracy is preserved up to the boundary.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid


def _kernel(t: np.ndarray) -> np.ndarray:
    at = np.abs(t)
    out = np.zeros_like(at)
    m1 = at <= 1.0
    m2 = (at > 1.0) & (at < 2.0)
    out[m1] = (1.5 * at[m1] - 2.5) * at[m1] * at[m1] + 1.0
    out[m2] = ((-0.5 * at[m2] + 2.5) * at[m2] - 4.0) * at[m2] + 2.0
    return out


def _kernel_deriv(t: np.ndarray) -> np.ndarray:
    at = np.abs(t)
    s = np.sign(t)
    out = np.zeros_like(at)
    m1 = at <= 1.0
    m2 = (at > 1.0) & (at < 2.0)
    out[m1] = s[m1] * (4.5 * at[m1] - 5.0) * at[m1]
    out[m2] = s[m2] * ((-1.5 * at[m2] + 5.0) * at[m2] - 4.0)
    return out


def _extend_wall(F: np.ndarray) -> np.ndarray:
    """Two ghost rows of cubic extrapolation on each wall side (y axis)."""
    nx, ny = F.shape
    out = np.empty((nx, ny + 4))
    out[:, 2:-2] = F
    out[:, 1] = 4 * F[:, 0] - 6 * F[:, 1] + 4 * F[:, 2] - F[:, 3]
    out[:, 0] = 4 * out[:, 1] - 6 * F[:, 0] + 4 * F[:, 1] - F[:, 2]
    out[:, -2] = 4 * F[:, -1] - 6 * F[:, -2] + 4 * F[:, -3] - F[:, -4]
    out[:, -1] = 4 * out[:, -2] - 6 * F[:, -1] + 4 * F[:, -2] - F[:, -3]
    return out


class BicubicField:
    """Interpolant of one nodal (nx, ny) array on a Grid."""

    def __init__(self, grid: Grid, values: np.ndarray):
        self.grid = grid
        if grid.periodic_y:
            self.F = np.asarray(values, dtype=float)
            self.joff = 0
        else:
            self.F = _extend_wall(np.asarray(values, dtype=float))
            self.joff = 2

    def _locate(self, qx, qy):
        g = self.grid
        fx = qx / g.hx
        fy = qy / g.hy
        ix = np.floor(fx).astype(np.int64)
        iy = np.floor(fy).astype(np.int64)
        tx = fx - ix
        ty = fy - iy
        if not g.periodic_y:
            # clamp so the 4-point y-stencil stays inside the extended array
            iy = np.clip(iy, -1, g.ny - 1)
            ty = fy - iy
        return ix, iy, tx, ty

    def _gather(self, ix, iy):
        g = self.grid
        cols = []
        for b in range(-1, 3):
            jb = iy + b
            if g.periodic_y:
                jb = np.mod(jb, g.ny)
            else:
                jb = np.clip(jb + self.joff, 0, self.F.shape[1] - 1)
            rows = []
            for a in range(-1, 3):
                ia = np.mod(ix + a, g.nx)
                rows.append(self.F[ia, jb])
            cols.append(rows)
        return cols  # cols[b][a]

    def eval(self, qx, qy):
        ix, iy, tx, ty = self._locate(np.asarray(qx), np.asarray(qy))
        vals = self._gather(ix, iy)
        wx = [_kernel(tx - a) for a in range(-1, 3)]
        wy = [_kernel(ty - b) for b in range(-1, 3)]
        out = np.zeros_like(tx, dtype=float)
        for b in range(4):
            row = np.zeros_like(out)
            for a in range(4):
                row += wx[a] * vals[b][a]
            out += wy[b] * row
        return out

    def eval_with_grad(self, qx, qy):
        g = self.grid
        ix, iy, tx, ty = self._locate(np.asarray(qx), np.asarray(qy))
        vals = self._gather(ix, iy)
        wx = [_kernel(tx - a) for a in range(-1, 3)]
        wy = [_kernel(ty - b) for b in range(-1, 3)]
        dwx = [_kernel_deriv(tx - a) / g.hx for a in range(-1, 3)]
        dwy = [_kernel_deriv(ty - b) / g.hy for b in range(-1, 3)]
        out = np.zeros_like(tx, dtype=float)
        dx = np.zeros_like(out)
        dy = np.zeros_like(out)
        for b in range(4):
            row = np.zeros_like(out)
            drow = np.zeros_like(out)
            for a in range(4):
                row += wx[a] * vals[b][a]
                drow += dwx[a] * vals[b][a]
            out += wy[b] * row
            dx += wy[b] * drow
            dy += dwy[b] * row
        return out, dx, dy
