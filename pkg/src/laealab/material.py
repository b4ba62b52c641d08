"""Material (Lagrangian) side: flow maps, the geodesic spray, the connector
contraction, and the two-path commutative-diagram check.

A material state is a flow map eta (nodal positions, stored as a continuous
lift in periodic directions) together with the material velocity V = d/dt eta
sampled at the material labels.  The spatial velocity is recovered by right
translation u = V o eta^{-1} (per-node Newton inversion of the interpolated
map) and the spray is integrated in the equivalent kinematic form

    d/dt eta = V
    d/dt V   = (d_t u + grad_u u) o eta  -  Gamma_{eta}(V, V)

where d_t u is the spatial right-hand side and the chart Christoffel term
converts the covariant material acceleration to coordinates.  Volume
preservation det(D eta) e^{2 phi(eta)} / e^{2 phi} = 1 is the invertibility
and mu-preservation witness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calculus as ca
from .dynamics import LaeProblem, State, integrate
from .elliptic import BcRegime, EllipticOperator, StokesProjector
from .fields import VectorField
from .interp import BicubicField


class InversionError(RuntimeError):
    pass


@dataclass
class FlowMap:
    """Nodal positions of the map, lifted continuously in periodic directions."""

    grid: object
    e1: np.ndarray       # eta^1(q) at label nodes
    e2: np.ndarray
    inv_seed: np.ndarray | None = None   # cached (2, nx, ny) inverse labels

    @classmethod
    def identity(cls, grid) -> "FlowMap":
        return cls(grid, grid.X.copy(), grid.Y.copy())

    def copy(self) -> "FlowMap":
        seed = None if self.inv_seed is None else self.inv_seed.copy()
        return FlowMap(self.grid, self.e1.copy(), self.e2.copy(), seed)

    def displacement(self):
        return self.e1 - self.grid.X, self.e2 - self.grid.Y

    def jacobian(self):
        """Nodal D eta by stencils; the lift keeps displacements periodic."""
        g = self.grid
        d1, d2 = self.displacement()
        j11 = 1.0 + g.ddx(d1)
        j12 = g.ddy(d1)
        j21 = g.ddx(d2)
        j22 = 1.0 + g.ddy(d2)
        return j11, j12, j21, j22

    def jacobian_determinant(self) -> np.ndarray:
        j11, j12, j21, j22 = self.jacobian()
        return j11 * j22 - j12 * j21

    def check_invertible(self):
        det = self.jacobian_determinant()
        if np.min(det) <= 0:
            raise InversionError(
                f"orientation lost: min det(D eta) = {np.min(det):.3e}")


@dataclass
class MaterialState:
    eta: FlowMap
    V: VectorField
    t: float = 0.0


def volume_distortion(metric, ms: MaterialState) -> float:
    """max |det(D eta) e^{2 phi(eta)} / e^{2 phi} - 1| over nodes."""
    det = ms.eta.jacobian_determinant()
    phi_itp = BicubicField(metric.grid, metric.phi)
    g = metric.grid
    qx = np.mod(ms.eta.e1, g.Lx)
    qy = np.mod(ms.eta.e2, g.Ly) if g.periodic_y else np.clip(ms.eta.e2, 0.0, g.Ly)
    phi_at = phi_itp.eval(qx, qy)
    ratio = det * np.exp(2.0 * phi_at) / metric.e2phi
    return float(np.max(np.abs(ratio - 1.0)))


# ---------------------------------------------------------------------------
# right translation to the identity
# ---------------------------------------------------------------------------

def _invert_map(eta: FlowMap, newton_tol: float = 1e-12,
                max_iter: int = 60) -> np.ndarray:
    """Labels q with eta(q) = x for every grid node x, by Newton iteration."""
    g = eta.grid
    d1, d2 = eta.displacement()
    i1 = BicubicField(g, d1)
    i2 = BicubicField(g, d2)
    if eta.inv_seed is not None:
        qx, qy = eta.inv_seed[0].copy(), eta.inv_seed[1].copy()
    else:
        qx, qy = g.X.copy(), g.Y.copy()

    def wrap_x(r):
        return (r + 0.5 * g.Lx) % g.Lx - 0.5 * g.Lx

    def wrap_y(r):
        if g.periodic_y:
            return (r + 0.5 * g.Ly) % g.Ly - 0.5 * g.Ly
        return r

    worst = np.inf
    for _ in range(max_iter):
        v1, a11, a12 = i1.eval_with_grad(np.mod(qx, g.Lx),
                                         np.mod(qy, g.Ly) if g.periodic_y else qy)
        v2, a21, a22 = i2.eval_with_grad(np.mod(qx, g.Lx),
                                         np.mod(qy, g.Ly) if g.periodic_y else qy)
        r1 = wrap_x(qx + v1 - g.X)
        r2 = wrap_y(qy + v2 - g.Y)
        worst = max(np.max(np.abs(r1)), np.max(np.abs(r2)))
        if worst < newton_tol:
            break
        j11 = 1.0 + a11
        j12 = a12
        j21 = a21
        j22 = 1.0 + a22
        det = j11 * j22 - j12 * j21
        if np.min(np.abs(det)) < 1e-13:
            raise InversionError("Newton Jacobian degenerate")
        qx = qx - (j22 * r1 - j12 * r2) / det
        qy = qy - (-j21 * r1 + j11 * r2) / det
        if not g.periodic_y:
            qy = np.clip(qy, 0.0, g.Ly)
    else:
        bad = np.unravel_index(np.argmax(np.abs(r1) + np.abs(r2)), r1.shape)
        raise InversionError(
            f"map inversion stalled at node {bad}, residual {worst:.3e}")
    eta.inv_seed = np.stack([qx, qy])
    return eta.inv_seed


def pi_r(ms: MaterialState, newton_tol: float = 1e-12) -> VectorField:
    """Spatial velocity u = V o eta^{-1} on the grid nodes."""
    g = ms.eta.grid
    ms.eta.check_invertible()
    q = _invert_map(ms.eta, newton_tol)
    qx = np.mod(q[0], g.Lx)
    qy = np.mod(q[1], g.Ly) if g.periodic_y else q[1]
    u1 = BicubicField(g, ms.V.c1.data).eval(qx, qy)
    u2 = BicubicField(g, ms.V.c2.data).eval(qx, qy)
    if not g.periodic_y:
        u2[:, 0] = 0.0
        u2[:, -1] = 0.0
    return VectorField.from_arrays(g, u1, u2)


def compose_with_map(field: VectorField, eta: FlowMap) -> VectorField:
    """Right translation w o eta by interpolation at the mapped positions."""
    g = eta.grid
    qx = np.mod(eta.e1, g.Lx)
    qy = np.mod(eta.e2, g.Ly) if g.periodic_y else np.clip(eta.e2, 0.0, g.Ly)
    w1 = BicubicField(g, field.c1.data).eval(qx, qy)
    w2 = BicubicField(g, field.c2.data).eval(qx, qy)
    return VectorField.from_arrays(g, w1, w2)


# ---------------------------------------------------------------------------
# geodesic spray
# ---------------------------------------------------------------------------

def _material_acceleration(problem: LaeProblem, ms: MaterialState) -> VectorField:
    """(d_t u + grad_u u) o eta - Gamma_eta(V, V)."""
    geo = problem.geo
    m = geo.metric
    u = pi_r(ms, newton_tol=getattr(problem, "newton_tol", 1e-12))
    acc = problem.rhs(u) + ca.nabla_along(m, u, u)
    acc_at = compose_with_map(acc, ms.eta)
    g = geo.grid
    qx = np.mod(ms.eta.e1, g.Lx)
    qy = np.mod(ms.eta.e2, g.Ly) if g.periodic_y else np.clip(ms.eta.e2, 0.0, g.Ly)
    v1, v2 = ms.V.arrays()
    chris = np.zeros((2, g.nx, g.ny))
    if not m.is_flat:
        for k in range(2):
            g00 = BicubicField(g, m.gamma[k, 0, 0]).eval(qx, qy)
            g01 = BicubicField(g, m.gamma[k, 0, 1]).eval(qx, qy)
            g11 = BicubicField(g, m.gamma[k, 1, 1]).eval(qx, qy)
            chris[k] = g00 * v1 * v1 + 2.0 * g01 * v1 * v2 + g11 * v2 * v2
    return VectorField.from_arrays(g, acc_at.c1.data - chris[0],
                                   acc_at.c2.data - chris[1])


def spray_advance(problem: LaeProblem, ms: MaterialState) -> MaterialState:
    """One RK4 step of (d/dt eta, d/dt V) = (V, spray acceleration)."""
    dt = problem.cfg.dt
    seed = None if ms.eta.inv_seed is None else ms.eta.inv_seed.copy()

    def shifted(e1, e2, V):
        fm = FlowMap(problem.geo.grid, e1, e2, None if seed is None else seed.copy())
        return MaterialState(fm, V, ms.t)

    def rhs(state: MaterialState):
        a = _material_acceleration(problem, state)
        return state.V, a

    e1, e2 = ms.eta.e1, ms.eta.e2
    k1v, k1a = rhs(ms)
    s2 = shifted(e1 + 0.5 * dt * k1v.c1.data, e2 + 0.5 * dt * k1v.c2.data,
                 ms.V + k1a * (0.5 * dt))
    k2v, k2a = rhs(s2)
    s3 = shifted(e1 + 0.5 * dt * k2v.c1.data, e2 + 0.5 * dt * k2v.c2.data,
                 ms.V + k2a * (0.5 * dt))
    k3v, k3a = rhs(s3)
    s4 = shifted(e1 + dt * k3v.c1.data, e2 + dt * k3v.c2.data, ms.V + k3a * dt)
    k4v, k4a = rhs(s4)

    new_e1 = e1 + dt / 6.0 * (k1v.c1.data + 2 * (k2v.c1.data + k3v.c1.data) + k4v.c1.data)
    new_e2 = e2 + dt / 6.0 * (k1v.c2.data + 2 * (k2v.c2.data + k3v.c2.data) + k4v.c2.data)
    new_V = ms.V + (k1a + (k2a + k3a) * 2.0 + k4a) * (dt / 6.0)
    fm = FlowMap(problem.geo.grid, new_e1, new_e2,
                 None if seed is None else seed.copy())
    fm.check_invertible()
    return MaterialState(fm, new_V, ms.t + dt)


# ---------------------------------------------------------------------------
# connector contraction
# ---------------------------------------------------------------------------

def connector_contract(m, op: EllipticOperator, sp: StokesProjector,
                       u: VectorField, v: VectorField, bc: BcRegime) -> VectorField:
    """K(Tu o v) = P(grad_v u + FF(u,v)), with the La composite on the
    transport term for free-slip and mixed regimes."""
    from .dynamics import frak_f_alpha
    adv = ca.nabla_along(m, v, u)
    if bc.uses_l_alpha_transport:
        adv = op.solve(op.apply(adv), bc)
    return sp.project(adv + frak_f_alpha(m, op, u, v, bc))


# ---------------------------------------------------------------------------
# commutative-diagram verification
# ---------------------------------------------------------------------------

def commute_check(problem: LaeProblem, u0: VectorField, t: float) -> dict:
    """Evolve spatially and materially from u0 and compare at time t."""
    spatial = integrate(problem, State(u0.copy(), 0.0), t)
    nsteps = int(round(t / problem.cfg.dt))
    ms = MaterialState(FlowMap.identity(problem.geo.grid), u0.copy(), 0.0)
    for _ in range(nsteps):
        ms = spray_advance(problem, ms)
    u_material = pi_r(ms, newton_tol=getattr(problem, "newton_tol", 1e-12))
    scale = max(u0.linf(), 1e-300)
    disc = (spatial.u - u_material).linf() / scale
    return {
        "discrepancy": disc,
        "u_spatial": spatial.u,
        "u_material": u_material,
        "volume_error": volume_distortion(problem.geo.metric, ms),
        "state": ms,
    }
