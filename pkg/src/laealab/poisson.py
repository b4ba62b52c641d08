"""Lie-Poisson structure on the discrete constrained velocity space.

The bracket on functionals of a divergence-free, boundary-respecting field is

    {f, g}(u) = < u, [dg(u), df(u)] >_1

with df the H^1 functional derivative.  Observables form a closed catalog
(linear, quadratic with self-adjoint kernels, the Hamiltonian, and products)
so that df and its derivative Ddf are available in closed form; that is what
the derivative-of-bracket formula, the Jacobi residual and the flow checks
need.  The material-side functional derivatives (vertical and horizontal) and
the Poisson-map checks for the right translation and for the flows live here
as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp_

from . import calculus as ca
from . import dynamics as dy
from . import material as mt
from .elliptic import BcRegime, EllipticOperator, StokesProjector
from .fields import VectorField, op_vector_unknown
from .geometry import Geometry


class PoissonContext:
    """Geometry, regime, alpha and factorized solvers for bracket work."""

    def __init__(self, geo: Geometry, alpha: float, bc: BcRegime):
        self.geo = geo
        self.alpha = float(alpha)
        self.bc = bc
        self.op = EllipticOperator(geo, alpha)
        self.sp = StokesProjector(self.op, bc)
        self._gram = None

    @property
    def metric(self):
        return self.geo.metric

    def inner1(self, u, v):
        return ca.inner1(self.metric, self.alpha, u, v)

    def gram_matrix(self):
        """Sparse matrix W with u^T W v = <u, v>_1 (same stencils)."""
        if self._gram is None:
            grid, m = self.geo.grid, self.metric
            n = grid.n_nodes
            uop = op_vector_unknown(grid)
            q0 = (m.quad_mu() * m.e2phi).ravel()
            W = sp_.block_diag([sp_.diags(q0), sp_.diags(q0)]).tocsr()
            if self.alpha != 0.0:
                D = ca.def_tensor(m, uop)
                qbar = (m.quad_mu()).ravel()
                for i in range(2):
                    for j in range(2):
                        B = D[i, j].mat
                        W = W + 2 * self.alpha**2 * (B.T @ sp_.diags(qbar) @ B)
            self._gram = W.tocsr()
        return self._gram


# ---------------------------------------------------------------------------
# observable catalog
# ---------------------------------------------------------------------------

class Observable:
    """Functional with closed-form value, derivative and second derivative."""

    def value(self, u: VectorField) -> float:
        raise NotImplementedError

    def diff(self, u: VectorField) -> VectorField:
        raise NotImplementedError

    def ddiff(self, u: VectorField, v: VectorField) -> VectorField:
        raise NotImplementedError


class LinearObservable(Observable):
    """f(u) = <w, u>_1 with w pre-projected into the constrained space."""

    def __init__(self, ctx: PoissonContext, w: VectorField):
        self.ctx = ctx
        self.w = ctx.sp.project(w)

    def value(self, u):
        return self.ctx.inner1(self.w, u)

    def diff(self, u):
        return self.w

    def ddiff(self, u, v):
        return VectorField.zeros(u.grid)


class QuadraticObservable(Observable):
    """f(u) = (1/2) <A u, u>_1 for a self-adjoint smoothing kernel A.

    kind 'smooth' uses A = P (1 - a^2 Lop)^{-1}; kind 'cutoff' composes a
    fixed multiplication field chi before the smoothing, A = P (1-a^2 Lop)^{-1}
    M_chi, which is H^1-self-adjoint because <A u, v>_1 = <chi u, v>_0.
    """

    def __init__(self, ctx: PoissonContext, kind: str = "smooth",
                 chi: np.ndarray | None = None):
        self.ctx = ctx
        self.kind = kind
        if kind == "cutoff":
            if chi is None:
                g = ctx.geo.grid
                chi = 1.0 + 0.5 * np.sin(2 * np.pi * g.X / g.Lx) \
                    * np.sin(np.pi * g.Y / g.Ly)
            self.chi = np.asarray(chi)
        elif kind != "smooth":
            raise ValueError(kind)

    def apply_kernel(self, u: VectorField) -> VectorField:
        ctx = self.ctx
        if self.kind == "cutoff":
            u = VectorField(u.grid, u.c1 * self.chi, u.c2 * self.chi)
        if ctx.alpha == 0.0:
            return ctx.sp.project(u)
        return ctx.sp.project(ctx.op.solve(u, ctx.bc))

    def value(self, u):
        return 0.5 * self.ctx.inner1(self.apply_kernel(u), u)

    def diff(self, u):
        return self.apply_kernel(u)

    def ddiff(self, u, v):
        return self.apply_kernel(v)


class HamiltonianObservable(Observable):
    """h(u) = (1/2) <u, u>_1, with dh(u) = u."""

    def __init__(self, ctx: PoissonContext):
        self.ctx = ctx

    def value(self, u):
        return 0.5 * self.ctx.inner1(u, u)

    def diff(self, u):
        return u

    def ddiff(self, u, v):
        return v


class ProductObservable(Observable):
    def __init__(self, ctx: PoissonContext, f: Observable, g: Observable):
        self.ctx = ctx
        self.f = f
        self.g = g

    def value(self, u):
        return self.f.value(u) * self.g.value(u)

    def diff(self, u):
        return self.f.diff(u) * self.g.value(u) + self.g.diff(u) * self.f.value(u)

    def ddiff(self, u, v):
        ctx = self.ctx
        return (self.f.ddiff(u, v) * self.g.value(u)
                + self.f.diff(u) * ctx.inner1(self.g.diff(u), v)
                + self.g.diff(u) * ctx.inner1(self.f.diff(u), v)
                + self.g.ddiff(u, v) * self.f.value(u))


def functional_derivative(f: Observable, u: VectorField) -> VectorField:
    return f.diff(u)


# ---------------------------------------------------------------------------
# bracket and its functional derivative
# ---------------------------------------------------------------------------

def bracket(ctx: PoissonContext, f: Observable, g: Observable,
            u: VectorField) -> float:
    """{f, g}(u) = <u, [dg(u), df(u)]>_1."""
    lie = ca.jacobi_lie_bracket(ctx.metric, g.diff(u), f.diff(u),
                                form="coordinate")
    return ctx.inner1(u, lie)


def _transported_argument(ctx: PoissonContext, df: VectorField,
                          u: VectorField) -> VectorField:
    """P(T grad_{df} u + Dop(df, u)) + Bop(u, df), T per regime."""
    m = ctx.metric
    adv = ca.nabla_along(m, df, u)
    if ctx.bc.uses_l_alpha_transport and ctx.alpha > 0:
        adv = ctx.op.solve(ctx.op.apply(adv), ctx.bc)
    part = ctx.sp.project(adv + dy.d_alpha(m, ctx.op, df, u, ctx.bc))
    return part + dy.b_alpha(m, ctx.op, ctx.sp, u, df, ctx.bc)


def delta_bracket(ctx: PoissonContext, f: Observable, g: Observable,
                  u: VectorField) -> VectorField:
    """Functional derivative of {f, g} at u, from the closed-form catalog."""
    m = ctx.metric
    df = f.diff(u)
    dg = g.diff(u)
    lead = ctx.sp.project(ca.nabla_along(m, dg, df) - ca.nabla_along(m, df, dg))
    arg_f = _transported_argument(ctx, df, u)
    arg_g = _transported_argument(ctx, dg, u)
    return lead + g.ddiff(u, arg_f) - f.ddiff(u, arg_g)


def _double_bracket(ctx: PoissonContext, a: Observable, b: Observable,
                    c: Observable, u: VectorField) -> float:
    """{a, {b, c}}(u) with the inner derivative taken in closed form."""
    inner_delta = delta_bracket(ctx, b, c, u)
    lie = ca.jacobi_lie_bracket(ctx.metric, inner_delta, a.diff(u),
                                form="coordinate")
    return ctx.inner1(u, lie)


def jacobi_residual(ctx: PoissonContext, f: Observable, g: Observable,
                    h: Observable, u: VectorField) -> float:
    """|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|(u), inner derivatives closed-form."""
    return abs(_double_bracket(ctx, f, g, h, u)
               + _double_bracket(ctx, g, h, f, u)
               + _double_bracket(ctx, h, f, g, u))


@dataclass
class BracketReport:
    """Value and residuals of the bracket axioms at one state and grid."""

    value: float
    antisymmetry_residual: float
    leibniz_residual: float
    jacobi_residual: float
    jacobi_scale: float
    nx: int
    ny: int
    h: float


def bracket_report(ctx: PoissonContext, f: Observable, g: Observable,
                   h: Observable, u: VectorField) -> BracketReport:
    value = bracket(ctx, f, g, u)
    anti = abs(value + bracket(ctx, g, f, u))
    fg = ProductObservable(ctx, f, g)
    leib = abs(bracket(ctx, fg, h, u)
               - bracket(ctx, f, h, u) * g.value(u)
               - f.value(u) * bracket(ctx, g, h, u))
    terms = (_double_bracket(ctx, f, g, h, u),
             _double_bracket(ctx, g, h, f, u),
             _double_bracket(ctx, h, f, g, u))
    jac = abs(sum(terms))
    scale = max(*(abs(t) for t in terms), 1e-300)
    grid = ctx.geo.grid
    return BracketReport(value, anti, leib, jac, scale, grid.nx, grid.ny, grid.h)


# ---------------------------------------------------------------------------
# Hamilton's equations along the flow
# ---------------------------------------------------------------------------

def hamilton_check(problem: dy.LaeProblem, ctx: PoissonContext, f: Observable,
                   u0: VectorField, t_end: float) -> dict:
    """Compare d/dt f(u(t)) with {f, h}(u(t)) along the integrated flow."""
    ham = HamiltonianObservable(ctx)
    states = []
    dy.integrate(problem, dy.State(u0.copy(), 0.0), t_end,
                 record=lambda s: states.append(s))
    dt = problem.cfg.dt
    devs = []
    scale = 0.0
    for k in range(1, len(states) - 1):
        dfdt = (f.value(states[k + 1].u) - f.value(states[k - 1].u)) / (2 * dt)
        br = bracket(ctx, f, ham, states[k].u)
        devs.append(abs(dfdt - br))
        scale = max(scale, abs(br), abs(dfdt))
    worst = max(devs) if devs else 0.0
    return {"deviation": worst, "scale": scale,
            "relative": worst / scale if scale > 0 else 0.0}


# ---------------------------------------------------------------------------
# material-side functional derivatives
# ---------------------------------------------------------------------------

def vertical_fd(ctx: PoissonContext, f: Observable,
                ms: mt.MaterialState) -> VectorField:
    """Vertical derivative of f o pi_R: right-translate df back to eta."""
    u = mt.pi_r(ms)
    return mt.compose_with_map(f.diff(u), ms.eta)


def horizontal_fd(ctx: PoissonContext, f: Observable,
                  ms: mt.MaterialState) -> VectorField:
    """Horizontal derivative of f o pi_R via the duality operators."""
    m = ctx.metric
    u = mt.pi_r(ms)
    df = f.diff(u)
    hor = (dy.b_alpha(m, ctx.op, ctx.sp, u, df, ctx.bc)
           - dy.b_alpha(m, ctx.op, ctx.sp, df, u, ctx.bc)
           + ctx.sp.project(dy.d_alpha(m, ctx.op, df, u, ctx.bc)
                            - dy.d_alpha(m, ctx.op, u, df, ctx.bc))) * 0.5
    return mt.compose_with_map(hor, ms.eta)


def pi_r_poisson_check(ctx: PoissonContext, f: Observable, g: Observable,
                       ms: mt.MaterialState) -> dict:
    """Both sides of the right-translation Poisson-map identity."""
    u = mt.pi_r(ms)

    def g1_pair(a_eta: VectorField, b_eta: VectorField) -> float:
        a = mt.pi_r(mt.MaterialState(ms.eta, a_eta))
        b = mt.pi_r(mt.MaterialState(ms.eta, b_eta))
        return ctx.inner1(a, b)

    lhs = (g1_pair(horizontal_fd(ctx, f, ms), vertical_fd(ctx, g, ms))
           - g1_pair(vertical_fd(ctx, f, ms), horizontal_fd(ctx, g, ms)))
    rhs = bracket(ctx, f, g, u)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "deviation": abs(lhs - rhs) / scale}


# ---------------------------------------------------------------------------
# the flow as a Poisson map
# ---------------------------------------------------------------------------

def constrained_basis(ctx: PoissonContext, max_dim: int = 2048) -> np.ndarray:
    """Dense basis (2n, d) of the discrete constrained subspace."""
    grid = ctx.geo.grid
    n = grid.n_nodes
    uop = op_vector_unknown(grid)
    D = ca.divergence(ctx.metric, uop).mat
    rows = [D.toarray()]
    A, bc_idx = ctx.op.matrix(ctx.bc)
    if bc_idx.size:
        R = A.tocsr()[bc_idx, :].toarray()
        rows.append(R)
    C = np.vstack(rows)
    _, s, vt = np.linalg.svd(C)
    tol = max(C.shape) * np.finfo(float).eps * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > tol))
    B = vt[rank:].T
    if B.shape[1] > max_dim:
        raise ValueError(f"subspace dimension {B.shape[1]} exceeds cap {max_dim}")
    return B


def tangent_rhs(ctx: PoissonContext, u: VectorField, v: VectorField) -> VectorField:
    """Exact linearization of the right-hand side (the operators are quadratic)."""
    m = ctx.metric
    adv = ca.nabla_along(m, v, u) + ca.nabla_along(m, u, v)
    if ctx.bc.uses_l_alpha_transport and ctx.alpha > 0:
        adv = ctx.op.solve(ctx.op.apply(adv), ctx.bc)
    return -ctx.sp.project(adv + dy.frak_f_alpha(m, ctx.op, u, v, ctx.bc) * 2.0)


def flow_poisson_check(problem: dy.LaeProblem, ctx: PoissonContext,
                       f: Observable, g: Observable, u0: VectorField,
                       t: float, max_dim: int = 2048) -> dict:
    """Verify that the time-t flow preserves the bracket.

    Integrates the tangent flow for every basis direction of the constrained
    subspace (RK4 stages shared with the base trajectory), assembles the
    pullback derivatives d(f o Flow) through the H^1 Gram matrix, and
    compares {f o Flow, g o Flow}(u0) with {f, g}(Flow(u0)).
    """
    grid = ctx.geo.grid
    m = ctx.metric
    B = constrained_basis(ctx, max_dim)
    d = B.shape[1]
    dt = problem.cfg.dt
    nsteps = int(round(t / dt))

    u = u0.copy()
    T = [VectorField.from_flat(grid, B[:, k]) for k in range(d)]

    def stage(base_u, tangents):
        ku = problem.rhs(base_u)
        kt = [tangent_rhs(ctx, base_u, w) for w in tangents]
        return ku, kt

    for _ in range(nsteps):
        k1u, k1t = stage(u, T)
        u2 = u + k1u * (0.5 * dt)
        T2 = [w + kw * (0.5 * dt) for w, kw in zip(T, k1t)]
        k2u, k2t = stage(u2, T2)
        u3 = u + k2u * (0.5 * dt)
        T3 = [w + kw * (0.5 * dt) for w, kw in zip(T, k2t)]
        k3u, k3t = stage(u3, T3)
        u4 = u + k3u * dt
        T4 = [w + kw * dt for w, kw in zip(T, k3t)]
        k4u, k4t = stage(u4, T4)
        u = problem.project(u + (k1u + (k2u + k3u) * 2.0 + k4u) * (dt / 6.0))
        T = [problem.project(w + (a + (b + c) * 2.0 + e) * (dt / 6.0))
             for w, a, b, c, e in zip(T, k1t, k2t, k3t, k4t)]

    uT = u
    W = ctx.gram_matrix()
    M = B.T @ (W @ B)
    DF = np.stack([w.flat() for w in T], axis=1)     # (2n, d)

    def pullback_derivative(obs: Observable) -> VectorField:
        # <delta, b_k>_1 = <d obs(uT), DF b_k>_1 for all k, delta in span(B)
        dobs = obs.diff(uT).flat()
        r = DF.T @ (W @ dobs)
        mcoef = np.linalg.solve(M, r)
        return VectorField.from_flat(grid, B @ mcoef)

    dfF = pullback_derivative(f)
    dgF = pullback_derivative(g)
    lie = ca.jacobi_lie_bracket(m, dgF, dfF, form="coordinate")
    lhs = ctx.inner1(u0, lie)
    rhs = bracket(ctx, f, g, uT)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "deviation": abs(lhs - rhs) / scale,
            "dim": d, "t": t}
