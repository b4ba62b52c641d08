"""laealab: a structure-preserving numerical laboratory for the averaged
Euler (LAE-alpha) equations on 2-D conformal domains.

The package builds the full operator stack of the model (conformal geometry,
covariant calculus, boundary-condition-aware elliptic inverses, the Stokes
projector, the quadratic operator algebra of the dynamics, the material/flow
side, and the Lie-Poisson bracket machinery) and verifies the analytic
identities it rests on by property tests and grid-refinement convergence.
"""

__version__ = "0.1.0"
