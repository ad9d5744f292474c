"""Solver-agnostic semidefinite-program builder on top of cvxpy.

Scalar and symmetric-matrix variables, affine LMI constraints, an optional
linear objective, and the complex-to-real Hermitian embedding used by the
structured-singular-value and weight LMIs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .errors import NotHermitian, SolverFailure

DEFAULT_FEAS_TOL = 1e-8
DEFAULT_STRICTNESS = 1e-7

_SOLVER_CHAIN = ("CLARABEL", "SCS")


def realify_hermitian(H):
    """Real symmetric embedding [Re(H), -Im(H); Im(H), Re(H)] of Hermitian H.

    H >= 0 iff the embedding >= 0; each eigenvalue of H appears twice.
    Accepts numeric arrays or cvxpy affine expressions.
    """
    if isinstance(H, cp.Expression):
        re, im = cp.real(H), cp.imag(H)
        return cp.bmat([[re, -im], [im, re]])
    H = np.asarray(H, dtype=complex)
    asym = np.linalg.norm(H - H.conj().T)
    if asym > 1e-10 * max(np.linalg.norm(H), 1e-300):
        raise NotHermitian(f"matrix asymmetry {asym:.2e} exceeds tolerance")
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


@dataclass
class SdpSolution:
    status: str  # optimal | feasible | infeasible | numerical_failure
    values: dict = field(default_factory=dict)
    objective: float | None = None

    @property
    def ok(self):
        return self.status in ("optimal", "feasible")


class SdpProblem:
    """Affine LMI feasibility/minimization problem.

    Variables are declared through ``scalar``/``symmetric``/``hermitian``;
    constraints are affine expressions required positive semidefinite.
    """

    def __init__(self):
        self._vars = {}
        self._constraints = []
        self._objective = None

    def scalar(self, name, nonneg=False):
        v = cp.Variable(name=name, nonneg=nonneg)
        self._vars[name] = v
        return v

    def symmetric(self, name, q):
        v = cp.Variable((q, q), name=name, symmetric=True)
        self._vars[name] = v
        return v

    def hermitian(self, name, q):
        v = cp.Variable((q, q), name=name, hermitian=True)
        self._vars[name] = v
        return v

    def require_psd(self, expr, strictness=0.0):
        """Constrain expr >= strictness * I (expr must be real symmetric affine)."""
        if expr.ndim == 0 or expr.shape == ():
            expr = cp.reshape(expr, (1, 1), order="C")
        if strictness:
            expr = expr - strictness * np.eye(expr.shape[0])
        self._constraints.append(expr >> 0)

    def minimize(self, expr):
        self._objective = cp.Minimize(expr)

    def describe(self):
        """Plain-text listing of the problem for debugging."""
        lines = [f"variables: {sorted(self._vars)}"]
        for i, c in enumerate(self._constraints):
            lines.append(f"  LMI {i}: {c}")
        if self._objective is not None:
            lines.append(f"  minimize {self._objective.expr}")
        return "\n".join(lines)

    def solve(self, solver=None, feas_tol=DEFAULT_FEAS_TOL, **solver_opts) -> SdpSolution:
        objective = self._objective or cp.Minimize(0)
        problem = cp.Problem(objective, self._constraints)
        chain = [solver] if solver else list(_SOLVER_CHAIN)
        status = "numerical_failure"
        for s in chain:
            try:
                problem.solve(solver=s, **solver_opts)
            except (cp.SolverError, Exception):
                continue
            if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
                status = "optimal" if self._objective is not None else "feasible"
                break
            if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
                status = "infeasible"
                break
        if status in ("optimal", "feasible"):
            values = {k: (v.value if v.ndim else float(v.value)) for k, v in self._vars.items()}
            obj = float(problem.value) if self._objective is not None else None
            return SdpSolution(status, values, obj)
        return SdpSolution(status)


def solve_feasibility(constraints_builder, solver=None, **opts) -> SdpSolution:
    """Build a fresh problem via the callback and solve it as feasibility."""
    prob = SdpProblem()
    constraints_builder(prob)
    return prob.solve(solver=solver, **opts)
