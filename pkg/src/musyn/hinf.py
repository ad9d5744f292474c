"""H-infinity controller synthesis for a generalized plant via LMIs.

Two variants: direct minimization of the closed-loop bound (the bound enters
the LMI linearly) and bisection on a fixed-bound feasibility LMI. Both use
the change-of-variables output-feedback formulation with Lyapunov blocks
(X, Y) coupled through [X I; I Y] >= 0, and reconstruct the controller by an
SVD factorization of I - XY.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .errors import (
    BracketExhausted,
    DimensionMismatch,
    NotDetectable,
    NotStabilizable,
    ReconstructionIllConditioned,
    SolverFailure,
)
from .lti import GeneralizedPlant, StateSpace

DEFAULT_STRICTNESS = 1e-7
RECONSTRUCTION_COND_LIMIT = 1e10


@dataclass
class SynthesisResult:
    controller: StateSpace
    gamma: float
    diagnostics: dict = field(default_factory=dict)


def _pbh_stabilizable(A, B, tol=1e-8):
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if lam.real >= -1e-12:
            M = np.hstack([A - lam * np.eye(n), B])
            if np.linalg.matrix_rank(M, tol=tol * max(1.0, np.abs(lam))) < n:
                return False
    return True


def _check_preconditions(P: GeneralizedPlant):
    if P.n_y < 1 or P.n_u < 1:
        raise DimensionMismatch("synthesis needs n_y >= 1 and n_u >= 1")
    if not _pbh_stabilizable(P.ss.A, P.B2):
        raise NotStabilizable("(A, B_u) fails the PBH stabilizability test")
    if not _pbh_stabilizable(P.ss.A.T, P.C2.T):
        raise NotDetectable("(C_y, A) fails the PBH detectability test")


def _embed_static(P: GeneralizedPlant) -> GeneralizedPlant:
    """Static plants get one uncontrollable, unobservable stable state."""
    p, m = P.ss.n_outputs, P.ss.n_inputs
    ss = StateSpace(
        np.array([[-1.0]]), np.zeros((1, m)), np.zeros((p, 1)), P.ss.D
    )
    return GeneralizedPlant(ss, P.n_w, P.n_u, P.n_z, P.n_y)


def _shift_d22(P: GeneralizedPlant):
    """Zero out the y<-u feedthrough; the shift is absorbed post-synthesis."""
    D22 = P.D22
    if np.allclose(D22, 0):
        return P, None
    D = P.ss.D.copy()
    D[P.n_z :, P.n_w :] = 0.0
    shifted = GeneralizedPlant(
        StateSpace(P.ss.A, P.ss.B, P.ss.C, D), P.n_w, P.n_u, P.n_z, P.n_y
    )
    return shifted, D22


def _absorb_d22(K: StateSpace, D22: np.ndarray) -> StateSpace:
    """Close K around the loop shift: u = K (y - D22 u)."""
    M = np.eye(K.n_outputs) + K.D @ D22
    if np.linalg.cond(M) > 1e12:
        raise ReconstructionIllConditioned("D22 loop shift is singular")
    Mi = np.linalg.inv(M)
    # u = Ck xk + Dk_hat (y - D22 u)  =>  u = Mi (Ck xk + Dk_hat y)
    Dk = Mi @ K.D
    Ck = Mi @ K.C
    Ak = K.A - K.B @ D22 @ Ck
    Bk = K.B - K.B @ D22 @ Dk
    return StateSpace(Ak, Bk, Ck, Dk)


def _synthesis_lmi_blocks(P: GeneralizedPlant, X, Y, An, Bn, Cn, Dn, gamma):
    A, B1, B2 = P.ss.A, P.B1, P.B2
    C1, C2 = P.C1, P.C2
    D11, D12, D21 = P.D11, P.D12, P.D21
    n, nw, nz = A.shape[0], P.n_w, P.n_z

    blk11 = X @ A + A.T @ X + Bn @ C2 + C2.T @ Bn.T
    blk12 = An + (A + B2 @ Dn @ C2).T
    blk13 = X @ B1 + Bn @ D21
    blk14 = (C1 + D12 @ Dn @ C2).T
    blk22 = A @ Y + Y @ A.T + B2 @ Cn + Cn.T @ B2.T
    blk23 = B1 + B2 @ Dn @ D21
    blk24 = (C1 @ Y + D12 @ Cn).T
    blk33 = -gamma * np.eye(nw)
    blk34 = (D11 + D12 @ Dn @ D21).T
    blk44 = -gamma * np.eye(nz)
    M = cp.bmat(
        [
            [blk11, blk12, blk13, blk14],
            [blk12.T, blk22, blk23, blk24],
            [blk13.T, blk23.T, blk33, blk34],
            [blk14.T, blk24.T, blk34.T, blk44],
        ]
    )
    coupling = cp.bmat([[X, np.eye(n)], [np.eye(n), Y]])
    return M, coupling


def _reconstruct(P, Xv, Yv, Anv, Bnv, Cnv, Dnv, sv_floor=1e-12):
    """Invert the change of variables; M N^T = I - X Y via SVD."""
    A, B2, C2 = P.ss.A, P.B2, P.C2
    n = A.shape[0]
    Z = np.eye(n) - Xv @ Yv
    U, s, Vt = np.linalg.svd(Z)
    cond = s.max() / max(s.min(), 1e-300)
    s = np.maximum(s, sv_floor * s.max())
    # N M^T = I - X Y with N = U sqrt(S), M = V sqrt(S)
    N = U @ np.diag(np.sqrt(s))
    Mm = Vt.T @ np.diag(np.sqrt(s))
    Ninv = np.linalg.inv(N)
    Mti = np.linalg.inv(Mm.T)
    Dk = Dnv
    Bk = Ninv @ (Bnv - Xv @ B2 @ Dk)
    Ck = (Cnv - Dk @ C2 @ Yv) @ Mti
    Ak = Ninv @ (
        Anv
        - N @ Bk @ C2 @ Yv
        - Xv @ B2 @ Ck @ Mm.T
        - Xv @ (A + B2 @ Dk @ C2) @ Yv
    ) @ Mti
    return StateSpace(Ak, Bk, Ck, Dk), cond


def _solve_lmi(P, gamma_fixed=None, strictness=DEFAULT_STRICTNESS, solver_opts=None):
    """One synthesis SDP: minimize gamma, or feasibility at fixed gamma."""
    n = P.ss.n_states
    X = cp.Variable((n, n), symmetric=True)
    Y = cp.Variable((n, n), symmetric=True)
    An = cp.Variable((n, n))
    Bn = cp.Variable((n, P.n_y))
    Cn = cp.Variable((P.n_u, n))
    Dn = cp.Variable((P.n_u, P.n_y))
    if gamma_fixed is None:
        gamma = cp.Variable(nonneg=True)
    else:
        gamma = cp.Parameter(nonneg=True, value=gamma_fixed)
    M, coupling = _synthesis_lmi_blocks(P, X, Y, An, Bn, Cn, Dn, gamma)
    dim = M.shape[0]
    constraints = [
        M << -strictness * np.eye(dim),
        coupling >> strictness * np.eye(2 * n),
    ]
    objective = cp.Minimize(gamma) if gamma_fixed is None else cp.Minimize(0)
    problem = cp.Problem(objective, constraints)
    opts = solver_opts or {}
    status = None
    inaccurate = None
    for solver in ("CLARABEL", "SCS"):
        try:
            problem.solve(solver=solver, **opts)
        except (cp.SolverError, Exception):
            continue
        status = problem.status
        if status in (cp.OPTIMAL, cp.INFEASIBLE):
            break
        if status == cp.OPTIMAL_INACCURATE and X.value is not None:
            vals = (X.value, Y.value, An.value, Bn.value, Cn.value, Dn.value)
            g = float(gamma.value) if gamma_fixed is None else gamma_fixed
            inaccurate = (g, vals, status)
    if status == cp.OPTIMAL:
        vals = (X.value, Y.value, An.value, Bn.value, Cn.value, Dn.value)
        g = float(gamma.value) if gamma_fixed is None else gamma_fixed
        return g, vals, status
    if inaccurate is not None:
        # An inaccurate certificate is still worth reconstructing: every caller
        # independently re-verifies closed-loop stability and the achieved norm.
        return inaccurate
    if gamma_fixed is not None:
        return None, None, status
    raise SolverFailure(f"synthesis SDP failed (status={status})")


def _finish(P_orig, P_solved, gamma, vals, extra_diag):
    K, cond = _reconstruct(P_solved, *vals)
    diagnostics = {"reconstruction_cond": cond, **extra_diag}
    if cond > RECONSTRUCTION_COND_LIMIT:
        diagnostics["reconstruction_warning"] = (
            f"I - XY condition number {cond:.2e} exceeds {RECONSTRUCTION_COND_LIMIT:.0e}"
        )
    D22 = P_orig.D22
    if not np.allclose(D22, 0):
        K = _absorb_d22(K, D22)
    return SynthesisResult(controller=K, gamma=float(gamma), diagnostics=diagnostics)


def _validated(P_orig, P_solved, gamma, vals, extra_diag):
    """Reconstruct and verify the closed loop actually meets the bound."""
    from .lti import hinf_norm, is_stable, lft_lower

    try:
        result = _finish(P_orig, P_solved, gamma, vals, extra_diag)
        clp = lft_lower(P_orig, result.controller)
        if not is_stable(clp):
            return None
        achieved = hinf_norm(clp, tol=1e-6)
    except (ReconstructionIllConditioned, np.linalg.LinAlgError):
        return None
    if achieved > gamma * (1 + 1e-3) + 1e-9:
        return None
    result.diagnostics["achieved_norm"] = achieved
    return result


def hinf_syn_lmi(
    P: GeneralizedPlant,
    strictness: float = DEFAULT_STRICTNESS,
    solver_opts: dict | None = None,
) -> SynthesisResult:
    """Minimize the closed-loop H-infinity bound directly in the LMI."""
    _check_preconditions(P)
    P_orig = P
    P, _ = _shift_d22(P)
    if P.ss.n_states == 0:
        P = _embed_static(P)
    gamma, vals, status = _solve_lmi(P, None, strictness, solver_opts)
    if gamma is None:
        raise SolverFailure(f"direct synthesis infeasible (status={status})")
    # Re-solve at a slightly relaxed fixed bound; the minimizer tends to sit on
    # the feasibility boundary with badly conditioned I - XY.
    for relax in (1e-4, 1e-3, 1e-2, 0.05, 0.15):
        g_relaxed = gamma * (1 + relax) + 1e-12
        g2, vals2, status2 = _solve_lmi(P, g_relaxed, strictness, solver_opts)
        if vals2 is None:
            continue
        result = _validated(P_orig, P, g_relaxed, vals2, {"solver_status": status2})
        if result is not None:
            return result
    result = _validated(P_orig, P, gamma * (1 + 1e-3), vals, {"solver_status": status})
    if result is not None:
        return result
    raise SolverFailure("synthesis succeeded but the closed-loop bound check failed")


def hinf_syn_lmi_bisect(
    P: GeneralizedPlant,
    gamma_lo: float = 0.0,
    gamma_hi: float = 1.0,
    bisect_tol: float = 1e-3,
    strictness: float = DEFAULT_STRICTNESS,
    solver_opts: dict | None = None,
) -> SynthesisResult:
    """Bisection on the bound with fixed-gamma feasibility LMIs."""
    _check_preconditions(P)
    P_orig = P
    P, _ = _shift_d22(P)
    if P.ss.n_states == 0:
        P = _embed_static(P)

    def attempt(gamma):
        g, vals, status = _solve_lmi(P, gamma, strictness, solver_opts)
        if vals is None:
            return None
        return _validated(P_orig, P, gamma, vals, {"solver_status": status})

    hi = max(gamma_hi, 1e-9)
    best = None
    for _ in range(30):
        best = attempt(hi)
        if best is not None:
            break
        hi *= 2.0
    if best is None:
        raise BracketExhausted(
            "no feasible bound found after doubling gamma_hi 30 times"
        )
    lo = max(gamma_lo, 0.0)
    while (hi - lo) > bisect_tol * hi:
        mid = 0.5 * (hi + lo)
        result = attempt(mid)
        if result is not None:
            hi = mid
            best = result
        else:
            lo = mid
    return best
