"""Multi-model uncertainty characterization.

From a nominal and a family of off-nominal frequency responses: residual
responses under a chosen uncertainty form, per-frequency optimal weight
magnitudes via trace-minimization LMIs, and overbounding stable
minimum-phase weight fits.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import cvxpy as cp
import numpy as np

from .dfit import FittedWeight, MagnitudeData, constant_weight, fit_minphase_magnitude
from .errors import DimensionMismatch, GridMismatch, RankDeficient, SolverFailure
from .lti import FrequencyGrid, FrequencyResponseData
from .sdp import realify_hermitian


class ResidualForm(str, Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE_INPUT = "multiplicative_input"
    INVERSE_MULTIPLICATIVE_INPUT = "inverse_multiplicative_input"


_FREE_KINDS = ("scalar", "diagonal")
_SIDE_KINDS = _FREE_KINDS + ("identity",)


@dataclass(frozen=True)
class WeightStructure:
    """Left/right weight shapes; exactly one side is free, the other identity.

    Free-side kinds: 'scalar' (scalar-times-identity) or 'diagonal'. The
    both-sides-free problem is bilinear and not supported.
    """

    left: str = "scalar"
    right: str = "identity"

    def __post_init__(self):
        if self.left not in _SIDE_KINDS or self.right not in _SIDE_KINDS:
            raise DimensionMismatch(
                f"weight sides must be one of {_SIDE_KINDS}, got "
                f"({self.left!r}, {self.right!r})"
            )
        free = [s for s in (self.left, self.right) if s != "identity"]
        if len(free) != 1:
            raise DimensionMismatch(
                "exactly one weight side must be free (the other identity)"
            )

    @property
    def free_side(self) -> str:
        return "left" if self.left != "identity" else "right"

    @property
    def free_kind(self) -> str:
        return self.left if self.free_side == "left" else self.right


@dataclass(frozen=True)
class WeightResponse:
    """Per-frequency magnitudes of the free weight's diagonal."""

    grid: FrequencyGrid
    mags: np.ndarray  # (N, q) nonnegative
    structure: WeightStructure

    def __post_init__(self):
        m = np.asarray(self.mags, dtype=float)
        if m.ndim != 2 or m.shape[0] != len(self.grid):
            raise DimensionMismatch("mags must be (n_freq, q)")
        if np.any(m < 0):
            raise DimensionMismatch("weight magnitudes must be nonnegative")
        m.setflags(write=False)
        object.__setattr__(self, "mags", m)

    def entry(self, i: int) -> np.ndarray:
        return self.mags[:, i]


def _check_shared_grid(nominal, offnominals):
    for k, g in enumerate(offnominals):
        if len(g.grid) != len(nominal.grid) or not np.allclose(
            g.grid.omegas, nominal.grid.omegas
        ):
            raise GridMismatch(f"model {k} grid differs from the nominal grid")
        if g.values.shape != nominal.values.shape:
            raise DimensionMismatch(f"model {k} dimensions differ from nominal")


def _solve_residual(A, rhs, omega, k):
    """Least-norm solve of A E = rhs with an explicit residual check."""
    E, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = np.linalg.norm(A @ E - rhs)
    scale = max(np.linalg.norm(rhs), np.linalg.norm(A), 1.0)
    if resid > 1e-8 * scale:
        raise RankDeficient(
            omega,
            k,
            f"residual form cannot represent model {k} at omega={omega:g} "
            f"(solve residual {resid:.2e})",
        )
    return E


def residual_response(
    nominal: FrequencyResponseData,
    offnominals,
    form: ResidualForm,
):
    """Per-model residual frequency responses under the chosen form.

    additive:                       E_k = G_k - G_0
    multiplicative_input:           G_0 E_k = G_k - G_0
    inverse_multiplicative_input:   G_k E_k = G_0 - G_k   (G_k (I+E_k) = G_0)
    """
    form = ResidualForm(form)
    _check_shared_grid(nominal, offnominals)
    grid = nominal.grid
    out = []
    for k, g in enumerate(offnominals):
        diff = g.values - nominal.values
        if form is ResidualForm.ADDITIVE:
            vals = diff
        else:
            n_in = nominal.values.shape[2]
            vals = np.zeros((len(grid), n_in, n_in), dtype=complex)
            for i, w in enumerate(grid.omegas):
                if form is ResidualForm.MULTIPLICATIVE_INPUT:
                    vals[i] = _solve_residual(nominal.values[i], diff[i], w, k)
                else:
                    vals[i] = _solve_residual(g.values[i], -diff[i], w, k)
        out.append(FrequencyResponseData(grid, vals))
    return out


def reconstruct_offnominal(
    nominal: FrequencyResponseData,
    residual: FrequencyResponseData,
    form: ResidualForm,
) -> FrequencyResponseData:
    """Rebuild G_k from (G_0, E_k, form); inverse of residual_response."""
    form = ResidualForm(form)
    G0, E = nominal.values, residual.values
    if form is ResidualForm.ADDITIVE:
        vals = G0 + E
    elif form is ResidualForm.MULTIPLICATIVE_INPUT:
        vals = G0 + G0 @ E
    else:
        n = E.shape[1]
        vals = np.array(
            [np.linalg.solve((np.eye(n) + E[i]).T, G0[i].T).T for i in range(len(E))]
        )
    return FrequencyResponseData(nominal.grid, vals)


def _weight_lmi_problem(q, n_models, kind):
    """Parametrized trace-min SDP reused across frequencies."""
    if kind == "scalar":
        x = cp.Variable(nonneg=True)
        X = x * np.eye(q)
        objective = cp.Minimize(q * x)
    else:
        d = cp.Variable(q, nonneg=True)
        X = cp.diag(d)
        objective = cp.Minimize(cp.sum(d))
    params = [
        cp.Parameter((2 * q, 2 * q), symmetric=True) for _ in range(n_models)
    ]
    # realify of a real diagonal X is block-diag(X, X)
    Xr = cp.bmat([[X, np.zeros((q, q))], [np.zeros((q, q)), X]])
    constraints = [Xr - P >> 0 for P in params]
    problem = cp.Problem(objective, constraints)
    return problem, params, (x if kind == "scalar" else d)


def weight_response(residuals, structure: WeightStructure) -> WeightResponse:
    """Per-frequency optimal (trace-minimal) free-weight magnitudes.

    Free left: X = W_L W_L* with X >= E_k E_k* for all k.
    Free right: Y = W_R* W_R with Y >= E_k* E_k for all k.
    Returned magnitudes are sqrt of the diagonal of the optimum.
    """
    if not residuals:
        raise DimensionMismatch("at least one residual response required")
    grid = residuals[0].grid
    _check_shared_grid(residuals[0], residuals[1:])
    left = structure.free_side == "left"
    q = residuals[0].values.shape[1] if left else residuals[0].values.shape[2]
    kind = structure.free_kind
    problem, params, var = _weight_lmi_problem(q, len(residuals), kind)
    mags = np.zeros((len(grid), q))
    for i, w in enumerate(grid.omegas):
        for k, r in enumerate(residuals):
            E = r.values[i]
            G = E @ E.conj().T if left else E.conj().T @ E
            params[k].value = realify_hermitian(0.5 * (G + G.conj().T))
        try:
            problem.solve(solver="CLARABEL")
        except (cp.SolverError, Exception):
            problem.solve(solver="SCS")
        if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise SolverFailure(
                f"weight LMI failed at omega={w:g} (status={problem.status})",
                omega=w,
                index=i,
            )
        diag = np.full(q, float(var.value)) if kind == "scalar" else np.asarray(
            var.value, dtype=float
        )
        mags[i] = np.sqrt(np.maximum(diag, 0.0))
    return WeightResponse(grid, mags, structure)


def fit_uncertainty_weight(
    grid: FrequencyGrid, mags: np.ndarray, order: int
) -> FittedWeight:
    """Overbounding stable minimum-phase fit of one weight-response entry."""
    mags = np.asarray(mags, dtype=float).ravel()
    peak = mags.max() if mags.size else 0.0
    if peak <= 0.0:
        return constant_weight(0.0)
    # zero samples are legal weight responses but need a positive floor to fit
    floored = np.maximum(mags, peak * 1e-9)
    return fit_minphase_magnitude(MagnitudeData(grid, floored), order, "overbound")


def max_sv_curve(residuals) -> np.ndarray:
    """max over models of sigma_bar(E_k(j omega)), for weight/data comparison plots."""
    if not residuals:
        raise DimensionMismatch("at least one residual response required")
    n = len(residuals[0].grid)
    out = np.zeros(n)
    for r in residuals:
        sv = np.array(
            [np.linalg.svd(r.values[i], compute_uv=False).max() for i in range(n)]
        )
        out = np.maximum(out, sv)
    return out
