"""Structured-singular-value upper bound via LMI bisection.

Per frequency, the smallest gamma such that M* D M - gamma^2 D <= 0 has a
structured D > 0 is found by bisection on gamma with feasibility SDPs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import cvxpy as cp
import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SolverFailure
from .lti import FrequencyGrid, FrequencyResponseData
from .sdp import realify_hermitian

DEFAULT_BISECT_TOL = 1e-4
DEFAULT_MAX_ITER = 40


class BlockKind(str, Enum):
    REPEATED_SCALAR = "repeated_scalar"
    FULL_COMPLEX = "full"


@dataclass(frozen=True)
class UncertaintyBlock:
    kind: BlockKind
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionMismatch("block dim must be >= 1")
        object.__setattr__(self, "kind", BlockKind(self.kind))


@dataclass(frozen=True)
class BlockStructure:
    """Ordered repeated-scalar and full complex uncertainty blocks.

    The block order must match the z/w channel ordering of the plant.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise DimensionMismatch("at least one uncertainty block required")
        object.__setattr__(self, "blocks", blocks)

    @property
    def total_dim(self):
        return sum(b.dim for b in self.blocks)

    def appended(self, block: UncertaintyBlock) -> "BlockStructure":
        return BlockStructure(self.blocks + (block,))

    def to_json(self):
        return [{"kind": b.kind.value, "dim": b.dim} for b in self.blocks]

    @staticmethod
    def from_json(data):
        return BlockStructure(
            tuple(UncertaintyBlock(b["kind"], int(b["dim"])) for b in data)
        )

    def sample_delta(self, rng) -> np.ndarray:
        """Random structured perturbation (generator of the commuting test)."""
        parts = []
        for b in self.blocks:
            if b.kind is BlockKind.REPEATED_SCALAR:
                d = rng.standard_normal() + 1j * rng.standard_normal()
                parts.append(d * np.eye(b.dim))
            else:
                parts.append(
                    rng.standard_normal((b.dim, b.dim))
                    + 1j * rng.standard_normal((b.dim, b.dim))
                )
        return scipy.linalg.block_diag(*parts)


@dataclass(frozen=True)
class DScaleResponse:
    """Per-frequency Hermitian positive-definite commuting scaling matrices."""

    grid: FrequencyGrid
    scales: np.ndarray  # (N, q, q) complex
    structure: BlockStructure

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=complex)
        q = self.structure.total_dim
        if s.shape != (len(self.grid), q, q):
            raise DimensionMismatch("scales shape does not match grid/structure")
        s.setflags(write=False)
        object.__setattr__(self, "scales", s)

    @staticmethod
    def identity(grid: FrequencyGrid, structure: BlockStructure):
        q = structure.total_dim
        return DScaleResponse(grid, np.tile(np.eye(q), (len(grid), 1, 1)), structure)


@dataclass(frozen=True)
class SsvResult:
    grid: FrequencyGrid
    mu_upper: np.ndarray
    d_scales: DScaleResponse
    peak: float
    peak_omega: float

    def to_csv(self):
        lines = ["omega,mu_upper"]
        for w, mu in zip(self.grid.omegas, self.mu_upper):
            lines.append(f"{w:.12g},{mu:.12g}")
        return "\n".join(lines) + "\n"


def _structured_d_variable(structure: BlockStructure):
    """cvxpy block-diagonal D with a Hermitian block per repeated-scalar block
    and a scalar multiple of I per full block."""
    q = structure.total_dim
    blocks = []
    full_scalars = []
    offset = 0
    rows = []
    for b in structure.blocks:
        if b.kind is BlockKind.REPEATED_SCALAR:
            V = cp.Variable((b.dim, b.dim), hermitian=True)
        else:
            d = cp.Variable()
            full_scalars.append(d)
            V = d * np.eye(b.dim)
        blocks.append((offset, b.dim, V))
        offset += b.dim
    # assemble block diagonal via padded sums
    D = 0
    for off, dim, V in blocks:
        E = np.zeros((q, dim))
        E[off : off + dim, :] = np.eye(dim)
        D = D + E @ V @ E.T
    return D, full_scalars


def _extract_d_value(structure: BlockStructure, D_expr) -> np.ndarray:
    D = np.asarray(D_expr.value, dtype=complex)
    # zero out entries outside the commuting pattern (solver noise)
    q = structure.total_dim
    mask = np.zeros((q, q), dtype=bool)
    off = 0
    for b in structure.blocks:
        if b.kind is BlockKind.REPEATED_SCALAR:
            mask[off : off + b.dim, off : off + b.dim] = True
        else:
            mask[off : off + b.dim, off : off + b.dim] = np.eye(b.dim, dtype=bool)
        off += b.dim
    D = np.where(mask, D, 0)
    return 0.5 * (D + D.conj().T)


def _normalize_d(structure: BlockStructure, D: np.ndarray) -> np.ndarray:
    """Fix the cone ambiguity: last full-block scalar = 1, else trace = dim."""
    off = 0
    last_full_idx = None
    for b in structure.blocks:
        if b.kind is BlockKind.FULL_COMPLEX:
            last_full_idx = off
        off += b.dim
    if last_full_idx is not None:
        s = D[last_full_idx, last_full_idx].real
        return D / s
    return D * (structure.total_dim / np.trace(D).real)


def _mu_at_frequency(M, structure, bisect_tol, max_iter, solver_opts):
    """Bisection on gamma for a single complex matrix M."""
    q = structure.total_dim
    sigma_bar = float(np.linalg.svd(M, compute_uv=False).max()) if M.size else 0.0
    if sigma_bar == 0.0:
        return 0.0, np.eye(q, dtype=complex)

    D, _ = _structured_d_variable(structure)
    gamma_sq = cp.Parameter(nonneg=True)
    lmi = gamma_sq * D - cp.Constant(M.conj().T) @ D @ cp.Constant(M)
    constraints = [
        realify_hermitian(D - np.eye(q)) >> 0,  # D >= I, wlog on the cone
        realify_hermitian(lmi) >> 0,
    ]
    problem = cp.Problem(cp.Minimize(0), constraints)

    def feasible(gamma):
        gamma_sq.value = gamma**2
        try:
            problem.solve(solver="CLARABEL", **solver_opts)
        except (cp.SolverError, Exception):
            try:
                problem.solve(solver="SCS", **solver_opts)
            except Exception:
                return None
        if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            return _extract_d_value(structure, D)
        if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return False
        return None

    hi = sigma_bar
    D_best = feasible(hi)
    bumps = 0
    while not isinstance(D_best, np.ndarray) and bumps < 4:
        # gamma = sigma_bar(M) is feasible with D = I in exact arithmetic;
        # inflate slightly when the solver balks at the boundary.
        hi *= 1.0 + 10 * bisect_tol
        D_best = feasible(hi)
        bumps += 1
    if not isinstance(D_best, np.ndarray):
        raise SolverFailure("SSV feasibility failed at the unstructured bound")

    lo = 0.0
    for _ in range(max_iter):
        if (hi - lo) <= bisect_tol * hi:
            break
        mid = 0.5 * (hi + lo)
        res = feasible(mid)
        if isinstance(res, np.ndarray):
            hi = mid
            D_best = res
        else:
            lo = mid
    D_best = _normalize_d(structure, D_best)
    # The solver's feasibility tolerance can admit a marginally infeasible
    # gamma; certify against the returned D instead, which is a true upper
    # bound for any positive-definite commuting scaling.
    return _certified_bound(M, D_best), D_best


def _certified_bound(M, D):
    """sigma_bar(D^{1/2} M D^{-1/2}) via the Hermitian square root of D.

    Inaccurate solver output can leave D marginally indefinite; clamping its
    eigenvalues keeps the scaling positive definite (and block diagonal, so
    still commuting), which is all the bound requires.
    """
    w, V = np.linalg.eigh(0.5 * (D + D.conj().T))
    w = np.maximum(w, 1e-12 * max(float(w.max()), 1.0))
    S = (V * np.sqrt(w)) @ V.conj().T
    S_inv = (V / np.sqrt(w)) @ V.conj().T
    return float(np.linalg.svd(S @ M @ S_inv, compute_uv=False).max())


def ssv_upper(
    M: FrequencyResponseData,
    structure: BlockStructure,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    solver_opts: dict | None = None,
) -> SsvResult:
    """SSV upper bound and commuting D-scales over the frequency grid."""
    q = structure.total_dim
    if M.n_outputs != q or M.n_inputs != q:
        raise DimensionMismatch(
            f"M must be {q}x{q} per frequency, got {M.n_outputs}x{M.n_inputs}"
        )
    solver_opts = solver_opts or {}
    mu = np.zeros(len(M.grid))
    scales = np.zeros((len(M.grid), q, q), dtype=complex)
    for i, Mi in enumerate(M.values):
        try:
            mu[i], scales[i] = _mu_at_frequency(
                Mi, structure, bisect_tol, max_iter, solver_opts
            )
        except SolverFailure as e:
            raise SolverFailure(str(e), omega=M.grid.omegas[i], index=i) from e
    peak_idx = int(np.argmax(mu))
    return SsvResult(
        grid=M.grid,
        mu_upper=mu,
        d_scales=DScaleResponse(M.grid, scales, structure),
        peak=float(mu[peak_idx]),
        peak_omega=float(M.grid.omegas[peak_idx]),
    )


def scaled_sigma_max(M: np.ndarray, D: np.ndarray) -> float:
    """sigma_bar(D^(1/2) M D^(-1/2)) for Hermitian positive-definite D."""
    w, V = np.linalg.eigh(D)
    if np.any(w <= 0):
        raise DimensionMismatch("D-scale is not positive definite")
    Dh = V @ np.diag(np.sqrt(w)) @ V.conj().T
    Dhi = V @ np.diag(1.0 / np.sqrt(w)) @ V.conj().T
    return float(np.linalg.svd(Dh @ M @ Dhi, compute_uv=False).max())


def assess_robust_stability(
    clp: FrequencyResponseData,
    structure: BlockStructure,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    solver_opts: dict | None = None,
):
    """Peak-mu robust stability verdict for the w->z closed-loop response."""
    detail = ssv_upper(clp, structure, bisect_tol, max_iter, solver_opts)
    return {
        "robust": bool(detail.peak <= 1.0),
        "margin": detail.peak,
        "detail": detail,
    }
