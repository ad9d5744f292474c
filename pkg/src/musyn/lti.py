"""Continuous-time LTI state-space core.

Frequency response, H-infinity norm, stability tests, interconnection/LFT
algebra, and zero-order-hold time simulation. All types are immutable values;
all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import (
    AlgebraicLoop,
    DimensionMismatch,
    SingularAtFrequency,
    UnstableSystem,
)

# Eigenvalue real parts within this distance of the margin count as unstable.
STABILITY_EIG_TOL = 1e-9


def _as_matrix(M, rows=None, cols=None):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        # empty lists lose their shape through JSON round-trips
        M = M.reshape(rows if rows is not None else 0, cols if cols is not None else 0)
    return M


@dataclass(frozen=True)
class StateSpace:
    """Continuous-time LTI system (A, B, C, D); n=0 means a static gain D."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A)
        D = _as_matrix(self.D)
        n = A.shape[0]
        p, m = D.shape
        B = _as_matrix(self.B, n, m)
        C = _as_matrix(self.C, p, n)
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape != (n, m):
            raise DimensionMismatch(f"B must be {n}x{m}, got {B.shape}")
        if C.shape != (p, n):
            raise DimensionMismatch(f"C must be {p}x{n}, got {C.shape}")
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(M)):
                raise DimensionMismatch(f"{name} contains non-finite entries")
            M.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.D.shape[1]

    @property
    def n_outputs(self):
        return self.D.shape[0]

    @staticmethod
    def static_gain(D):
        D = _as_matrix(D)
        p, m = D.shape
        return StateSpace(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), D)

    @staticmethod
    def from_tf(num, den):
        """SISO transfer function (descending coefficients) to state space."""
        num, den = np.atleast_1d(num), np.atleast_1d(den)
        if num.size <= 1 and den.size == 1:
            # tf2ss pads constants with a spurious decoupled zero state
            gain = float(num[0]) / float(den[0]) if num.size else 0.0
            return StateSpace.static_gain([[gain]])
        A, B, C, D = scipy.signal.tf2ss(num, den)
        return StateSpace(A, B, C, D)

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "D": self.D.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return StateSpace(d["A"], d["B"], d["C"], d["D"])


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive frequencies in rad/s."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float).ravel()
        if w.size == 0:
            raise DimensionMismatch("frequency grid is empty")
        if np.any(w <= 0):
            raise DimensionMismatch("frequencies must be positive")
        if np.any(np.diff(w) <= 0):
            raise DimensionMismatch("frequencies must be strictly increasing")
        w.setflags(write=False)
        object.__setattr__(self, "omegas", w)

    def __len__(self):
        return self.omegas.size

    @staticmethod
    def logspace(lo, hi, n):
        if not (0 < lo < hi) or n < 2:
            raise DimensionMismatch("need 0 < lo < hi and n >= 2")
        return FrequencyGrid(np.logspace(np.log10(lo), np.log10(hi), int(n)))


@dataclass(frozen=True)
class FrequencyResponseData:
    """Complex p x m matrix samples over a frequency grid."""

    grid: FrequencyGrid
    values: np.ndarray  # shape (N, p, m)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v.reshape(-1, 1, 1)
        if v.ndim != 3 or v.shape[0] != len(self.grid):
            raise DimensionMismatch(
                f"values must be (N, p, m) with N={len(self.grid)}, got {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_outputs(self):
        return self.values.shape[1]

    @property
    def n_inputs(self):
        return self.values.shape[2]


@dataclass(frozen=True)
class GeneralizedPlant:
    """State-space plant with the ([w; u] -> [z; y]) partition."""

    ss: StateSpace
    n_w: int
    n_u: int
    n_z: int
    n_y: int

    def __post_init__(self):
        if min(self.n_w, self.n_u, self.n_z, self.n_y) < 0:
            raise DimensionMismatch("partition counts must be nonnegative")
        if self.n_w + self.n_u != self.ss.n_inputs:
            raise DimensionMismatch(
                f"n_w + n_u = {self.n_w + self.n_u} != plant inputs {self.ss.n_inputs}"
            )
        if self.n_z + self.n_y != self.ss.n_outputs:
            raise DimensionMismatch(
                f"n_z + n_y = {self.n_z + self.n_y} != plant outputs {self.ss.n_outputs}"
            )

    # Partition blocks, ordered [w; u] -> [z; y].
    @property
    def B1(self):
        return self.ss.B[:, : self.n_w]

    @property
    def B2(self):
        return self.ss.B[:, self.n_w :]

    @property
    def C1(self):
        return self.ss.C[: self.n_z, :]

    @property
    def C2(self):
        return self.ss.C[self.n_z :, :]

    @property
    def D11(self):
        return self.ss.D[: self.n_z, : self.n_w]

    @property
    def D12(self):
        return self.ss.D[: self.n_z, self.n_w :]

    @property
    def D21(self):
        return self.ss.D[self.n_z :, : self.n_w]

    @property
    def D22(self):
        return self.ss.D[self.n_z :, self.n_w :]

    def to_dict(self):
        d = self.ss.to_dict()
        d.update(n_w=self.n_w, n_u=self.n_u, n_z=self.n_z, n_y=self.n_y)
        return d

    @staticmethod
    def from_dict(d):
        return GeneralizedPlant(
            StateSpace.from_dict(d), d["n_w"], d["n_u"], d["n_z"], d["n_y"]
        )


@dataclass(frozen=True)
class TimeResponse:
    times: np.ndarray
    inputs: np.ndarray
    outputs: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.times).size
        for name in ("inputs", "outputs", "states"):
            arr = np.asarray(getattr(self, name))
            if arr.shape[0] != n:
                raise DimensionMismatch(f"{name} length != times length")


def freq_response(sys: StateSpace, grid: FrequencyGrid) -> FrequencyResponseData:
    """Evaluate G(jw) = C (jwI - A)^-1 B + D over the grid."""
    n = sys.n_states
    values = np.empty((len(grid), sys.n_outputs, sys.n_inputs), dtype=complex)
    if n == 0:
        values[:] = sys.D
        return FrequencyResponseData(grid, values)
    for i, w in enumerate(grid.omegas):
        M = 1j * w * np.eye(n) - sys.A
        try:
            X = np.linalg.solve(M, sys.B)
        except np.linalg.LinAlgError:
            raise SingularAtFrequency(w) from None
        if not np.all(np.isfinite(X)):
            raise SingularAtFrequency(w)
        # Poles exactly on the grid slip through solve(); catch huge residuals.
        scale = max(np.linalg.norm(sys.B), 1.0)
        if np.linalg.norm(M @ X - sys.B) > 1e-6 * max(scale, np.linalg.norm(X)):
            raise SingularAtFrequency(w)
        values[i] = sys.C @ X + sys.D
    return FrequencyResponseData(grid, values)


def is_stable(sys: StateSpace, margin: float = 0.0) -> bool:
    """True iff every eigenvalue of A has real part < -margin (tol 1e-9)."""
    if sys.n_states == 0:
        return True
    eig = np.linalg.eigvals(sys.A)
    return bool(np.max(eig.real) < -margin - STABILITY_EIG_TOL)


def _hamiltonian_has_imaginary_eig(sys: StateSpace, gamma: float) -> bool:
    """Imaginary-axis eigenvalue test of the H-infinity Hamiltonian at gamma."""
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    m = sys.n_inputs
    R = gamma**2 * np.eye(m) - D.T @ D
    Rinv = np.linalg.inv(R)
    Ah = A + B @ Rinv @ D.T @ C
    H = np.block(
        [
            [Ah, B @ Rinv @ B.T],
            [-C.T @ (np.eye(sys.n_outputs) + D @ Rinv @ D.T) @ C, -Ah.T],
        ]
    )
    eig = np.linalg.eigvals(H)
    scale = max(np.max(np.abs(eig)), 1.0)
    return bool(np.any(np.abs(eig.real) < 1e-9 * scale))


def hinf_norm(sys: StateSpace, tol: float = 1e-6) -> float:
    """H-infinity norm via bisection on the Hamiltonian imaginary-eigenvalue test.

    A coarse frequency sweep seeds the bracket; the returned value satisfies
    |gamma - ||G||inf| / ||G||inf <= tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if sys.n_states == 0:
        return float(np.linalg.svd(sys.D, compute_uv=False).max()) if sys.D.size else 0.0
    if not is_stable(sys):
        raise UnstableSystem("hinf_norm requires a stable system")
    sigma_d = np.linalg.svd(sys.D, compute_uv=False).max() if sys.D.size else 0.0
    if np.allclose(sys.B, 0) or np.allclose(sys.C, 0):
        return float(sigma_d)

    # Coarse sweep around plant pole frequencies to seed the lower bound.
    eig = np.linalg.eigvals(sys.A)
    freqs = np.abs(eig.imag[np.abs(eig.imag) > 1e-12])
    mags = np.abs(eig[np.abs(eig) > 1e-12])
    anchors = np.concatenate([freqs, mags, [1.0]])
    lo_w, hi_w = anchors.min() / 100, anchors.max() * 100
    sweep = FrequencyGrid(np.logspace(np.log10(lo_w), np.log10(hi_w), 60))
    resp = freq_response(sys, sweep)
    sweep_peak = max(
        np.linalg.svd(V, compute_uv=False).max() for V in resp.values
    )

    lo = max(sweep_peak, sigma_d)
    if lo == 0.0:
        return 0.0
    hi = lo * (1.0 + 2 * tol) + 1e-14
    for _ in range(60):
        if not _hamiltonian_has_imaginary_eig(sys, hi):
            break
        lo = hi
        hi *= 2.0
    else:
        raise UnstableSystem("H-infinity norm bracket search failed")
    while (hi - lo) > tol * hi:
        mid = 0.5 * (hi + lo)
        if _hamiltonian_has_imaginary_eig(sys, mid):
            lo = mid
        else:
            hi = mid
    return float(hi)


def lft_lower(P: GeneralizedPlant, K: StateSpace) -> StateSpace:
    """State-space realization of the lower LFT F_l(P, K) mapping w -> z."""
    if K.n_inputs != P.n_y or K.n_outputs != P.n_u:
        raise DimensionMismatch(
            f"controller must be {P.n_u}x{P.n_y}, got {K.n_outputs}x{K.n_inputs}"
        )
    D22, Dk = P.D22, K.D
    ny = P.n_y
    X = np.eye(ny) - D22 @ Dk
    if ny > 0 and (not np.all(np.isfinite(X)) or np.linalg.cond(X) > 1e12):
        raise AlgebraicLoop("I - D22*Dk is numerically singular")
    Xi = np.linalg.inv(X) if ny > 0 else X
    A, B1, B2 = P.ss.A, P.B1, P.B2
    C1, C2 = P.C1, P.C2
    D11, D12, D21 = P.D11, P.D12, P.D21
    Ak, Bk, Ck = K.A, K.B, K.C
    n, nk = P.ss.n_states, K.n_states

    # y = Xi (C2 x + D21 w + D22 Ck xk), u = Ck xk + Dk y
    Yx = Xi @ C2
    Yk = Xi @ D22 @ Ck
    Yw = Xi @ D21
    Ux = Dk @ Yx
    Uk = Ck + Dk @ Yk
    Uw = Dk @ Yw

    Acl = np.block(
        [
            [A + B2 @ Ux, B2 @ Uk],
            [Bk @ Yx, Ak + Bk @ Yk],
        ]
    ) if n + nk > 0 else np.zeros((0, 0))
    Bcl = np.vstack([B1 + B2 @ Uw, Bk @ Yw]) if n + nk > 0 else np.zeros((0, P.n_w))
    Ccl = np.hstack([C1 + D12 @ Ux, D12 @ Uk]) if n + nk > 0 else np.zeros((P.n_z, 0))
    Dcl = D11 + D12 @ Uw
    return StateSpace(Acl, Bcl, Ccl, Dcl)


def lft_lower_frd(
    P_resp: FrequencyResponseData,
    K_resp: FrequencyResponseData,
    n_y: int,
    n_u: int,
) -> FrequencyResponseData:
    """Pointwise lower LFT of frequency-response samples (oracle counterpart)."""
    values = []
    for Pv, Kv in zip(P_resp.values, K_resp.values):
        nz = Pv.shape[0] - n_y
        nw = Pv.shape[1] - n_u
        P11, P12 = Pv[:nz, :nw], Pv[:nz, nw:]
        P21, P22 = Pv[nz:, :nw], Pv[nz:, nw:]
        M = np.eye(n_y) - P22 @ Kv
        values.append(P11 + P12 @ Kv @ np.linalg.solve(M, P21))
    return FrequencyResponseData(P_resp.grid, np.array(values))


def simulate(sys: StateSpace, inputs, dt: float) -> TimeResponse:
    """Zero-order-hold simulation from zero initial state on a uniform grid."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    U = np.atleast_2d(np.asarray(inputs, dtype=float))
    if U.shape[1] != sys.n_inputs and U.shape[0] == sys.n_inputs:
        U = U.T
    if U.shape[1] != sys.n_inputs:
        raise DimensionMismatch("input samples do not match system inputs")
    N = U.shape[0]
    times = np.arange(N) * dt
    n = sys.n_states
    if n == 0:
        Y = U @ sys.D.T
        return TimeResponse(times, U, Y, np.zeros((N, 0)))
    aug = np.zeros((n + sys.n_inputs, n + sys.n_inputs))
    aug[:n, :n] = sys.A
    aug[:n, n:] = sys.B
    M = scipy.linalg.expm(aug * dt)
    Ad, Bd = M[:n, :n], M[:n, n:]
    X = np.zeros((N, n))
    for k in range(N - 1):
        X[k + 1] = Ad @ X[k] + Bd @ U[k]
    Y = X @ sys.C.T + U @ sys.D.T
    return TimeResponse(times, U, Y, X)


def dc_gain(sys: StateSpace) -> np.ndarray:
    if sys.n_states == 0:
        return sys.D.copy()
    return sys.D - sys.C @ np.linalg.solve(sys.A, sys.B)


# ---------------------------------------------------------------------------
# Interconnection helpers used by the scaling and synthesis layers.

def ss_block_diag(systems) -> StateSpace:
    """Block-diagonal (appended) interconnection of state-space systems."""
    systems = list(systems)
    if not systems:
        raise DimensionMismatch("need at least one system")
    A = scipy.linalg.block_diag(*[s.A for s in systems])
    B = scipy.linalg.block_diag(*[s.B for s in systems])
    C = scipy.linalg.block_diag(*[s.C for s in systems])
    D = scipy.linalg.block_diag(*[s.D for s in systems])
    return StateSpace(A, B, C, D)


def ss_series(first: StateSpace, second: StateSpace) -> StateSpace:
    """Series interconnection: u -> first -> second -> y."""
    if second.n_inputs != first.n_outputs:
        raise DimensionMismatch("series dimensions do not match")
    n1, n2 = first.n_states, second.n_states
    A = np.block(
        [
            [first.A, np.zeros((n1, n2))],
            [second.B @ first.C, second.A],
        ]
    ) if n1 + n2 > 0 else np.zeros((0, 0))
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpace(A, B, C, D)


def ss_identity(m: int) -> StateSpace:
    return StateSpace.static_gain(np.eye(m))


def ss_balance(sys: StateSpace) -> StateSpace:
    """Gramian-balanced realization (same transfer function).

    Equalizes per-state input/output energy, which conditions downstream
    matrix computations on realizations with widely spread mode speeds.
    Returns the system unchanged when it is static or not stable (the
    gramians only exist for stable A).
    """
    n = sys.n_states
    if n == 0 or np.max(np.linalg.eigvals(sys.A).real) >= -STABILITY_EIG_TOL:
        return sys
    Wc = scipy.linalg.solve_continuous_lyapunov(sys.A, -sys.B @ sys.B.T)
    Wo = scipy.linalg.solve_continuous_lyapunov(sys.A.T, -sys.C.T @ sys.C)
    # regularize so uncontrollable/unobservable directions stay invertible
    Lc = np.linalg.cholesky(Wc + 1e-10 * max(np.trace(Wc).real, 1.0) * np.eye(n))
    Lo = np.linalg.cholesky(Wo + 1e-10 * max(np.trace(Wo).real, 1.0) * np.eye(n))
    U, s, Vt = np.linalg.svd(Lo.T @ Lc)
    si = 1.0 / np.sqrt(s)
    T = Lc @ Vt.T @ np.diag(si)
    Ti = np.diag(si) @ U.T @ Lo.T
    return StateSpace(Ti @ sys.A @ T, Ti @ sys.B, sys.C @ T, sys.D)
