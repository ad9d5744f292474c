"""Stable minimum-phase magnitude fits and structured D-scale assembly.

The squared magnitude is parametrized as a ratio of even polynomials in
omega, fitted in log space by bisection on the Chebyshev level with linear
feasibility subproblems, then spectral-factored into a stable minimum-phase
transfer function. Overbound mode adds pointwise fit >= data constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.signal
import scipy.special

from .errors import DimensionMismatch, InfeasibleOverbound, NumericalRooting
from .lti import FrequencyGrid, StateSpace, freq_response, ss_block_diag
from .ssv import BlockKind, BlockStructure, DScaleResponse

POSITIVITY_REFINE = 3  # refined positivity grid density multiplier
_LEVEL_TOL = 1e-6  # bisection tolerance on the log-Chebyshev level
_LEAD_FLOOR = 1e-9  # relative floor on leading coefficients (biproperness)


@dataclass(frozen=True)
class MagnitudeData:
    grid: FrequencyGrid
    mags: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mags, dtype=float).ravel()
        if m.size != len(self.grid):
            raise DimensionMismatch("mags length != grid length")
        if np.any(m <= 0):
            raise DimensionMismatch("magnitudes must be positive")
        m.setflags(write=False)
        object.__setattr__(self, "mags", m)


@dataclass(frozen=True)
class FittedWeight:
    """SISO stable minimum-phase system matching magnitude data."""

    tf: StateSpace
    order: int
    fit_error: float  # max over the grid of |log(|fit|/data)|
    num: np.ndarray = None  # descending s-polynomial coefficients
    den: np.ndarray = None

    def to_dict(self):
        d = self.tf.to_dict()
        d.update(order=self.order, fit_error=self.fit_error)
        return d


def _refined_positivity_grid(x):
    """3x-density grid in x = omega^2, extended a decade past both ends."""
    pts = [x]
    logx = np.log(x)
    for frac in (1.0 / 3.0, 2.0 / 3.0):
        pts.append(np.exp(logx[:-1] + frac * np.diff(logx)))
    lo, hi = x[0], x[-1]
    pts.append(np.geomspace(lo / 10.0, lo, 4))
    pts.append(np.geomspace(hi, hi * 10.0, 4))
    return np.unique(np.concatenate(pts))


def _bernstein(x, order):
    """Rows of Bernstein basis values B_j(t), t = x/(1+x), j = 0..order.

    B_j(t) = C(k,j) x^j / (1+x)^k, so a coefficient vector c represents the
    even polynomial sum_j c_j C(k,j) x^j up to the common factor (1+x)^k,
    which cancels in the P/Q ratio. Basis values stay in [0, 1], keeping the
    LP well conditioned over wide frequency ranges.
    """
    t = np.asarray(x, dtype=float) / (1.0 + np.asarray(x, dtype=float))
    k = order
    cols = [
        scipy.special.comb(k, j) * t**j * (1.0 - t) ** (k - j) for j in range(k + 1)
    ]
    return np.stack(cols, axis=-1)


def _bernstein_to_monomial(c, order):
    """Ascending monomial-in-x coefficients of sum_j c_j C(k,j) x^j."""
    return np.asarray(c, dtype=float) * scipy.special.comb(
        order, np.arange(order + 1)
    )


def _chebyshev_lp(x, m2, order, level, overbound, x_pos, x_ref):
    """Max-margin LP for the level-`level` band; returns coeffs or None.

    Variables: [p_0..p_k, q_0..q_k, margin]; normalization Q(x_ref) = 1.
    """
    k = order
    nv = 2 * (k + 1) + 1
    Vd = _bernstein(x, k)
    Vp = _bernstein(x_pos, k)
    vref = _bernstein(np.array([x_ref]), k)[0]

    A_ub = []
    b_ub = []

    def add_ge(p_row, q_row, rhs, with_margin=True, scale=1.0):
        # p_row.p + q_row.q - margin*with_margin >= rhs
        row = np.concatenate([p_row, q_row, [-1.0 if with_margin else 0.0]]) / scale
        rhs = rhs / scale
        # unit inf-norm rows keep HiGHS inside its coefficient range
        rs = max(np.max(np.abs(row)), 1e-300)
        A_ub.append(-row / rs)
        b_ub.append(-rhs / rs)

    e_lo = np.exp(-level) * m2
    # Cap the upper band where it is vacuous: un-capped rows at large levels
    # carry coefficients so large that, after row normalization, the P side
    # drops below the solver's matrix tolerance and the vertex violates the
    # true constraint. The cap is exact for levels <= 1 and only tightens
    # vacuous rows above that, so feasibility stays monotone in the level.
    e_hi = np.minimum(np.exp(level) * m2, np.e * m2.max())
    for i in range(x.size):
        sc = max(m2[i], 1e-300)
        # P - e^{-t} m2 Q >= margin
        add_ge(Vd[i], -e_lo[i] * Vd[i], 0.0, scale=sc)
        # e^{t} m2 Q - P >= margin
        add_ge(-Vd[i], e_hi[i] * Vd[i], 0.0, scale=sc)
        if overbound:
            add_ge(Vd[i], -m2[i] * Vd[i], 0.0, scale=sc)
    m2_floor = m2.min() * 1e-9
    for i in range(x_pos.size):
        add_ge(Vp[i], np.zeros(k + 1), m2_floor, with_margin=False)
        add_ge(np.zeros(k + 1), Vp[i], 1e-9, with_margin=False)
    # biproper leading-coefficient floors (keeps D and D^-1 realizable)
    lead_p = np.zeros(k + 1)
    lead_p[k] = 1.0
    add_ge(lead_p, np.zeros(k + 1), _LEAD_FLOOR * m2[-1], with_margin=False)
    add_ge(np.zeros(k + 1), lead_p, _LEAD_FLOOR, with_margin=False)

    A_eq = [np.concatenate([np.zeros(k + 1), vref, [0.0]])]
    b_eq = [1.0]

    c = np.zeros(nv)
    c[-1] = -1.0  # maximize margin (capped; it only signals strict interior)
    bounds = [(None, None)] * (2 * (k + 1)) + [(0.0, 1.0)]
    res = scipy.optimize.linprog(
        c,
        A_ub=np.array(A_ub),
        b_ub=np.array(b_ub),
        A_eq=np.array(A_eq),
        b_eq=np.array(b_eq),
        bounds=bounds,
        method="highs",
        options={
            # default feasibility tolerance (1e-7) exceeds the positivity
            # floors, letting vertices sit slightly negative
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-9,
        },
    )
    if not res.success or res.x[-1] < 0:
        return None
    p, q = res.x[: k + 1].copy(), res.x[k + 1 : 2 * (k + 1)].copy()
    # the solver's feasibility tolerance can leave the floored leading
    # coefficients marginally negative; clamp so factorization stays valid
    p[k] = max(p[k], _LEAD_FLOOR * m2[-1])
    q[k] = max(q[k], _LEAD_FLOOR)
    # Row normalization lets the solver's feasibility tolerance swamp band
    # constraints whose monomial coefficients are huge; verify the returned
    # solution against the band directly and reject tolerance artifacts.
    Pv, Qv = Vd @ p, Vd @ q
    if np.any(Qv <= 0):
        return None
    scale = m2 * Qv
    viol = np.maximum(e_lo * Qv - Pv, Pv - e_hi * Qv) / scale
    if np.max(viol) > 1e-5:
        return None
    if overbound and np.any(Pv < m2 * Qv * (1 - 1e-5)):
        return None
    return p, q


def _spectral_factor(coeffs_x, omega_ref):
    """Minimum-phase s-polynomial h(s) with h(jw) h(-jw) = poly(w^2/wref^2).

    coeffs_x are ascending coefficients in x = (omega/omega_ref)^2.
    Returns descending s-polynomial coefficients.
    """
    c = np.asarray(coeffs_x, dtype=float)
    if c.size == 0:
        raise NumericalRooting("empty polynomial in factorization")
    # strip numerically-dead high-degree terms (including sign-flipped noise)
    cmax = np.abs(c).max()
    while c.size > 1 and (np.abs(c[-1]) < 1e-11 * cmax or c[-1] < 0):
        if c[-1] < 0 and np.abs(c[-1]) >= 1e-9 * cmax:
            raise NumericalRooting("negative leading coefficient in factorization")
        c = c[:-1]
    if c[-1] <= 0:
        raise NumericalRooting("nonpositive leading coefficient in factorization")
    lead = c[-1]
    if c.size == 1:
        return np.array([np.sqrt(lead)])
    roots_x = np.roots(c[::-1])
    s_roots = []
    for xr in roots_x:
        cands = np.sqrt(-xr + 0j)
        s = cands if cands.real < 0 else -cands
        s_roots.append(s)
    # Build real LHP factors directly: reals give linear factors; complex
    # roots are greedily matched into conjugate pairs (axis roots of an
    # everywhere-positive even polynomial come in such pairs up to noise).
    poly_norm = np.array([1.0])
    reals = [s for s in s_roots if abs(s.imag) <= 1e-9 * (1 + abs(s))]
    cplx = [s for s in s_roots if abs(s.imag) > 1e-9 * (1 + abs(s))]
    for s in reals:
        r = min(s.real, -1e-12)
        poly_norm = np.polymul(poly_norm, [1.0, -r])
    cplx.sort(key=lambda s: (abs(s.imag), s.real))
    used = [False] * len(cplx)
    for i, s in enumerate(cplx):
        if used[i]:
            continue
        used[i] = True
        # closest unused conjugate candidate
        best, best_j = None, None
        for j in range(i + 1, len(cplx)):
            if used[j]:
                continue
            d = abs(cplx[j] - s.conjugate())
            if best is None or d < best:
                best, best_j = d, j
        if best_j is None:
            # A lone near-axis root marks a sign change of the even polynomial
            # outside the positivity grid; a real left-half-plane root of the
            # same modulus preserves degree and the on-grid magnitude.
            r = max(abs(s), 1e-8)
            poly_norm = np.polymul(poly_norm, [1.0, r])
            continue
        used[best_j] = True
        a = 0.5 * (s.real + cplx[best_j].real)
        b = 0.5 * (abs(s.imag) + abs(cplx[best_j].imag))
        a = min(a, -1e-8 * (1 + b))  # keep strictly inside the left half-plane
        poly_norm = np.polymul(poly_norm, [1.0, -2 * a, a * a + b * b])
    deg = poly_norm.size - 1
    # substitute s/omega_ref for the normalized variable
    poly = poly_norm / omega_ref ** np.arange(deg, -1, -1)
    return np.sqrt(lead) * poly


def _factor_pair(p_coeffs, q_coeffs, omega_ref):
    num = _spectral_factor(p_coeffs, omega_ref)
    den = _spectral_factor(q_coeffs, omega_ref)
    # the LP floors can leave the numerator a numerically-dead degree ahead
    while num.size > den.size and abs(num[0]) <= 1e-3 * np.abs(num).max():
        num = num[1:]
    if num.size > den.size:
        raise NumericalRooting("improper magnitude factorization")
    return num, den


def _eval_mag(num, den, omegas):
    s = 1j * omegas
    return np.abs(np.polyval(num, s) / np.polyval(den, s))


def fit_minphase_magnitude(
    data: MagnitudeData, order: int, mode: str = "approximate"
) -> FittedWeight:
    """Fit a stable minimum-phase SISO system of the given order to |data|.

    mode='overbound' additionally enforces |fit| >= data at every grid point.
    """
    if order < 0:
        raise DimensionMismatch("order must be >= 0")
    if mode not in ("approximate", "overbound"):
        raise DimensionMismatch(f"unknown mode {mode!r}")
    overbound = mode == "overbound"
    omega = data.grid.omegas
    omega_ref = float(np.exp(np.mean(np.log(omega))))
    x = (omega / omega_ref) ** 2
    m2 = data.mags**2
    x_pos = _refined_positivity_grid(x)
    x_ref = float(np.exp(np.mean(np.log(x))))

    spread = float(np.log(m2.max() / m2.min()))
    t_hi = spread + 1.0
    sol_hi = _chebyshev_lp(x, m2, order, t_hi, overbound, x_pos, x_ref)
    if sol_hi is None:
        t_hi = 2 * spread + 10.0
        sol_hi = _chebyshev_lp(x, m2, order, t_hi, overbound, x_pos, x_ref)
    if sol_hi is None:
        if overbound:
            raise InfeasibleOverbound(
                f"no order-{order} rational overbound exists; raise the order"
            )
        raise NumericalRooting("magnitude fit infeasible at the safe level")

    t_lo, best = 0.0, sol_hi
    while (t_hi - t_lo) > _LEVEL_TOL:
        t_mid = 0.5 * (t_hi + t_lo)
        sol = _chebyshev_lp(x, m2, order, t_mid, overbound, x_pos, x_ref)
        if sol is None:
            # a rejection can be a bad vertex rather than true infeasibility;
            # probe once between t_mid and t_hi before locking the lower bound
            t_probe = 0.75 * t_mid + 0.25 * t_hi
            sol = _chebyshev_lp(x, m2, order, t_probe, overbound, x_pos, x_ref)
            if sol is None:
                t_lo = t_mid
            else:
                t_hi, best = t_probe, sol
        else:
            t_hi, best = t_mid, sol
    p, q = best
    num, den = _factor_pair(
        _bernstein_to_monomial(p, order), _bernstein_to_monomial(q, order), omega_ref
    )
    # keep the fit biproper (invertible realization): pad missing numerator
    # degrees with zeros far above the grid, where they are magnitude-neutral
    omega_far = 10.0 * omega[-1]
    while num.size < den.size:
        num = np.polymul(num, [1.0 / omega_far, 1.0])
    fit_mags = _eval_mag(num, den, omega)
    fit_error = float(np.max(np.abs(np.log(fit_mags / data.mags))))
    if overbound and np.any(fit_mags < data.mags):
        # factorization round-off can undercut by epsilon; lift the gain
        lift = float(np.max(data.mags / fit_mags))
        num = num * lift
        fit_mags = fit_mags * lift
        fit_error = float(np.max(np.abs(np.log(fit_mags / data.mags))))
    # normalize sign so the DC gain is positive
    if np.real(np.polyval(num, 0) / np.polyval(den, 0)) < 0:
        num = -num
    tf = StateSpace.from_tf(num, den)
    return FittedWeight(tf=tf, order=order, fit_error=fit_error, num=num, den=den)


def constant_weight(value: float) -> FittedWeight:
    return FittedWeight(
        tf=StateSpace.static_gain([[value]]),
        order=0,
        fit_error=0.0,
        num=np.array([value]),
        den=np.array([1.0]),
    )


def scalar_entry_labels(structure: BlockStructure):
    """Labels of the scalar D-scale entries, in channel order.

    Repeated-scalar blocks contribute one entry per diagonal channel; full
    blocks one entry each. The last full block is the normalized (fixed)
    entry and is excluded from the free count.
    """
    labels = []
    for bi, b in enumerate(structure.blocks):
        if b.kind is BlockKind.REPEATED_SCALAR:
            labels.extend(f"block{bi}[{i}]" for i in range(b.dim))
        else:
            labels.append(f"block{bi}")
    return labels


def free_entry_count(structure: BlockStructure) -> int:
    has_full = any(b.kind is BlockKind.FULL_COMPLEX for b in structure.blocks)
    return len(scalar_entry_labels(structure)) - (1 if has_full else 0)


@dataclass(frozen=True)
class DScaleSystem:
    """Fitted block-diagonal D(s) with stable minimum-phase entries."""

    entries: tuple  # FittedWeight per scalar entry, channel order
    structure: BlockStructure
    offdiag_energy: float = 0.0  # discarded Hermitian off-diagonal energy

    def __post_init__(self):
        if len(self.entries) != len(scalar_entry_labels(self.structure)):
            raise DimensionMismatch("entry count does not match structure")
        object.__setattr__(self, "entries", tuple(self.entries))

    @staticmethod
    def identity(structure: BlockStructure) -> "DScaleSystem":
        n = len(scalar_entry_labels(structure))
        return DScaleSystem(tuple(constant_weight(1.0) for _ in range(n)), structure)

    def _entry_dims(self):
        dims = []
        for b in self.structure.blocks:
            if b.kind is BlockKind.REPEATED_SCALAR:
                dims.extend([1] * b.dim)
            else:
                dims.append(b.dim)
        return dims

    def realization(self, inverse=False) -> StateSpace:
        """State-space of D(s) (or D^-1(s)); entries expanded to block dims."""
        parts = []
        for w, dim in zip(self.entries, self._entry_dims()):
            num, den = (w.den, w.num) if inverse else (w.num, w.den)
            entry = StateSpace.from_tf(num, den)
            parts.extend([entry] * dim)
        return ss_block_diag(parts)

    @property
    def fit_errors(self):
        return tuple(w.fit_error for w in self.entries)

    def response(self, grid: FrequencyGrid) -> np.ndarray:
        return freq_response(self.realization(), grid).values


def _diagonal_magnitudes(d: DScaleResponse):
    """Per scalar entry: positive magnitude samples over the grid.

    Repeated-scalar Hermitian blocks are reduced to their diagonals; the
    discarded off-diagonal energy is reported as a diagnostic.
    """
    mags = []
    offdiag = 0.0
    off = 0
    for b in d.structure.blocks:
        blockvals = d.scales[:, off : off + b.dim, off : off + b.dim]
        if b.kind is BlockKind.REPEATED_SCALAR:
            diag = np.real(np.einsum("nii->ni", blockvals))
            for i in range(b.dim):
                mags.append(np.sqrt(np.maximum(diag[:, i], 1e-300)))
            mask = ~np.eye(b.dim, dtype=bool)
            offdiag += float(np.sum(np.abs(blockvals[:, mask]) ** 2))
        else:
            # scalar multiple of identity: take the (0, 0) entry
            val = np.real(blockvals[:, 0, 0])
            mags.append(np.sqrt(np.maximum(val, 1e-300)))
        off += b.dim
    return mags, offdiag


def fit_dscale(d: DScaleResponse, orders) -> DScaleSystem:
    """Fit each scalar D-scale entry; the normalized entry stays constant 1.

    orders: one fit order per free entry (see free_entry_count), or a single
    int applied to every free entry.
    """
    n_free = free_entry_count(d.structure)
    if np.isscalar(orders):
        orders = [int(orders)] * n_free
    orders = list(orders)
    if len(orders) != n_free:
        raise DimensionMismatch(
            f"expected {n_free} fit orders, got {len(orders)}"
        )
    mags, offdiag = _diagonal_magnitudes(d)
    has_full = any(b.kind is BlockKind.FULL_COMPLEX for b in d.structure.blocks)
    # channel-order index of the fixed (last full block) entry
    fixed_idx = None
    if has_full:
        idx = -1
        for b in d.structure.blocks:
            idx += b.dim if b.kind is BlockKind.REPEATED_SCALAR else 1
            if b.kind is BlockKind.FULL_COMPLEX:
                fixed_idx = idx
    entries = []
    oi = 0
    for i, mag in enumerate(mags):
        if i == fixed_idx:
            entries.append(constant_weight(1.0))
            continue
        data = MagnitudeData(d.grid, mag)
        entries.append(fit_minphase_magnitude(data, orders[oi], "approximate"))
        oi += 1
    return DScaleSystem(tuple(entries), d.structure, offdiag)


def poles_zeros(w: FittedWeight):
    """(poles, zeros) of a fitted weight, from its polynomial factors."""
    num = w.num if w.num is not None else None
    if num is None:
        raise DimensionMismatch("fitted weight lacks polynomial factors")
    zeros = np.roots(w.num) if len(w.num) > 1 else np.array([])
    poles = np.roots(w.den) if len(w.den) > 1 else np.array([])
    return poles, zeros
