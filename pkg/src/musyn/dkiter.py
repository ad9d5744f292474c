"""DK-iteration: alternate H-infinity synthesis on the D-scaled plant with
SSV analysis and D-scale fitting, under pluggable fit-order strategies.

Also houses the robust-performance plant augmentation (appending the
fictitious full performance block) and the D-scale plant scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dfit import DScaleSystem, fit_dscale, free_entry_count, scalar_entry_labels
from .errors import DimensionMismatch, IterationError, MusynError, UnstableSystem
from .hinf import SynthesisResult, hinf_syn_lmi, hinf_syn_lmi_bisect
from .lti import (
    FrequencyGrid,
    FrequencyResponseData,
    GeneralizedPlant,
    StateSpace,
    freq_response,
    is_stable,
    lft_lower,
    ss_balance,
    ss_block_diag,
    ss_identity,
    ss_series,
)
from .ssv import BlockKind, BlockStructure, DScaleResponse, UncertaintyBlock, ssv_upper

DEFAULT_MAX_CANDIDATE_ORDER = 4


@dataclass(frozen=True)
class RobustPerformanceSpec:
    """Plant with partitioned uncertainty (w1/z1) and performance (w2/z2)
    channels; uncertainty may be None for a pure-performance problem."""

    plant: GeneralizedPlant
    uncertainty: BlockStructure | None
    n_w2: int
    n_z2: int

    def __post_init__(self):
        n_w1 = self.uncertainty.total_dim if self.uncertainty else 0
        n_z1 = n_w1
        if self.n_w2 < 0 or self.n_z2 < 0:
            raise DimensionMismatch("performance dimensions must be >= 0")
        if n_w1 + self.n_w2 != self.plant.n_w:
            raise DimensionMismatch(
                f"n_w1 + n_w2 = {n_w1 + self.n_w2} != plant n_w {self.plant.n_w}"
            )
        if n_z1 + self.n_z2 != self.plant.n_z:
            raise DimensionMismatch(
                f"n_z1 + n_z2 = {n_z1 + self.n_z2} != plant n_z {self.plant.n_z}"
            )
        if max(self.n_w2, self.n_z2) == 0 and self.uncertainty is None:
            raise DimensionMismatch("no uncertainty and no performance channels")

    @property
    def n_w1(self):
        return self.uncertainty.total_dim if self.uncertainty else 0

    @property
    def n_z1(self):
        return self.n_w1


@dataclass(frozen=True)
class IterationRecord:
    index: int
    orders: tuple  # fit orders that produced this iteration's D (empty first)
    omega: np.ndarray
    mu_upper: np.ndarray
    peak: float
    d_fit_errors: tuple
    gamma: float
    controller: StateSpace
    d_scales: DScaleResponse = None


@dataclass(frozen=True)
class DkResult:
    controller: StateSpace
    peak: float
    records: tuple
    converged: bool

    def best_record(self) -> IterationRecord:
        return min(self.records, key=lambda r: r.peak)


class ChannelClosed(Exception):
    """Raised by a decision channel when its peer went away."""


class DecisionChannel:
    """Blocking request/response channel for interactive order selection."""

    def request(self, message: dict) -> dict:
        raise NotImplementedError


@dataclass
class FixedOrder:
    order: int
    iterations: int = 1

    def __post_init__(self):
        if self.order < 0 or self.iterations < 1:
            raise DimensionMismatch("need order >= 0 and iterations >= 1")


@dataclass
class ListOrder:
    orders: list

    def __post_init__(self):
        self.orders = list(self.orders)
        if not self.orders:
            raise DimensionMismatch("ListOrder needs at least one fit order")
        if any(int(o) < 0 for o in self.orders):
            raise DimensionMismatch("fit orders must be >= 0")


@dataclass
class AutoOrder:
    max_order: int = DEFAULT_MAX_CANDIDATE_ORDER
    error_tol: float = 1e-2
    max_iterations: int = 3

    def __post_init__(self):
        if self.max_order < 0 or self.max_iterations < 1:
            raise DimensionMismatch("need max_order >= 0 and max_iterations >= 1")


@dataclass
class InteractiveOrder:
    channel: DecisionChannel
    max_order: int = DEFAULT_MAX_CANDIDATE_ORDER


def augment_for_performance(spec: RobustPerformanceSpec) -> BlockStructure:
    """Uncertainty structure plus one full block for the performance channel."""
    d_perf = max(spec.n_w2, spec.n_z2)
    perf = UncertaintyBlock(BlockKind.FULL_COMPLEX, d_perf) if d_perf else None
    if spec.uncertainty is None:
        return BlockStructure((perf,))
    if perf is None:
        return spec.uncertainty
    return spec.uncertainty.appended(perf)


def _dscale_side(d: DScaleSystem, dims, inverse: bool) -> StateSpace:
    parts = []
    for w, dim in zip(d.entries, dims):
        num, den = (w.den, w.num) if inverse else (w.num, w.den)
        entry = StateSpace.from_tf(num, den)
        parts.extend([entry] * dim)
    return ss_block_diag(parts) if parts else StateSpace.static_gain(np.zeros((0, 0)))


def _entry_dims(structure: BlockStructure):
    dims = []
    for b in structure.blocks:
        if b.kind is BlockKind.REPEATED_SCALAR:
            dims.extend([1] * b.dim)
        else:
            dims.append(b.dim)
    return dims


def scale_plant(P: GeneralizedPlant, D: DScaleSystem) -> GeneralizedPlant:
    """diag(D, I_ny) . P . diag(D^-1, I_nu) realized in state space."""
    q = D.structure.total_dim
    if P.n_z != q or P.n_w != q:
        raise DimensionMismatch(
            f"D-scale dimension {q} does not match plant n_z={P.n_z}, n_w={P.n_w}"
        )
    dims = _entry_dims(D.structure)
    return _scale_with_dims(P, D, dims, dims)


def _scale_with_dims(P, D, z_dims, w_dims):
    left = ss_block_diag([_dscale_side(D, z_dims, False), ss_identity(P.n_y)])
    right = ss_block_diag([_dscale_side(D, w_dims, True), ss_identity(P.n_u)])
    scaled = ss_series(right, ss_series(P.ss, left))
    # balancing tames the wide mode spread the D(s) factors introduce
    return GeneralizedPlant(ss_balance(scaled), P.n_w, P.n_u, P.n_z, P.n_y)


def _scale_for_spec(spec: RobustPerformanceSpec, D: DScaleSystem) -> GeneralizedPlant:
    """Like scale_plant, with the fixed performance entry stretched to the
    (possibly non-square) performance channel counts."""
    dims = _entry_dims(D.structure)
    z_dims, w_dims = list(dims), list(dims)
    if max(spec.n_w2, spec.n_z2) > 0:
        z_dims[-1] = spec.n_z2
        w_dims[-1] = spec.n_w2
    return _scale_with_dims(spec.plant, D, z_dims, w_dims)


def _pad_square(frd: FrequencyResponseData, spec: RobustPerformanceSpec):
    """Zero-pad the performance rows/columns so the response is square."""
    d = max(spec.n_w2, spec.n_z2)
    rows = spec.n_z1 + d
    cols = spec.n_w1 + d
    if frd.values.shape[1] == rows and frd.values.shape[2] == cols:
        return frd
    vals = np.zeros((len(frd.grid), rows, cols), dtype=complex)
    vals[:, : frd.values.shape[1], : frd.values.shape[2]] = frd.values
    return FrequencyResponseData(frd.grid, vals)


def choose_order_auto(d: DScaleResponse, max_order: int, error_tol: float):
    """Per free entry: smallest order with fit_error <= error_tol, else the
    minimal-error order in 0..max_order."""
    if max_order < 0:
        raise DimensionMismatch("max_order must be >= 0")
    n_free = free_entry_count(d.structure)
    fits = {}
    for o in range(max_order + 1):
        try:
            fits[o] = fit_dscale(d, o)
        except MusynError:
            continue
    if not fits:
        raise MusynError("no candidate fit order succeeded")
    free_errors = {o: _free_errors(fits[o]) for o in fits}
    orders = []
    for i in range(n_free):
        chosen = None
        for o in sorted(fits):
            if free_errors[o][i] <= error_tol:
                chosen = o
                break
        if chosen is None:
            chosen = min(fits, key=lambda o: free_errors[o][i])
        orders.append(chosen)
    return orders


def _free_errors(d_sys: DScaleSystem):
    """Fit errors of the free entries, in order (fixed entry skipped)."""
    fixed = _fixed_entry_index(d_sys.structure)
    return [e for i, e in enumerate(d_sys.fit_errors) if i != fixed]


def _fixed_entry_index(structure: BlockStructure):
    if not any(b.kind is BlockKind.FULL_COMPLEX for b in structure.blocks):
        return None
    idx = -1
    fixed = None
    for b in structure.blocks:
        idx += b.dim if b.kind is BlockKind.REPEATED_SCALAR else 1
        if b.kind is BlockKind.FULL_COMPLEX:
            fixed = idx
    return fixed


def _interactive_pick(strategy: InteractiveOrder, record: IterationRecord, d):
    """Fit candidates, send the iteration message, await a decision."""
    fits = {}
    candidates = []
    for o in range(strategy.max_order + 1):
        try:
            fits[o] = fit_dscale(d, o)
        except MusynError:
            # an order whose fit fails numerically is simply not offered
            continue
        errs = _free_errors(fits[o])
        candidates.append(
            {"order": o, "fit_error": float(max(errs)) if errs else 0.0}
        )
    if not candidates:
        raise IterationError(
            record.index, MusynError("no candidate fit order succeeded")
        )
    labels = scalar_entry_labels(d.structure)
    message = {
        "type": "iteration",
        "index": record.index,
        "omega": [float(w) for w in record.omega],
        "mu_upper": [float(m) for m in record.mu_upper],
        "peak": float(record.peak),
        "gamma": float(record.gamma),
        "d_entries": [
            {
                "name": labels[i],
                "mag": [float(v) for v in _entry_mag(d, i)],
            }
            for i in range(len(labels))
        ],
        "candidates": candidates,
    }
    try:
        reply = strategy.channel.request(message)
    except ChannelClosed:
        return None
    kind = reply.get("type")
    if kind == "choose":
        order = int(reply["order"])
        if order not in fits:
            raise DimensionMismatch(
                f"chosen order {order} outside candidates 0..{strategy.max_order}"
            )
        return fits[order]
    if kind in ("accept", "stop"):
        return None
    raise DimensionMismatch(f"unknown decision message type {kind!r}")


def _entry_mag(d: DScaleResponse, i: int):
    from .dfit import _diagonal_magnitudes

    mags, _ = _diagonal_magnitudes(d)
    return mags[i]


def dk_iterate(
    spec: RobustPerformanceSpec,
    grid: FrequencyGrid,
    strategy,
    synthesis: str = "lmi",
    ssv_tol: float = 1e-4,
    bisect_tol: float = 1e-3,
    solver_opts: dict | None = None,
) -> DkResult:
    """Run the DK loop and return the best-peak controller with full records.

    Each iteration synthesizes on the D-scaled plant and analyzes the
    unscaled closed loop with fresh D-scales. The strategy then supplies the
    next fit orders (or ends the run); the iteration budget is honored even
    when the peak already satisfies the <= 1 robustness test, and convergence
    is reported separately.
    """
    structure = augment_for_performance(spec)
    if synthesis not in ("lmi", "bisect"):
        raise DimensionMismatch(f"unknown synthesis method {synthesis!r}")
    # per-iteration scalar orders supplied by the simple strategies
    plan = None
    if isinstance(strategy, FixedOrder):
        plan = [strategy.order] * strategy.iterations
    elif isinstance(strategy, ListOrder):
        plan = [int(o) for o in strategy.orders]

    d_sys = DScaleSystem.identity(structure)
    records = []
    last_orders: tuple = ()
    k = 0
    while True:
        try:
            scaled = _scale_for_spec(spec, d_sys)
            # a sane starting bracket: the previous iteration's achieved bound
            g_hi = max((r.gamma for r in records), default=1.0)
            if synthesis == "bisect":
                syn = hinf_syn_lmi_bisect(
                    scaled,
                    gamma_hi=g_hi,
                    bisect_tol=bisect_tol,
                    solver_opts=solver_opts,
                )
            else:
                try:
                    syn = hinf_syn_lmi(scaled, solver_opts=solver_opts)
                except MusynError:
                    # direct minimization can stall on ill-conditioned scaled
                    # plants; fixed-gamma feasibility bisection is hardier
                    syn = hinf_syn_lmi_bisect(
                        scaled,
                        gamma_hi=g_hi,
                        bisect_tol=bisect_tol,
                        solver_opts=solver_opts,
                    )
            clp = lft_lower(spec.plant, syn.controller)
            if not is_stable(clp):
                raise UnstableSystem(
                    "synthesized controller does not stabilize the nominal loop"
                )
            frd = _pad_square(freq_response(clp, grid), spec)
            res = ssv_upper(frd, structure, bisect_tol=ssv_tol)
        except MusynError as e:
            raise IterationError(k, e) from e
        records.append(
            IterationRecord(
                index=k,
                orders=last_orders,
                omega=grid.omegas,
                mu_upper=res.mu_upper,
                peak=res.peak,
                d_fit_errors=d_sys.fit_errors,
                gamma=syn.gamma,
                controller=syn.controller,
                d_scales=res.d_scales,
            )
        )
        # strategy decides the next fit (or ends the run)
        next_d = None
        if plan is not None:
            if k < len(plan):
                try:
                    next_d = fit_dscale(res.d_scales, plan[k])
                    last_orders = (plan[k],) * free_entry_count(structure)
                except MusynError as e:
                    raise IterationError(k, e) from e
        elif isinstance(strategy, AutoOrder):
            if k < strategy.max_iterations:
                try:
                    orders = choose_order_auto(
                        res.d_scales, strategy.max_order, strategy.error_tol
                    )
                    next_d = fit_dscale(res.d_scales, orders)
                    last_orders = tuple(orders)
                except MusynError as e:
                    raise IterationError(k, e) from e
        elif isinstance(strategy, InteractiveOrder):
            next_d = _interactive_pick(strategy, records[-1], res.d_scales)
            if next_d is not None:
                last_orders = tuple(
                    w.order for i, w in enumerate(next_d.entries)
                    if i != _fixed_entry_index(structure)
                )
        else:
            raise DimensionMismatch(f"unknown strategy {type(strategy).__name__}")
        if next_d is None:
            break
        d_sys = next_d
        k += 1
    best = min(records, key=lambda r: r.peak)
    return DkResult(
        controller=best.controller,
        peak=best.peak,
        records=tuple(records),
        converged=bool(best.peak <= 1.0),
    )
