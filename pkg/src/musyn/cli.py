"""Command-line interface: file I/O, plot-data emission, and entry points
for analysis, synthesis, DK-iteration, and uncertainty characterization.

Exit codes: 0 success, 1 computation-level failure (solver), 2 input/usage
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .dkiter import (
    DecisionChannel,
    FixedOrder,
    InteractiveOrder,
    ListOrder,
    RobustPerformanceSpec,
    dk_iterate,
)
from .errors import (
    DimensionMismatch,
    GridMismatch,
    MusynError,
    UnstableSystem,
)
from .hinf import hinf_syn_lmi, hinf_syn_lmi_bisect
from .lti import (
    FrequencyGrid,
    FrequencyResponseData,
    GeneralizedPlant,
    StateSpace,
    freq_response,
    hinf_norm,
    is_stable,
)
from .ssv import BlockStructure, ssv_upper
from .umodel import (
    ResidualForm,
    WeightStructure,
    fit_uncertainty_weight,
    max_sv_curve,
    residual_response,
    weight_response,
)

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad input files or flag values; maps to exit code 2."""


# ---------------------------------------------------------------------------
# parsing helpers


def parse_grid(text: str) -> FrequencyGrid:
    """Parse 'lo:hi:n:log' (or ':lin') into a frequency grid."""
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"grid must be lo:hi:n:log|lin, got {text!r}")
    lo_s, hi_s, n_s, kind = parts
    try:
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError as e:
        raise UsageError(f"bad grid numbers in {text!r}: {e}") from e
    if n < 2:
        raise UsageError("grid point count must be >= 2")
    if not (0 < lo < hi):
        raise UsageError("grid bounds must satisfy 0 < lo < hi")
    if kind == "log":
        return FrequencyGrid.logspace(lo, hi, n)
    if kind == "lin":
        return FrequencyGrid(np.linspace(lo, hi, n))
    raise UsageError(f"grid spacing must be 'log' or 'lin', got {kind!r}")


def parse_strategy(text: str):
    """Parse 'fixed:order=4,iters=3' | 'list:2,2,2' | 'interactive:max_order=4'.

    Interactive parses to (InteractiveOrder kwargs); the caller supplies the
    decision channel.
    """
    name, _, rest = text.partition(":")
    if name == "fixed":
        opts = _parse_kv(rest, {"order": int, "iters": int})
        return FixedOrder(
            order=opts.get("order", 4), iterations=opts.get("iters", 3)
        )
    if name == "list":
        try:
            orders = [int(o) for o in rest.split(",") if o != ""]
        except ValueError as e:
            raise UsageError(f"bad list strategy {text!r}: {e}") from e
        if not orders:
            raise UsageError("list strategy needs at least one order")
        return ListOrder(orders)
    if name == "interactive":
        opts = _parse_kv(rest, {"max_order": int}) if rest else {}
        return ("interactive", opts.get("max_order", 4))
    raise UsageError(
        f"unknown strategy {name!r}; expected fixed:, list:, or interactive:"
    )


def _parse_kv(text, schema):
    out = {}
    if not text:
        return out
    for item in text.split(","):
        key, _, val = item.partition("=")
        if key not in schema:
            raise UsageError(
                f"unknown option {key!r}; valid: {sorted(schema)}"
            )
        try:
            out[key] = schema[key](val)
        except ValueError as e:
            raise UsageError(f"bad value for {key!r}: {e}") from e
    return out


def _load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise UsageError(
            f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        ) from e


def load_statespace(path) -> StateSpace:
    data = _load_json(path)
    try:
        return StateSpace.from_dict(data)
    except (KeyError, TypeError, ValueError, DimensionMismatch) as e:
        raise UsageError(f"{path}: not a valid state-space file: {e}") from e


def load_plant(path) -> GeneralizedPlant:
    data = _load_json(path)
    try:
        return GeneralizedPlant.from_dict(data)
    except (KeyError, TypeError, ValueError, DimensionMismatch) as e:
        raise UsageError(f"{path}: not a valid generalized-plant file: {e}") from e


def load_structure(path) -> BlockStructure:
    data = _load_json(path)
    try:
        return BlockStructure.from_json(data)
    except (KeyError, TypeError, ValueError, DimensionMismatch) as e:
        raise UsageError(f"{path}: not a valid block-structure file: {e}") from e


def load_spec(path) -> RobustPerformanceSpec:
    """Robust-performance spec JSON: {"plant":.., "uncertainty":.. | null,
    "n_w2":.., "n_z2":..}."""
    data = _load_json(path)
    try:
        plant = GeneralizedPlant.from_dict(data["plant"])
        unc = data.get("uncertainty")
        structure = BlockStructure.from_json(unc) if unc else None
        return RobustPerformanceSpec(
            plant, structure, int(data["n_w2"]), int(data["n_z2"])
        )
    except (KeyError, TypeError, ValueError, DimensionMismatch) as e:
        raise UsageError(f"{path}: not a valid robust-performance spec: {e}") from e


def load_response(path, grid: FrequencyGrid) -> FrequencyResponseData:
    """Frequency response from CSV (omega, re_i_j, im_i_j) or a state-space
    JSON sampled on the grid."""
    path = str(path)
    if path.endswith(".json"):
        return freq_response(load_statespace(path), grid)
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
    except (OSError, ValueError, StopIteration) as e:
        raise UsageError(f"cannot read frequency-response CSV {path}: {e}") from e
    dims = _response_dims(header, path)
    omegas = np.array([r[0] for r in rows])
    if len(omegas) != len(grid) or not np.allclose(omegas, grid.omegas):
        raise UsageError(f"{path}: omega column does not match the --grid")
    p, m = dims
    vals = np.zeros((len(rows), p, m), dtype=complex)
    for n, r in enumerate(rows):
        flat = np.array(r[1::2]) + 1j * np.array(r[2::2])
        vals[n] = flat.reshape(p, m)
    return FrequencyResponseData(grid, vals)


def _response_dims(header, path):
    """Infer (n_outputs, n_inputs) from re_{i}_{j} column names."""
    max_i = max_j = -1
    for col in header[1:]:
        parts = col.split("_")
        if len(parts) != 3 or parts[0] not in ("re", "im"):
            raise UsageError(
                f"{path}: expected columns omega, re_i_j, im_i_j; got {col!r}"
            )
        max_i = max(max_i, int(parts[1]))
        max_j = max(max_j, int(parts[2]))
    if max_i < 0:
        raise UsageError(f"{path}: no response columns found")
    return max_i + 1, max_j + 1


def _write_csv(path, header, columns):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{v:.12g}" for v in row])


def _write_json(path, data):
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


# ---------------------------------------------------------------------------
# interactive terminal channel


class TerminalChannel(DecisionChannel):
    """Decision prompts on stdin/stdout speaking the protocol verbatim."""

    def __init__(self, stream_in=None, stream_out=None):
        self.stream_in = stream_in or sys.stdin
        self.stream_out = stream_out or sys.stdout

    def request(self, message: dict) -> dict:
        out = self.stream_out
        print(
            f"iteration {message['index']}: peak mu = {message['peak']:.6g}, "
            f"gamma = {message['gamma']:.6g}",
            file=out,
        )
        print("candidate fit orders:", file=out)
        for c in message["candidates"]:
            print(
                f"  order {c['order']}: fit error {c['fit_error']:.4g}",
                file=out,
            )
        while True:
            print("choose order, (a)ccept, or (s)top: ", end="", file=out)
            out.flush()
            line = self.stream_in.readline()
            if not line:
                return {"type": "stop"}
            token = line.strip().lower()
            if token in ("a", "accept"):
                return {"type": "accept"}
            if token in ("s", "stop"):
                return {"type": "stop"}
            try:
                return {"type": "choose", "order": int(token)}
            except ValueError:
                print(f"unrecognized input {token!r}", file=out)


# ---------------------------------------------------------------------------
# subcommands


def cmd_norm(args):
    sys_ = load_statespace(args.system)
    if not is_stable(sys_):
        raise UsageError("unstable system")
    print(f"{hinf_norm(sys_):.10g}")
    return EXIT_OK


def cmd_mu(args):
    grid = parse_grid(args.grid)
    structure = load_structure(args.structure)
    frd = load_response(args.system, grid)
    res = ssv_upper(frd, structure, bisect_tol=args.solver_tol)
    if args.output:
        _write_csv(args.output, ["omega", "mu_upper"], [grid.omegas, res.mu_upper])
    verdict = "yes" if res.peak <= 1.0 else "no"
    print(f"peak mu upper bound: {res.peak:.10g}")
    print(f"robust: {verdict}")
    return EXIT_OK


def cmd_hinfsyn(args):
    plant = load_plant(args.plant)
    if args.method == "bisect":
        result = hinf_syn_lmi_bisect(plant, bisect_tol=args.solver_tol)
    else:
        result = hinf_syn_lmi(plant)
    if args.output:
        _write_json(args.output, result.controller.to_dict())
    print(f"gamma: {result.gamma:.10g}")
    return EXIT_OK


def cmd_dkiter(args):
    spec = load_spec(args.spec)
    grid = parse_grid(args.grid)
    strategy = parse_strategy(args.strategy)
    if args.interactive:
        max_order = strategy[1] if isinstance(strategy, tuple) else 4
        strategy = InteractiveOrder(TerminalChannel(), max_order=max_order)
    elif isinstance(strategy, tuple):
        raise UsageError("interactive strategy requires --interactive")
    result = dk_iterate(
        spec, grid, strategy, synthesis=args.synthesis, ssv_tol=args.solver_tol
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "controller.json", result.controller.to_dict())
    for rec in result.records:
        _write_csv(
            out_dir / f"mu_iter{rec.index}.csv",
            ["omega", "mu_upper"],
            [rec.omega, rec.mu_upper],
        )
    report = {
        "converged": result.converged,
        "best_peak": result.peak,
        "iterations": [
            {
                "index": rec.index,
                "orders": list(rec.orders),
                "peak": rec.peak,
                "gamma": rec.gamma,
                "d_fit_errors": [float(e) for e in rec.d_fit_errors],
            }
            for rec in result.records
        ],
    }
    _write_json(out_dir / "report.json", report)
    for it in report["iterations"]:
        print(
            f"iteration {it['index']}: peak mu = {it['peak']:.6g}, "
            f"gamma = {it['gamma']:.6g}"
        )
    verdict = "yes" if result.converged else "no"
    print(f"best peak: {result.peak:.10g}")
    print(f"robust: {verdict}")
    return EXIT_OK


def cmd_ucover(args):
    grid = parse_grid(args.grid)
    try:
        form = ResidualForm(args.form)
    except ValueError:
        valid = ", ".join(f.value for f in ResidualForm)
        raise UsageError(f"unknown form {args.form!r}; valid forms: {valid}")
    nominal = load_response(args.nominal, grid)
    models = [load_response(p, grid) for p in args.models]
    try:
        residuals = residual_response(nominal, models, form)
    except GridMismatch as e:
        raise UsageError(str(e)) from e
    structure = WeightStructure(left=args.weight, right="identity")
    wr = weight_response(residuals, structure)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "max_sv.csv",
        ["omega", "max_sv"],
        [grid.omegas, max_sv_curve(residuals)],
    )
    _write_csv(
        out_dir / "weight_response.csv",
        ["omega"] + [f"w{i}" for i in range(wr.mags.shape[1])],
        [grid.omegas] + [wr.mags[:, i] for i in range(wr.mags.shape[1])],
    )
    weights = [
        fit_uncertainty_weight(grid, wr.entry(i), args.order)
        for i in range(wr.mags.shape[1])
    ]
    _write_json(out_dir / "weight.json", [w.to_dict() for w in weights])
    worst = max(w.fit_error for w in weights)
    print(f"fitted {len(weights)} weight entr{'y' if len(weights) == 1 else 'ies'}")
    print(f"worst fit error: {worst:.6g}")
    return EXIT_OK


def cmd_serve(args):
    from .service import run_service

    run_service(host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="musyn",
        description="Robust-control toolkit: mu-analysis, DK-iteration "
        "mu-synthesis, and uncertainty characterization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="H-infinity norm of a state-space system")
    p.add_argument("system", help="state-space JSON file")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("mu", help="SSV upper bound over a frequency grid")
    p.add_argument("system", help="closed-loop state-space JSON or response CSV")
    p.add_argument("--structure", required=True, help="block-structure JSON")
    p.add_argument("--grid", default="0.01:100:100:log", help="lo:hi:n:log|lin")
    p.add_argument("--solver-tol", type=float, default=1e-4)
    p.add_argument("-o", "--output", help="omega,mu_upper CSV path")
    p.set_defaults(func=cmd_mu)

    p = sub.add_parser("hinfsyn", help="H-infinity controller synthesis")
    p.add_argument("plant", help="generalized-plant JSON file")
    p.add_argument("--method", choices=("lmi", "bisect"), default="lmi")
    p.add_argument("--solver-tol", type=float, default=1e-3)
    p.add_argument("-o", "--output", help="controller JSON path")
    p.set_defaults(func=cmd_hinfsyn)

    p = sub.add_parser("dkiter", help="DK-iteration mu-synthesis")
    p.add_argument("spec", help="robust-performance spec JSON file")
    p.add_argument("--grid", default="0.01:100:100:log", help="lo:hi:n:log|lin")
    p.add_argument(
        "--strategy",
        default="fixed:order=4,iters=3",
        help="fixed:order=4,iters=3 | list:2,2,2 | interactive:max_order=4",
    )
    p.add_argument("--interactive", action="store_true", help="terminal prompts")
    p.add_argument("--synthesis", choices=("lmi", "bisect"), default="lmi")
    p.add_argument("--solver-tol", type=float, default=1e-4)
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_dkiter)

    p = sub.add_parser("ucover", help="multi-model uncertainty characterization")
    p.add_argument("--nominal", required=True, help="nominal model (JSON or CSV)")
    p.add_argument("--models", nargs="+", required=True, help="off-nominal models")
    p.add_argument(
        "--form",
        default="multiplicative_input",
        help="additive | multiplicative_input | inverse_multiplicative_input",
    )
    p.add_argument("--weight", choices=("scalar", "diagonal"), default="scalar")
    p.add_argument("--order", type=int, default=2, help="weight fit order")
    p.add_argument("--grid", default="0.01:100:100:log", help="lo:hi:n:log|lin")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_ucover)

    p = sub.add_parser("serve", help="run the local session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8760)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, 0 on --help; preserve both
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DimensionMismatch, GridMismatch, UnstableSystem) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MusynError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
