"""Shared fixtures: the SISO multiplicative-uncertainty robust-performance
plant and its pure-performance (mixed-sensitivity) reduction."""

import warnings

import numpy as np
import pytest

from musyn.dkiter import RobustPerformanceSpec
from musyn.lti import GeneralizedPlant, StateSpace
from musyn.ssv import BlockKind, BlockStructure, UncertaintyBlock

warnings.filterwarnings("ignore")

Z = np.zeros


def _weights():
    G0 = StateSpace.from_tf([1.0], [1.0, 1.0])
    Wu = StateSpace.from_tf([0.25, 0.25], [0.1, 1.0])
    Wp = StateSpace.from_tf([0.5, 1.5], [1.0, 0.03])
    return G0, Wu, Wp


def make_rs_plant() -> GeneralizedPlant:
    """Inputs [w1, w2, u] -> outputs [z1, z2, y]: multiplicative input
    uncertainty (w1/z1 through Wu) with weighted-sensitivity performance
    (w2/z2 through Wp) around a first-order nominal."""
    G0, Wu, Wp = _weights()
    AG, BG, CG, DG = G0.A, G0.B, G0.C, G0.D
    Au, Bu, Cu, Du = Wu.A, Wu.B, Wu.C, Wu.D
    Ap, Bp, Cp, Dp = Wp.A, Wp.B, Wp.C, Wp.D
    A = np.block(
        [
            [AG, Z((1, 1)), Z((1, 1))],
            [Z((1, 1)), Au, Z((1, 1))],
            [-Bp @ CG, Z((1, 1)), Ap],
        ]
    )
    B = np.block(
        [
            [BG, Z((1, 1)), BG],
            [Z((1, 1)), Z((1, 1)), Bu],
            [-Bp @ DG, Bp, -Bp @ DG],
        ]
    )
    C = np.block(
        [
            [Z((1, 1)), Cu, Z((1, 1))],
            [-Dp @ CG, Z((1, 1)), Cp],
            [-CG, Z((1, 1)), Z((1, 1))],
        ]
    )
    D = np.block(
        [
            [Z((1, 1)), Z((1, 1)), Du],
            [-Dp @ DG, Dp, -Dp @ DG],
            [-DG, np.ones((1, 1)), -DG],
        ]
    )
    return GeneralizedPlant(StateSpace(A, B, C, D), 2, 1, 2, 1)


def make_rs_spec() -> RobustPerformanceSpec:
    unc = BlockStructure((UncertaintyBlock(BlockKind.FULL_COMPLEX, 1),))
    return RobustPerformanceSpec(make_rs_plant(), unc, 1, 1)


def make_perf_plant() -> GeneralizedPlant:
    """Mixed-sensitivity reduction: inputs [w, u] -> [z1, z2, y] with
    z1 = Wu u, z2 = Wp (w - G0 u), y = w - G0 u."""
    G0, Wu, Wp = _weights()
    AG, BG, CG, DG = G0.A, G0.B, G0.C, G0.D
    Au, Bu, Cu, Du = Wu.A, Wu.B, Wu.C, Wu.D
    Ap, Bp, Cp, Dp = Wp.A, Wp.B, Wp.C, Wp.D
    A = np.block(
        [
            [AG, Z((1, 1)), Z((1, 1))],
            [Z((1, 1)), Au, Z((1, 1))],
            [-Bp @ CG, Z((1, 1)), Ap],
        ]
    )
    B = np.block([[Z((1, 1)), BG], [Z((1, 1)), Bu], [Bp, -Bp @ DG]])
    C = np.block(
        [
            [Z((1, 1)), Cu, Z((1, 1))],
            [-Dp @ CG, Z((1, 1)), Cp],
            [-CG, Z((1, 1)), Z((1, 1))],
        ]
    )
    D = np.block([[Z((1, 1)), Du], [Dp, -Dp @ DG], [np.ones((1, 1)), -DG]])
    return GeneralizedPlant(StateSpace(A, B, C, D), 1, 1, 2, 1)


def make_perf_spec() -> RobustPerformanceSpec:
    return RobustPerformanceSpec(make_perf_plant(), None, 1, 2)


def write_frd_csv(path, frd):
    """Frequency-response CSV in the CLI ingestion format."""
    p, m = frd.values.shape[1:]
    header = ["omega"]
    for i in range(p):
        for j in range(m):
            header += [f"re_{i}_{j}", f"im_{i}_{j}"]
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for n, w in enumerate(frd.grid.omegas):
            row = [f"{w:.16g}"]
            for i in range(p):
                for j in range(m):
                    v = frd.values[n, i, j]
                    row += [f"{v.real:.16g}", f"{v.imag:.16g}"]
            f.write(",".join(row) + "\n")


@pytest.fixture
def rs_spec():
    return make_rs_spec()


@pytest.fixture
def perf_spec():
    return make_perf_spec()
