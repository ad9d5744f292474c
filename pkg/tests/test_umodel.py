import numpy as np
import pytest

from musyn.errors import DimensionMismatch, RankDeficient
from musyn.lti import FrequencyGrid, FrequencyResponseData
from musyn.umodel import (
    ResidualForm,
    WeightStructure,
    fit_uncertainty_weight,
    max_sv_curve,
    reconstruct_offnominal,
    residual_response,
    weight_response,
)

GRID = FrequencyGrid(np.logspace(-1, 1, 12))


def frd(values):
    return FrequencyResponseData(GRID, np.asarray(values, dtype=complex))


def scalar_frd(scalar):
    return frd(np.full((len(GRID), 1, 1), scalar))


def test_residual_forms_scalar_oracle():
    """G0 = 2, Gk = 3: additive E = 1; multiplicative 2E = 1 -> 0.5;
    inverse-multiplicative 3E = -1 -> -1/3."""
    G0, Gk = scalar_frd(2.0), scalar_frd(3.0)
    add = residual_response(G0, [Gk], ResidualForm.ADDITIVE)[0]
    mul = residual_response(G0, [Gk], ResidualForm.MULTIPLICATIVE_INPUT)[0]
    inv = residual_response(G0, [Gk], ResidualForm.INVERSE_MULTIPLICATIVE_INPUT)[0]
    assert np.allclose(add.values, 1.0)
    assert np.allclose(mul.values, 0.5)
    assert np.allclose(inv.values, -1.0 / 3.0)


@pytest.mark.parametrize("form", list(ResidualForm))
def test_round_trip(form):
    rng = np.random.default_rng(5)
    G0 = frd(rng.standard_normal((len(GRID), 2, 2)) + 1j * rng.standard_normal((len(GRID), 2, 2)))
    E = frd(0.3 * (rng.standard_normal((len(GRID), 2, 2)) + 1j * rng.standard_normal((len(GRID), 2, 2))))
    Gk = reconstruct_offnominal(G0, E, form)
    back = residual_response(G0, [Gk], form)[0]
    assert np.max(np.abs(back.values - E.values)) <= 1e-8


def test_scalar_weight_collapses_to_max_sv():
    rng = np.random.default_rng(9)
    residuals = [
        frd(rng.standard_normal((len(GRID), 2, 2)) + 1j * rng.standard_normal((len(GRID), 2, 2)))
        for _ in range(4)
    ]
    wr = weight_response(residuals, WeightStructure("scalar", "identity"))
    oracle = max_sv_curve(residuals)
    assert np.allclose(wr.mags[:, 0], oracle, atol=1e-6)


def test_diagonal_weight_dominates_residuals():
    rng = np.random.default_rng(11)
    residuals = [
        frd(rng.standard_normal((len(GRID), 2, 2)) + 1j * rng.standard_normal((len(GRID), 2, 2)))
        for _ in range(3)
    ]
    wr = weight_response(residuals, WeightStructure("diagonal", "identity"))
    # X = diag(w^2) >= E E* for every model and frequency
    for i in range(len(GRID)):
        X = np.diag(wr.mags[i] ** 2)
        for r in residuals:
            E = r.values[i]
            eig = np.linalg.eigvalsh(X - E @ E.conj().T)
            assert eig.min() >= -1e-6


def test_diagonal_no_larger_than_scalar_trace():
    rng = np.random.default_rng(13)
    residuals = [
        frd(rng.standard_normal((len(GRID), 2, 2)) + 1j * rng.standard_normal((len(GRID), 2, 2)))
        for _ in range(3)
    ]
    ws = weight_response(residuals, WeightStructure("scalar", "identity"))
    wd = weight_response(residuals, WeightStructure("diagonal", "identity"))
    assert np.all(
        np.sum(wd.mags**2, axis=1) <= np.sum(ws.mags**2, axis=1) + 1e-6
    )


def test_rank_deficient_raises():
    G0 = frd(np.zeros((len(GRID), 1, 1)))
    Gk = scalar_frd(1.0)
    with pytest.raises(RankDeficient):
        residual_response(G0, [Gk], ResidualForm.MULTIPLICATIVE_INPUT)


def test_identical_models_give_zero_weight():
    G0 = scalar_frd(2.0)
    residuals = residual_response(G0, [G0, G0], ResidualForm.ADDITIVE)
    wr = weight_response(residuals, WeightStructure("scalar", "identity"))
    # zero up to the SDP solver's tolerance (magnitudes are sqrt of the LMI
    # variable, so ~1e-8 feasibility shows up as ~1e-4 here)
    assert np.all(wr.mags <= 1e-4)
    # exactly-zero data short-circuits to the zero constant weight
    w = fit_uncertainty_weight(GRID, np.zeros(len(GRID)), 2)
    assert w.tf.n_states == 0 and w.order == 0


def test_fitted_weight_overbounds():
    rng = np.random.default_rng(21)
    residuals = [
        frd(rng.standard_normal((len(GRID), 2, 2)) + 1j * rng.standard_normal((len(GRID), 2, 2)))
        for _ in range(4)
    ]
    wr = weight_response(residuals, WeightStructure("scalar", "identity"))
    w = fit_uncertainty_weight(GRID, wr.mags[:, 0], 2)
    s = 1j * GRID.omegas
    wmag = np.abs(np.polyval(w.num, s) / np.polyval(w.den, s))
    assert np.all(wmag >= wr.mags[:, 0] * (1 - 1e-6))


def test_weight_structure_validation():
    with pytest.raises(DimensionMismatch):
        WeightStructure("scalar", "diagonal")  # both sides free
    with pytest.raises(DimensionMismatch):
        WeightStructure("identity", "identity")  # none free
    assert WeightStructure("identity", "diagonal").free_side == "right"
