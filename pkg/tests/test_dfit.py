import numpy as np
import pytest

from musyn.dfit import (
    DScaleSystem,
    MagnitudeData,
    constant_weight,
    fit_dscale,
    fit_minphase_magnitude,
    poles_zeros,
)
from musyn.lti import FrequencyGrid, freq_response
from musyn.ssv import BlockKind, BlockStructure, DScaleResponse, UncertaintyBlock

GRID = FrequencyGrid(np.logspace(-2, 2, 40))


def mag_of(num, den):
    s = 1j * GRID.omegas
    return np.abs(np.polyval(num, s) / np.polyval(den, s))


def check_lhp(w):
    poles, zeros = poles_zeros(w)
    assert np.all(poles.real < 0)
    assert np.all(zeros.real < 0)


def test_flat_data_order_zero():
    data = MagnitudeData(GRID, np.full(len(GRID), 2.5))
    w = fit_minphase_magnitude(data, 0)
    assert w.fit_error <= 1e-6
    assert mag_of(w.num, w.den)[0] == pytest.approx(2.5, rel=1e-6)
    check_lhp(w)


def test_first_order_magnitude_recovered():
    target = mag_of([1.0, 10.0], [1.0, 0.1])
    w = fit_minphase_magnitude(MagnitudeData(GRID, target), 1)
    assert w.fit_error <= 1e-3
    assert np.allclose(mag_of(w.num, w.den), target, rtol=5e-3)
    check_lhp(w)


def test_lead_lag_fit_improves_with_order():
    target = mag_of(np.polymul([1.0, 3.0], [1.0, 30.0]), np.polymul([1.0, 0.3], [1.0, 300.0]))
    errs = []
    for order in (0, 1, 2, 3):
        w = fit_minphase_magnitude(MagnitudeData(GRID, target), order)
        errs.append(w.fit_error)
        check_lhp(w)
    assert errs[2] <= errs[0]
    assert errs[2] <= 1e-2


def test_overbound_mode():
    target = mag_of([1.0, 10.0], [1.0, 0.1])
    w = fit_minphase_magnitude(MagnitudeData(GRID, target), 1, "overbound")
    fitted = mag_of(w.num, w.den)
    assert np.all(fitted >= target * (1 - 1e-6))
    check_lhp(w)


def test_fit_is_realizable_and_matches_statespace():
    target = mag_of([1.0, 10.0], [1.0, 0.1])
    w = fit_minphase_magnitude(MagnitudeData(GRID, target), 2)
    resp = freq_response(w.tf, GRID).values[:, 0, 0]
    assert np.allclose(np.abs(resp), mag_of(w.num, w.den), rtol=1e-8)


def test_inverse_realizable():
    """Both D and D^-1 must be proper: the fit is biproper by construction."""
    target = mag_of([1.0, 10.0], [1.0, 0.1])
    w = fit_minphase_magnitude(MagnitudeData(GRID, target), 2)
    assert len(w.num) == len(w.den)


def test_constant_weight():
    w = constant_weight(0.0)
    assert w.fit_error == 0.0
    assert w.tf.n_states == 0


def test_fit_dscale_identity_response():
    st = BlockStructure(
        (
            UncertaintyBlock(BlockKind.FULL_COMPLEX, 1),
            UncertaintyBlock(BlockKind.FULL_COMPLEX, 1),
        )
    )
    d = DScaleResponse.identity(GRID, st)
    fitted = fit_dscale(d, 0)
    assert isinstance(fitted, DScaleSystem)
    resp = fitted.response(GRID)
    assert np.allclose(resp, np.tile(np.eye(2), (len(GRID), 1, 1)), atol=1e-6)


def test_fit_dscale_matches_varying_entry():
    st = BlockStructure(
        (
            UncertaintyBlock(BlockKind.FULL_COMPLEX, 1),
            UncertaintyBlock(BlockKind.FULL_COMPLEX, 1),
        )
    )
    mag = mag_of([1.0, 10.0], [1.0, 0.1])
    scales = np.zeros((len(GRID), 2, 2), dtype=complex)
    scales[:, 0, 0] = mag**2  # D entries are |d|^2-scaled Hermitian factors
    scales[:, 1, 1] = 1.0
    d = DScaleResponse(GRID, scales, st)
    fitted = fit_dscale(d, 2)
    assert max(fitted.fit_errors) <= 1e-2
    for w in fitted.entries:
        check_lhp(w)


def test_rejects_nonpositive_data():
    with pytest.raises(Exception):
        MagnitudeData(GRID, np.zeros(len(GRID)))
