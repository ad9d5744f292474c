import numpy as np
import pytest

from musyn.errors import NotHermitian
from musyn.sdp import SdpProblem, realify_hermitian


def test_minimize_scalar_lower_bound():
    prob = SdpProblem()
    x = prob.scalar("x")
    prob.require_psd(np.array([[1.0]]) * x - np.eye(1))
    prob.minimize(x)
    sol = prob.solve()
    assert sol.ok
    assert sol.objective == pytest.approx(1.0, abs=1e-6)


def test_joint_infeasible():
    prob = SdpProblem()
    x = prob.scalar("x")
    prob.require_psd(np.array([[1.0]]) * x - np.eye(1))
    prob.require_psd(np.array([[-1.0]]) * x - np.eye(1))
    sol = prob.solve()
    assert not sol.ok


def test_trace_minimization():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((3, 3))
    A = B + B.T
    prob = SdpProblem()
    X = prob.symmetric("X", 3)
    prob.require_psd(X - A)
    import cvxpy as cp

    prob.minimize(cp.trace(X))
    sol = prob.solve()
    assert sol.ok
    assert sol.objective == pytest.approx(np.trace(A), abs=1e-6)


def test_realify_example():
    H = np.array([[1.0, 1j], [-1j, 1.0]])
    E = realify_hermitian(H)
    eigs = np.sort(np.linalg.eigvalsh(E))
    assert np.allclose(eigs, [0.0, 0.0, 2.0, 2.0], atol=1e-12)


def test_realify_real_symmetric_is_block_diagonal():
    H = np.array([[2.0, 1.0], [1.0, 3.0]])
    E = realify_hermitian(H)
    assert np.allclose(E[:2, :2], H) and np.allclose(E[2:, 2:], H)
    assert np.allclose(E[:2, 2:], 0.0)


def test_realify_eigenvalues_duplicated():
    rng = np.random.default_rng(1)
    for q in (2, 3, 5):
        B = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
        H = B + B.conj().T
        want = np.sort(np.repeat(np.linalg.eigvalsh(H), 2))
        got = np.sort(np.linalg.eigvalsh(realify_hermitian(H)))
        assert np.allclose(got, want, atol=1e-10)


def test_realify_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        realify_hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_solve_deterministic_objective():
    def build(prob):
        x = prob.scalar("x")
        prob.require_psd(np.array([[1.0]]) * x - 2 * np.eye(1))
        prob.minimize(x)
        return prob

    vals = []
    for _ in range(2):
        prob = SdpProblem()
        build(prob)
        vals.append(prob.solve().objective)
    assert vals[0] == pytest.approx(vals[1], abs=1e-7)
