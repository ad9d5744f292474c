import numpy as np
import pytest

from musyn.errors import NotDetectable, NotStabilizable
from musyn.hinf import hinf_syn_lmi, hinf_syn_lmi_bisect
from musyn.lti import GeneralizedPlant, StateSpace, hinf_norm, is_stable, lft_lower


def sensitivity_plant():
    """z = w - G u, y = w - G u with G = 1/(s+1); optimal gamma is 1
    (S + T = 1 forces |S| to reach 1 somewhere)."""
    G = StateSpace.from_tf([1.0], [1.0, 1.0])
    A = G.A
    B = np.hstack([np.zeros((1, 1)), G.B])
    C = np.vstack([-G.C, -G.C])
    D = np.array([[1.0, 0.0], [1.0, 0.0]])
    return GeneralizedPlant(StateSpace(A, B, C, D), 1, 1, 1, 1)


def random_plant(rng):
    n = int(rng.integers(1, 5))
    n_w = int(rng.integers(1, 3))
    n_u = int(rng.integers(1, 3))
    n_z = int(rng.integers(1, 3))
    n_y = int(rng.integers(1, 3))
    A = rng.standard_normal((n, n))
    A -= (np.max(np.linalg.eigvals(A).real) + 0.5) * np.eye(n)
    B = rng.standard_normal((n, n_w + n_u))
    C = rng.standard_normal((n_z + n_y, n))
    D = rng.standard_normal((n_z + n_y, n_w + n_u)) * 0.3
    D[n_z:, n_w:] = 0.0
    return GeneralizedPlant(StateSpace(A, B, C, D), n_w, n_u, n_z, n_y)


def test_sensitivity_gamma_is_one():
    result = hinf_syn_lmi(sensitivity_plant())
    assert result.gamma == pytest.approx(1.0, rel=5e-3)
    clp = lft_lower(sensitivity_plant(), result.controller)
    assert is_stable(clp)
    assert hinf_norm(clp) <= result.gamma * 1.001


def test_bisect_agrees_with_direct():
    P = sensitivity_plant()
    g1 = hinf_syn_lmi(P).gamma
    g2 = hinf_syn_lmi_bisect(P, bisect_tol=1e-4).gamma
    assert abs(g1 - g2) <= 0.02 * g1


def test_random_plants_achieve_bound():
    rng = np.random.default_rng(14)
    done = 0
    while done < 3:
        P = random_plant(rng)
        try:
            result = hinf_syn_lmi(P)
        except (NotStabilizable, NotDetectable):
            continue
        done += 1
        clp = lft_lower(P, result.controller)
        assert is_stable(clp)
        assert hinf_norm(clp) <= result.gamma * 1.001


def test_d22_loop_shift():
    """Nonzero y<-u feedthrough must be absorbed into the controller."""
    P0 = sensitivity_plant()
    D = P0.ss.D.copy()
    D[1, 1] = 0.4
    P = GeneralizedPlant(StateSpace(P0.ss.A, P0.ss.B, P0.ss.C, D), 1, 1, 1, 1)
    result = hinf_syn_lmi(P)
    clp = lft_lower(P, result.controller)
    assert is_stable(clp)
    assert hinf_norm(clp) <= result.gamma * 1.001


def test_static_plant_synthesis():
    # static P: z = 0.5 w + u, y = w; K = -0.5 y zeroes the channel
    P = GeneralizedPlant(
        StateSpace.static_gain(np.array([[0.5, 1.0], [1.0, 0.0]])), 1, 1, 1, 1
    )
    result = hinf_syn_lmi(P)
    assert result.gamma <= 0.05


def test_not_stabilizable_raises():
    # unstable mode unreachable from u
    A = np.diag([1.0, -1.0])
    B = np.array([[1.0, 0.0], [0.0, 1.0]])  # u only drives the stable state
    C = np.eye(2)
    D = np.zeros((2, 2))
    P = GeneralizedPlant(StateSpace(A, B, C, D), 1, 1, 1, 1)
    with pytest.raises(NotStabilizable):
        hinf_syn_lmi(P)
