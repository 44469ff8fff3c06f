import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from secure_dmpc import ContinuousLTI, DiscreteLTI, RoomParams, build_3r2c, step, zoh_discretize
from secure_dmpc.errors import InvalidParameterError, ShapeError

from .conftest import ROOMS

# mpmath expm at 50 digits of the augmented Room I matrix over 900 s
ROOM_I_A = np.array([[6.9525603533698312e-27, 2.3855489895139284e-27],
                     [1.4909681184462052e-27, 5.1157808168222462e-28]])
ROOM_I_B = np.array([[0.002830188679245283], [0.00047169811320754717]])
ROOM_I_X1 = np.array([2.830188679245283, 0.47169811320754717])  # x=[15,15], u=1000


def taylor_zoh(A_c, B_c, t, order=30):
    """Scaling-and-squaring Taylor series of the augmented exponential."""
    n, m = B_c.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n], aug[:n, n:] = A_c, B_c
    aug *= t
    s = max(0, int(np.ceil(np.log2(max(np.abs(aug).sum(axis=1).max(), 1e-300)))) + 1)
    X = aug / 2 ** s
    E, term = np.eye(n + m), np.eye(n + m)
    for k in range(1, order):
        term = term @ X / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E[:n, :n], E[:n, n:]


def test_room_i_matrices():
    sys_c = build_3r2c(ROOMS["I"])
    np.testing.assert_allclose(sys_c.A_c, [[-0.084, 0.08], [0.05, -0.3]], rtol=1e-12)
    np.testing.assert_allclose(sys_c.B_c, [[2e-4], [0.0]], rtol=1e-12)
    np.testing.assert_array_equal(sys_c.C_c, [[1.0, 0.0]])


def test_unit_parameters():
    sys_c = build_3r2c(RoomParams(1, 1, 1, 1, 1))
    np.testing.assert_allclose(sys_c.A_c, [[-2, 1], [1, -2]])
    np.testing.assert_allclose(sys_c.B_c, [[10], [0]])


def test_room_ii_corner():
    # -(1/240 + 1/9.2)
    assert build_3r2c(ROOMS["II"]).A_c[0, 0] == pytest.approx(-0.112862318841, rel=1e-10)


@pytest.mark.parametrize("field", ["C_res", "Cs", "Rf", "Ri", "Ro"])
def test_nonpositive_parameter_rejected(field):
    kwargs = dict(C_res=1.0, Cs=1.0, Rf=1.0, Ri=1.0, Ro=1.0)
    kwargs[field] = 0.0
    with pytest.raises(InvalidParameterError):
        RoomParams(**kwargs)


@given(st.lists(st.floats(1e-5, 1e5), min_size=5, max_size=5))
def test_first_row_sum_nonpositive(vals):
    sys_c = build_3r2c(RoomParams(*vals))
    assert sys_c.A_c[0].sum() <= 0


def test_zoh_integrator():
    b = np.array([[1.0], [-3.0]])
    d = zoh_discretize(ContinuousLTI(np.zeros((2, 2)), b, np.eye(2)), 2.0 / 3600)
    np.testing.assert_allclose(d.A, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(d.B, 2 * b, rtol=1e-12)


def test_zoh_scalar():
    d = zoh_discretize(ContinuousLTI([[-1.0]], [[1.0]], [[1.0]]), 1.0 / 3600)
    assert d.A[0, 0] == pytest.approx(np.exp(-1), rel=1e-12)
    assert d.B[0, 0] == pytest.approx(1 - np.exp(-1), rel=1e-12)


def test_zoh_room_i_golden():
    d = zoh_discretize(build_3r2c(ROOMS["I"]), 0.25)
    np.testing.assert_allclose(d.A, ROOM_I_A, rtol=1e-10)
    np.testing.assert_allclose(d.B, ROOM_I_B, rtol=1e-10)
    assert d.Ts == 0.25


@pytest.mark.parametrize("name", sorted(ROOMS))
@pytest.mark.parametrize("Ts", [10 / 3600, 60 / 3600, 0.25])
def test_zoh_matches_taylor_oracle(name, Ts):
    sys_c = build_3r2c(ROOMS[name])
    d = zoh_discretize(sys_c, Ts)
    A, B = taylor_zoh(sys_c.A_c, sys_c.B_c, Ts * 3600)
    np.testing.assert_allclose(d.B, B, rtol=1e-10)
    np.testing.assert_allclose(d.A, A, rtol=1e-8, atol=1e-14 * np.abs(A).max())


@given(st.lists(st.floats(1e3, 1e5), min_size=2, max_size=2),
       st.lists(st.floats(1e-4, 1e-2), min_size=3, max_size=3),
       st.floats(1.0, 600.0))
@settings(max_examples=50)
def test_zoh_eigen_closed_form(caps, res, seconds):
    sys_c = build_3r2c(RoomParams(caps[0], caps[1], *res))
    lam, V = np.linalg.eig(sys_c.A_c)
    Vi = np.linalg.inv(V)
    A = (V @ np.diag(np.exp(lam * seconds)) @ Vi).real
    B = (V @ np.diag(np.expm1(lam * seconds) / lam) @ Vi @ sys_c.B_c).real
    d = zoh_discretize(sys_c, seconds / 3600)
    scale = np.abs(A).max()
    np.testing.assert_allclose(d.A, A, rtol=1e-10, atol=1e-10 * scale)
    np.testing.assert_allclose(d.B, B, rtol=1e-10, atol=1e-10 * np.abs(B).max())


@pytest.mark.parametrize("name", sorted(ROOMS))
def test_semigroup(name):
    sys_c = build_3r2c(ROOMS[name])
    Ts = 20 / 3600
    one, two = zoh_discretize(sys_c, Ts), zoh_discretize(sys_c, 2 * Ts)
    np.testing.assert_allclose(one.A @ one.A, two.A, atol=1e-9)


def test_zoh_rejects_nonpositive_period():
    with pytest.raises(InvalidParameterError):
        zoh_discretize(build_3r2c(ROOMS["I"]), 0.0)


def test_step_examples():
    ident = DiscreteLTI(np.eye(2), np.zeros((2, 1)), np.eye(2), 1.0)
    np.testing.assert_array_equal(step(ident, [3, 4], [1]), [3, 4])
    shift = DiscreteLTI([[0, 1], [0, 0]], [[0], [1]], np.eye(2), 1.0)
    np.testing.assert_array_equal(step(shift, [1, 2], [5]), [2, 5])


def test_step_room_i_golden():
    d = zoh_discretize(build_3r2c(ROOMS["I"]), 0.25)
    np.testing.assert_allclose(step(d, [15, 15], [1000]), ROOM_I_X1, rtol=1e-10)


def test_step_shape_error():
    d = DiscreteLTI(np.eye(2), np.zeros((2, 1)), np.eye(2), 1.0)
    with pytest.raises(ShapeError):
        step(d, [1, 2, 3], [0])
    with pytest.raises(ShapeError):
        step(d, [1, 2], [0, 0])


def test_models_are_immutable():
    d = zoh_discretize(build_3r2c(ROOMS["I"]), 0.25)
    with pytest.raises(ValueError):
        d.A[0, 0] = 1.0
