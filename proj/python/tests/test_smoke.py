import math

import numpy as np
import pytest

import qasym


def test_bloch_ball_bound_is_three():
    m = qasym.builtin_model("bloch_ball")
    res = qasym.holevo_bound_iid(m, np.zeros(3), np.eye(3))
    assert res.value == pytest.approx(3.0, abs=1e-6)
    assert np.allclose(res.v_star, np.eye(3), atol=1e-6)


def test_spin_coherent_bound_is_four():
    m = qasym.builtin_model("spin_coherent")
    theta = np.array([0.2, 0.1])
    g = qasym.sld_fisher(m, theta)
    assert qasym.holevo_bound_iid(m, theta, g).value == pytest.approx(4.0, abs=1e-4)


def test_sld_of_bloch_ball_are_paulis():
    m = qasym.builtin_model("bloch_ball")
    ls = qasym.sld(m, np.zeros(3))
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    assert np.allclose(ls[0], sx, atol=1e-10)
    assert np.allclose(qasym.sld_fisher(m, np.zeros(3)), np.eye(3), atol=1e-10)


def test_commutation_operator_on_diagonal_state():
    rho = np.diag([0.8, 0.2]).astype(complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    assert np.allclose(qasym.commutation_apply(rho, sx), -0.6 * sy, atol=1e-12)
    assert not qasym.check_d_invariance(rho, [sx]).invariant
    assert qasym.check_d_invariance(rho, [sx, sy]).invariant


def test_purity():
    v = np.eye(2)
    s = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert qasym.purity(v + 1j * s)["is_pure"]
    assert qasym.purity(2 * v + 1j * s)["tr_rho_sq"] == pytest.approx(0.5)


def test_povm_demo_limit():
    (row,) = qasym.no_limit_povm_demo([1.0], 1_000_000)
    assert row["finite_n_prob"] == pytest.approx(math.exp(-0.25), abs=1e-4)
    assert row["m_max"] == pytest.approx(math.sqrt(2.0))


def test_james_stein_reproducible():
    a = qasym.james_stein_risk(np.zeros(3), 20_000, 11)
    b = qasym.james_stein_risk(np.zeros(3), 20_000, 11, workers=3)
    assert a == b
    assert a[0] < 3.0


def test_errors_are_mapped():
    m = qasym.builtin_model("bloch_ball")
    with pytest.raises(qasym.ValidationError):
        qasym.state_at(m, np.array([2.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        qasym.builtin_model("nope")
