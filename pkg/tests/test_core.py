import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from orka.core import (
    INF,
    ObjectEstimate,
    as_data,
    as_shifts,
    build_kernel,
    is_normalized,
    kernel_entry_hyperbolic,
    kernel_entry_spectral,
    lipschitz_ok,
    mean_projection,
    normalize_columns,
    penalty_matrix,
    phi_of_mu,
    shift_columns,
    solve_shifted_quadratic,
    system_diagonals,
    total_change,
)
from orka.objective import full_objective
from orka.oracle import dense_kernel

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def matrix_and_shifts(draw, max_m=9, max_n=7):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    a = draw(arrays(np.float64, (m, n), elements=finite))
    lam = draw(arrays(np.int64, n, elements=st.integers(-50, 50)))
    return a, lam


# --- shift operator ---------------------------------------------------------

def test_shift_moves_column_down():
    a = np.arange(12.0).reshape(4, 3)
    out = shift_columns(a, [0, 1, -1])
    assert np.array_equal(out[:, 0], a[:, 0])
    assert np.array_equal(out[:, 1], np.roll(a[:, 1], 1))
    assert np.array_equal(out[:, 2], np.roll(a[:, 2], -1))


def test_shift_identity_and_full_period():
    a = np.random.default_rng(0).standard_normal((5, 4))
    assert np.array_equal(shift_columns(a, 0), a)
    assert np.array_equal(shift_columns(a, np.full(4, 5)), a)


def test_shift_2d_frames():
    t = np.random.default_rng(1).standard_normal((4, 5, 3))
    lam = np.array([[0, 0], [1, -2], [3, 7]])
    out = shift_columns(t, lam)
    for k in range(3):
        assert np.array_equal(out[..., k], np.roll(t[..., k], tuple(lam[k]), axis=(0, 1)))


def test_shift_length_mismatch():
    with pytest.raises(ValueError):
        shift_columns(np.zeros((3, 4)), [0, 1, 2])


@given(matrix_and_shifts())
def test_shift_inverse_and_norm(case):
    a, lam = case
    s = shift_columns(a, lam)
    assert np.array_equal(shift_columns(s, -lam), a)
    assert math.isclose(np.linalg.norm(s), np.linalg.norm(a), rel_tol=1e-13, abs_tol=1e-300)


@given(matrix_and_shifts(), st.data())
def test_shift_composition_and_inner_product(case, data):
    a, lam = case
    nu = data.draw(arrays(np.int64, lam.shape, elements=st.integers(-20, 20)))
    b = data.draw(arrays(np.float64, a.shape, elements=finite))
    assert np.array_equal(shift_columns(shift_columns(a, nu), lam), shift_columns(a, lam + nu))
    lhs = np.sum(shift_columns(a, lam) * shift_columns(b, lam))
    assert math.isclose(lhs, np.sum(a * b), rel_tol=1e-9, abs_tol=1e-6)


# --- validation helpers -------------------------------------------------------

def test_as_data_rejects_bad_input():
    with pytest.raises(ValueError):
        as_data(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        as_data(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        as_data([1.0, 2.0])
    assert as_data([[1, 2]]).dtype == np.float64


def test_normalize_columns():
    d = np.array([[3.0, 0.0, 0.1], [4.0, 0.0, 0.0]])
    out = normalize_columns(d)
    assert np.allclose(np.linalg.norm(out, axis=0), [1.0, 0.0, 1.0])
    assert is_normalized(out)
    assert not is_normalized(d)


def test_as_shifts_and_lipschitz():
    assert as_shifts([0, 1, 2], 3, 1).dtype == np.int64
    with pytest.raises(ValueError):
        as_shifts([0, 1], 3, 1)
    with pytest.raises(ValueError):
        as_shifts([0.5, 1, 2], 3, 1)
    assert lipschitz_ok([0, 1, 0, -1], 1)
    assert not lipschitz_ok([0, 2], 1)
    assert lipschitz_ok(np.array([[0, 0], [1, -1], [2, 0]]), 1)


# --- kernel -------------------------------------------------------------------

def test_phi_at_half():
    assert phi_of_mu(0.5) == pytest.approx(1.31695789692, abs=1e-11)


def test_kernel_single_column():
    assert kernel_entry_hyperbolic(1, 1, 1, 3.0) == 1.0
    assert kernel_entry_spectral(1, 1, 1, 3.0) == 1.0


@pytest.mark.parametrize("n", [2, 5, 16, 64])
@pytest.mark.parametrize("mu", [1e-3, 0.37, 1.0, 25.0, 1e3])
def test_kernel_forms_match_dense(n, mu):
    j, k = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
    dense = dense_kernel(n, mu)
    assert np.allclose(kernel_entry_spectral(j, k, n, mu), dense, rtol=0, atol=1e-10)
    assert np.allclose(kernel_entry_hyperbolic(j, k, n, mu), dense, rtol=0, atol=1e-10)


def test_hyperbolic_limit_and_overflow():
    assert kernel_entry_hyperbolic(2, 5, 8, 1e9) == pytest.approx(1 / 8, rel=1e-6)
    with pytest.raises(OverflowError):
        kernel_entry_hyperbolic(1, 1, 2000, 1e-4)
    # the spectral form is fine in the same regime
    assert np.isfinite(kernel_entry_spectral(1, 1, 2000, 1e-4))


def test_kernel_special_mu():
    assert np.array_equal(build_kernel(4, 0.0, 3).dense(), np.eye(4))
    assert np.allclose(build_kernel(5, INF, 4).dense(), 1 / 5)
    assert np.allclose(kernel_entry_spectral(np.arange(1, 4), 2, 3, 0.0), [0, 1, 0], atol=1e-12)


def test_build_kernel_band_and_clamp():
    kw = build_kernel(16, 1.0, 15)
    assert np.allclose(kw.dense(), dense_kernel(16, 1.0), atol=1e-12)
    narrow = build_kernel(6, 2.0, 2)
    full = dense_kernel(6, 2.0)
    w = narrow.dense()
    assert np.allclose(w[np.abs(np.subtract.outer(range(6), range(6))) <= 2],
                       full[np.abs(np.subtract.outer(range(6), range(6))) <= 2], atol=1e-12)
    assert w[0, 5] == 0.0 and narrow.weight(0, 5) == 0.0
    assert narrow.weight(3, 1) == narrow.weight(1, 3) == pytest.approx(full[3, 1])
    assert build_kernel(4, 1.0, 99).band_width == 3


@pytest.mark.parametrize("n", [1, 3, 32, 128])
@pytest.mark.parametrize("mu", [1e-3, 1.0, 1e3])
def test_kernel_symmetric_nonnegative_rows_sum_to_one(n, mu):
    w = build_kernel(n, mu, n - 1).dense()
    assert np.array_equal(w, w.T)
    assert np.all(w >= 0)
    assert np.abs(w.sum(axis=1) - 1).max() <= 1e-10


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_kernel_more_smoothing_flattens(mu1, mu2):
    lo, hi = sorted((mu1, mu2))
    assert kernel_entry_spectral(1, 1, 8, hi) <= kernel_entry_spectral(1, 1, 8, lo) + 1e-12


# --- total change and the quadratic solve ------------------------------------------

def test_total_change_examples():
    assert total_change(np.ones((3, 4))) == 0.0
    assert total_change(np.ones((3, 1))) == 0.0
    assert total_change(np.eye(2)) == 2.0


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 32)), elements=finite))
def test_penalty_identity(u):
    t = penalty_matrix(u.shape[1])
    via_t = float(np.einsum("ij,jk,ik->", u, t, u))
    assert math.isclose(total_change(u), via_t, rel_tol=1e-10, abs_tol=1e-8)


def test_penalty_matrix_shape():
    assert np.array_equal(penalty_matrix(1), [[0.0]])
    assert np.array_equal(penalty_matrix(3), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    diag, off = system_diagonals(3, 2.0)
    assert np.array_equal(diag, [3, 5, 3]) and np.array_equal(off, [-2, -2])


def test_solve_mu_zero_is_alignment():
    rng = np.random.default_rng(2)
    d = rng.standard_normal((6, 5))
    lam = np.array([0, 1, 2, 1, 0])
    assert np.allclose(solve_shifted_quadratic(d, lam, 0.0), shift_columns(d, -lam))


def test_solve_identical_columns():
    d = np.repeat(np.random.default_rng(3).standard_normal((7, 1)), 5, axis=1)
    assert np.allclose(solve_shifted_quadratic(d, np.zeros(5, int), 13.0), d, atol=1e-12)


@pytest.mark.parametrize("mu", [0.01, 10.0, 1e4])
def test_solve_matches_dense(mu):
    rng = np.random.default_rng(4)
    d = rng.standard_normal((8, 6))
    lam = np.array([0, -1, 0, 1, 2, 2])
    x = np.linalg.solve(np.eye(6) + mu * penalty_matrix(6), shift_columns(d, -lam).T).T
    assert np.allclose(solve_shifted_quadratic(d, lam, mu), x, rtol=0, atol=1e-10)


def test_solve_inf_is_mean_projection():
    rng = np.random.default_rng(5)
    d = rng.standard_normal((4, 3))
    lam = np.array([0, 1, 1])
    assert np.array_equal(solve_shifted_quadratic(d, lam, INF), mean_projection(d, lam))


def test_mean_projection_examples():
    e = np.eye(3)
    u = mean_projection(e[:, :2], [0, 1])
    assert np.allclose(u, e[:, [0, 0]])
    d = np.random.default_rng(6).standard_normal((4, 3))
    assert np.allclose(mean_projection(d, [0, 0, 0]), d.mean(axis=1, keepdims=True) * np.ones(3))


def test_gradient_vanishes_at_solution():
    rng = np.random.default_rng(7)
    d = rng.standard_normal((6, 5))
    lam = np.array([0, 1, 0, -1, -1])
    mu = 3.0
    u = solve_shifted_quadratic(d, lam, mu)
    h = 1e-6
    for _ in range(10):
        i, j = rng.integers(6), rng.integers(5)
        e = np.zeros_like(u)
        e[i, j] = h
        g = (full_objective(u + e, lam, d, mu) - full_objective(u - e, lam, d, mu)) / (2 * h)
        assert abs(g) <= 1e-4 * np.linalg.norm(d)


def test_object_estimate_assemble():
    u = np.arange(6.0).reshape(3, 2)
    obj = ObjectEstimate(u=u, lam=np.array([0, 1]), objective=0.0)
    assert np.array_equal(obj.assemble(), shift_columns(u, [0, 1]))
    assert obj.energy == float(np.sum(u**2))
