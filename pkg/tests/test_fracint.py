from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from jfp.basis import JFPParams, jfp_eval
from jfp.fracint import (FracIntMatrix, algorithm1, algorithm2, choose_precision, k_star_of, lambda_matrix,
                         load_matrix, pseudo_stabilized, simulate_error, simulate_error_alg1)
from jfp.precision import Irrational, cached_context

H = Fraction(1, 2)
LEG2 = JFPParams(0, 0, 0, 2)


# -- Lambda -------------------------------------------------------------------

def test_lambda_monomial_antiderivatives(ctx256):
    L = lambda_matrix(0, 1, 1, 6, ctx256)
    for n, v in enumerate(L.entries):
        assert abs(v - ctx256.mp.mpf(1) / (n + 1)) < 1e-70


def test_lambda_half_order_first_entry(ctx256):
    v = lambda_matrix(0, H, 1, 3, ctx256).entries[0]
    assert abs(v - 2 / ctx256.mp.sqrt(ctx256.mp.pi)) < 1e-70


def test_lambda_dense_layout(ctx256):
    D = lambda_matrix(0, 1, 2, 3, ctx256).to_dense()
    assert D.shape == (5, 3)
    assert [(i, j) for i in range(5) for j in range(3) if D[i, j] != 0] == [(2, 0), (3, 1), (4, 2)]


def test_lambda_rejects_bad_delta(ctx256):
    with pytest.raises(ValueError):
        lambda_matrix(-1, H, 1, 3, ctx256)


def test_k_star():
    assert k_star_of(Fraction(2), H) == 1
    assert k_star_of(Fraction(6), Fraction(1, 3)) == 2
    assert k_star_of(Irrational("pi"), Irrational("1/pi")) == 1
    with pytest.raises(ValueError):
        k_star_of(Fraction(3), H)


# -- Algorithm 1 ----------------------------------------------------------------

def test_algorithm1_column0_closed_form(ctx256):
    A = algorithm1(LEG2, H, 6, ctx256)
    c = ctx256.mp.sqrt(2 / ctx256.mp.pi)
    assert abs(A[0, 0] - c) < 1e-70
    assert abs(A[1, 0] - c) < 1e-70
    assert all(A[i, 0] == 0 for i in range(2, A.shape[0]))


def test_algorithm1_column_pointwise(ctx256):
    # I^mu [Q_n](x) by quadrature against the column expansion
    mp = ctx256.mp
    P = JFPParams(0, 0, Fraction(-1, 2), 3)
    A = algorithm1(P, Fraction(1, 3), 8, ctx256)
    x = mp.mpf("0.4")

    def q(n, t):
        y = 2 * mp.cbrt((1 + t) / 2) - 1
        return mp.legendre(n, y) / mp.sqrt(1 + y)

    for n in (0, 3, 6):
        direct = mp.quad(lambda t: mp.cbrt(x - t) ** -2 * q(n, t), [-1, x]) / mp.gamma(mp.mpf(1) / 3)
        series = sum(A[m, n] * jfp_eval(P, m, x, ctx256) for m in range(n + 2))
        assert abs(series - direct) < 1e-25


@pytest.mark.parametrize("params,mu", [(LEG2, H), (JFPParams(0, 0, 0, 3), Fraction(2, 3)),
                                       (JFPParams(0, 0, 0, Irrational("pi")), Irrational("1/pi"))])
def test_zero_pattern(params, mu, ctx256):
    A = algorithm1(params, mu, 12, ctx256)
    assert A.bandwidth_ok()
    k = A.k_star
    assert all(A[j + k, j] != 0 for j in range(12))


def test_algorithm2_zero_pattern(ctx256):
    A = algorithm2(JFPParams(0, 0, 0, 3), Fraction(2, 3), 20, ctx256)
    assert A.k_star == 2
    assert A.bandwidth_ok()


def test_algorithm2_needs_integer_p(ctx256):
    with pytest.raises(ValueError):
        algorithm2(JFPParams(0, 0, 0, Fraction(5, 2)), Fraction(2, 5), 6, ctx256)
    with pytest.raises(ValueError):
        algorithm2(JFPParams(0, 0, H, 2), H, 6, ctx256)


def test_semigroup_algorithm1(ctx256):
    N = 40
    A = algorithm1(LEG2, H, N + 1, ctx256).columns
    C = algorithm1(LEG2, 1, N, ctx256).columns
    prod = A[:N, : N + 1].dot(A[: N + 1, :N])
    assert max(abs(v) for v in (prod - C[:N, :N]).flat) < 1e-20


def test_commutation_pair_agrees(ctx256):
    A = algorithm2(LEG2, H, 50, ctx256).columns
    B = algorithm2(LEG2, H, 50, ctx256, pair="commute").columns
    assert max(abs(a - b) for a, b in zip(A.flat, B.flat)) < 1e-30


def test_algorithm_agreement_small(ctx256):
    A = algorithm1(LEG2, H, 40, ctx256).columns
    B = algorithm2(LEG2, H, 40, ctx256).columns
    assert max(abs(a - b) for a, b in zip(A.flat, B.flat)) < 1e-40


def test_alg2_error_growth_monotone():
    q = 80
    N = 120
    lo = algorithm2(LEG2, H, N, cached_context(q)).columns
    hi = algorithm2(LEG2, H, N, cached_context(2 * q + 200)).columns
    mp = cached_context(2 * q + 200).mp
    err = np.array([float(max(abs(mp.mpf(lo[i, j]) - hi[i, j]) for i in range(lo.shape[0]))) for j in range(N)])
    smoothed = np.maximum.accumulate(np.array([err[max(0, j - 15): j + 1].max() for j in range(N)]))
    moving = np.array([err[max(0, j - 15): j + 1].max() for j in range(N)])
    assert np.all(np.diff(smoothed) >= 0)
    # the 16-column moving max is already nondecreasing past the start-up
    assert np.all(np.diff(moving[32:]) >= 0)


# -- error simulation ---------------------------------------------------------

def test_simulation_normalised():
    m = simulate_error(LEG2, H, 53, m_max=60)
    assert m.profile[0] == 0.0
    assert m.profile[1] == 0.0
    assert m.profile[-1] > 50  # exponential growth
    r = m.growth_rate(window=32)
    assert r[-1] > 1


def test_simulation_tracks_actual_error():
    # E(q, n; e0) / e0 and the simulated profile agree within a factor 100
    n_max = 150
    m = simulate_error(LEG2, H, 53, m_max=n_max)
    lo = algorithm2(LEG2, H, n_max + 1, cached_context(53)).columns
    ref = cached_context(600)
    hi = algorithm2(LEG2, H, n_max + 1, ref).columns
    err = np.array([float(max(abs(ref.mp.mpf(lo[i, j]) - hi[i, j]) for i in range(lo.shape[0])))
                    for j in range(n_max + 1)])
    e0 = 2.0**-53
    ratio = np.log10(err[2:] / e0) - m.profile[2:] * math.log10(2)
    assert np.all(np.abs(ratio) <= 2)


def test_simulation_scaling_law():
    a = simulate_error(LEG2, H, 53, m_max=100)
    b = simulate_error(LEG2, H, 106, m_max=200)
    for n in range(10, 101, 10):
        assert b.profile[2 * n] == pytest.approx(2 * a.profile[n], rel=0.2)


def test_simulation_alg1_nondecreasing():
    m = simulate_error_alg1(JFPParams(0, 0, 0, Irrational("pi")), Irrational("1/pi"), 53, m_max=24)
    assert np.all(np.diff(m.profile) >= 0)
    assert len(m.profile) >= 25


# -- precision selection --------------------------------------------------------

@pytest.fixture(scope="module")
def model():
    return simulate_error(LEG2, H, 53, m_max=300)


def test_choose_precision_negligible_growth():
    from jfp.fracint import ErrorModel

    flat = ErrorModel(53, np.zeros(201), "alg2")
    assert choose_precision(200, 2.0**-53, 53, flat) == 54


def test_choose_precision_monotone(model):
    qs = [choose_precision(N, 1e-16, 53, model) for N in (50, 100, 150, 200, 250, 300)]
    assert qs == sorted(qs)
    qd = [choose_precision(150, d, 53, model) for d in (1e-8, 1e-16, 1e-24, 1e-32)]
    assert qd == sorted(qd)


def test_choose_precision_rejects_delta(model):
    with pytest.raises(ValueError):
        choose_precision(10, 2.0, 53, model)


def test_pseudo_stabilized_meets_delta():
    delta = 1e-16
    A = pseudo_stabilized(LEG2, H, 200, delta)
    ref = pseudo_stabilized(LEG2, H, 200, precision=2 * A.precision)
    mp = cached_context(2 * A.precision).mp
    err = max(abs(mp.mpf(a) - b) for a, b in zip(A.columns.flat, ref.columns.flat))
    assert err <= delta
    assert A.error_estimate <= delta


def test_routing():
    assert pseudo_stabilized(LEG2, H, 20).algorithm == "alg2"
    irr = pseudo_stabilized(JFPParams(0, 0, 0, Irrational("pi")), Irrational("1/pi"), 20)
    assert irr.algorithm == "alg1"
    with pytest.raises(ValueError):
        pseudo_stabilized(JFPParams(0, 0, 0, Irrational("pi")), Irrational("1/pi"), 20, algorithm="alg2")


def test_precision_grows_linearly():
    q = {N: pseudo_stabilized(LEG2, H, N, 1e-16).precision for N in (100, 200)}
    assert q[200] / q[100] <= 2.25


# -- persistence -------------------------------------------------------------

def test_save_load_round_trip(tmp_path):
    A = pseudo_stabilized(JFPParams(0, 0, -1, 2), H, 30, 1e-20)
    path = tmp_path / "m.json"
    from jfp.fracint import save_matrix

    save_matrix(A, path)
    B = load_matrix(path)
    assert isinstance(B, FracIntMatrix)
    assert (B.params, B.mu, B.k_star, B.precision, B.algorithm) == (A.params, A.mu, A.k_star, A.precision,
                                                                      A.algorithm)
    assert all(a == b for a, b in zip(A.columns.flat, B.columns.flat))


def test_save_load_irrational(tmp_path):
    A = algorithm1(JFPParams(0, 0, 0, Irrational("pi")), Irrational("1/pi"), 6, cached_context(128))
    from jfp.fracint import save_matrix

    save_matrix(A, tmp_path / "i.json")
    B = load_matrix(tmp_path / "i.json")
    assert isinstance(B.mu, Irrational) and isinstance(B.params.p, Irrational)
    assert all(a == b for a, b in zip(A.columns.flat, B.columns.flat))
