from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from jfp.heatwave import (HeatWaveError, fourier_decompose, heatwave_p, mode_problem, evaluate_xt,
                          solve_heatwave)
from jfp.mittag_leffler import ml_eval
from jfp.solver import solve_auto

M = 256
XS = 2 * np.pi * np.arange(M) / M


def datum(x):
    return np.exp(-np.cos(2 * x) + np.sin(x) / 2) - 2 * np.sin(np.sin(x))


@pytest.fixture(scope="module")
def ic():
    return fourier_decompose(datum(XS))


@pytest.fixture(scope="module")
def heat(ic):
    return solve_heatwave(ic, 1, 1.0)


@pytest.fixture(scope="module")
def half(ic):
    return solve_heatwave(ic, Fraction(1, 2), 1.0)


# -- Fourier data --------------------------------------------------------------

def test_cosine_coefficients():
    d = fourier_decompose(np.cos(XS))
    assert d.N_f == 1
    assert d.coefficient(1) == pytest.approx(0.5, abs=1e-16)
    assert d.coefficient(-1) == pytest.approx(0.5, abs=1e-16)
    assert abs(d.coefficient(0)) < 1e-16
    assert d.coefficient(5) == 0


def test_datum_truncation(ic):
    assert ic.N_f == 29
    assert abs(ic.coefficient(29)) >= ic.tol
    assert ic.real


def test_conjugate_symmetry(ic):
    for n in range(ic.N_f + 1):
        assert ic.coefficient(-n) == np.conj(ic.coefficient(n))


def test_parseval(ic):
    energy = sum(abs(ic.coefficient(n)) ** 2 for n in range(-ic.N_f, ic.N_f + 1))
    assert energy == pytest.approx(np.mean(datum(XS) ** 2), rel=1e-12)


def test_reconstruction(ic):
    x = np.linspace(0, 2 * np.pi, 37)
    np.testing.assert_allclose(ic(x), datum(x), atol=1e-14)


def test_rejects_bad_grids():
    with pytest.raises(HeatWaveError):
        fourier_decompose(np.ones(100))
    with pytest.raises(HeatWaveError):
        fourier_decompose(datum(2 * np.pi * np.arange(32) / 32))


# -- modes --------------------------------------------------------------------

def test_p_rule():
    assert heatwave_p(1) == 5
    assert heatwave_p(Fraction(2, 5)) == 5
    assert heatwave_p(Fraction(1, 2)) == 4
    assert heatwave_p(Fraction(1, 3)) == 6


def test_heat_mode(heat):
    assert heat.mode(2, 0.5) == pytest.approx(math.exp(-2.0), abs=1e-10)


def test_wave_mode(ic):
    wave = solve_heatwave(ic, 2, 1.0)
    assert wave.mode(3, 1.0) == pytest.approx(math.cos(3.0), abs=1e-10)


def test_half_order_mode(half):
    assert half.mode(1, 0.3) == pytest.approx(ml_eval("1/2", 1, -math.sqrt(0.3)), abs=1e-11)


def test_modes_against_oracle(half):
    t = np.linspace(0, 1, 9)
    for n in (1, 14, 29):
        want = [ml_eval("1/2", 1, -n * n * math.sqrt(v)) for v in t]
        np.testing.assert_allclose(half.mode(n, t), want, atol=1e-12)


@pytest.mark.parametrize("mu", [Fraction(1, 2), Fraction(2, 3), Fraction(3, 2)])
def test_rescaling_identity(ic, mu):
    sol = solve_heatwave(ic, mu, 1.0)
    t = np.linspace(0, 1, 11)
    for n in (1, ic.N_f // 2, ic.N_f):
        direct = solve_auto(mode_problem(n, mu, 1.0), k_star=int(mu * heatwave_p(mu)), tail_tol=1e-13)
        np.testing.assert_allclose(sol.mode(n, t), direct(2 * t / 1.0 - 1), atol=1e-10)


def test_modes_start_at_one(half):
    for n in range(half.N + 1):
        assert half.mode(n, 0.0) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("mu", [Fraction(1, 3), Fraction(1, 2), Fraction(1)])
def test_modes_monotone_for_subdiffusion(ic, mu):
    sol = solve_heatwave(ic, mu, 1.0)
    t = np.linspace(0, 1, 101)
    for n in (1, 10, 29):
        assert np.all(np.diff(sol.mode(n, t)) <= 1e-14)


def test_mode_domain(heat):
    with pytest.raises(ValueError):
        heat.mode(1, 1.5)
    with pytest.raises(ValueError):
        heat.mode(30, 0.5)


def test_order_range(ic):
    with pytest.raises(HeatWaveError):
        solve_heatwave(ic, Fraction(5, 2), 1.0)
    with pytest.raises(HeatWaveError):
        solve_heatwave(ic, 1, -1.0)


# -- space-time field -----------------------------------------------------------

def test_initial_time_reproduces_datum(half):
    x = np.linspace(0, 2 * np.pi, 33)
    U = evaluate_xt(half, x, [0.0])
    np.testing.assert_allclose(U[0], datum(x), atol=1e-13)


def test_constant_datum_is_stationary():
    d = fourier_decompose(np.full(64, 2.5))
    sol = solve_heatwave(d, Fraction(1, 2), 1.0)
    U = evaluate_xt(sol, np.linspace(0, 6, 5), np.linspace(0, 1, 4))
    np.testing.assert_allclose(U, 2.5, atol=1e-15)


def test_heat_kernel_convolution(heat):
    # u(0, t) = int f(y) exp(-y^2 / 4t) / sqrt(4 pi t) dy over the real line
    t = 0.1
    kern = lambda y: datum(y) * math.exp(-y * y / (4 * t)) / math.sqrt(4 * math.pi * t)  # noqa: E731
    want = quad(kern, -12, 12, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    got = evaluate_xt(heat, [0.0], [t])[0, 0]
    assert got == pytest.approx(want, abs=1e-10)


def test_field_shape(heat):
    assert evaluate_xt(heat, np.zeros(7), np.zeros(3)).shape == (3, 7)
