import math

import numpy as np
import pytest
from scipy import linalg, special

from hybriddiff.analysis import (
    lambda_min_sym, lambda_max_sym, build_hybrid_matrices, build_second_order_certificate,
    zeta_vector, lyapunov_V, lyapunov_decrease_check,
    theorem1_report, steady_bound_theorem1, theorem2_report, noise_bound_theorem2,
    linear_decay, linear_freq_response, bode_slope,
    describing_gain, describing_gain_quad, linearize_levant, linearize_linear, linearize_hybrid,
)
from hybriddiff.differentiators import Family, HybridParams, LevantParams, LinearParams, pow_sgn
from hybriddiff.errors import AsymmetricInput, NonPositiveLambdaMin, HypothesisViolated
from hybriddiff.integrator import SimConfig, simulate
from hybriddiff.signals import SignalSpec, SignalKind, NoiseSpec, NoiseKind
from hybriddiff.metrics import error_series, steady_sup, zeta_norm

NOMINAL = HybridParams(k1=1.0, k2=1.0, k3=8.0, k4=8.0, alpha=0.2)
EXAMPLE2 = HybridParams(k1=6.0, k2=10.0, k3=9.0, k4=20.0, alpha=0.2)
# gains for which the noise-bound hypotheses hold at L2 = 0.1
STRONG = HybridParams(k1=2.0, k2=1.0, k3=40.0, k4=40.0, alpha=0.2)

####################################################################
# Eigenvalues
####################################################################
@pytest.mark.parametrize("M, expected", [
    (np.eye(3), 1.0),
    (np.diag([3.0, -1.0, 2.0]), -1.0),
    (np.array([[2.0, 1.0], [1.0, 2.0]]), 1.0),
])
def test_lambda_min_sym(M, expected):
    assert lambda_min_sym(M) == pytest.approx(expected)

def test_lambda_max_sym():
    assert lambda_max_sym(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(3.0)

def test_asymmetric_rejected():
    with pytest.raises(AsymmetricInput):
        lambda_min_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))

def test_lambda_min_matches_characteristic_polynomial():
    rng = np.random.default_rng(1)
    for n in (2, 3):
        for _ in range(20):
            X = rng.uniform(-1.0, 1.0, size=(n, n))
            M = X + X.T
            roots = np.roots(np.poly(M)).real
            assert lambda_min_sym(M) == pytest.approx(float(np.min(roots)), abs=1e-9)

####################################################################
# Certificate
####################################################################
def test_nominal_matrices():
    mats = build_hybrid_matrices(NOMINAL)
    np.testing.assert_allclose(mats.Pi, [
        [13.0 + 5.0 / 6.0, 0.5, -0.5],
        [0.5, 8.5, -0.5],
        [-0.5, -0.5, 1.0],
    ])
    np.testing.assert_allclose(mats.Gamma1, [1.0, 1.0, -2.0])
    np.testing.assert_allclose(mats.Gamma2, [1.0, 1.0, -1.0])
    assert mats.Omega2[0, 0] == pytest.approx(10.2)
    assert mats.lambda_min_Omega2 == pytest.approx(5.0 - math.sqrt(17.0))
    assert np.linalg.det(mats.Omega1) > 0
    assert mats.positive

def test_matrices_symmetric():
    mats = build_hybrid_matrices(EXAMPLE2)
    for M in (mats.Pi, mats.Omega1, mats.Omega2):
        np.testing.assert_array_equal(M, M.T)

def test_example2_gains_fail_omega1():
    mats = build_hybrid_matrices(EXAMPLE2)
    assert mats.lambda_min_Pi > 0
    assert mats.lambda_min_Omega2 > 0
    assert mats.lambda_min_Omega1 <= 0
    assert not mats.positive

def test_second_order_certificate():
    cert = build_second_order_certificate(6.0, 9.0, 0.2)
    assert cert.theta == pytest.approx(2.0 / 3.0)
    assert lambda_min_sym(cert.P) > 0
    assert lambda_min_sym(cert.Q) > 0
    assert cert.positive
    with pytest.raises(ValueError):
        build_second_order_certificate(0.0, 9.0, 0.2)

def _random_params(rng):
    return HybridParams(
        k1=rng.uniform(0.5, 5.0), k2=rng.uniform(0.5, 5.0),
        k3=rng.uniform(1.0, 20.0), k4=rng.uniform(1.0, 20.0), alpha=rng.uniform(0.0, 0.9),
    )

def test_V_is_quadratic_form():
    rng = np.random.default_rng(7)
    for _ in range(200):
        p = _random_params(rng)
        e1, e2 = rng.uniform(-3.0, 3.0, size=2)
        zeta = zeta_vector(p.alpha, e1, e2)
        expected = zeta @ build_hybrid_matrices(p).Pi @ zeta
        assert lyapunov_V(p, e1, e2) == pytest.approx(expected, rel=1e-10)

def test_V_at_nominal_start():
    assert lyapunov_V(NOMINAL, 1.0, 0.0) == pytest.approx(23.0 + 1.0 / 3.0)

def _chain_rule_dV(p, e1, e2, ddv):
    # dV/dt along the hybrid error dynamics, e1 != 0
    a = p.alpha
    s = pow_sgn(e1, (a + 1.0) / 2.0)
    z = p.k1 * s + p.k2 * e1 - e2
    de1 = e2 - p.k1 * s - p.k2 * e1
    de2 = -p.k3 * pow_sgn(e1, a) - p.k4 * e1 - ddv
    ds_de1 = 0.5 * (a + 1.0) * abs(e1) ** (0.5 * (a - 1.0))
    dV_de1 = 2.0 * p.k3 * pow_sgn(e1, a) + 2.0 * p.k4 * e1 + z * (p.k1 * ds_de1 + p.k2)
    dV_de2 = e2 - z
    return dV_de1 * de1 + dV_de2 * de2

def test_dV_matches_certificate_identity():
    rng = np.random.default_rng(11)
    for _ in range(200):
        p = _random_params(rng)
        e1 = rng.choice([-1.0, 1.0]) * rng.uniform(1e-3, 3.0)
        e2 = rng.uniform(-3.0, 3.0)
        ddv = rng.uniform(-2.0, 2.0)
        mats = build_hybrid_matrices(p)
        zeta = zeta_vector(p.alpha, e1, e2)
        m = abs(e1) ** ((p.alpha - 1.0) / 2.0)
        t1 = m * (zeta @ mats.Omega1 @ zeta)
        t2 = zeta @ mats.Omega2 @ zeta
        t3 = ddv * (mats.Gamma1 @ zeta)
        scale = 1.0 + abs(t1) + abs(t2) + abs(t3)
        assert abs(_chain_rule_dV(p, e1, e2, ddv) - (-t1 - t2 + t3)) <= 1e-9 * scale

def test_lyapunov_decreases_along_nominal_run():
    cfg = SimConfig(dt=1e-4, t_end=5.0, x0=[1.0, 0.0])
    ts = simulate(Family.HYBRID, NOMINAL, SignalSpec(kind=SignalKind.CONSTANT), NoiseSpec(), cfg)
    e1, e2 = error_series(ts)
    check = lyapunov_decrease_check(NOMINAL, e1, e2, cfg.dt)
    assert check.max_increase_rel <= 1e-9
    assert check.rate_fraction >= 0.99
    assert check.checked_steps > 100

####################################################################
# Bounds
####################################################################
def test_theorem1_zero_curvature():
    assert steady_bound_theorem1(NOMINAL, 0.0) == 0.0

@pytest.mark.parametrize("alpha, expected", [(0.2, 0.125), (0.5, 0.5 ** 1.5)])
def test_theorem1_value(alpha, expected):
    p = NOMINAL.model_copy(update={"alpha": alpha})
    report = theorem1_report(p, 0.0)
    L2 = 0.5 * report.lambda_min_Omega1 / report.gamma1_norm
    assert steady_bound_theorem1(p, L2) == pytest.approx(expected, rel=1e-9)

def test_theorem1_hypothesis_flag():
    report = theorem1_report(NOMINAL, 2.0)
    assert not report.hypothesis_ok
    assert report.flag == "FAILED-HYPOTHESIS"
    assert theorem1_report(NOMINAL, 0.01).flag == "OK"

def test_theorem1_non_positive_omega1():
    with pytest.raises(NonPositiveLambdaMin):
        steady_bound_theorem1(EXAMPLE2, 0.1)

def test_theorem2_noise_free_is_zero():
    assert noise_bound_theorem2(STRONG, 0.1, 0.0) == 0.0

def test_theorem2_monotone_in_eps():
    values = [noise_bound_theorem2(STRONG, 0.1, eps) for eps in (0.001, 0.01, 0.1, 1.0)]
    assert all(a < b for a, b in zip(values, values[1:]))

def test_theorem2_hypothesis_violated():
    report = theorem2_report(NOMINAL, 2.0, 0.01)
    assert report.flag == "FAILED-HYPOTHESIS"
    assert report.value == math.inf
    with pytest.raises(HypothesisViolated):
        noise_bound_theorem2(NOMINAL, 2.0, 0.01)

def test_theorem2_bounds_measured_error():
    eps = 0.01
    signal = SignalSpec(amplitude=0.1, omega=1.0)
    noise = NoiseSpec(kind=NoiseKind.SEEDED_UNIFORM, epsilon=eps)
    ts = simulate(Family.HYBRID, STRONG, signal, noise, SimConfig(dt=1e-3, t_end=5.0))
    e1, e2 = error_series(ts)
    measured = steady_sup(zeta_norm(STRONG.alpha, e1, e2), ts.t, (4.0, 5.0))
    bound = noise_bound_theorem2(STRONG, signal.L2, eps)
    assert math.isfinite(bound)
    assert measured <= bound

####################################################################
# Linear differentiator
####################################################################
def test_linear_decay_rate():
    decay = linear_decay(LinearParams(a1=2.0, a2=1.0, tau=1.0))
    assert decay.lambda_ == pytest.approx(1.0, abs=1e-6)
    assert decay.sigma1 >= 1.0

def test_linear_decay_envelope():
    decay = linear_decay(LinearParams(a1=2.0, a2=1.0, tau=1.0))
    for t in np.linspace(0.0, 20.0, 41):
        norm = np.linalg.norm(linalg.expm(t * decay.A), 2)
        assert norm <= decay.sigma1 * math.exp(-decay.lambda_ * t) * (1.0 + 1e-6)

def test_linear_bound_scales_with_tau():
    a = linear_decay(LinearParams(tau=0.1)).steady_bound(2.0)
    b = linear_decay(LinearParams(tau=0.05)).steady_bound(2.0)
    assert b / a == pytest.approx(0.5, rel=1e-12)

def test_linear_freq_response():
    p = LinearParams(a1=2.0, a2=1.0, tau=0.1)
    assert linear_freq_response(p, 1e-4).mag_track == pytest.approx(1.0, abs=1e-6)
    at_wn = linear_freq_response(p, 10.0)
    assert at_wn.mag_track == pytest.approx(math.sqrt(5.0) / 2.0)
    assert at_wn.mag_deriv == pytest.approx(5.0)
    assert linear_freq_response(p, 1000.0).L_track_dB == pytest.approx(-33.98, abs=0.05)
    assert linear_freq_response(p, 0.1).L_deriv_dB == pytest.approx(-20.0, abs=1.0)

def test_bode_slopes():
    track, deriv = bode_slope(LinearParams(a1=2.0, a2=1.0, tau=0.1), 100.0, 1000.0)
    assert track == pytest.approx(-20.0, abs=1.0)
    assert deriv == pytest.approx(-20.0, abs=1.0)

####################################################################
# Describing functions
####################################################################
@pytest.mark.parametrize("pexp, expected", [(0.0, 4.0 / math.pi), (1.0, 1.0), (0.5, 1.1128)])
def test_describing_gain(pexp, expected):
    assert describing_gain(pexp) == pytest.approx(expected, abs=1e-4)

def test_describing_gain_closed_form():
    assert describing_gain(0.5) == pytest.approx(2.0 / math.pi * special.beta(1.25, 0.5), rel=1e-12)

@pytest.mark.parametrize("pexp", [0.0, 0.2, 0.5, 0.6, 1.0])
def test_describing_gain_matches_quadrature(pexp):
    assert describing_gain(pexp) == pytest.approx(describing_gain_quad(pexp), abs=1e-9)

def test_describing_gain_decreasing():
    values = [describing_gain(p) for p in np.linspace(0.0, 1.0, 21)]
    assert all(a > b for a, b in zip(values, values[1:]))

def test_describing_gain_negative_rejected():
    with pytest.raises(ValueError):
        describing_gain(-0.1)

def test_linearize_levant():
    r = linearize_levant(LevantParams(lambda1=28.0, lambda2=6.0), 1.0)
    assert r.omega_n == pytest.approx(5.971, abs=1e-3)
    assert r.zeta == pytest.approx(0.559, abs=1e-3)
    assert linearize_levant(LevantParams(), 4.0).omega_n == pytest.approx(r.omega_n / 2.0)
    assert linearize_levant(LevantParams(), 4.0).zeta == pytest.approx(r.zeta)
    with pytest.raises(ValueError):
        linearize_levant(LevantParams(), 0.0)

def test_linearize_linear():
    r = linearize_linear(LinearParams(a1=2.0, a2=1.0, tau=0.1))
    assert (r.omega_n, r.zeta) == pytest.approx((10.0, 1.0))

def test_linearize_hybrid():
    assert linearize_hybrid(NOMINAL, 1.0).omega_n == pytest.approx(4.197, abs=1e-3)
    omegas = [linearize_hybrid(NOMINAL, A).omega_n for A in (0.01, 0.1, 1.0, 10.0)]
    assert all(a > b for a, b in zip(omegas, omegas[1:]))
    # large amplitude: the linear terms dominate
    assert linearize_hybrid(NOMINAL, 1e8).omega_n == pytest.approx(math.sqrt(8.0), rel=1e-3)
