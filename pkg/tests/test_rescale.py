import math

import numpy as np
import pytest

from shrimplab.global_map import focus_global, saddle_global
from shrimplab.local import LocalNormalForm
from shrimplab.returnmap import ReturnMapConfig
from shrimplab.rescale import (
    limit_map_deviation,
    locate_fold,
    measured_y_linear_coeff,
    predict_shrimp_location,
    rescale_frame,
    rescaled_return,
)


def saddle_cfg(k, m, lam=0.4, gamma=2.0, **g):
    local = LocalNormalForm(kind="saddle", lam=lam, gamma=gamma)
    return ReturnMapConfig(local, saddle_global(**g), saddle_global(**g), k, m)


def focus_cfg(k, m, phi=0.3, b1=(1.0, 0.5), c2=(1.0, -0.5)):
    local = LocalNormalForm(kind="saddle_focus", lam=0.4, gamma=2.0, phi=phi)
    t1 = focus_global(
        x_plus=[1.0, 0.5], y_minus=1.0, a=np.zeros((2, 2)), b=list(b1),
        c=[1.0, -0.5], d=1.0,
    )
    t2 = focus_global(
        x_plus=[1.0, 0.5], y_minus=1.0, a=np.zeros((2, 2)), b=[1.0, 0.5],
        c=list(c2), d=1.0,
    )
    return ReturnMapConfig(local, t1, t2, k, m)


def test_beta_example():
    fr = rescale_frame(saddle_cfg(3, 3))
    assert math.isclose(fr.beta1, -0.125)
    assert math.isclose(fr.beta2, -0.125)


def test_beta_scaling_law():
    # log|beta1| = -((k+2m)/3) log gamma + const, exactly
    const = None
    for k, m in ((4, 3), (6, 5), (9, 4), (12, 12), (15, 9)):
        fr = rescale_frame(saddle_cfg(k, m))
        value = math.log(abs(fr.beta1)) + (k + 2 * m) / 3.0 * math.log(2.0)
        if const is None:
            const = value
        assert abs(value - const) < 1e-12


def test_m3_coefficient_examples():
    fr = rescale_frame(saddle_cfg(5, 5))
    assert math.isclose(fr.m3_coeff, 0.8**5)
    # saddle-focus with unit-axis vectors: nu = 0, coefficient cos(m phi)
    cfg = focus_cfg(6, 4, phi=math.pi / 3, b1=(1.0, 0.0), c2=(1.0, 0.0))
    fr = rescale_frame(cfg)
    assert math.isclose(fr.nu, 0.0, abs_tol=1e-15)
    assert math.isclose(fr.m3_coeff, math.cos(4 * math.pi / 3) * 0.4**4 * 2.0**6)


def test_m3_cosine_formula_matches_matrix_product():
    for m in range(3, 12):
        cfg = focus_cfg(m + 2, m)
        fr = rescale_frame(cfg)
        lead = cfg.local.leading_power(m)
        product = float(np.asarray(cfg.t2.c) @ lead @ np.asarray(cfg.t1.b))
        assert math.isclose(fr.m3_coeff, product * 2.0 ** (m + 2), rel_tol=1e-12)


def test_frame_chart_round_trip():
    fr = rescale_frame(saddle_cfg(9, 7))
    b2 = saddle_cfg(9, 7).t2.b
    for x in (-1.3, 0.0, 2.4):
        assert math.isclose(fr.chart_x_inv(fr.chart_x(x, b2), b2), x, abs_tol=1e-12)
    for y in (-2.0, 0.3):
        assert math.isclose(fr.chart_y_inv(fr.chart_y(y)), y, abs_tol=1e-12)
    cfg = focus_cfg(8, 6)
    fr = rescale_frame(cfg)
    for vec in ([0.4, -1.1], [0.0, 0.0]):
        back = fr.chart_x_inv(fr.chart_x(np.array(vec), cfg.t2.b), cfg.t2.b)
        assert np.allclose(back, vec, atol=1e-10)


def test_rescaled_return_examples():
    cfg = saddle_cfg(12, 12)
    _, y0 = rescaled_return(cfg, 0.0, 0.0, M=(0.0, 0.0))
    assert abs(y0) <= 1e-9
    _, y1 = rescaled_return(cfg, 0.0, 1.0, M=(1.0, 0.0))
    assert abs(y1 - 0.8**12) <= 1e-9


def test_rescaled_return_quartic_structure():
    # brute-force check: at X=0 the second coordinate follows the quartic
    # composed with the frame's linear coefficient, point by point
    cfg = saddle_cfg(10, 8)
    fr = rescale_frame(cfg)
    rng = np.random.default_rng(2)
    for _ in range(25):
        y = rng.uniform(-2, 2)
        m1, m2 = rng.uniform(-2, 2, 2)
        _, yb = rescaled_return(cfg, 0.0, y, M=(m1, m2), frame=fr)
        expected = m2 - (m1 - y * y) ** 2 + fr.m3_coeff * y
        assert abs(yb - expected) < 1e-8


def test_rescaled_return_x_coupling_oracle():
    # with X nonzero the first equation picks up the mirror coupling
    # b2*c1*lam^k*gamma^m * X; verify against independent arithmetic
    cfg = saddle_cfg(9, 6)
    fr = rescale_frame(cfg)
    c1_coupling = 1.0 * 0.4**9 * 2.0**6
    for x in (-1.5, 0.7, 2.0):
        xb, yb = rescaled_return(cfg, x, 0.5, M=(0.3, -0.2), frame=fr)
        x_expected = 0.3 - 0.25 + c1_coupling * x
        assert abs(xb - x_expected) < 1e-9
        y_expected = -0.2 - x_expected**2 + fr.m3_coeff * 0.5
        assert abs(yb - y_expected) < 1e-9


def test_frame_current_mu_values():
    cfg = saddle_cfg(8, 8)
    fr0 = rescale_frame(cfg)
    mu1, mu2 = fr0.mus_for(0.7, -0.4)
    fr1 = rescale_frame(cfg.with_mus(mu1, mu2))
    assert math.isclose(fr1.m1, 0.7, abs_tol=1e-9)
    assert math.isclose(fr1.m2, -0.4, abs_tol=1e-9)


def test_ordering_symmetry():
    local = LocalNormalForm(kind="saddle", lam=0.4, gamma=2.0)
    t1 = saddle_global(b=1.5, c=0.7, d=1.2, mu=1e-4)
    t2 = saddle_global(b=0.9, c=1.1, d=0.8, mu=2e-4)
    lt = rescale_frame(ReturnMapConfig(local, t1, t2, 4, 9))
    ge = rescale_frame(ReturnMapConfig(local, t2, t1, 9, 4))
    assert lt.roles_swapped and not ge.roles_swapped
    for field in ("beta1", "beta2", "m1", "m2", "m3_coeff", "mu1_center", "mu2_center"):
        assert math.isclose(getattr(lt, field), getattr(ge, field), rel_tol=1e-12)


def test_deviation_report_benchmark():
    report = limit_map_deviation(saddle_cfg(12, 12), 2.0, 9)
    assert report.skipped == 0
    assert report.err_three_param < 1e-6
    m3 = rescale_frame(saddle_cfg(12, 12)).m3_coeff
    gap = report.err_two_param - report.err_three_param
    assert 0.5 * abs(m3) * 2.0 <= gap <= 2.0 * abs(m3) * 2.0


def test_deviation_rejects_bad_input():
    with pytest.raises(ValueError):
        limit_map_deviation(saddle_cfg(6, 6), -1.0, 9)
    with pytest.raises(ValueError):
        limit_map_deviation(saddle_cfg(6, 6), 1.0, 1)


def test_measured_linear_coefficient():
    cfg = saddle_cfg(12, 12)
    fr = rescale_frame(cfg)
    measured = measured_y_linear_coeff(cfg, frame=fr)
    assert abs(measured - fr.m3_coeff) <= 1e-2 * abs(fr.m3_coeff)


def test_predict_examples():
    local = LocalNormalForm(kind="saddle", lam=0.4, gamma=2.0)
    for m in (6, 10):
        cfg = ReturnMapConfig(
            local, saddle_global(x_plus=0.0), saddle_global(x_plus=0.0), m, m
        )
        mu1, mu2 = predict_shrimp_location(cfg, (0.0, 0.0))
        assert math.isclose(mu1, 2.0**-m)
        assert math.isclose(mu2, 2.0**-m)
    norms = []
    for m in (10, 12):
        mu = predict_shrimp_location(saddle_cfg(m, m), (0.0, 0.0))
        norms.append(math.hypot(*mu))
    assert abs(norms[1] / norms[0] - 0.25) < 0.02


def test_predict_matches_exact_center_when_a_zero():
    cfg = saddle_cfg(9, 9)
    fr = rescale_frame(cfg)
    mu1, mu2 = predict_shrimp_location(cfg, (0.0, 0.0))
    assert math.isclose(mu1, fr.mu1_center, rel_tol=1e-12)
    assert math.isclose(mu2, fr.mu2_center, rel_tol=1e-12)


def test_frame_handles_feedback_coefficients():
    # nonzero a: the numeric center solve must keep the composition centered
    cfg = saddle_cfg(9, 7, a=0.6)
    fr = rescale_frame(cfg)
    _, y0 = rescaled_return(cfg, 0.0, 0.0, M=(0.0, 0.0), frame=fr)
    assert abs(y0) < 1e-9
    rng = np.random.default_rng(4)
    for _ in range(10):
        y = rng.uniform(-1.5, 1.5)
        m1, m2 = rng.uniform(-1.5, 1.5, 2)
        _, yb = rescaled_return(cfg, 0.0, y, M=(m1, m2), frame=fr)
        expected = m2 - (m1 - y * y) ** 2 + fr.m3_coeff * y
        assert abs(yb - expected) < 1e-7


def test_test_cubic_center_polish():
    local = LocalNormalForm(kind="saddle", lam=0.4, gamma=2.0, nonlinearity="test_cubic")
    cfg = ReturnMapConfig(local, saddle_global(), saddle_global(), 10, 10)
    fr = rescale_frame(cfg)
    _, y0 = rescaled_return(cfg, 0.0, 0.0, M=(0.0, 0.0), frame=fr)
    assert abs(y0) < 1e-7


def test_fold_location_convergence():
    ystar = -(0.25 ** (1.0 / 3.0))
    m2star = ystar + ystar**4
    rels = []
    for k in (8, 10, 12):
        _, _, rel = locate_fold(saddle_cfg(k, k), (0.0, m2star))
        rels.append(rel)
    assert all(r < 0.1 for r in rels)
    assert rels[0] > rels[1] > rels[2]


def test_rescaled_return_mirror_ordering_equivalence():
    local = LocalNormalForm(kind="saddle", lam=0.4, gamma=2.0)
    t1 = saddle_global(b=1.5, c=0.7, d=1.2)
    t2 = saddle_global(b=0.9, c=1.1, d=0.8)
    lt = ReturnMapConfig(local, t1, t2, 4, 9)
    ge = ReturnMapConfig(local, t2, t1, 9, 4)
    for x, y, m in ((0.0, 0.4, (0.2, -0.1)), (0.5, -1.0, (0.0, 0.3))):
        xa, ya = rescaled_return(lt, x, y, M=m)
        xb, yb = rescaled_return(ge, x, y, M=m)
        assert math.isclose(xa, xb, rel_tol=1e-12, abs_tol=1e-12)
        assert math.isclose(ya, yb, rel_tol=1e-12, abs_tol=1e-12)


def test_deviation_saddle_focus_path():
    report = limit_map_deviation(focus_cfg(10, 8), 1.5, 5)
    assert report.skipped == 0
    fr = rescale_frame(focus_cfg(10, 8))
    gap = report.err_two_param - report.err_three_param
    assert report.err_three_param < 1e-6
    assert gap <= 2.0 * abs(fr.m3_coeff) * 1.5
