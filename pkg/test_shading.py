#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Тесты схем шейдинга: выборка в центре, суперсэмплинг, предфильтрация, аналитический интеграл
"""

import numpy as np
import pytest
from scipy.special import ndtr

from asplat.analysis.oracles import mc_window_2d
from asplat.core.config import Config
from asplat.core.errors import DomainError, UnsupportedOperationError
from asplat.models.gaussians import Gaussian2D, SymMat2
from asplat.models.scheme import SchemeKind, ShadeScheme
from asplat.splatting.shading import (ShadingParams, analytic_kernel, shade, shade_analytic, shade_center,
                                      shade_prefilter, shade_supersample)


def gauss(cov, mean=(0.0, 0.0)) -> Gaussian2D:
    return Gaussian2D(np.array(mean, dtype=float), SymMat2(*cov))


def test_shade_center_examples():
    assert shade_center((3.0, 4.0), gauss((2.0, 1.0, 2.0), (3.0, 4.0))) == 1.0
    assert shade_center((1.0, 0.0), gauss((1.0, 0.0, 1.0))) == pytest.approx(np.exp(-0.5), abs=1e-15)
    assert shade_center((1.0, 1.0), gauss((2.0, 1.0, 2.0))) == pytest.approx(np.exp(-1.0 / 3.0), abs=1e-14)
    with pytest.raises(DomainError):
        shade_center((0.0, 0.0), gauss((1.0, 1.0, 1.0)))


def test_shade_supersample():
    g = gauss((1.3, 0.4, 0.9), (0.2, -0.1))
    assert shade_supersample((0.5, 0.5), g, 1) == shade_center((0.5, 0.5), g)
    # σ = 10: подвыборки на расстоянии ≤ 0.35 px от центра
    assert abs(shade_supersample((0.0, 0.0), gauss((100.0, 0.0, 100.0)), 2) - 1.0) < 1e-3
    truth = 2.0 * np.pi * (ndtr(0.5) - ndtr(-0.5)) ** 2
    assert abs(shade_supersample((0.0, 0.0), gauss((1.0, 0.0, 1.0)), 64) - truth) < 1e-4
    coarse = shade_supersample((0.0, 0.0), gauss((1.0, 0.0, 1.0)), 2)
    assert abs(coarse - truth) > abs(shade_supersample((0.0, 0.0), gauss((1.0, 0.0, 1.0)), 64) - truth)


def test_shade_prefilter():
    g = gauss((1.2, 0.3, 0.8))
    assert abs(shade_prefilter((0.7, -0.4), g, 1e-6) - shade_center((0.7, -0.4), g)) < 1e-9
    assert shade_prefilter((0.0, 0.0), gauss((1.0, 0.0, 1.0)), 0.1) == pytest.approx(1.0 / 1.01, abs=1e-12)
    assert shade_prefilter((0.0, 0.0), gauss((0.09, 0.0, 0.09)), 0.1) == pytest.approx(0.9, abs=1e-12)


def test_shade_analytic_against_monte_carlo():
    """σ = 1 в центре: погрешность логистической CDF ≈ 3.7e-3"""
    value = shade_analytic((0.0, 0.0), gauss((1.0, 0.0, 1.0))).response
    oracle = mc_window_2d((0.0, 0.0), (1.0, 0.0, 1.0), seed=7)
    assert abs(value - 0.921) < 5e-3
    assert abs(value - oracle) < 5e-3


def test_shade_analytic_flat_gaussian():
    cov = (6.6 ** 2, 0.0, 6.6 ** 2)
    value = shade_analytic((0.0, 0.0), gauss(cov)).response
    oracle = 2.0 * np.pi * 6.6 ** 2 * (ndtr(0.5 / 6.6) - ndtr(-0.5 / 6.6)) ** 2
    assert value <= 1.0
    assert abs(value - oracle) < 2.5e-3


def test_shade_analytic_tail():
    g = gauss((4.0, 0.0, 1.0))
    assert shade_analytic((8.0, 0.0), g).response < 1e-3
    assert shade_analytic((-9.0, 0.5), g).response < 1e-3


def rotation(theta_deg: float) -> np.ndarray:
    t = np.radians(theta_deg)
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


@pytest.mark.parametrize('base_angle', [0.0, 20.0])
def test_shade_analytic_rotation_equivariance(base_angle):
    r0 = rotation(base_angle)
    cov = r0 @ np.diag([4.0, 0.49]) @ r0.T
    mean = np.array([10.3, -2.1])
    shift = np.array([3.25, -7.5])
    for pixel in [(11.0, -1.5), (10.3, -2.1), (8.0, 0.5)]:
        pixel = np.asarray(pixel)
        base = shade_analytic(pixel, gauss((cov[0, 0], cov[0, 1], cov[1, 1]), mean)).response
        assert base > 0.0
        for theta in (0.0, 15.0, 30.0, 45.0):
            r = rotation(theta)
            turned = r @ cov @ r.T
            g = gauss((turned[0, 0], turned[0, 1], turned[1, 1]), r @ mean + shift)
            assert abs(shade_analytic(r @ pixel + shift, g).response - base) < 1e-6


def test_true_cdf_substitution_matches_monte_carlo():
    cov = (1.5 ** 2, 0.0, 0.8 ** 2)
    for offset in [(0.0, 0.0), (1.2, -0.4), (-2.5, 1.1)]:
        value = shade_analytic(offset, gauss(cov), cdf=ndtr).response
        oracle = mc_window_2d(offset, cov, seed=7)
        assert abs(value - oracle) < 2e-3


def test_analytic_response_range_sweep():
    """Отклик после ограничения в [0, 1]; превышение единицы до ограничения мало"""
    sigmas = np.geomspace(0.3, 6.6, 32)
    s1, s2 = np.meshgrid(sigmas, sigmas, indexing='ij')
    s1, s2 = np.maximum(s1, s2).reshape(-1, 1), np.minimum(s1, s2).reshape(-1, 1)
    grid = np.linspace(-3.0, 3.0, 13)
    gx, gy = np.meshgrid(grid, grid)
    dx = s1 * gx.reshape(1, -1)
    dy = s2 * gy.reshape(1, -1)
    response, raw, _ = analytic_kernel(dx, dy, s1 ** 2, s2 ** 2, 1.0, 0.0, 0.0, 1.0)
    assert np.all((response >= 0.0) & (response <= 1.0))
    assert np.max(raw) - 1.0 <= 4e-3


def test_schemes_agree_for_wide_gaussians():
    g = gauss((25.0, 0.0, 25.0))
    values = [shade((0.0, 0.0), g, ShadeScheme.parse(s)).response
              for s in ('center', 'supersample:2', 'prefilter:0.1', 'analytic')]
    assert max(values) - min(values) < 5e-3


def test_shading_params_batch_matches_scalar():
    cov = np.array([[1.0, 0.2, 0.5], [3.0, -1.0, 2.0]])
    dx = np.array([[0.3, -1.2], [2.0, 0.0]])
    dy = np.array([[0.1, 0.4], [-0.5, 1.5]])
    for name in ('center', 'analytic', 'supersample:3', 'prefilter'):
        scheme = ShadeScheme.parse(name)
        response, _ = ShadingParams.prepare(cov, scheme).evaluate(np.arange(2), dx, dy)
        for i in range(2):
            for p in range(2):
                g = Gaussian2D(np.zeros(2), SymMat2(*cov[i]))
                assert response[i, p] == pytest.approx(shade((dx[i, p], dy[i, p]), g, scheme).response, abs=1e-14)


def test_grad_request_for_scheme_without_backward():
    with pytest.raises(UnsupportedOperationError):
        shade((0.0, 0.0), gauss((1.0, 0.0, 1.0)), ShadeScheme.supersample(2), want_grad=True)
    with pytest.raises(UnsupportedOperationError):
        shade((0.0, 0.0), gauss((1.0, 0.0, 1.0)), ShadeScheme.prefilter(), want_grad=True)


def test_scheme_parse():
    assert ShadeScheme.parse('supersample:4').n == 4
    assert ShadeScheme.parse('prefilter:0.2').sigma_w == 0.2
    assert ShadeScheme.parse('analytic').label == 'analytic'
    with pytest.raises(DomainError):
        ShadeScheme.parse('box')
    with pytest.raises(DomainError):
        ShadeScheme.parse('supersample:x')


def test_prefilter_default_follows_config(monkeypatch):
    monkeypatch.setattr(Config, 'PREFILTER_SIGMA', 0.25)
    assert ShadeScheme(SchemeKind.PREFILTER).sigma_w == 0.25
    assert ShadeScheme.prefilter().label == 'prefilter:0.25'
    assert ShadeScheme.parse('prefilter').sigma_w == 0.25
    assert ShadeScheme.parse('prefilter:0.2').sigma_w == 0.2


if __name__ == '__main__':
    raise SystemExit(pytest.main([__file__, '-q']))
