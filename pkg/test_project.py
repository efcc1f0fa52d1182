#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Тесты проекции: 3D ковариация, экранные сплаты, масштаб камеры, обратный проход по 3D параметрам
"""

import numpy as np
import pytest

from asplat.core.errors import DomainError
from asplat.models.camera import Camera, ScaleSet
from asplat.models.gaussians import Gaussian3D, GaussianParams
from asplat.models.scheme import ShadeScheme
from asplat.optim.targets import make_rng
from asplat.splatting.project import (cov3d, project_backward, project_batch, project_gaussian,
                                      quaternion_to_rotation, scale_camera)
from asplat.splatting.raster import RenderOptions, render, render_backward


def make_gaussian(position=(0.0, 0.0, 2.0), rotation=(1.0, 0.0, 0.0, 0.0), log_scales=(0.0, 0.0, 0.0)):
    return Gaussian3D(np.array(position, dtype=float), np.array(rotation, dtype=float),
                      np.array(log_scales, dtype=float), 0.0, np.array([1.0, 0.5, 0.25]))


def test_cov3d_examples():
    assert np.allclose(cov3d(make_gaussian()), np.eye(3))
    assert np.allclose(cov3d(make_gaussian(log_scales=(np.log(2.0), 0.0, 0.0))), np.diag([4.0, 1.0, 1.0]))
    half = np.pi / 4.0
    g = make_gaussian(rotation=(np.cos(half), 0.0, 0.0, np.sin(half)), log_scales=(np.log(2.0), 0.0, 0.0))
    assert np.allclose(cov3d(g), np.diag([1.0, 4.0, 1.0]), atol=1e-12)


def test_quaternion_is_normalized():
    r = quaternion_to_rotation(np.array([2.0, 0.0, 0.0, 0.0]))
    assert np.allclose(r, np.eye(3))
    batch = quaternion_to_rotation(make_rng(0).normal(size=(5, 4)))
    assert np.allclose(batch @ batch.transpose(0, 2, 1), np.eye(3)[None], atol=1e-12)


def test_project_on_axis():
    cam = Camera(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=64, height=48)
    s = 0.05
    g = make_gaussian(position=(0.0, 0.0, 2.0), log_scales=(np.log(s),) * 3)
    splat = project_gaussian(g, cam)
    assert np.allclose(splat.mean, (32.0, 24.0))
    expected = (100.0 * s / 2.0) ** 2
    assert np.allclose(splat.cov.as_array(), (expected, 0.0, expected))
    assert splat.opacity == pytest.approx(0.5)
    assert splat.depth == pytest.approx(2.0)


def test_project_culls_behind_camera():
    cam = Camera(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=64, height=48)
    assert project_gaussian(make_gaussian(position=(0.0, 0.0, -1.0)), cam) is None
    projection = project_batch([make_gaussian(position=(0.0, 0.0, -1.0)), make_gaussian()], cam)
    assert projection.visible.tolist() == [1]


def test_scaled_camera_halves_mean_and_quarters_cov():
    cam = Camera(fx=100.0, fy=80.0, cx=32.0, cy=24.0, width=64, height=48)
    g = make_gaussian(position=(0.3, -0.2, 2.0), log_scales=(np.log(0.05), np.log(0.02), np.log(0.03)))
    full = project_gaussian(g, cam)
    half = project_gaussian(g, scale_camera(cam, ScaleSet(2.0)))
    assert np.allclose(half.mean, full.mean / 2.0)
    assert np.allclose(half.cov.as_array(), full.cov.as_array() / 4.0)


def test_scale_camera():
    cam = Camera(fx=1111.0, fy=1111.0, cx=400.0, cy=400.0, width=800, height=800)
    same = scale_camera(cam, ScaleSet(1.0))
    assert (same.fx, same.width) == (cam.fx, cam.width)
    small = scale_camera(cam, ScaleSet(8.0))
    assert (small.width, small.height) == (100, 100)
    assert small.fx == pytest.approx(138.875)
    big = scale_camera(cam, 0.5)
    assert (big.width, big.fx) == (1600, 2222.0)
    with pytest.raises(DomainError):
        ScaleSet(0.0)


def test_project_backward_matches_finite_differences():
    """Градиенты по позиции, кватерниону, масштабам, логиту непрозрачности и цвету"""
    cam = Camera(fx=12.0, fy=12.0, cx=6.0, cy=6.0, width=12, height=12)
    rng = make_rng(21)
    count = 3
    params = GaussianParams(
        positions=np.column_stack([rng.uniform(-0.25, 0.25, (count, 2)), 1.0 + 0.2 * np.arange(count)]),
        rotations=rng.normal(size=(count, 4)),
        log_scales=np.log(np.column_stack([np.full(count, 0.15), np.full(count, 0.08), np.full(count, 0.1)])),
        opacity_logits=rng.uniform(-1.0, 1.0, count),
        colors=rng.uniform(0.0, 1.0, (count, 3)),
    )
    options = RenderOptions.smooth(workers=1)
    scheme = ShadeScheme.analytic()
    weights = make_rng(22).uniform(-1.0, 1.0, (12, 12, 3))

    def loss(p: GaussianParams) -> float:
        image, _ = render(p, cam, scheme, options=options)
        return float(np.sum(weights * image.pixels))

    _, record = render(params, cam, scheme, options=options)
    grads = project_backward(record.projection.cache, render_backward(record, weights))

    h = 1e-6
    for name in GaussianParams.FIELDS:
        analytic = getattr(grads, name)
        numeric = np.zeros_like(analytic)
        flat = numeric.reshape(-1)
        for k in range(flat.size):
            plus, minus = params.copy(), params.copy()
            getattr(plus, name).reshape(-1)[k] += h
            getattr(minus, name).reshape(-1)[k] -= h
            flat[k] = (loss(plus) - loss(minus)) / (2 * h)
        assert np.max(np.abs(analytic - numeric)) <= 1e-4 * np.max(np.abs(numeric)), name


def test_project_backward_zero_for_culled():
    cam = Camera(fx=12.0, fy=12.0, cx=6.0, cy=6.0, width=12, height=12)
    params = GaussianParams.from_gaussians([make_gaussian(position=(0.0, 0.0, -1.0)),
                                            make_gaussian(position=(0.0, 0.0, 1.0),
                                                          log_scales=(np.log(0.1),) * 3)])
    _, record = render(params, cam, ShadeScheme.analytic())
    grads = project_backward(record.projection.cache, render_backward(record, np.ones((12, 12, 3))))
    assert np.all(grads.positions[0] == 0.0) and np.all(grads.colors[0] == 0.0)
    assert np.any(grads.colors[1] != 0.0)


if __name__ == '__main__':
    raise SystemExit(pytest.main([__file__, '-q']))
