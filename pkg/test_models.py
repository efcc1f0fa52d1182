#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Тесты моделей данных: JSON сцены и камеры, изображения PPM/PFM, sRGB
"""

import json

import numpy as np
import pytest

from asplat.core.errors import DomainError, SceneFormatError
from asplat.models.camera import Camera, ScaleSet
from asplat.models.gaussians import Gaussian3D
from asplat.models.image import Image, srgb_decode, srgb_encode
from asplat.models.scene_file import CameraFile, SceneFile

GAUSSIAN = {
    'position': [0.0, 0.1, 2.0],
    'quaternion': [2.0, 0.0, 0.0, 0.0],
    'log_scales': [-3.0, -3.0, -3.0],
    'opacity_logit': 0.5,
    'color': [1.0, 0.5, 0.0],
}


def write_json(path, data):
    path.write_text(json.dumps(data), encoding='utf-8')
    return path


def test_scene_parse_normalizes_quaternion(tmp_path):
    path = write_json(tmp_path / 'scene.json', {'gaussians': [GAUSSIAN], 'background': [0.1, 0.2, 0.3]})
    scene = SceneFile.load(path)
    assert len(scene.gaussians) == 1
    assert np.allclose(scene.gaussians[0].rotation, [1.0, 0.0, 0.0, 0.0])
    assert np.allclose(scene.background, [0.1, 0.2, 0.3])


def test_scene_default_background():
    scene = SceneFile.from_dict({'gaussians': []})
    assert np.array_equal(scene.background, np.zeros(3))


@pytest.mark.parametrize('broken,field', [
    ({'position': [0.0, 0.0]}, 'gaussians[0].position'),
    ({'color': [1.0, 'red', 0.0]}, 'gaussians[0].color'),
    ({'opacity_logit': None}, 'gaussians[0].opacity_logit'),
    ({'quaternion': [0.0, 0.0, 0.0, 0.0]}, 'gaussians[0].quaternion'),
])
def test_scene_errors_name_field(broken, field):
    item = dict(GAUSSIAN, **broken)
    with pytest.raises(SceneFormatError) as info:
        SceneFile.from_dict({'gaussians': [item]})
    assert info.value.field == field


def test_scene_missing_field_and_root():
    item = {k: v for k, v in GAUSSIAN.items() if k != 'log_scales'}
    with pytest.raises(SceneFormatError) as info:
        SceneFile.from_dict({'gaussians': [item]})
    assert info.value.field == 'gaussians[0].log_scales'
    with pytest.raises(SceneFormatError):
        SceneFile.from_dict([])
    with pytest.raises(SceneFormatError):
        SceneFile.from_dict({'gaussians': 3})


def test_scene_malformed_json(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text("{ not json", encoding='utf-8')
    with pytest.raises(SceneFormatError) as info:
        SceneFile.load(path)
    assert info.value.field == 'json'


def test_scene_save_load(tmp_path):
    scene = SceneFile([Gaussian3D(position=[0.0, 0.0, 1.0], opacity_logit=-1.0, color=[0.2, 0.3, 0.4])],
                      background=[0.0, 0.0, 1.0])
    scene.save(tmp_path / 'out.json')
    loaded = SceneFile.load(tmp_path / 'out.json')
    assert loaded.to_dict() == scene.to_dict()


def test_camera_parse(tmp_path):
    data = {'fx': 100, 'fy': 100, 'cx': 32, 'cy': 16, 'width': 64, 'height': 32}
    camera = CameraFile.load(write_json(tmp_path / 'cam.json', data))
    assert camera.resolution == (64, 32)
    assert np.array_equal(camera.extrinsic, np.eye(4))
    CameraFile.save(camera, tmp_path / 'cam2.json')
    assert CameraFile.load(tmp_path / 'cam2.json').to_dict() == camera.to_dict()


@pytest.mark.parametrize('broken,field', [
    ({'fx': -1.0}, 'fx'),
    ({'width': 10.5}, 'width'),
    ({'height': 0}, 'height'),
    ({'extrinsic': [1.0] * 12}, 'extrinsic'),
])
def test_camera_errors_name_field(broken, field):
    data = dict({'fx': 100, 'fy': 100, 'cx': 32, 'cy': 16, 'width': 64, 'height': 32}, **broken)
    with pytest.raises(SceneFormatError) as info:
        CameraFile.from_dict(data)
    assert info.value.field == field


def test_scale_set():
    assert [s.factor for s in ScaleSet.mtmt()] == [1.0, 2.0, 4.0, 8.0]
    assert ScaleSet(4.0).is_mtmt and not ScaleSet(0.5).is_mtmt
    with pytest.raises(DomainError):
        ScaleSet(0.0)


def test_image_validation():
    with pytest.raises(DomainError):
        Image(np.zeros((4, 4)))
    with pytest.raises(DomainError):
        Image(np.full((2, 2, 3), np.nan))
    assert Image.constant(5, 3, (0.1, 0.2, 0.3)).shape == (5, 3)


def test_ppm_write_read(tmp_path):
    pixels = np.linspace(0.0, 1.0, 4 * 6 * 3).reshape(4, 6, 3)
    Image(pixels).save(tmp_path / 'a.ppm')
    raw = (tmp_path / 'a.ppm').read_bytes()
    assert raw.startswith(b"P6\n6 4\n255\n")
    loaded = Image.load(tmp_path / 'a.ppm')
    assert np.max(np.abs(loaded.pixels - pixels)) <= 0.5 / 255 + 1e-12


def test_ppm_header_comments_and_errors(tmp_path):
    path = tmp_path / 'c.ppm'
    path.write_bytes(b"P6\n# comment\n2 1\n255\n" + bytes([0, 128, 255, 255, 0, 0]))
    image = Image.load(path)
    assert image.shape == (2, 1)
    assert np.allclose(image.pixels[0, 1], (1.0, 0.0, 0.0))
    path.write_bytes(b"P6\n2 2\n255\n" + bytes(6))
    with pytest.raises(SceneFormatError):
        Image.load(path)
    path.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(SceneFormatError):
        Image.load(path)


def test_pfm_is_exact_for_float32(tmp_path):
    pixels = np.random.default_rng(0).random((5, 7, 3)).astype(np.float32).astype(np.float64)
    Image(pixels).save(tmp_path / 'a.pfm')
    assert np.array_equal(Image.load(tmp_path / 'a.pfm').pixels, pixels)


def test_unknown_format(tmp_path):
    with pytest.raises(DomainError):
        Image.constant(2, 2, (0, 0, 0)).save(tmp_path / 'a.png')


def test_srgb():
    assert srgb_encode(np.array(0.0)) == 0.0
    assert srgb_encode(np.array(1.0)) == pytest.approx(1.0)
    assert srgb_encode(np.array(0.5)) == pytest.approx(0.735357, abs=1e-6)
    x = np.linspace(0.0, 1.0, 11)
    assert np.allclose(srgb_decode(srgb_encode(x)), x, atol=1e-12)


def test_srgb_ppm(tmp_path):
    image = Image.constant(2, 2, (0.5, 0.5, 0.5))
    image.save(tmp_path / 's.ppm', srgb=True)
    assert (tmp_path / 's.ppm').read_bytes()[-1] == round(0.735357 * 255)
    loaded = Image.load(tmp_path / 's.ppm', srgb=True)
    assert np.allclose(loaded.pixels, 0.5, atol=3e-3)


def test_camera_defaults():
    camera = Camera(fx=10, fy=10, cx=5, cy=5, width=10, height=10)
    assert camera.fx == 10.0 and isinstance(camera.width, int)


if __name__ == '__main__':
    raise SystemExit(pytest.main([__file__, '-q']))
