#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Тесты командной строки: render, fit, analyze, gradcheck, compare и коды завершения
"""

import json

import numpy as np
import pytest

from asplat.core.config import Config
from asplat.main import main
from asplat.models.image import Image
from asplat.models.scene_file import SceneFile

CAMERA = {'fx': 64, 'fy': 64, 'cx': 32, 'cy': 16, 'width': 64, 'height': 32}
GAUSSIANS = [
    {'position': [0.0, 0.0, 1.0], 'quaternion': [1.0, 0.0, 0.0, 0.0], 'log_scales': [-3.0, -3.5, -3.0],
     'opacity_logit': 1.0, 'color': [1.0, 0.2, 0.1]},
    {'position': [0.1, -0.05, 1.5], 'quaternion': [0.9238795, 0.0, 0.0, 0.3826834],
     'log_scales': [-2.5, -4.0, -3.0], 'opacity_logit': 0.0, 'color': [0.1, 0.6, 0.9]},
]


@pytest.fixture
def files(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding='utf-8')
        return str(path)

    return {
        'dir': tmp_path,
        'camera': write('camera.json', CAMERA),
        'empty': write('empty.json', {'gaussians': [], 'background': [0.0, 0.0, 0.0]}),
        'scene': write('scene.json', {'gaussians': GAUSSIANS, 'background': [0.0, 0.0, 0.0]}),
    }


def run(files, *argv) -> int:
    return main(['--log-dir', str(files['dir'] / 'logs'), *argv])


def test_render_empty_scene_is_black(files):
    out = files['dir'] / 'black.ppm'
    assert run(files, 'render', files['empty'], files['camera'], '--out', str(out)) == 0
    assert out.read_bytes() == b"P6\n64 32\n255\n" + bytes(64 * 32 * 3)


def test_render_is_byte_identical(files):
    a, b = files['dir'] / 'a.ppm', files['dir'] / 'b.ppm'
    assert run(files, 'render', files['scene'], files['camera'], '--out', str(a)) == 0
    assert run(files, 'render', files['scene'], files['camera'], '--out', str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    assert Image.load(a).pixels.max() > 0.1


def test_render_scale_and_pfm(files, capsys):
    out = files['dir'] / 'small.pfm'
    assert run(files, 'render', files['scene'], files['camera'], '--scale', '8', '--out', str(out)) == 0
    assert Image.load(out).shape == (8, 4)
    assert "8x4" in capsys.readouterr().out


def test_render_errors(files):
    out = str(files['dir'] / 'x.ppm')
    assert run(files, 'render', str(files['dir'] / 'missing.json'), files['camera'], '--out', out) == 3
    bad = files['dir'] / 'bad_camera.json'
    bad.write_text(json.dumps(dict(CAMERA, fx=-1)), encoding='utf-8')
    assert run(files, 'render', files['scene'], str(bad), '--out', out) == 2
    assert run(files, 'render', files['scene'], files['camera'], '--scheme', 'blur', '--out', out) == 2
    assert run(files, 'render', files['scene'], files['camera'], '--out', str(files['dir'] / 'x.png')) == 2


def test_missing_config_file(files):
    assert main(['--config', str(files['dir'] / 'nope.json'), 'gradcheck', '--n', '0']) == 3


def test_default_config_is_loaded(files, monkeypatch):
    monkeypatch.setattr(Config, 'TILE_SIZE', Config.TILE_SIZE)
    monkeypatch.chdir(files['dir'])
    (files['dir'] / 'config.json').write_text(json.dumps({'tile_size': 8}), encoding='utf-8')
    assert run(files, 'gradcheck', '--n', '0') == 0
    assert Config.TILE_SIZE == 8


def test_explicit_config_is_loaded(files, monkeypatch):
    monkeypatch.setattr(Config, 'DILATION', Config.DILATION)
    path = files['dir'] / 'custom.json'
    path.write_text(json.dumps({'dilation': 0.2}), encoding='utf-8')
    assert run(files, '--config', str(path), 'gradcheck', '--n', '0') == 0
    assert Config.DILATION == 0.2


def test_usage_error_exit_code(files):
    assert run(files, 'render') == 2


def test_gradcheck(files, capsys):
    assert run(files, 'gradcheck', '--n', '0') == 0
    assert run(files, 'gradcheck', '--n', '1', '--seed', '42') == 0
    assert 'PASS' in capsys.readouterr().out
    assert run(files, 'gradcheck', '--n', '65') == 2
    assert run(files, 'gradcheck', '--n', '2', '--scheme', 'supersample:2') == 4


def test_analyze_cdf(files):
    out = files['dir'] / 'cdf.csv'
    assert run(files, 'analyze', '--curve', 'cdf', '--sigmas', '1', '--out', str(out)) == 0
    lines = out.read_text(encoding='utf-8').splitlines()
    assert lines[0] == "param,scheme,max_error,mean_error"
    assert len(lines) == 2
    assert float(lines[1].split(',')[2]) <= 4e-4
    assert run(files, 'analyze', '--curve', 'cdf', '--sigmas', '0.1', '--out', str(out)) == 2


def read_curve(path):
    rows = [line.split(',') for line in path.read_text(encoding='utf-8').splitlines()]
    assert rows[0] == ['param', 'scheme', 'max_error', 'mean_error']
    return rows[1:]


def test_analyze_is_deterministic(files):
    a, b = files['dir'] / 'a.csv', files['dir'] / 'b.csv'
    argv = ('analyze', '--curve', 'rotation', '--angles', '0,45', '--seed', '7', '--schemes', 'analytic,center')
    assert run(files, *argv, '--out', str(a)) == 0
    assert run(files, *argv, '--out', str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_curve(a)
    assert {float(row[0]) for row in rows} == {0.0, 45.0}
    assert {row[1] for row in rows} == {f"{s}@{p}" for s in ('analytic', 'center')
                                        for p in ('1x1', '2x0.5', '6.6x0.3')}


def test_analyze_rotation_sigma_pairs(files):
    out = files['dir'] / 'rot.csv'
    assert run(files, 'analyze', '--curve', 'rotation', '--angles', '0,30', '--sigma-pairs', '6.6x0.3',
               '--schemes', 'analytic', '--out', str(out)) == 0
    rows = read_curve(out)
    assert [(float(row[0]), row[1]) for row in rows] == [(0.0, 'analytic@6.6x0.3'), (30.0, 'analytic@6.6x0.3')]
    assert run(files, 'analyze', '--curve', 'rotation', '--sigmas', '6.6', '--out', str(out)) == 2
    assert run(files, 'analyze', '--curve', 'rotation', '--sigma-pairs', '6.6', '--out', str(out)) == 2
    assert run(files, 'analyze', '--curve', 'int', '--sigma-pairs', '1x1', '--out', str(out)) == 2


def test_analyze_int_and_offset(files):
    out = files['dir'] / 'int.csv'
    assert run(files, 'analyze', '--curve', 'int', '--sigmas', '0.5,1,2', '--out', str(out)) == 0
    assert len(out.read_text(encoding='utf-8').splitlines()) == 1 + 3 * 4
    assert run(files, 'analyze', '--curve', 'offset', '--sigmas', '1', '--offsets', '0,1.5,3',
               '--schemes', 'analytic', '--out', str(out)) == 0
    assert len(out.read_text(encoding='utf-8').splitlines()) == 4


def write_target(files, name='target.ppm', size=16):
    ys, xs = np.mgrid[0:size, 0:size]
    pixels = np.stack([xs / size, ys / size, np.full((size, size), 0.5)], axis=-1)
    path = files['dir'] / name
    Image(pixels).save(path)
    return str(path)


def test_fit_zero_iterations_returns_init(files):
    target = write_target(files)
    init_path = files['dir'] / 'init.json'
    init = {'gaussians': [dict(GAUSSIANS[0], position=[0.01, 0.02, 1.0])], 'background': [0.0, 0.0, 0.0]}
    init_path.write_text(json.dumps(init), encoding='utf-8')
    out = files['dir'] / 'fitted.json'
    assert run(files, 'fit', target, '--init', str(init_path), '--scales', '1', '--iters', '0',
               '--out', str(out)) == 0
    assert SceneFile.load(out).to_dict() == SceneFile.from_dict(init).to_dict()


def test_fit_is_deterministic(files):
    target = write_target(files)
    results = []
    for name in ('a', 'b'):
        out = files['dir'] / f'scene_{name}.json'
        report = files['dir'] / f'{name}.csv'
        assert run(files, 'fit', target, '--count', '8', '--scales', '1,2', '--iters', '5', '--seed', '3',
                   '--out', str(out), '--report', str(report)) == 0
        assert (files['dir'] / f'{name}.json').exists()
        results.append((out.read_bytes(), report.read_bytes()))
    assert results[0][0] == results[1][0]
    assert results[0][1] == results[1][1]


def test_fit_errors(files):
    target = write_target(files)
    out = str(files['dir'] / 'f.json')
    assert run(files, 'fit', target, '--scheme', 'prefilter', '--iters', '2', '--out', out) == 4
    assert run(files, 'fit', str(files['dir'] / 'none.ppm'), '--out', out) == 3
    assert run(files, 'fit', target, target, target, '--scales', '1,2', '--out', out) == 2


def test_compare(files, capsys):
    assert run(files, 'compare', files['scene'], files['camera'], '--factor', '2',
               '--schemes', 'analytic,center') == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ['scheme', 'psnr', 'ssim']
    assert [line.split()[0] for line in lines[1:3]] == ['analytic', 'center']


if __name__ == '__main__':
    raise SystemExit(pytest.main([__file__, '-q']))
