# -*- coding: utf-8 -*-
"""
asplat - командная строка

Команды:
    render     рендер сцены камерой в PPM/PFM
    fit        подгонка гауссианов к целевому изображению на нескольких масштабах
    analyze    кривые ошибок аппроксимации в CSV
    gradcheck  проверка градиентов конечными разностями
    compare    сравнение схем шейдинга при уменьшении разрешения

Запуск: python -m asplat <команда> [опции]
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core.config import Config
from .core.errors import EXIT_FAILURE, EXIT_OK, DomainError, exit_code_for
from .core.logging_config import add_logging_arguments, configure_logging, finalize_session, levels_from_namespace
from .models.camera import ScaleSet
from .models.image import Image
from .models.scene_file import CameraFile, SceneFile
from .models.gaussians import GaussianParams
from .models.scheme import ShadeScheme

logger = logging.getLogger('CLI')

GRADCHECK_MAX_N = 64


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise DomainError(f"Ожидается список чисел через запятую, получено '{text}'") from e


def _pair_list(text: str) -> List[Tuple[float, float]]:
    """Пары σ вида '1x1,2x0.5'"""
    pairs = []
    for item in (v.strip() for v in text.split(',')):
        if not item:
            continue
        parts = item.lower().split('x')
        try:
            if len(parts) != 2:
                raise ValueError(item)
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError as e:
            raise DomainError(f"Ожидаются пары σ₁xσ₂ через запятую, получено '{text}'") from e
    if not pairs:
        raise DomainError("Список пар σ пуст")
    return pairs


def _scheme_list(text: str) -> List[ShadeScheme]:
    return [ShadeScheme.parse(v) for v in text.split(',') if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='asplat', description="Микро-рендерер 2D гауссовых сплатов "
                                                               "с аналитическим интегрированием по пикселю")
    parser.add_argument('--config', default=None,
                        help="JSON файл настроек рендера (по умолчанию config.json в рабочей директории)")
    add_logging_arguments(parser)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('render', help="рендер сцены")
    p.add_argument('scene', help="JSON файл сцены")
    p.add_argument('camera', help="JSON файл камеры")
    p.add_argument('--scheme', default='analytic', help="center | analytic | supersample:N | prefilter:S")
    p.add_argument('--scale', type=float, default=1.0, help="делитель разрешения (0.5 - суперразрешение)")
    p.add_argument('--out', required=True, help="выходное изображение")
    p.add_argument('--format', choices=('ppm', 'pfm'), default=None, help="формат (по умолчанию по расширению)")
    p.add_argument('--srgb', action='store_true', help="записать PPM в sRGB")
    p.set_defaults(handler=cmd_render)

    p = sub.add_parser('fit', help="подгонка гауссианов к изображению")
    p.add_argument('targets', nargs='+', help="цель полного разрешения или по одной цели на масштаб")
    p.add_argument('--camera', default=None, help="JSON камеры (по умолчанию fx = fy = ширина)")
    p.add_argument('--init', default=None, help="начальная сцена (по умолчанию случайная)")
    p.add_argument('--count', type=int, default=256, help="число гауссианов случайной начальной сцены")
    p.add_argument('--scheme', default='analytic')
    p.add_argument('--scales', default='1,2,4,8', help="делители разрешения через запятую")
    p.add_argument('--iters', type=int, default=1000)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--srgb', action='store_true', help="цели PPM закодированы в sRGB")
    p.add_argument('--out', required=True, help="выходной JSON сцены")
    p.add_argument('--report', default=None, help="CSV трассы (сводка - рядом, .json)")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser('analyze', help="кривые ошибок аппроксимации")
    p.add_argument('--curve', choices=('cdf', 'int', 'offset', 'rotation'), required=True)
    p.add_argument('--sigmas', default=None, help="σ через запятую (по умолчанию 32 точки на [0.3, 6.6])")
    p.add_argument('--schemes', default=None, help="схемы через запятую")
    p.add_argument('--offsets', default=None, help="нормированные смещения x/σ для --curve offset")
    p.add_argument('--angles', default=None, help="углы в градусах для --curve rotation")
    p.add_argument('--sigma-pairs', default=None,
                   help="пары σ₁xσ₂ через запятую для --curve rotation (по умолчанию 1x1,2x0.5,6.6x0.3)")
    p.add_argument('--seed', type=int, default=7, help="зерно Монте-Карло")
    p.add_argument('--out', required=True, help="выходной CSV")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser('gradcheck', help="проверка градиентов")
    p.add_argument('--seed', type=int, default=42)
    p.add_argument('--n', type=int, default=8, help=f"число гауссианов (≤ {GRADCHECK_MAX_N})")
    p.add_argument('--scheme', default='analytic')
    p.set_defaults(handler=cmd_gradcheck)

    p = sub.add_parser('compare', help="сравнение схем при уменьшении разрешения")
    p.add_argument('scene')
    p.add_argument('camera')
    p.add_argument('--factor', type=int, default=8)
    p.add_argument('--schemes', default='analytic,center,supersample:2,prefilter:0.1')
    p.set_defaults(handler=cmd_compare)
    return parser


def cmd_render(args: argparse.Namespace) -> int:
    from .splatting.project import scale_camera
    from .splatting.raster import render

    scene = SceneFile.load(args.scene)
    camera = scale_camera(CameraFile.load(args.camera), ScaleSet(args.scale))
    scheme = ShadeScheme.parse(args.scheme)
    started = time.perf_counter()
    image, record = render(scene.gaussians, camera, scheme, scene.background)
    elapsed = time.perf_counter() - started
    image.save(args.out, args.format, srgb=args.srgb)
    print(f"Рендер {image.width}x{image.height}, схема {scheme.label}: {len(scene.gaussians)} гауссианов "
          f"({len(record.splats)} видимых) за {elapsed:.3f} с")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    from .optim.fit import FitConfig, fit, scale_cameras
    from .optim.targets import fit_camera, init_gaussians, make_multiscale_targets

    scales = tuple(ScaleSet(f) for f in _float_list(args.scales))
    cfg = FitConfig(iterations=args.iters, scales=scales, seed=args.seed, scheme=ShadeScheme.parse(args.scheme))
    images = [Image.load(path, srgb=args.srgb) for path in args.targets]
    full = images[0]
    camera = CameraFile.load(args.camera) if args.camera else fit_camera(full.width, full.height)
    if len(images) == 1:
        targets = make_multiscale_targets(full, scales)
    elif len(images) == len(scales):
        targets = images
    else:
        raise DomainError(f"Передано {len(images)} целей для {len(scales)} масштабов")

    if args.init:
        init_scene = SceneFile.load(args.init)
        init = GaussianParams.from_gaussians(init_scene.gaussians)
        background = init_scene.background
    else:
        init = init_gaussians(full, camera, args.count, seed=args.seed)
        background = np.zeros(3)
    cfg.background = tuple(float(v) for v in background)

    gaussians, report = fit(targets, scale_cameras(camera, scales), init, cfg)
    SceneFile(gaussians, background).save(args.out)
    if args.report:
        report.save(args.report)
    for m in report.metrics:
        ssim_text = f"{m.ssim:.4f}" if m.ssim is not None else "-"
        print(f"x{m.factor:g}: PSNR {m.psnr:.2f} дБ, SSIM {ssim_text}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    from .analysis import error_curves as ec

    rotation = args.curve == 'rotation'
    if rotation and args.sigmas:
        raise DomainError("--sigmas не применяется к --curve rotation, используйте --sigma-pairs")
    if not rotation and args.sigma_pairs:
        raise DomainError(f"--sigma-pairs применяется только к --curve rotation, получено --curve {args.curve}")
    sigmas = _float_list(args.sigmas) if args.sigmas else ec.default_sigmas()
    schemes = _scheme_list(args.schemes) if args.schemes else None
    if args.curve == 'cdf':
        curve = ec.e_cdf_curve(sigmas)
    elif args.curve == 'int':
        curve = ec.e_int_curve(sigmas, schemes or ec.DEFAULT_SCHEMES)
    elif args.curve == 'offset':
        offsets = _float_list(args.offsets) if args.offsets else np.linspace(0.0, 3.0, 13)
        curve = ec.e_int_offset_curve(offsets, sigmas, schemes or ec.DEFAULT_SCHEMES)
    else:
        angles = _float_list(args.angles) if args.angles else ec.DEFAULT_ANGLES
        pairs = _pair_list(args.sigma_pairs) if args.sigma_pairs else ec.DEFAULT_SIGMA_PAIRS
        curve = ec.rotation_error_curve(angles, pairs, schemes=schemes or ('analytic', 'center'), seed=args.seed)
    curve.save(args.out)
    print(f"Кривая '{args.curve}': {len(curve.rows)} строк → {args.out}")
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    from .splatting.gradients import gradcheck

    if not 0 <= args.n <= GRADCHECK_MAX_N:
        raise DomainError(f"--n должно лежать в [0, {GRADCHECK_MAX_N}], получено {args.n}")
    report = gradcheck(args.n, args.seed, ShadeScheme.parse(args.scheme))
    print(report.table())
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_compare(args: argparse.Namespace) -> int:
    from .splatting.raster import compare_schemes

    scene = SceneFile.load(args.scene)
    camera = CameraFile.load(args.camera)
    scores = compare_schemes(scene.gaussians, camera, args.factor, _scheme_list(args.schemes), scene.background)
    print(f"{'scheme':<16}{'psnr':>10}{'ssim':>10}")
    for s in scores:
        ssim_text = f"{s.ssim:>10.4f}" if s.ssim is not None else f"{'-':>10}"
        print(f"{s.scheme:<16}{s.psnr:>10.2f}{ssim_text}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Разбор аргументов, настройка логирования и выполнение команды

    Returns:
        Код завершения: 0 успех, 2 некорректный ввод, 3 ошибка ввода-вывода,
        4 неподдерживаемая операция, 1 прочие ошибки
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    console_level, file_level = levels_from_namespace(args)
    configure_logging(console_level, file_level, log_dir=args.log_dir)
    try:
        if args.config and not Path(args.config).exists():
            raise FileNotFoundError(f"Файл конфигурации {args.config} не найден")
        Config.load_config(args.config)
        return args.handler(args)
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_FAILURE:
            logger.critical("Необработанное исключение", exc_info=True)
        else:
            logger.error(f"{type(e).__name__}: {e}")
        print(f"asplat: ошибка: {e}", file=sys.stderr)
        return code
    finally:
        finalize_session()


if __name__ == "__main__":
    sys.exit(main())
