# -*- coding: utf-8 -*-
"""
asplat - точка входа программы
Микро-рендерер 2D гауссовых сплатов с аналитическим интегрированием по окну пикселя

Пример: python main.py render scene.json camera.json --scheme analytic --out frame.ppm
"""

import sys

from asplat.main import main


if __name__ == "__main__":
    sys.exit(main())
