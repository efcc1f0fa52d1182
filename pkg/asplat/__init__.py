# -*- coding: utf-8 -*-
"""
asplat - дифференцируемый микро-рендерер 2D гауссовых сплатов
с аналитическим интегрированием по окну пикселя
"""

__version__ = "1.0.0"
