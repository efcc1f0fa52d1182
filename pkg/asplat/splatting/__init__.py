# -*- coding: utf-8 -*-
"""
Рендеринг: ядро гауссианов, шейдинг, смешивание, проекция, растеризация и градиенты
"""
