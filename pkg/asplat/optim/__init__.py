# -*- coding: utf-8 -*-
"""
Подгонка сцены к многомасштабным целям: метрики, цели, оптимизатор
"""
