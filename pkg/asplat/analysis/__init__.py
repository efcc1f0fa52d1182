# -*- coding: utf-8 -*-
"""
Анализ ошибок аппроксимации
"""
