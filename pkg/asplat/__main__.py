# -*- coding: utf-8 -*-
"""
Точка входа для запуска пакета как модуля: python -m asplat <команда>
"""

import sys

from .main import main

if __name__ == "__main__":
    sys.exit(main())
