# -*- coding: utf-8 -*-
"""
Core components - configuration, logging, errors and worker pool
"""
