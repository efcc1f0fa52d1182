# -*- coding: utf-8 -*-
"""
Adam по классам параметров с отдельными шагами обучения
"""

from typing import Dict

import numpy as np


class Adam:
    """Adam с коррекцией смещения моментов; состояние хранится по именам классов параметров"""

    def __init__(self, learning_rates: Dict[str, float], beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-15):
        self.learning_rates = dict(learning_rates)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        """
        Один шаг для всех классов (массивы params изменяются на месте)

        Args:
            params: Имя класса → массив параметров
            grads: Имя класса → градиент той же формы
        """
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name, value in params.items():
            grad = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(value)
                self.v[name] = np.zeros_like(value)
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad * grad
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            value -= self.learning_rates[name] * m_hat / (np.sqrt(v_hat) + self.eps)
