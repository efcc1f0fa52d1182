# -*- coding: utf-8 -*-
"""
Альфа-композитинг отсортированного по глубине списка гауссианов и его обратный проход

Прямой проход: α = min(o·I, α_max), α < α_min отбрасывается, накопление
C = Σ T_k α_k c_k + T_final·bg с ранним завершением при T < T_min.
Обратный проход восстанавливает вклад "за" каждым гауссианом как обратную
исключающую сумму, что эквивалентно проходу от дальнего к ближнему.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass
class CompositeState:
    """Состояние прямого прохода одного тайла, нужное обратному"""

    alpha: np.ndarray          # (K,P) эффективная непрозрачность после порогов и завершения
    passes_grad: np.ndarray    # (K,P) градиент проходит (вклад учтен и не ограничен сверху)
    t_before: np.ndarray       # (K,P) пропускание перед гауссианом
    t_final: np.ndarray        # (P,)
    colors: np.ndarray         # (K,3)
    background: np.ndarray     # (3,)


def composite(alpha_raw: np.ndarray, colors: np.ndarray, background: np.ndarray,
              alpha_min: float, alpha_max: float,
              transmittance_min: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, CompositeState]:
    """
    Смешивание от ближнего к дальнему

    Args:
        alpha_raw: (K,P) произведения o·I в порядке возрастания глубины
        colors: (K,3) цвета гауссианов
        background: (3,) цвет фона
        alpha_min: Порог вклада (0 - без порога)
        alpha_max: Верхняя граница α
        transmittance_min: Порог раннего завершения (0 - без завершения)

    Returns:
        (color (P,3), t_final (P,), contributors (P,), state)
    """
    alpha_raw = np.asarray(alpha_raw, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64).reshape(3)
    k, p = alpha_raw.shape
    if k == 0:
        state = CompositeState(np.zeros((0, p)), np.zeros((0, p), dtype=bool), np.zeros((0, p)),
                               np.ones(p), np.zeros((0, 3)), background)
        return np.tile(background, (p, 1)), np.ones(p), np.zeros(p, dtype=np.int64), state

    clamped = alpha_raw > alpha_max
    alpha = np.minimum(alpha_raw, alpha_max)
    alpha = np.where(alpha < alpha_min, 0.0, alpha)

    # Пропускание монотонно, поэтому условие T ≥ T_min выделяет префикс списка
    kept = np.cumprod(1.0 - alpha, axis=0) >= transmittance_min
    alpha = alpha * kept

    t_after = np.cumprod(1.0 - alpha, axis=0)
    t_before = np.vstack([np.ones((1, p)), t_after[:-1]])
    t_final = t_after[-1]
    weights = alpha * t_before

    color = weights.T @ colors + t_final[:, None] * background
    contributors = np.count_nonzero(alpha > 0, axis=0)
    state = CompositeState(alpha, (alpha > 0) & ~clamped, t_before, t_final, colors, background)
    return color, t_final, contributors, state


def composite_backward(state: CompositeState, d_color: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Обратный проход композитинга

    dC/dα_k = T_k·c_k - (S_k + T_final·bg) / (1 - α_k), S_k - вклад всех гауссианов за k.

    Args:
        state: Состояние прямого прохода
        d_color: (P,3) градиент функции потерь по цвету пикселей

    Returns:
        (d_alpha_raw (K,P), d_colors (K,3))
    """
    alpha = state.alpha
    if alpha.shape[0] == 0:
        return np.zeros_like(alpha), np.zeros((0, 3))
    d_color = np.asarray(d_color, dtype=np.float64)
    weights = alpha * state.t_before

    d_colors = weights @ d_color

    # (K,P): вклад c_k·dL/dC и вклад "за" гауссианом
    own = state.colors @ d_color.T
    weighted = weights * own
    behind = weighted.sum(axis=0, keepdims=True) - np.cumsum(weighted, axis=0)
    background_term = state.t_final * (d_color @ state.background)
    # При α = 1 за гауссианом ничего не видно: вклад "за" равен нулю
    remaining = 1.0 - alpha
    with np.errstate(divide='ignore', invalid='ignore'):
        seen_behind = np.where(remaining > 0.0, (behind + background_term[None, :]) / remaining, 0.0)
    d_alpha = state.t_before * own - seen_behind
    return np.where(state.passes_grad, d_alpha, 0.0), d_colors
