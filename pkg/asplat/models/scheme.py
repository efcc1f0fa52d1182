# -*- coding: utf-8 -*-
"""
Схемы вычисления отклика гауссиана в пикселе
"""

from dataclasses import dataclass, field
from enum import Enum

from ..core.config import Config
from ..core.errors import DomainError


class SchemeKind(Enum):
    CENTER = 'center'
    SUPERSAMPLE = 'supersample'
    PREFILTER = 'prefilter'
    ANALYTIC = 'analytic'


@dataclass(frozen=True)
class ShadeScheme:
    """
    Схема шейдинга

    Текстовая форма: 'center', 'analytic', 'supersample:N', 'prefilter:SIGMA'
    (без параметра - N=2 и SIGMA=Config.PREFILTER_SIGMA).
    """

    kind: SchemeKind
    n: int = 2
    sigma_w: float = field(default_factory=lambda: Config.PREFILTER_SIGMA)

    @classmethod
    def center(cls) -> 'ShadeScheme':
        return cls(SchemeKind.CENTER)

    @classmethod
    def analytic(cls) -> 'ShadeScheme':
        return cls(SchemeKind.ANALYTIC)

    @classmethod
    def supersample(cls, n: int = 2) -> 'ShadeScheme':
        if int(n) < 1:
            raise DomainError(f"Число подвыборок должно быть ≥ 1, получено {n}")
        return cls(SchemeKind.SUPERSAMPLE, n=int(n))

    @classmethod
    def prefilter(cls, sigma_w: float = None) -> 'ShadeScheme':
        sigma_w = Config.PREFILTER_SIGMA if sigma_w is None else float(sigma_w)
        if not sigma_w > 0:
            raise DomainError(f"σ предфильтра должна быть положительной, получено {sigma_w}")
        return cls(SchemeKind.PREFILTER, sigma_w=sigma_w)

    @classmethod
    def parse(cls, text: str) -> 'ShadeScheme':
        """Разбор текстовой формы схемы"""
        name, _, arg = text.strip().lower().partition(':')
        try:
            if name in ('center', 'centersample'):
                return cls.center()
            if name == 'analytic':
                return cls.analytic()
            if name in ('supersample', 'ss'):
                return cls.supersample(int(arg) if arg else 2)
            if name in ('prefilter', 'mip'):
                return cls.prefilter(float(arg) if arg else None)
        except ValueError as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"Некорректный параметр схемы '{text}': {e}") from e
        raise DomainError(f"Неизвестная схема шейдинга '{text}'. "
                          f"Допустимые: center, analytic, supersample:N, prefilter:SIGMA")

    @property
    def label(self) -> str:
        if self.kind is SchemeKind.SUPERSAMPLE:
            return f"supersample:{self.n}"
        if self.kind is SchemeKind.PREFILTER:
            return f"prefilter:{self.sigma_w:g}"
        return self.kind.value

    @property
    def has_backward(self) -> bool:
        """Реализован ли обратный проход для схемы"""
        return self.kind in (SchemeKind.CENTER, SchemeKind.ANALYTIC)

    def __str__(self) -> str:
        return self.label
