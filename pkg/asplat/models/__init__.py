"""
Модели данных asplat
"""

from .gaussians import (SymMat2, Conic2, EigenDecomp2, Gaussian2D, Gaussian3D,
                        GaussGrad, GaussianParams, ShadeResult, SplatBatch, SplatGrads)
from .camera import Camera, ScaleSet, MTMT_FACTORS
from .scheme import SchemeKind, ShadeScheme
from .image import Image
from .scene_file import SceneFile, CameraFile

__all__ = [
    'SymMat2', 'Conic2', 'EigenDecomp2', 'Gaussian2D', 'Gaussian3D', 'GaussGrad',
    'GaussianParams', 'ShadeResult', 'SplatBatch', 'SplatGrads', 'Camera', 'ScaleSet', 'MTMT_FACTORS',
    'SchemeKind', 'ShadeScheme', 'Image', 'SceneFile', 'CameraFile',
]
