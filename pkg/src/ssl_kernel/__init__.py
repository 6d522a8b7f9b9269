"""Induced kernels for self-supervised losses, with downstream evaluation tools.

Modules
-------
kernels     base kernels, Gram assembly, dense symmetric linear algebra
graph       augmentation adjacencies and graph Laplacians
induced     closed-form induced kernels for both SSL losses
sdp         batched induced-kernel optimization as a semidefinite program
downstream  kernel ridge regression, SMO SVM, s_N complexity, bounds
data        spiral generator, IDX image IO, blur/affine augmentations
cli         `ssl-kernel` experiment driver
"""

from ._accel import backend_name as accel_backend
from .induced import (
    SslConfig,
    InducedKernel,
    fit_contrastive,
    fit_noncontrastive,
)

__version__ = "0.1.0"

__all__ = [
    "SslConfig",
    "InducedKernel",
    "fit_contrastive",
    "fit_noncontrastive",
    "accel_backend",
    "__version__",
]
