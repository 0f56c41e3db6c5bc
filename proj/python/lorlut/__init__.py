"""Low-rank 3D LUT engine: LUT application, CP residuals, fitting and file formats.

Images are float arrays of shape (height, width, 3) in [0, 1]. LUT arrays have
shape (G, G, G, 3) and are indexed [r, g, b, channel].
"""

from ._lorlut import (
    Component,
    DimensionError,
    FormatError,
    LorlutError,
    Model,
    NumericError,
    RangeError,
    __version__,
    apply,
    compose_lut,
    compress,
    delta_e00,
    dense_param_count,
    fit,
    identity_lut,
    load_image,
    psnr,
    read_cube,
    read_model,
    reconstruct_residual,
    residual_param_count,
    sample,
    save_image,
    srgb_to_lab,
    ssim,
    total_param_count,
    tv_loss,
    write_cube,
    write_model,
)

__all__ = [
    "Component",
    "DimensionError",
    "FormatError",
    "LorlutError",
    "Model",
    "NumericError",
    "RangeError",
    "__version__",
    "apply",
    "compose_lut",
    "compress",
    "delta_e00",
    "dense_param_count",
    "fit",
    "identity_lut",
    "load_image",
    "psnr",
    "read_cube",
    "read_model",
    "reconstruct_residual",
    "residual_param_count",
    "sample",
    "save_image",
    "srgb_to_lab",
    "ssim",
    "total_param_count",
    "tv_loss",
    "write_cube",
    "write_model",
]
