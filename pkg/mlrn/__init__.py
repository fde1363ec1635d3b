"""Multi-level residual network (MLRN) toolkit for single-image super-resolution.

The subpackages build on each other: `mlrn.tensor` (reverse-mode autodiff),
`mlrn.model` (the network), `mlrn.image` (PNG I/O, bicubic degradation and
patch sampling), `mlrn.metrics` (PSNR/SSIM) and `mlrn.training`.
"""
