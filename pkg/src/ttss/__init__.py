"""Tensor-train spectral collocation solver for convection-diffusion-reaction
problems on hypercubes, with per-dimension upwinded collocation nodes."""

from . import spectral1d, superconsistency, tensor_train

__all__ = [
    "spectral1d",
    "superconsistency",
    "tensor_train",
]
