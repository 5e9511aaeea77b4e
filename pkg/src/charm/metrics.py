"""Evaluation utilities: SSIM between images and determinism replay checks.

SSIM follows the standard formula over uniform 8x8 sliding windows on the
BT.601 luma plane. The uniform window (rather than the 11x11 Gaussian) is
cheaper and internally consistent, which is all the engine's evaluation
needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .diffusion import GeneratedImage, ToyDiffusionModel
from .errors import DimensionMismatch, MissingArtifact
from .inpaint import InpaintRequest, Mask, inpaint
from .session import Session, Version
from .text import TextEncoder, tokenize

BT601 = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class SsimParams:
    window: int = 8
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("K1 and K2 must be positive")


def luma(image) -> np.ndarray:
    """BT.601 luma plane as float64; accepts images or arrays."""
    arr = image.pixels if isinstance(image, GeneratedImage) else np.asarray(image)
    arr = arr.astype(np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr @ BT601
    raise DimensionMismatch(f"expected (h, w) or (h, w, 3), got {arr.shape}")


def ssim(a, b, params: SsimParams = SsimParams()) -> float:
    """Mean structural similarity over all fully-contained windows."""
    xa, xb = luma(a), luma(b)
    if xa.shape != xb.shape:
        raise DimensionMismatch(f"shapes differ: {xa.shape} vs {xb.shape}")
    w = params.window
    if min(xa.shape) < w:
        raise DimensionMismatch(f"image {xa.shape} smaller than {w}x{w} window")
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2

    wa = sliding_window_view(xa, (w, w))
    wb = sliding_window_view(xb, (w, w))
    mu_a = wa.mean(axis=(2, 3))
    mu_b = wb.mean(axis=(2, 3))
    var_a = (wa ** 2).mean(axis=(2, 3)) - mu_a ** 2
    var_b = (wb ** 2).mean(axis=(2, 3)) - mu_b ** 2
    cov = (wa * wb).mean(axis=(2, 3)) - mu_a * mu_b

    score = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    )
    return float(score.mean())


def replay(
    version: Version,
    model: ToyDiffusionModel,
    encoder: TextEncoder,
    session: Session,
) -> bool:
    """True iff re-running the version's stored inputs reproduces its image
    byte-exactly."""
    if version.image_ref not in session.blobs:
        raise MissingArtifact(f"version {version.id} has no stored image")
    stored = GeneratedImage.from_png(session.blobs[version.image_ref]).pixels

    if version.kind == "inpaint":
        if version.mask_ref is None or version.mask_ref not in session.blobs:
            raise MissingArtifact(f"inpaint version {version.id} has no stored mask")
        if version.parent is None:
            raise MissingArtifact(f"inpaint version {version.id} has no source version")
        source = session.get(version.parent)
        if source.image_ref not in session.blobs:
            raise MissingArtifact(f"source version {source.id} has no stored image")
        request = InpaintRequest(
            image=GeneratedImage.from_png(session.blobs[source.image_ref]),
            mask=Mask.from_png(session.blobs[version.mask_ref]),
            inpaint_prompt=version.prompt or None,
            seed=version.seed,
            strength=version.strength if version.strength is not None else 0.8,
        )
        regenerated = inpaint(model, encoder, request).pixels
    else:
        embedding, valid_len = encoder.encode(tokenize(version.prompt))
        image, _ = model.generate(
            embedding, valid_len, version.seed, adjustment=version.adjustment
        )
        regenerated = image.pixels

    return bool(np.array_equal(stored, regenerated))
