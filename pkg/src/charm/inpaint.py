"""Masked regeneration of image regions.

The denoising loop runs on a re-encoded latent; after every step the
unmasked latent cells are overwritten with the original latent noised to
the current schedule level, so generation is anchored to the kept content.
A final pixel-space composite copies every unmasked pixel from the input
byte-for-byte, which the lossy latent round trip cannot do on its own.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .diffusion import GeneratedImage, ToyDiffusionModel, UPSAMPLE
from .errors import DimensionMismatch, EmptyImage
from .text import D_TEXT, N_MAX, TextEncoder, tokenize

DEFAULT_STRENGTH = 0.8


@dataclass(frozen=True)
class Mask:
    grid: np.ndarray  # (img_h, img_w) bool; True = regenerate

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=bool))

    @property
    def popcount(self) -> int:
        return int(self.grid.sum())

    def to_png(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.grid).convert("1").save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png(cls, data: bytes) -> "Mask":
        img = Image.open(io.BytesIO(data)).convert("1")
        return cls(grid=np.asarray(img, dtype=bool))


@dataclass(frozen=True)
class InpaintRequest:
    image: GeneratedImage
    mask: Mask
    inpaint_prompt: str | None = None
    seed: int = 0
    strength: float = DEFAULT_STRENGTH
    blend_per_step: bool = True


def rasterize_strokes(
    strokes: list[dict], img_h: int, img_w: int
) -> Mask:
    """Union of filled brush circles {x, y, r}, clipped to the image.

    Non-positive radii contribute nothing.
    """
    grid = np.zeros((img_h, img_w), dtype=bool)
    yy, xx = np.ogrid[:img_h, :img_w]
    for stroke in strokes:
        x, y, r = float(stroke["x"]), float(stroke["y"]), float(stroke["r"])
        if r <= 0:
            continue
        grid |= (xx - x) ** 2 + (yy - y) ** 2 <= r * r
    return Mask(grid=grid)


def strokes_to_json(strokes: list[dict]) -> str:
    return json.dumps([{"x": s["x"], "y": s["y"], "r": s["r"]} for s in strokes])


def strokes_from_json(text: str) -> list[dict]:
    return [{"x": s["x"], "y": s["y"], "r": s["r"]} for s in json.loads(text)]


def downsample_mask(mask: Mask, latent_h: int, latent_w: int) -> np.ndarray:
    """Latent cell is masked iff any covered pixel is masked (dilating), so
    thin strokes survive the 4x reduction."""
    return mask.grid.reshape(latent_h, UPSAMPLE, latent_w, UPSAMPLE).any(axis=(1, 3))


def inpaint(
    model: ToyDiffusionModel, encoder: TextEncoder, request: InpaintRequest
) -> GeneratedImage:
    """Regenerate masked pixels; every unmasked pixel is preserved exactly."""
    cfg = model.config
    pixels = request.image.pixels
    if pixels.size == 0:
        raise EmptyImage("inpaint input has zero pixels")
    if pixels.shape[:2] != (cfg.img_h, cfg.img_w):
        raise DimensionMismatch(
            f"image {pixels.shape[:2]} does not match model output "
            f"{(cfg.img_h, cfg.img_w)}"
        )
    if request.mask.grid.shape != pixels.shape[:2]:
        raise DimensionMismatch(
            f"mask {request.mask.grid.shape} does not match image {pixels.shape[:2]}"
        )
    if not request.mask.grid.any():
        return request.image

    if request.inpaint_prompt:
        emb, valid_len = encoder.encode(tokenize(request.inpaint_prompt))
    else:
        emb, valid_len = np.zeros((N_MAX, D_TEXT)), 0

    z0 = model.encode_image(pixels).reshape(cfg.n_queries, cfg.latent_c)
    keep = ~downsample_mask(request.mask, cfg.latent_h, cfg.latent_w).reshape(-1)

    run_steps = int(np.clip(round(request.strength * cfg.steps), 1, cfg.steps))
    t0 = run_steps - 1
    noise = np.random.default_rng(request.seed).standard_normal(z0.shape)
    z = np.sqrt(model.alpha_bars[t0]) * z0 + np.sqrt(1.0 - model.alpha_bars[t0]) * noise

    for step, t in enumerate(range(t0, -1, -1)):
        z, a_prev = model.ddim_step(z, t, step, emb, valid_len)
        if request.blend_per_step:
            known = np.sqrt(a_prev) * z0 + np.sqrt(1.0 - a_prev) * noise
            z[keep] = known[keep]

    out = model.decode_latent(
        z.reshape(cfg.latent_h, cfg.latent_w, cfg.latent_c),
        seed=request.seed,
        prompt=request.inpaint_prompt or "",
    )
    composite = out.pixels.copy()
    composite[~request.mask.grid] = pixels[~request.mask.grid]
    return GeneratedImage(
        pixels=composite,
        seed=request.seed,
        prompt=request.inpaint_prompt or "",
    )
