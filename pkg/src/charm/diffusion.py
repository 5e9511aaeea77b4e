"""Deterministic toy latent-diffusion backbone with instrumented cross-attention.

The denoiser is a stack of cross-attention blocks from latent-grid queries to
text-token keys/values, each followed by a feed-forward update, run under a
deterministic DDIM-style schedule. Every cross-attention layer is a hook
site: the per-token adjustment is applied to the post-softmax probabilities
in place, and the raw and scaled matrices can be captured into a trace.

Weights are pseudo-random but fully determined by ``weight_seed``; the whole
pipeline is a pure function of its arguments. Image aesthetics are a
non-goal; the output is structured noise with exactly reproducible bytes.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from PIL import Image

from .attention import AttentionAdjustment, apply_adjustment
from .errors import DimensionMismatch, EmptyImage, InvalidConfig
from .text import D_TEXT, N_MAX, _sinusoidal

UPSAMPLE = 4  # image edge = UPSAMPLE * latent edge


@dataclass(frozen=True)
class ModelConfig:
    layers: int = 4
    heads: int = 4
    latent_h: int = 16
    latent_w: int = 16
    latent_c: int = 4
    d_model: int = 64
    steps: int = 10
    beta_start: float = 1e-4
    beta_end: float = 0.02
    weight_seed: int = 0

    def validate(self) -> None:
        if self.layers < 1 or self.heads < 1 or self.steps < 1:
            raise InvalidConfig("layers, heads, and steps must all be >= 1")
        if min(self.latent_h, self.latent_w, self.latent_c) < 2:
            raise InvalidConfig("latent dims must be >= 2")
        if self.d_model % self.heads != 0:
            raise InvalidConfig(
                f"d_model {self.d_model} not divisible by {self.heads} heads"
            )

    @property
    def n_queries(self) -> int:
        return self.latent_h * self.latent_w

    @property
    def img_h(self) -> int:
        return self.latent_h * UPSAMPLE

    @property
    def img_w(self) -> int:
        return self.latent_w * UPSAMPLE

    def to_json(self) -> dict:
        return {
            "layers": self.layers,
            "heads": self.heads,
            "latent_h": self.latent_h,
            "latent_w": self.latent_w,
            "latent_c": self.latent_c,
            "d_model": self.d_model,
            "steps": self.steps,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "weight_seed": self.weight_seed,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ModelConfig":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


class DenoiserWeights:
    """All projection matrices of the denoiser, derived from ``weight_seed``.

    Matrices are drawn in a fixed order from one PCG64 stream, so
    regeneration from the same seed is bit-identical.
    """

    def __init__(self, config: ModelConfig):
        config.validate()
        rng = np.random.default_rng(config.weight_seed)
        d, c = config.d_model, config.latent_c

        def draw(rows, cols):
            return rng.standard_normal((rows, cols)) / np.sqrt(rows)

        self.w_in = draw(c, d)
        self.blocks = []
        for _ in range(config.layers):
            self.blocks.append(
                {
                    "w_q": draw(d, d),
                    "w_k": draw(D_TEXT, d),
                    "w_v": draw(D_TEXT, d),
                    "w_o": draw(d, d),
                    "w_ff1": draw(d, 2 * d),
                    "w_ff2": draw(2 * d, d),
                }
            )
        self.w_out = draw(d, c)
        self.decoder_mix = draw(c, 3)


@dataclass
class AttentionTrace:
    """Per (step, layer, head) attention probabilities, 0-based indices.

    ``pre`` holds the raw softmax output; ``post`` holds the gamma-scaled
    matrix and is only populated while an adjustment is active.
    """

    steps: int
    layers: int
    heads: int
    pre: dict[tuple[int, int, int], np.ndarray] = field(default_factory=dict)
    post: dict[tuple[int, int, int], np.ndarray] = field(default_factory=dict)

    def record(self, key, raw, scaled=None):
        self.pre[key] = raw
        if scaled is not None:
            self.post[key] = scaled

    def keys(self):
        return [
            (s, l, h)
            for s in range(self.steps)
            for l in range(self.layers)
            for h in range(self.heads)
        ]

    def is_complete(self) -> bool:
        return all(k in self.pre for k in self.keys())


@dataclass(frozen=True)
class GeneratedImage:
    """8-bit RGB image plus the inputs that produced it."""

    pixels: np.ndarray  # (img_h, img_w, 3) uint8
    seed: int
    prompt: str = ""
    adjustment: AttentionAdjustment = field(default_factory=AttentionAdjustment)

    def __post_init__(self):
        if self.pixels.size == 0:
            raise EmptyImage("image has zero pixels")
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise DimensionMismatch(f"expected (h, w, 3) pixels, got {self.pixels.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def to_png(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png(
        cls, data: bytes, seed: int = 0, prompt: str = "", adjustment=None
    ) -> "GeneratedImage":
        arr = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))
        return cls(
            pixels=arr,
            seed=seed,
            prompt=prompt,
            adjustment=adjustment or AttentionAdjustment(),
        )


def build_model(config: ModelConfig) -> "ToyDiffusionModel":
    return ToyDiffusionModel(config)


class ToyDiffusionModel:
    """Deterministic denoising generator over a small latent grid.

    Weights are immutable after construction; each generate call owns its
    latent and trace, so concurrent calls are independent.
    """

    def __init__(self, config: ModelConfig):
        config.validate()
        self.config = config
        self.weights = DenoiserWeights(config)
        betas = np.linspace(config.beta_start, config.beta_end, config.steps)
        self.alpha_bars = np.cumprod(1.0 - betas)
        # Fixed per-cell positional term plus per-timestep term for features.
        self._pos_spatial = np.stack(
            [_sinusoidal(p, config.d_model) for p in range(config.n_queries)]
        )
        self._time_enc = np.stack(
            [_sinusoidal(t + 1, config.d_model) for t in range(config.steps)]
        )

    # ------------------------------------------------------------------ core

    def _attention_block(self, f, emb, valid_len, block, adjustment, trace, step, layer):
        cfg = self.config
        d_head = cfg.d_model // cfg.heads
        nq = cfg.n_queries
        adjust = adjustment is not None and bool(adjustment)

        if valid_len == 0:
            # Nothing to attend to; the hook still records (zero) matrices.
            if trace is not None:
                for h in range(cfg.heads):
                    zero = np.zeros((nq, N_MAX))
                    trace.record((step, layer, h), zero, zero.copy() if adjust else None)
            attn_out = np.zeros_like(f)
        else:
            # Keys/values for padding rows are zero and masked out, so only
            # the first valid_len token columns are ever computed; traced
            # matrices are padded back to N_MAX width.
            q = (f @ block["w_q"]).reshape(nq, cfg.heads, d_head).transpose(1, 0, 2)
            k = (emb[:valid_len] @ block["w_k"]).reshape(valid_len, cfg.heads, d_head)
            v = (emb[:valid_len] @ block["w_v"]).reshape(valid_len, cfg.heads, d_head)
            logits = q @ k.transpose(1, 2, 0) / np.sqrt(d_head)  # (H, nq, valid)
            logits -= logits.max(axis=2, keepdims=True)
            probs = np.exp(logits)
            probs /= probs.sum(axis=2, keepdims=True)
            used = probs
            if adjust:
                used = np.stack(
                    [apply_adjustment(probs[h], adjustment, valid_len)
                     for h in range(cfg.heads)]
                )
            if trace is not None:
                for h in range(cfg.heads):
                    raw = np.zeros((nq, N_MAX))
                    raw[:, :valid_len] = probs[h]
                    scaled = None
                    if adjust:
                        scaled = np.zeros((nq, N_MAX))
                        scaled[:, :valid_len] = used[h]
                    trace.record((step, layer, h), raw, scaled)
            out = (used @ v.transpose(1, 0, 2)).transpose(1, 0, 2)
            attn_out = out.reshape(nq, cfg.d_model) @ block["w_o"]

        f = f + attn_out
        return f + np.tanh(f @ block["w_ff1"]) @ block["w_ff2"]

    def _denoise(self, z, t, step, emb, valid_len, adjustment, trace):
        """Predict the noise residual for latent ``z`` at schedule index ``t``."""
        f = z @ self.weights.w_in + self._pos_spatial + self._time_enc[t]
        for layer, block in enumerate(self.weights.blocks):
            f = self._attention_block(
                f, emb, valid_len, block, adjustment, trace, step, layer
            )
        return f @ self.weights.w_out

    def ddim_step(self, z, t, step, emb, valid_len, adjustment=None, trace=None):
        """One deterministic denoising update at schedule index ``t``.

        ``step`` counts executed steps from 0 so trace keys match execution
        order. Returns (z_next, alpha_bar_prev).
        """
        eps = self._denoise(z, t, step, emb, valid_len, adjustment, trace)
        a_t = self.alpha_bars[t]
        a_prev = self.alpha_bars[t - 1] if t > 0 else 1.0
        x0 = (z - np.sqrt(1.0 - a_t) * eps) / np.sqrt(a_t)
        return np.sqrt(a_prev) * x0 + np.sqrt(1.0 - a_prev) * eps, a_prev

    # ------------------------------------------------------------------- api

    def generate(
        self,
        embedding: np.ndarray,
        valid_len: int,
        seed: int,
        adjustment: AttentionAdjustment | None = None,
        trace: bool = False,
        prompt: str = "",
    ) -> tuple[GeneratedImage, AttentionTrace | None]:
        """Run the full denoising loop and decode the final latent.

        Pure in all arguments: identical inputs give bit-identical images.
        Tracing is observation-only and never changes the output.
        """
        cfg = self.config
        if embedding.shape != (N_MAX, D_TEXT):
            raise DimensionMismatch(
                f"expected embedding of shape {(N_MAX, D_TEXT)}, got {embedding.shape}"
            )
        rec = AttentionTrace(cfg.steps, cfg.layers, cfg.heads) if trace else None
        z = np.random.default_rng(seed).standard_normal((cfg.n_queries, cfg.latent_c))
        for step, t in enumerate(range(cfg.steps - 1, -1, -1)):
            z, _ = self.ddim_step(z, t, step, embedding, valid_len, adjustment, rec)
        image = self.decode_latent(
            z.reshape(cfg.latent_h, cfg.latent_w, cfg.latent_c),
            seed=seed,
            prompt=prompt,
            adjustment=adjustment,
        )
        return image, rec

    def decode_latent(
        self, latent: np.ndarray, seed: int = 0, prompt: str = "", adjustment=None
    ) -> GeneratedImage:
        """Fixed linear channel mix, 4x nearest-neighbor upsample, logistic
        squash, 8-bit quantization. The zero latent maps to value 128."""
        cfg = self.config
        expected = (cfg.latent_h, cfg.latent_w, cfg.latent_c)
        if latent.shape != expected:
            raise DimensionMismatch(f"expected latent {expected}, got {latent.shape}")
        rgb = latent @ self.weights.decoder_mix
        rgb = np.repeat(np.repeat(rgb, UPSAMPLE, axis=0), UPSAMPLE, axis=1)
        squashed = 1.0 / (1.0 + np.exp(-rgb))
        pixels = np.rint(squashed * 255.0).astype(np.uint8)
        return GeneratedImage(
            pixels=pixels,
            seed=seed,
            prompt=prompt,
            adjustment=adjustment or AttentionAdjustment(),
        )

    def encode_image(self, pixels: np.ndarray) -> np.ndarray:
        """Approximate inverse of decode_latent before quantization.

        Block-averages 4x4 pixel cells, inverts the logistic squash, and
        maps RGB back to latent channels with the decoder's pseudo-inverse.
        Lossy (the channel mix drops rank); inpainting restores unmasked
        pixels exactly with a final composite, not through this inverse.
        """
        cfg = self.config
        if pixels.shape != (cfg.img_h, cfg.img_w, 3):
            raise DimensionMismatch(
                f"expected image {(cfg.img_h, cfg.img_w, 3)}, got {pixels.shape}"
            )
        s = pixels.astype(np.float64) / 255.0
        s = np.clip(s, 1.0 / 510.0, 1.0 - 1.0 / 510.0)
        rgb = np.log(s / (1.0 - s))
        pooled = rgb.reshape(cfg.latent_h, UPSAMPLE, cfg.latent_w, UPSAMPLE, 3).mean(axis=(1, 3))
        return pooled @ np.linalg.pinv(self.weights.decoder_mix)


def save_config(config: ModelConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_json(), fh, indent=2)


def load_config(path) -> ModelConfig:
    with open(path, encoding="utf-8") as fh:
        return ModelConfig.from_json(json.load(fh))
