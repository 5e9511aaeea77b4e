import json

import numpy as np
import pytest

from charm.attention import AttentionAdjustment
from charm.diffusion import (
    DenoiserWeights,
    GeneratedImage,
    ModelConfig,
    build_model,
)
from charm.errors import DimensionMismatch, EmptyImage, InvalidConfig
from charm.text import TextEncoder, tokenize

from oracles import naive_forward_trace


@pytest.fixture(scope="module")
def embedded(small_config):
    encoder = TextEncoder(seed=0)
    prompt = tokenize("a wolf under the full moon")
    emb, n = encoder.encode(prompt)
    return emb, n


class TestConfig:
    def test_defaults_are_valid(self):
        ModelConfig().validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"d_model": 65, "heads": 8},
            {"layers": 0},
            {"heads": 0},
            {"steps": 0},
            {"latent_h": 1},
            {"latent_c": 1},
        ],
    )
    def test_invalid_configs(self, kwargs):
        with pytest.raises(InvalidConfig):
            ModelConfig(**kwargs).validate()

    def test_json_field_names(self):
        doc = ModelConfig().to_json()
        assert set(doc) == {
            "layers", "heads", "latent_h", "latent_w", "latent_c",
            "d_model", "steps", "beta_start", "beta_end", "weight_seed",
        }
        assert ModelConfig.from_json(json.loads(json.dumps(doc))) == ModelConfig()


class TestWeights:
    def test_same_seed_bit_identical(self, small_config):
        w1 = DenoiserWeights(small_config)
        w2 = DenoiserWeights(small_config)
        assert np.array_equal(w1.w_in, w2.w_in)
        assert np.array_equal(w1.w_out, w2.w_out)
        assert np.array_equal(w1.decoder_mix, w2.decoder_mix)
        for b1, b2 in zip(w1.blocks, w2.blocks):
            for key in b1:
                assert np.array_equal(b1[key], b2[key])

    def test_two_seeds_differ(self, small_config):
        import dataclasses

        other = dataclasses.replace(small_config, weight_seed=99)
        w1 = DenoiserWeights(small_config)
        w2 = DenoiserWeights(other)
        assert not np.array_equal(w1.w_in, w2.w_in)

    def test_build_model_rejects_invalid(self):
        with pytest.raises(InvalidConfig):
            build_model(ModelConfig(d_model=65, heads=8))

    def test_all_finite(self, small_model):
        w = small_model.weights
        for block in w.blocks:
            for mat in block.values():
                assert np.all(np.isfinite(mat))


class TestGenerate:
    def test_bit_identical_repeats(self, small_model, embedded):
        emb, n = embedded
        img1, _ = small_model.generate(emb, n, seed=5)
        img2, _ = small_model.generate(emb, n, seed=5)
        assert np.array_equal(img1.pixels, img2.pixels)

    def test_seeds_differ(self, small_model, embedded):
        emb, n = embedded
        img1, _ = small_model.generate(emb, n, seed=5)
        img2, _ = small_model.generate(emb, n, seed=6)
        assert not np.array_equal(img1.pixels, img2.pixels)

    def test_trace_rows_are_distributions(self, small_model, embedded):
        emb, n = embedded
        _, trace = small_model.generate(emb, n, seed=5, trace=True)
        assert trace.is_complete()
        for key in trace.keys():
            A = trace.pre[key]
            assert np.all(A >= 0) and np.all(A <= 1)
            assert np.allclose(A.sum(axis=1), 1.0, atol=1e-6)
            assert not np.any(A[:, n:])

    def test_trace_matches_naive_forward(self, small_model, embedded):
        emb, n = embedded
        _, trace = small_model.generate(emb, n, seed=5, trace=True)
        oracle, _ = naive_forward_trace(small_model, emb, n, seed=5)
        for key in trace.keys():
            assert np.allclose(trace.pre[key], oracle[key], atol=1e-9)

    def test_identity_adjustment_bit_identical(self, small_model, embedded):
        emb, n = embedded
        baseline, _ = small_model.generate(emb, n, seed=5)
        ones = AttentionAdjustment({j: 1.0 for j in range(n)})
        adjusted, _ = small_model.generate(emb, n, seed=5, adjustment=ones)
        assert np.array_equal(baseline.pixels, adjusted.pixels)

    def test_tracing_is_observation_only(self, small_model, embedded):
        emb, n = embedded
        plain, none_trace = small_model.generate(emb, n, seed=5, trace=False)
        traced, trace = small_model.generate(emb, n, seed=5, trace=True)
        assert none_trace is None and trace is not None
        assert np.array_equal(plain.pixels, traced.pixels)

    def test_first_hook_scaling_against_baseline_run(self, small_model, embedded):
        emb, n = embedded
        _, base = small_model.generate(emb, n, seed=5, trace=True)
        gamma = 0.5
        adj = AttentionAdjustment({1: gamma})
        _, scaled = small_model.generate(emb, n, seed=5, adjustment=adj, trace=True)
        for h in range(small_model.config.heads):
            b = base.pre[(0, 0, h)]
            s = scaled.post[(0, 0, h)]
            assert np.allclose(s[:, 1], gamma * b[:, 1], atol=1e-9)
            others = [j for j in range(b.shape[1]) if j != 1]
            assert np.array_equal(s[:, others], b[:, others])

    def test_adjustment_changes_image(self, small_model, embedded):
        emb, n = embedded
        plain, _ = small_model.generate(emb, n, seed=5)
        adj, _ = small_model.generate(
            emb, n, seed=5, adjustment=AttentionAdjustment({1: 2.0})
        )
        assert not np.array_equal(plain.pixels, adj.pixels)

    def test_empty_prompt_generates(self, small_model):
        emb = np.zeros((77, 64))
        img, trace = small_model.generate(emb, 0, seed=3, trace=True)
        assert img.pixels.shape == (16, 16, 3)
        assert trace.is_complete()
        assert not np.any(trace.pre[(0, 0, 0)])

    def test_wrong_embedding_shape(self, small_model):
        with pytest.raises(DimensionMismatch):
            small_model.generate(np.zeros((10, 64)), 3, seed=0)


class TestDecode:
    def test_zero_latent_is_mid_gray(self, small_model):
        cfg = small_model.config
        img = small_model.decode_latent(np.zeros((cfg.latent_h, cfg.latent_w, cfg.latent_c)))
        assert np.all(img.pixels == 128)

    def test_decode_deterministic(self, small_model, rng):
        cfg = small_model.config
        latent = rng.standard_normal((cfg.latent_h, cfg.latent_w, cfg.latent_c))
        a = small_model.decode_latent(latent)
        b = small_model.decode_latent(latent)
        assert np.array_equal(a.pixels, b.pixels)

    def test_wrong_shape(self, small_model):
        with pytest.raises(DimensionMismatch):
            small_model.decode_latent(np.zeros((3, 3, 1)))

    def test_nearest_upsample_blocks(self, small_model, rng):
        cfg = small_model.config
        latent = rng.standard_normal((cfg.latent_h, cfg.latent_w, cfg.latent_c))
        img = small_model.decode_latent(latent).pixels
        block = img[:4, :4]
        assert np.all(block == block[0, 0])

    def test_encode_image_shape_and_error(self, small_model, embedded):
        emb, n = embedded
        img, _ = small_model.generate(emb, n, seed=1)
        latent = small_model.encode_image(img.pixels)
        cfg = small_model.config
        assert latent.shape == (cfg.latent_h, cfg.latent_w, cfg.latent_c)
        with pytest.raises(DimensionMismatch):
            small_model.encode_image(img.pixels[:-4])


class TestGeneratedImage:
    def test_png_round_trip(self, small_model, embedded):
        emb, n = embedded
        img, _ = small_model.generate(emb, n, seed=9)
        again = GeneratedImage.from_png(img.to_png(), seed=9)
        assert np.array_equal(img.pixels, again.pixels)

    def test_png_bytes_deterministic(self, small_model, embedded):
        emb, n = embedded
        img, _ = small_model.generate(emb, n, seed=9)
        assert img.to_png() == img.to_png()

    def test_empty_rejected(self):
        with pytest.raises(EmptyImage):
            GeneratedImage(pixels=np.zeros((0, 0, 3), dtype=np.uint8), seed=0)
