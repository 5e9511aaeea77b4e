import re

import numpy as np
import pytest

from charm import (
    CharmEngine,
    EngineConfig,
    ModelConfig,
    ModifierCatalog,
    ModifierEntry,
    PromptRecord,
    TextEncoder,
    ToyDiffusionModel,
    mine,
)


@pytest.fixture(scope="session")
def encoder():
    return TextEncoder(seed=0)


@pytest.fixture(scope="session")
def small_config():
    # Small enough that a full generation is ~1 ms.
    return ModelConfig(
        layers=2, heads=2, latent_h=4, latent_w=4, latent_c=2, d_model=16, steps=3
    )


@pytest.fixture(scope="session")
def small_model(small_config):
    return ToyDiffusionModel(small_config)


@pytest.fixture(scope="session")
def default_config():
    return ModelConfig()


@pytest.fixture(scope="session")
def default_model(default_config):
    return ToyDiffusionModel(default_config)


@pytest.fixture(scope="session")
def toy_corpus():
    texts = [
        "a wolf sitting next to a human child, oil painting, trending on artstation",
        "portrait of a wolf, highly detailed, oil painting, by greg rutkowski",
        "a castle in the mist, highly detailed, matte painting, trending on artstation",
        "cyberpunk city at night, neon lights, highly detailed, octane render",
        "a red fox in the snow, soft light, by greg rutkowski, oil painting",
        "ancient forest spirit, volumetric lighting, matte painting, concept art",
        "a dragon over the sea, dramatic sky, concept art, octane render",
        "still life with flowers, soft light, oil painting, highly detailed",
        "an astronaut riding a horse, photorealistic, octane render, 8k",
        "steampunk airship above the clouds, concept art, trending on artstation",
    ]
    return [PromptRecord(id=str(i), text=t) for i, t in enumerate(texts)]


@pytest.fixture(scope="session")
def toy_catalog(toy_corpus, encoder):
    return mine(toy_corpus, encoder, min_freq=2, top_k=500, corpus_ref="toy")


@pytest.fixture(scope="session")
def catalog50(encoder):
    # 50 distinct single-word phrases with deterministic frequencies.
    words = [f"style{i:02d}" for i in range(50)]
    entries = tuple(
        ModifierEntry(
            phrase=w, n=1, frequency=50 - i, embedding=encoder.embed_phrase(w)
        )
        for i, w in enumerate(words)
    )
    return ModifierCatalog(entries=entries, corpus_ref="synthetic")


@pytest.fixture
def engine(tmp_path, small_config):
    config = EngineConfig(
        model=small_config,
        session_dir=str(tmp_path / "sessions"),
        workers=2,
    )
    return CharmEngine(config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Print one PASS/FAIL line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    match = _CRITERION.match(item.name.split("[")[0])
    if match:
        number, slug = match.groups()
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] criterion {int(number):2d} {verdict} ({slug})")
