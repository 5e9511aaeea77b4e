import socket
import threading
import time

import pytest
from fastapi.testclient import TestClient

from charm.catalog import save_catalog
from charm.chex import read_chex
from charm.engine import CharmEngine, EngineConfig
from charm.errors import PortInUse
from charm.metrics import replay
from charm.service import create_app, serve


@pytest.fixture()
def service(tmp_path, small_config, toy_catalog, toy_corpus):
    catalog_path = tmp_path / "catalog.json"
    save_catalog(toy_catalog, catalog_path)
    corpus_path = tmp_path / "corpus.txt"
    corpus_path.write_text("\n".join(r.text for r in toy_corpus), encoding="utf-8")
    config = EngineConfig(
        model=small_config,
        session_dir=str(tmp_path / "sessions"),
        catalog_path=str(catalog_path),
        corpus_path=str(corpus_path),
        workers=2,
    )
    engine = CharmEngine(config)
    with TestClient(create_app(engine)) as client:
        yield client, engine


def wait_done(client, job_id, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        ticket = client.get(f"/jobs/{job_id}").json()
        if ticket["state"] in ("done", "failed"):
            return ticket
        time.sleep(0.01)
    raise AssertionError("job did not settle in time")


def generate(client, session_id, prompt="a wolf at night", **body):
    response = client.post(
        f"/sessions/{session_id}/generate", json={"prompt": prompt, **body}
    )
    assert response.status_code == 200, response.text
    ticket = wait_done(client, response.json()["job_id"])
    assert ticket["state"] == "done", ticket
    return ticket


class TestBasics:
    def test_healthz(self, service):
        client, _ = service
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_create_session(self, service):
        client, _ = service
        response = client.post("/sessions")
        assert response.status_code == 200
        assert "session_id" in response.json()

    def test_unknown_session_404(self, service):
        client, _ = service
        assert client.get("/sessions/nope/versions").status_code == 404


class TestGenerateFlow:
    def test_job_lifecycle_and_version(self, service):
        client, engine = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(
            f"/sessions/{session_id}/generate", json={"prompt": "a wolf", "seed": 7}
        )
        first = response.json()
        assert first["state"] in ("queued", "running")  # returned before completion
        assert first["history"][0]["state"] == "queued"
        ticket = wait_done(client, first["job_id"])
        states = [h["state"] for h in ticket["history"]]
        assert states == ["queued", "running", "done"]
        assert ticket["result_ref"] == f"{session_id}-0"

        versions = client.get(f"/sessions/{session_id}/versions").json()["versions"]
        assert len(versions) == 1
        assert versions[0]["prompt"] == "a wolf"
        assert versions[0]["kind"] == "diffuse"
        assert versions[0]["ref"] == f"{session_id}-0"

    def test_image_endpoint_serves_stored_png(self, service):
        client, engine = service
        session_id = client.post("/sessions").json()["session_id"]
        ticket = generate(client, session_id, seed=3)
        response = client.get(f"/versions/{ticket['result_ref']}/image")
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/png"
        stored = engine.store.get(session_id).blobs["ver0.png"]
        assert response.content == stored

    def test_explanation_and_heatmaps(self, service):
        client, engine = service
        session_id = client.post("/sessions").json()["session_id"]
        ticket = generate(client, session_id, prompt="a wolf and the moon")
        doc = client.get(f"/versions/{ticket['result_ref']}/explanation").json()
        assert doc["tokens"] == ["a", "wolf", "and", "the", "moon"]
        assert max(doc["saliencies"]) == pytest.approx(1.0)
        raw = client.get(f"/versions/{ticket['result_ref']}/heatmaps")
        maps = read_chex(raw.content)
        cfg = engine.config.model
        assert maps.shape == (5, cfg.img_h, cfg.img_w)

    def test_no_trace_means_404_explanation(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        ticket = generate(client, session_id, trace=False)
        ref = ticket["result_ref"]
        assert client.get(f"/versions/{ref}/explanation").status_code == 404
        assert client.get(f"/versions/{ref}/heatmaps").status_code == 404

    def test_adjustment_kind_and_422(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        ticket = generate(
            client, session_id, adjustment={"entries": {"1": 0.5}}
        )
        versions = client.get(f"/sessions/{session_id}/versions").json()["versions"]
        assert versions[0]["kind"] == "adjust"

        response = client.post(
            f"/sessions/{session_id}/generate",
            json={"prompt": "a wolf", "adjustment": {"entries": {"1": 3.0}}},
        )
        assert response.status_code == 422
        assert response.json()["error"] == "GammaOutOfRange"

    def test_index_out_of_range_422(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(
            f"/sessions/{session_id}/generate",
            json={"prompt": "a wolf", "adjustment": {"entries": {"99": 1.0}}},
        )
        assert response.status_code == 422
        assert response.json()["error"] == "IndexOutOfRange"

    def test_schema_violation_400(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(f"/sessions/{session_id}/generate", json={"seed": 1})
        assert response.status_code == 400
        assert response.json()["error"] == "SchemaViolation"

    def test_deterministic_across_requests(self, service):
        client, _ = service
        sid1 = client.post("/sessions").json()["session_id"]
        sid2 = client.post("/sessions").json()["session_id"]
        t1 = generate(client, sid1, prompt="a wolf", seed=5)
        t2 = generate(client, sid2, prompt="a wolf", seed=5)
        img1 = client.get(f"/versions/{t1['result_ref']}/image").content
        img2 = client.get(f"/versions/{t2['result_ref']}/image").content
        assert img1 == img2

    def test_job_conflict_409(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        jobs = client.app.state.jobs
        release = threading.Event()
        jobs.submit(session_id, lambda: release.wait(timeout=5) or "held")
        response = client.post(
            f"/sessions/{session_id}/generate", json={"prompt": "a wolf"}
        )
        release.set()
        assert response.status_code == 409
        assert response.json()["error"] == "JobConflict"

    def test_unknown_job_404(self, service):
        client, _ = service
        assert client.get("/jobs/missing").status_code == 404

    def test_distinct_sessions_never_block_each_other(self, service):
        client, _ = service
        sid_a = client.post("/sessions").json()["session_id"]
        sid_b = client.post("/sessions").json()["session_id"]
        jobs = client.app.state.jobs
        release = threading.Event()
        jobs.submit(sid_a, lambda: release.wait(timeout=5) or "held")
        try:
            response = client.post(
                f"/sessions/{sid_b}/generate", json={"prompt": "a wolf"}
            )
            assert response.status_code == 200  # session A's job is irrelevant
            wait_done(client, response.json()["job_id"])
        finally:
            release.set()

    def test_completed_job_version_replays(self, service):
        client, engine = service
        session_id = client.post("/sessions").json()["session_id"]
        generate(client, session_id, prompt="a wolf", seed=9)
        session = engine.store.get(session_id)
        assert replay(session.get(0), engine.model, engine.encoder, session)


class TestInpaintFlow:
    def test_inpaint_job(self, service):
        client, engine = service
        session_id = client.post("/sessions").json()["session_id"]
        generate(client, session_id, seed=2)
        response = client.post(
            f"/sessions/{session_id}/inpaint",
            json={
                "version_id": 0,
                "strokes": [{"x": 8, "y": 8, "r": 4}],
                "seed": 3,
            },
        )
        assert response.status_code == 200
        ticket = wait_done(client, response.json()["job_id"])
        assert ticket["state"] == "done"
        versions = client.get(f"/sessions/{session_id}/versions").json()["versions"]
        assert versions[1]["kind"] == "inpaint"
        assert versions[1]["parent"] == 0
        assert versions[1]["mask_ref"] == "ver1.mask.png"

    def test_inpaint_unknown_version_404(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(
            f"/sessions/{session_id}/inpaint",
            json={"version_id": 5, "strokes": []},
        )
        assert response.status_code == 404


class TestDiffEndpoint:
    def test_diff_document(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        generate(client, session_id, prompt="a wolf at night", seed=1)
        generate(client, session_id, prompt="a wolf at night, oil painting", seed=1)
        doc = client.get(f"/sessions/{session_id}/diff", params={"a": 0, "b": 1}).json()
        ops = [run["op"] for run in doc["prompt_diff"]]
        assert ops == ["equal", "insert"]
        assert doc["images"] == [f"{session_id}-0", f"{session_id}-1"]

    def test_diff_unknown_version(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.get(f"/sessions/{session_id}/diff", params={"a": 0, "b": 1})
        assert response.status_code == 404


class TestRefineEndpoint:
    def test_refine(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(
            f"/sessions/{session_id}/refine", json={"prompt": "a lonely wolf"}
        )
        doc = response.json()
        assert doc["refined"].startswith("a lonely wolf")
        assert doc["source"] == "heuristic"
        assert len(doc["appended"]) == 4

    def test_refine_empty_prompt_422(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(f"/sessions/{session_id}/refine", json={"prompt": " "})
        assert response.status_code == 422
        assert response.json()["error"] == "EmptyPrompt"


class TestModifiers:
    def test_search(self, service):
        client, _ = service
        doc = client.get("/modifiers", params={"query": "highly detailed"}).json()
        assert len(doc["results"]) >= 2
        for record in doc["results"]:
            assert "highly detailed" in record["text"]

    def test_search_empty_query_422(self, service):
        client, _ = service
        response = client.get("/modifiers", params={"query": " "})
        assert response.status_code == 422
        assert response.json()["error"] == "EmptyQuery"

    def test_similar_and_dissimilar(self, service):
        client, engine = service
        doc = client.get(
            "/modifiers/similar", params={"phrase": "oil painting", "k": 3}
        ).json()
        assert len(doc["results"]) == 3
        assert all("phrase" in e and "frequency" in e for e in doc["results"])
        dis = client.get(
            "/modifiers/dissimilar", params={"phrase": "oil painting", "k": 3}
        ).json()
        assert len(dis["results"]) == 3
        assert {e["phrase"] for e in doc["results"]} != {e["phrase"] for e in dis["results"]}


class TestPersistenceAcrossRestart:
    def test_restart_preserves_manifest(self, tmp_path, small_config):
        config = EngineConfig(model=small_config, session_dir=str(tmp_path / "s"))
        with TestClient(create_app(CharmEngine(config))) as client:
            session_id = client.post("/sessions").json()["session_id"]
            generate(client, session_id, prompt="a wolf", seed=4)
            before = client.get(f"/sessions/{session_id}/versions").json()

        with TestClient(create_app(CharmEngine(config))) as client:  # fresh process state
            after = client.get(f"/sessions/{session_id}/versions").json()
        assert after == before


class TestServe:
    def test_port_in_use(self, tmp_path, small_config):
        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.bind(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        config = EngineConfig(
            model=small_config, session_dir=str(tmp_path / "s"), port=port
        )
        try:
            with pytest.raises(PortInUse):
                serve(config)
        finally:
            blocker.close()


class TestServeConfig:
    def test_invalid_model_config_surfaces_as_bad_config(self, tmp_path):
        from charm.diffusion import ModelConfig
        from charm.errors import BadConfig

        config = EngineConfig(
            model=ModelConfig(d_model=65, heads=8),
            session_dir=str(tmp_path / "s"),
        )
        with pytest.raises(BadConfig):
            serve(config)


class TestMalformedAdjustments:
    def test_non_numeric_gamma_key_is_schema_violation(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(
            f"/sessions/{session_id}/generate",
            json={"prompt": "a wolf", "adjustment": {"entries": {"abc": 1.0}}},
        )
        assert response.status_code == 400
        assert response.json()["error"] == "SchemaViolation"

    def test_non_dict_entries_is_schema_violation(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(
            f"/sessions/{session_id}/generate",
            json={"prompt": "a wolf", "adjustment": {"entries": "bogus"}},
        )
        assert response.status_code == 400

    def test_non_numeric_gamma_value_is_schema_violation(self, service):
        client, _ = service
        session_id = client.post("/sessions").json()["session_id"]
        response = client.post(
            f"/sessions/{session_id}/generate",
            json={"prompt": "a wolf", "adjustment": {"entries": {"1": "big"}}},
        )
        assert response.status_code == 400
