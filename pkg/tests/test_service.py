"""HTTP API tests: endpoint contracts, error mapping, concurrency, latency."""

import base64
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from xmodal.cohorts import FilterPredicate, filter_cohort
from xmodal.service import create_app


@pytest.fixture(scope="module")
def client(desk_session):
    return TestClient(create_app(desk_session), raise_server_exceptions=False)


@pytest.fixture(scope="module")
def two_groups(client, desk_session):
    """A female and a male group created through the API."""
    ids = {}
    for name, sex in (("females", "female"), ("males", "male")):
        r = client.post("/api/group", json={
            "name": name,
            "provenance": {"type": "filter",
                           "clauses": [{"covariate": "sex", "categories": [sex]}]},
        })
        assert r.status_code == 200, r.text
        ids[name] = r.json()["group_id"]
    return ids


def _decode_sample(payload):
    raw = base64.b64decode(payload["b64"])
    return np.frombuffer(raw, dtype="<f4").reshape(payload["shape"])


class TestReadEndpoints:
    def test_summary(self, client, desk_session):
        r = client.get("/api/summary")
        assert r.status_code == 200
        body = r.json()
        assert body["n"] == len(desk_session.dataset)
        assert body["latent_dim"] == 16
        assert body["split_sizes"] == {"train": 1394, "validation": 404, "test": 202}
        assert {c["name"] for c in body["covariate_schema"]} >= {"age", "sex", "hypertension"}

    def test_histogram_default_and_selection(self, client):
        full = client.get("/api/histogram").json()
        some = client.get("/api/histogram", params={"selection": "0,1,2"}).json()
        assert sum(full["sex"]["selected"]) == sum(full["sex"]["all"])
        assert sum(some["sex"]["selected"]) == 3

    def test_histogram_unknown_id_is_argument_error(self, client):
        r = client.get("/api/histogram", params={"selection": "999999"})
        assert r.status_code == 400
        assert r.json()["code"] == "argument"

    def test_embedding_matches_cached_layout_exactly(self, client, desk_session):
        r = client.get("/api/embedding/mri")
        assert r.status_code == 200
        body = r.json()
        points = np.asarray(body["points"])
        np.testing.assert_array_equal(points, desk_session.embeddings["mri"].points)
        assert body["ids"] == [int(i) for i in desk_session.dataset.ids]

    def test_embedding_unknown_modality_404(self, client):
        r = client.get("/api/embedding/pet")
        assert r.status_code == 404
        assert r.json()["code"] == "not_found"

    def test_subject_detail(self, client, desk_session):
        r = client.get("/api/subject/5")
        assert r.status_code == 200
        body = r.json()
        s = desk_session.dataset.subject(5)
        assert body["covariates"]["sex"] == s.covariates.sex
        np.testing.assert_array_equal(_decode_sample(body["mri"]), s.mri)
        np.testing.assert_array_equal(_decode_sample(body["ecg"]), s.ecg)

    def test_subject_not_found(self, client):
        assert client.get("/api/subject/123456").status_code == 404

    def test_read_endpoint_stateless_bytes(self, client):
        a = client.get("/api/embedding/ecg").content
        b = client.get("/api/embedding/ecg").content
        assert a == b

    def test_malformed_body_surfaces_as_api_error(self, client):
        r = client.post("/api/perturb", json={"k": "not-an-int"})
        assert r.status_code == 400
        assert r.json()["code"] == "argument"


class TestCohortEndpoints:
    def test_filter_matches_library_oracle(self, client, desk_session):
        clauses = [{"covariate": "hypertension", "categories": ["true"]}]
        r = client.post("/api/cohort/filter", json={"clauses": clauses})
        assert r.status_code == 200
        expected = filter_cohort(desk_session.dataset,
                                 FilterPredicate.from_json(clauses))
        assert r.json()["ids"] == [int(i) for i in expected]

    def test_filter_bad_covariate_400(self, client):
        r = client.post("/api/cohort/filter",
                        json={"clauses": [{"covariate": "nope", "categories": ["true"]}]})
        assert r.status_code == 400
        assert r.json()["code"] == "argument"

    def test_lasso_bounding_box_selects_all(self, client, desk_session):
        pts = desk_session.embeddings["mri"].points
        lo, hi = pts.min() - 1, pts.max() + 1
        poly = [[lo, lo], [hi, lo], [hi, hi], [lo, hi]]
        r = client.post("/api/cohort/lasso", json={"modality": "mri", "polygon": poly})
        assert r.status_code == 200
        assert len(r.json()["ids"]) == len(desk_session.dataset)

    def test_lasso_too_few_vertices_400(self, client):
        r = client.post("/api/cohort/lasso",
                        json={"modality": "mri", "polygon": [[0, 0], [1, 1]]})
        assert r.status_code == 400

    def test_group_needs_exactly_one_source(self, client):
        assert client.post("/api/group", json={"name": "x"}).status_code == 400
        assert client.post("/api/group", json={
            "name": "x", "ids": [1], "provenance": {"type": "filter", "clauses": []},
        }).status_code == 400

    def test_group_intersection_provenance(self, client, desk_session):
        pts = desk_session.embeddings["mri"].points
        lo, hi = pts.min() - 1, pts.max() + 1
        r = client.post("/api/group", json={
            "name": "hypertensive females",
            "provenance": {"type": "intersection", "parts": [
                {"type": "filter",
                 "clauses": [{"covariate": "sex", "categories": ["female"]}]},
                {"type": "lasso", "modality": "mri",
                 "polygon": [[lo, lo], [hi, lo], [hi, hi], [lo, hi]]},
            ]},
        })
        assert r.status_code == 200
        females = filter_cohort(desk_session.dataset, FilterPredicate.from_json(
            [{"covariate": "sex", "categories": ["female"]}]))
        assert r.json()["size"] == len(females)

    def test_unknown_group_404(self, client):
        r = client.post("/api/reconstruct", json={"group_id": "g999", "method": "mean",
                                                  "modalities": ["mri"]})
        assert r.status_code == 404


class TestLatentEndpoints:
    def test_reconstruct_returns_samples_and_matrix(self, client, two_groups):
        r = client.post("/api/reconstruct", json={
            "group_id": two_groups["females"], "method": "mean",
            "modalities": ["ecg", "mri"]})
        assert r.status_code == 200
        body = r.json()
        assert _decode_sample(body["samples"]["mri"]).shape == (32, 32)
        assert _decode_sample(body["samples"]["ecg"]).shape == (4, 256)
        assert body["matrix"]["rows"] == ["ecg_only", "mri_only", "ecg_and_mri"]

    def test_interpolate_t0_bytes_equal_reconstruct(self, client, two_groups):
        rec = client.post("/api/reconstruct", json={
            "group_id": two_groups["females"], "method": "mean",
            "modalities": ["ecg", "mri"]}).json()
        interp = client.post("/api/interpolate", json={
            "group_a": two_groups["females"], "group_b": two_groups["males"],
            "t": 0.0, "method": "mean", "modalities": ["ecg", "mri"]}).json()
        for m in ("ecg", "mri"):
            assert interp["samples"][m]["b64"] == rec["samples"][m]["b64"], m

    def test_interpolate_t_out_of_range_400(self, client, two_groups):
        r = client.post("/api/interpolate", json={
            "group_a": two_groups["females"], "group_b": two_groups["males"],
            "t": 1.2, "modalities": ["mri"]})
        assert r.status_code == 400

    def test_perturb_noop_identical_bytes(self, client, desk_session):
        base = desk_session.latents.matrices["fused"][0]
        body = {
            "base": {"values": [float(v) for v in base], "origin": "fused"},
            "k": 0, "value": float(base[0]), "modalities": ["mri", "ecg"],
        }
        r = client.post("/api/perturb", json=body)
        assert r.status_code == 200
        out = r.json()
        for m in ("mri", "ecg"):
            assert out["original"][m]["b64"] == out["perturbed"][m]["b64"]

    def test_perturb_out_of_range_names_r(self, client, desk_session):
        r_k = float(desk_session.latents.display_range("fused")[0])
        body = {
            "base": {"values": [0.0] * 16, "origin": "fused"},
            "k": 0, "value": 10 * r_k + 1, "modalities": ["mri"],
        }
        r = client.post("/api/perturb", json=body)
        assert r.status_code == 400
        assert "R=" in r.json()["message"]

    def test_translate_and_same_modality_rejection(self, client, desk_session):
        ok = client.post("/api/translate", json={"subject_id": 3, "from": "ecg",
                                                 "to": "mri"})
        assert ok.status_code == 200
        assert _decode_sample(ok.json()["sample"]).shape == (32, 32)
        bad = client.post("/api/translate", json={"subject_id": 3, "from": "ecg",
                                                  "to": "ecg"})
        assert bad.status_code == 400


class TestConcurrencyAndLatency:
    def test_50_concurrent_perturbs_match_serial(self, client, desk_session):
        base = desk_session.latents.matrices["fused"][1]
        r_k = desk_session.latents.display_range("fused")
        bodies = [{
            "base": {"values": [float(v) for v in base], "origin": "fused"},
            "k": int(k % 16),
            "value": float(0.5 * r_k[k % 16] * (1 if k % 2 else -1)),
            "modalities": ["mri"],
        } for k in range(50)]
        serial = [client.post("/api/perturb", json=b).json() for b in bodies]
        with ThreadPoolExecutor(max_workers=8) as pool:
            parallel = list(pool.map(lambda b: client.post("/api/perturb", json=b).json(),
                                     bodies))
        for s, p in zip(serial, parallel):
            assert s["perturbed"]["mri"]["b64"] == p["perturbed"]["mri"]["b64"]

    def test_p95_latency_under_100ms(self, client, two_groups, desk_session):
        base = desk_session.latents.matrices["fused"][2]
        requests = [
            ("/api/perturb", {
                "base": {"values": [float(v) for v in base], "origin": "fused"},
                "k": 1, "value": 0.0, "modalities": ["ecg", "mri"]}),
            ("/api/interpolate", {
                "group_a": two_groups["females"], "group_b": two_groups["males"],
                "t": 0.5, "modalities": ["ecg", "mri"]}),
            ("/api/reconstruct", {
                "group_id": two_groups["males"], "method": "mean",
                "modalities": ["ecg", "mri"]}),
        ]
        for path, body in requests:
            client.post(path, json=body)  # warm
            times = []
            for _ in range(40):
                t0 = time.perf_counter()
                r = client.post(path, json=body)
                times.append(time.perf_counter() - t0)
                assert r.status_code == 200
            p95 = float(np.percentile(times, 95))
            assert p95 < 0.100, (path, p95)
