from __future__ import annotations

import json
from dataclasses import replace

import pytest
from starlette.testclient import TestClient

from annoserve import __version__
from annoserve.coco import serialize_dataset
from annoserve.service import create_app
from annoserve.snapshot import build_snapshot
from annoserve.storage import Store
from annoserve.urlmeta import GeoMetadata, render_gsv_url
from helpers import png_b64, png_bytes, submission_payload


def codes_of(response) -> set[str]:
    assert response.status_code == 400, response.text
    return {v["code"] for v in response.json()["violations"]}


def post(client, payload, **kw):
    return client.post("/api/v1/annotations", content=json.dumps(payload).encode(), **kw)


# ---------------------------------------------------------------------------
# Ingest


def test_submit_created_then_duplicate(client):
    payload = submission_payload()
    first = post(client, payload)
    assert first.status_code == 201, first.text
    body = first.json()
    assert sorted(body) == ["duplicate", "geo_attached", "submission_id"]
    assert body["duplicate"] is False
    assert body["geo_attached"] is False
    assert len(body["submission_id"]) == 64

    again = post(client, payload)
    assert again.status_code == 200
    assert again.json()["duplicate"] is True
    assert again.json()["submission_id"] == body["submission_id"]


def test_submit_attaches_geo_from_street_view_url(client):
    pose = GeoMetadata(latitude=52.37, longitude=4.89, heading=210.5, pitch=88.0, fov=75.0)
    url = render_gsv_url(pose)
    resp = post(client, submission_payload(page_url=url))
    assert resp.status_code == 201
    assert resp.json()["geo_attached"] is True

    snap = client.get("/api/v1/snapshot").json()
    geo = snap["images"][0]["geo"]
    assert geo["latitude"] == pytest.approx(52.37, abs=1e-6)
    assert geo["longitude"] == pytest.approx(4.89, abs=1e-6)
    assert geo["heading"] == pytest.approx(210.5, abs=1e-6)
    assert snap["images"][0]["source_url"] == url


def test_submit_plain_url_attaches_nothing(client):
    resp = post(client, submission_payload(page_url="https://example.org/gallery"))
    assert resp.status_code == 201
    assert resp.json()["geo_attached"] is False


BAD_PAYLOADS = [
    ("missing annotator", {"annotator_id": ""}, "bad-annotator"),
    ("bad timestamp", {"captured_at": "yesterday"}, "bad-timestamp"),
    ("offset timestamp", {"captured_at": "2026-08-01T12:00:00+02:00"}, "bad-timestamp"),
    ("numeric page url", {"page_url": 42}, "bad-page-url"),
    ("viewport missing", {"viewport": None}, "bad-viewport"),
    (
        "zero dpr",
        {"viewport": {"width": 64, "height": 48, "device_pixel_ratio": 0}},
        "bad-viewport",
    ),
    ("image not base64", {"image": "!!!"}, "image-not-base64"),
    ("image not png", {"image": "aGVsbG8="}, "image-not-png"),
    ("no annotations", {"annotations": []}, "no-annotations"),
    (
        "unknown category",
        {
            "annotations": [
                {"category_name": "zeppelin", "polygon": [[0, 0], [10, 0], [10, 10]], "attributes": {}}
            ]
        },
        "unknown-category",
    ),
    (
        "two-point polygon",
        {"annotations": [{"category_name": "directed", "polygon": [[0, 0], [10, 0]], "attributes": {}}]},
        "bad-annotation",
    ),
    (
        "repeated vertex",
        {
            "annotations": [
                {
                    "category_name": "directed",
                    "polygon": [[4, 4], [4, 4], [20, 4], [20, 20]],
                    "attributes": {},
                }
            ]
        },
        "polygon-duplicate-vertex",
    ),
    (
        "vertex outside image",
        {
            "annotations": [
                {"category_name": "directed", "polygon": [[0, 0], [900, 0], [10, 10]], "attributes": {}}
            ]
        },
        "vertex-out-of-bounds",
    ),
    (
        "degenerate sliver",
        {
            "annotations": [
                {"category_name": "directed", "polygon": [[0, 0], [1, 0], [0, 0.5]], "attributes": {}}
            ]
        },
        "area-below-minimum",
    ),
]


@pytest.mark.parametrize("label,patch,code", BAD_PAYLOADS, ids=[b[0] for b in BAD_PAYLOADS])
def test_submit_rejections(client, label, patch, code):
    payload = {**submission_payload(), **patch}
    assert code in codes_of(post(client, payload)), label


def test_submit_dimension_mismatch(client):
    payload = submission_payload(width=64, height=48, dpr=2.0)
    payload["image"] = png_b64(64, 48)  # should be 128x96 at dpr 2
    assert "image-dimension-mismatch" in codes_of(post(client, payload))


def test_submit_reports_all_violations_at_once(client):
    payload = {**submission_payload(), "annotator_id": "", "captured_at": "nope"}
    assert codes_of(post(client, payload)) >= {"bad-annotator", "bad-timestamp"}


def test_submit_body_not_json(client):
    resp = client.post("/api/v1/annotations", content=b"{oops")
    assert "bad-payload" in codes_of(resp)


def test_self_intersecting_polygon_is_accepted(client):
    # crossing edges but uneven lobes, so the net area stays positive;
    # self-intersection alone is advisory, not a rejection
    bowtie = [[4, 4], [16, 4], [4, 10], [10, 8]]
    payload = submission_payload(
        annotations=[{"category_name": "round", "polygon": bowtie, "attributes": {}}]
    )
    assert post(client, payload).status_code == 201


def test_payload_size_limit(server_config):
    body = json.dumps(submission_payload(seed=1)).encode()
    small = replace(server_config, max_payload_bytes=len(body) - 1)
    with TestClient(create_app(small)) as client:
        resp = client.post("/api/v1/annotations", content=body)
        assert resp.status_code == 413
        assert resp.json()["max_payload_bytes"] == len(body) - 1
        # one byte under the limit sails through
        roomy = replace(server_config, max_payload_bytes=len(body))
    with TestClient(create_app(roomy)) as client:
        assert client.post("/api/v1/annotations", content=body).status_code == 201


# ---------------------------------------------------------------------------
# Auth


def test_bearer_token_required_when_configured(server_config):
    secured = replace(server_config, token="s3cret")
    with TestClient(create_app(secured)) as client:
        assert post(client, submission_payload()).status_code == 401
        assert client.get("/api/v1/categories").status_code == 401
        assert (
            post(client, submission_payload(), headers={"Authorization": "Bearer wrong"}).status_code
            == 401
        )
        ok = post(client, submission_payload(), headers={"Authorization": "Bearer s3cret"})
        assert ok.status_code == 201
        # liveness stays open so orchestration can probe it
        assert client.get("/api/v1/health").status_code == 200


# ---------------------------------------------------------------------------
# Categories


def test_categories_served_verbatim(client, categories):
    resp = client.get("/api/v1/categories")
    assert resp.status_code == 200
    assert resp.json() == [
        {
            "id": 1,
            "name": "directed",
            "supercategory": "camera",
            "display_color": "e6194b",
            "shortcut_key": "1",
        },
        {
            "id": 2,
            "name": "round",
            "supercategory": "camera",
            "display_color": "3cb44b",
            "shortcut_key": "2",
        },
    ]


# ---------------------------------------------------------------------------
# QC


def image_ref_of(client, index=0) -> str:
    snap = client.get("/api/v1/snapshot").json()
    return snap["images"][index]["file_name"].removesuffix(".png")


def test_qc_verdict_flow(client):
    assert post(client, submission_payload()).status_code == 201
    ref = image_ref_of(client)

    ok = client.post(f"/api/v1/qc/{ref}", json={"verdict": "approved", "reviewer": "rev-1"})
    assert ok.status_code == 200
    assert ok.json() == {"image_ref": ref, "effective_verdict": "approved"}

    flip = client.post(
        f"/api/v1/qc/{ref}",
        json={"verdict": "disqualified", "reviewer": "rev-1", "reason": "blurry"},
    )
    assert flip.status_code == 200
    assert flip.json()["effective_verdict"] == "disqualified"


def test_qc_rejections(client):
    assert post(client, submission_payload()).status_code == 201
    ref = image_ref_of(client)

    no_reason = client.post(f"/api/v1/qc/{ref}", json={"verdict": "disqualified", "reviewer": "r"})
    assert "bad-verdict" in codes_of(no_reason)
    bad_verdict = client.post(f"/api/v1/qc/{ref}", json={"verdict": "maybe", "reviewer": "r"})
    assert "bad-verdict" in codes_of(bad_verdict)
    anonymous = client.post(f"/api/v1/qc/{ref}", json={"verdict": "approved"})
    assert "missing-reviewer" in codes_of(anonymous)
    unknown = client.post(f"/api/v1/qc/{'f' * 64}", json={"verdict": "approved", "reviewer": "r"})
    assert unknown.status_code == 404


# ---------------------------------------------------------------------------
# Snapshot and stats


def test_snapshot_bytes_match_direct_build(client, server_config, categories):
    for seed in range(3):
        assert (
            post(client, submission_payload(seed=seed, captured_at=f"2026-08-01T12:00:0{seed}Z")).status_code
            == 201
        )
    ref = image_ref_of(client, index=0)
    client.post(f"/api/v1/qc/{ref}", json={"verdict": "approved", "reviewer": "rev"})

    via_http = client.get("/api/v1/snapshot", params={"approved_only": "true"})
    assert via_http.status_code == 200
    with Store.open(server_config.data_dir, writable=False) as store:
        direct = serialize_dataset(build_snapshot(store.state, categories, approved_only=True))
    assert via_http.content == direct

    everything = client.get("/api/v1/snapshot").json()
    assert len(everything["images"]) == 3
    strict = client.get("/api/v1/snapshot", params={"approved_only": "true"}).json()
    assert len(strict["images"]) == 1

    bad = client.get("/api/v1/snapshot", params={"approved_only": "banana"})
    assert "bad-query" in codes_of(bad)


def test_stats_endpoint_counts(client):
    for seed in range(2):
        assert (
            post(client, submission_payload(seed=seed, captured_at=f"2026-08-01T12:00:0{seed}Z")).status_code
            == 201
        )
    client.post(f"/api/v1/qc/{image_ref_of(client, 0)}", json={"verdict": "approved", "reviewer": "rev"})

    body = client.get("/api/v1/stats").json()
    assert sorted(body) == ["annotators", "dataset", "footer"]
    assert body["dataset"]["total_images"] == 1  # approved_only defaults to true
    assert body["footer"]["sum_approved"] == 1
    [row] = body["annotators"]
    assert row["submitted_images"] == 2

    loose = client.get("/api/v1/stats", params={"approved_only": "false"}).json()
    assert loose["dataset"]["total_images"] == 2
    assert "bad-query" in codes_of(client.get("/api/v1/stats", params={"approved_only": "2"}))


# ---------------------------------------------------------------------------
# Health, degraded mode, CORS


def test_health_ok(client):
    resp = client.get("/api/v1/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_degraded_mode_serves_503(server_config):
    # valid JSON line whose content hash does not match: fatal on replay
    (server_config.data_dir / "submissions.ndjson").write_bytes(b"garbage line\n")
    with TestClient(create_app(server_config)) as client:
        health = client.get("/api/v1/health")
        assert health.status_code == 503
        assert health.json()["status"] == "unavailable"
        assert "corrupt" in health.json()["error"]

        assert post(client, submission_payload()).status_code == 503
        assert client.get("/api/v1/snapshot").status_code == 503
        assert client.get("/api/v1/stats").status_code == 503
        # category config is file-backed and still answerable
        assert client.get("/api/v1/categories").status_code == 200


def test_cors_preflight(client):
    resp = client.options(
        "/api/v1/annotations",
        headers={
            "Origin": "https://extension.example",
            "Access-Control-Request-Method": "POST",
            "Access-Control-Request-Headers": "authorization,content-type",
        },
    )
    assert resp.status_code == 200
    assert resp.headers["access-control-allow-origin"] == "*"


def test_responses_are_json(client):
    assert client.get("/api/v1/health").headers["content-type"].startswith("application/json")
    assert client.get("/api/v1/snapshot").headers["content-type"].startswith("application/json")
