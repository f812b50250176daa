"""Annotation service: session flow, durability, export, HTTP layer."""

import json
from datetime import datetime

import pytest
from fastapi.testclient import TestClient

from textgen_eval.service import (
    CorruptLog,
    DuplicateSubmission,
    EvalStore,
    MalformedResponse,
    OutOfOrder,
    PlanExhausted,
    UnknownSession,
    UnknownSubject,
    create_app,
    session_id_for,
)
from textgen_eval.stimuli import assign_classification, assign_ranking
from tests.conftest import fixture_stimulus_set

RANK_SUBJECTS = [f"r{i:02d}" for i in range(4)]
CLS_SUBJECTS = [f"c{i:02d}" for i in range(12)]


@pytest.fixture(scope="module")
def sset():
    return fixture_stimulus_set(n_prompts=6)


@pytest.fixture()
def store(sset, tmp_path):
    plans = assign_ranking(sset, RANK_SUBJECTS, rng_seed=51) + assign_classification(
        sset, CLS_SUBJECTS, rng_seed=52
    )
    st = EvalStore(plans, sset, tmp_path / "records.jsonl")
    yield st
    st.close()


def finish_session(store, session_id, answer=(1, 2, 3)):
    while True:
        item = store.next_item(session_id)
        if item["done"]:
            return
        if item["task"] == "ranking":
            store.submit_response(session_id, item["item_index"], list(answer))
        else:
            store.submit_response(session_id, item["item_index"], "yes")


# -- session lifecycle ------------------------------------------------------

def test_create_session_reports_position(store):
    info = store.create_session("r00", "ranking")
    assert info == {
        "session_id": session_id_for("ranking", "r00"),
        "task": "ranking",
        "subject": "r00",
        "n_items": 6,
        "next": 0,
    }


def test_create_session_unknown_subject(store):
    with pytest.raises(UnknownSubject):
        store.create_session("nobody", "ranking")
    with pytest.raises(UnknownSubject):
        store.create_session("c00", "ranking")  # classification-only subject


def test_create_session_bad_task(store):
    with pytest.raises(MalformedResponse):
        store.create_session("r00", "grading")


def test_next_item_is_idempotent_until_answered(store):
    sid = store.create_session("r01", "ranking")["session_id"]
    first = store.next_item(sid)
    second = store.next_item(sid)
    assert first == second
    assert first["item_index"] == 0
    assert len(first["texts"]) == 3
    store.submit_response(sid, 0, [2, 1, 3])
    assert store.next_item(sid)["item_index"] == 1


def test_ranking_texts_follow_display_order(store, sset):
    plan = next(
        p for p in store._plans.values() if p.task == "ranking" and p.subject_id == "r02"
    )
    sid = store.create_session("r02", "ranking")["session_id"]
    lookup = sset.by_id()
    payload = store.next_item(sid)
    expected = [" ".join(lookup[s].text) for s in plan.items[0].stimulus_ids]
    assert payload["texts"] == expected


def test_classification_payload_has_single_text(store):
    sid = store.create_session("c00", "classification")["session_id"]
    payload = store.next_item(sid)
    assert payload["task"] == "classification"
    assert isinstance(payload["text"], str)
    assert "texts" not in payload


def test_unknown_session_rejected(store):
    with pytest.raises(UnknownSession):
        store.next_item("se000000000000")
    with pytest.raises(UnknownSession):
        store.submit_response("se000000000000", 0, [1, 2, 3])


def test_submit_validates_shape(store):
    sid = store.create_session("r00", "ranking")["session_id"]
    for bad in ([1, 1, 3], [1, 2], [1, 2, 4], "first", [1, 2, True], None):
        with pytest.raises(MalformedResponse):
            store.submit_response(sid, 0, bad)
    cid = store.create_session("c00", "classification")["session_id"]
    for bad in ("maybe", "", 1, [1, 2, 3], None):
        with pytest.raises(MalformedResponse):
            store.submit_response(cid, 0, bad)


def test_submit_validates_item_index(store):
    sid = store.create_session("r00", "ranking")["session_id"]
    for bad in (-1, 6, "0", True, 1.0):
        with pytest.raises(MalformedResponse):
            store.submit_response(sid, bad, [1, 2, 3])


def test_out_of_order_and_duplicate(store):
    sid = store.create_session("r00", "ranking")["session_id"]
    with pytest.raises(OutOfOrder):
        store.submit_response(sid, 2, [1, 2, 3])
    store.submit_response(sid, 0, [3, 2, 1])
    with pytest.raises(DuplicateSubmission):
        store.submit_response(sid, 0, [1, 2, 3])
    # the first answer stands
    assert store.export_records("ranking")[0]["response"] == [3, 2, 1]


def test_finished_session_reports_done_then_exhausted(store):
    sid = store.create_session("r03", "ranking")["session_id"]
    finish_session(store, sid)
    done = store.next_item(sid)
    assert done == {"done": True, "task": "ranking", "n_items": 6}
    with pytest.raises(PlanExhausted):
        store.create_session("r03", "ranking")


def test_duplicate_plans_rejected(store, sset, tmp_path):
    plans = assign_ranking(sset, RANK_SUBJECTS, rng_seed=51)
    with pytest.raises(ValueError):
        EvalStore(plans + [plans[0]], sset, tmp_path / "other.jsonl")


# -- records and export -----------------------------------------------------

def test_record_fields(store):
    rid = store.create_session("r00", "ranking")["session_id"]
    store.submit_response(rid, 0, [2, 3, 1])
    cid = store.create_session("c01", "classification")["session_id"]
    store.submit_response(cid, 0, "ct")
    ranked, labelled = (
        store.export_records("ranking")[0],
        store.export_records("classification")[0],
    )
    assert ranked["record_id"] == f"{rid}:0"
    assert ranked["subject_id"] == "r00"
    assert len(ranked["stimulus_ids"]) == 3
    assert sorted(ranked["display_order"]) == [1, 2, 3]
    assert len(ranked["systems"]) == 3
    stamp = datetime.fromisoformat(ranked["received_at"])
    assert stamp.utcoffset().total_seconds() == 0
    assert labelled["response"] == "ct"
    assert len(labelled["stimulus_ids"]) == 1
    assert "display_order" not in labelled
    assert labelled["systems"][0] in ("gold", "model", "baseline")
    assert labelled["condition"] in ("5+5", "5+10", "10+5", "10+10")


def test_export_is_sorted_and_repeatable(store):
    for subject in ("r01", "r00"):
        sid = store.create_session(subject, "ranking")["session_id"]
        finish_session(store, sid)
    records = store.export_records()
    keys = [(r["session_id"], r["item_index"]) for r in records]
    assert keys == sorted(keys)
    assert store.export_jsonl() == store.export_jsonl()
    assert len(store.export_jsonl().splitlines()) == 12


def test_export_task_filter(store):
    rid = store.create_session("r00", "ranking")["session_id"]
    store.submit_response(rid, 0, [1, 2, 3])
    cid = store.create_session("c00", "classification")["session_id"]
    store.submit_response(cid, 0, "no")
    assert {r["task"] for r in store.export_records("ranking")} == {"ranking"}
    assert {r["task"] for r in store.export_records("classification")} == {
        "classification"
    }
    assert len(store.export_records()) == 2


def test_served_payloads_never_name_systems(store):
    for subject, task in (("r00", "ranking"), ("c00", "classification")):
        info = store.create_session(subject, task)
        payload = store.next_item(info["session_id"])
        blob = json.dumps(info) + json.dumps(payload)
        for label in ("gold", "model", "baseline"):
            assert label not in blob


# -- durability -------------------------------------------------------------

def rebuild(store, sset, log_path):
    plans = list(store._plans.values())
    store.close()
    return EvalStore(plans, sset, log_path)


def test_restart_restores_cursors(store, sset, tmp_path):
    log = tmp_path / "records.jsonl"
    sid = store.create_session("r00", "ranking")["session_id"]
    for i in range(3):
        store.submit_response(sid, i, [1, 2, 3])
    before = store.export_records()
    again = rebuild(store, sset, log)
    try:
        assert again.create_session("r00", "ranking")["next"] == 3
        assert again.next_item(sid)["item_index"] == 3
        assert again.export_records() == before
    finally:
        again.close()


def test_torn_final_line_is_dropped_and_truncated(store, sset, tmp_path):
    log = tmp_path / "records.jsonl"
    sid = store.create_session("r00", "ranking")["session_id"]
    store.submit_response(sid, 0, [1, 2, 3])
    store.close()
    intact = log.read_bytes()
    log.write_bytes(intact + b'{"record_id": "se')
    again = EvalStore(list(store._plans.values()), sset, log)
    try:
        assert log.read_bytes() == intact  # tail was never acked; file repaired
        assert again.create_session("r00", "ranking")["next"] == 1
    finally:
        again.close()


def test_interior_garbage_is_corrupt(store, sset, tmp_path):
    log = tmp_path / "records.jsonl"
    sid = store.create_session("r00", "ranking")["session_id"]
    store.submit_response(sid, 0, [1, 2, 3])
    store.close()
    log.write_bytes(log.read_bytes() + b"not json\n")
    with pytest.raises(CorruptLog):
        EvalStore(list(store._plans.values()), sset, log)


def test_log_for_unknown_session_is_corrupt(store, sset, tmp_path):
    log = tmp_path / "records.jsonl"
    store.close()
    log.write_bytes(
        json.dumps({"session_id": "se999999999999", "item_index": 0}).encode() + b"\n"
    )
    with pytest.raises(CorruptLog) as err:
        EvalStore(list(store._plans.values()), sset, log)
    assert "se999999999999" in str(err.value)


def test_log_with_gap_is_corrupt(store, sset, tmp_path):
    log = tmp_path / "records.jsonl"
    sid = session_id_for("ranking", "r00")
    store.close()
    log.write_bytes(
        json.dumps({"session_id": sid, "item_index": 4}).encode() + b"\n"
    )
    with pytest.raises(CorruptLog):
        EvalStore(list(store._plans.values()), sset, log)


# -- HTTP layer -------------------------------------------------------------

@pytest.fixture()
def client(store):
    return TestClient(create_app(store))


def test_http_session_flow(client):
    created = client.post("/api/sessions", json={"subject": "r00", "task": "ranking"})
    assert created.status_code == 200
    sid = created.json()["session_id"]
    item = client.get(f"/api/sessions/{sid}/next")
    assert item.status_code == 200
    assert len(item.json()["texts"]) == 3
    ack = client.post(
        f"/api/sessions/{sid}/responses",
        json={"item_index": 0, "response": [2, 1, 3]},
    )
    assert ack.status_code == 200
    assert ack.json() == {"ok": True, "next": 1, "n_items": 6}


def test_http_error_codes(client):
    assert (
        client.post("/api/sessions", json={"subject": "ghost", "task": "ranking"})
    ).status_code == 404
    assert client.get("/api/sessions/senone/next").status_code == 404
    sid = client.post(
        "/api/sessions", json={"subject": "r00", "task": "ranking"}
    ).json()["session_id"]
    out_of_order = client.post(
        f"/api/sessions/{sid}/responses", json={"item_index": 3, "response": [1, 2, 3]}
    )
    assert out_of_order.status_code == 409
    assert out_of_order.json()["error"] == "evalservice.OutOfOrder"
    client.post(
        f"/api/sessions/{sid}/responses", json={"item_index": 0, "response": [1, 2, 3]}
    )
    duplicate = client.post(
        f"/api/sessions/{sid}/responses", json={"item_index": 0, "response": [1, 2, 3]}
    )
    assert duplicate.status_code == 409
    assert duplicate.json()["error"] == "evalservice.DuplicateSubmission"
    malformed = client.post(
        f"/api/sessions/{sid}/responses", json={"item_index": 1, "response": [1, 1, 3]}
    )
    assert malformed.status_code == 400
    assert malformed.json()["error"] == "evalservice.MalformedResponse"


def test_http_rejects_broken_bodies(client):
    missing = client.post("/api/sessions", json={"subject": "r00"})
    assert missing.status_code == 400
    not_json = client.post(
        "/api/sessions", content=b"nope", headers={"content-type": "application/json"}
    )
    assert not_json.status_code == 400
    assert not_json.json()["error"] == "evalservice.MalformedResponse"
    sid = client.post(
        "/api/sessions", json={"subject": "r00", "task": "ranking"}
    ).json()["session_id"]
    assert (
        client.post(f"/api/sessions/{sid}/responses", json={"response": [1, 2, 3]})
    ).status_code == 400


def test_http_exhausted_is_conflict(client, store):
    sid = store.create_session("r01", "ranking")["session_id"]
    finish_session(store, sid)
    again = client.post("/api/sessions", json={"subject": "r01", "task": "ranking"})
    assert again.status_code == 409
    assert again.json()["error"] == "evalservice.PlanExhausted"
    assert client.get(f"/api/sessions/{sid}/next").json()["done"] is True


def test_http_export_requires_token(client, store, monkeypatch):
    sid = store.create_session("c00", "classification")["session_id"]
    store.submit_response(sid, 0, "yes")
    monkeypatch.delenv("EVAL_ADMIN_TOKEN", raising=False)
    assert client.get("/api/admin/export").status_code == 403
    monkeypatch.setenv("EVAL_ADMIN_TOKEN", "sesame")
    assert client.get("/api/admin/export").status_code == 403
    wrong = client.get("/api/admin/export", headers={"X-Admin-Token": "guess"})
    assert wrong.status_code == 403
    good = client.get("/api/admin/export", headers={"X-Admin-Token": "sesame"})
    assert good.status_code == 200
    assert good.text == store.export_jsonl()
    filtered = client.get(
        "/api/admin/export?task=classification", headers={"X-Admin-Token": "sesame"}
    )
    assert filtered.text == store.export_jsonl("classification")


def test_http_export_validates_query(client, monkeypatch):
    monkeypatch.setenv("EVAL_ADMIN_TOKEN", "sesame")
    headers = {"X-Admin-Token": "sesame"}
    assert client.get("/api/admin/export?format=csv", headers=headers).status_code == 400
    assert client.get("/api/admin/export?task=karaoke", headers=headers).status_code == 400


def test_http_root_without_ui(client):
    body = client.get("/").json()
    assert body["api"] == "/api"
