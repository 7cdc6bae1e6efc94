"""HTTP annotation service, driven through the ASGI test client."""

import pytest
from fastapi.testclient import TestClient

from lexsel.annotate import JudgmentStore, create_session
from lexsel.annotate.server import create_app

from .test_annotate import make_items

ANNOTATORS = ("ann-a", "ann-b")


@pytest.fixture()
def session():
    return create_session(make_items(5), ANNOTATORS, seed=0)


@pytest.fixture()
def store():
    return JudgmentStore()


@pytest.fixture()
def client(session, store):
    return TestClient(create_app(session, store))


def answer_all(client, session, annotator, pick=0):
    """Walk an annotator's queue to completion; returns submitted values."""
    values = []
    while True:
        response = client.get("/api/v1/tasks/next", params={"annotator": annotator})
        if response.status_code == 204:
            return values
        assert response.status_code == 200
        task = response.json()
        assert task["annotator_id"] == annotator
        value = task["payload"]["candidates"][pick]
        posted = client.post(
            "/api/v1/judgments",
            json={"task_id": task["id"], "annotator_id": annotator, "value": value},
        )
        assert posted.status_code == 201
        values.append(value)
        assert len(values) <= len(session.tasks), "queue never drained"


class TestSessionEndpoint:
    def test_info(self, client, session):
        body = client.get("/api/v1/session").json()
        assert body == {
            "id": session.id,
            "kind": "lexical_selection",
            "annotator_ids": list(ANNOTATORS),
            "total_tasks": 10,
        }


class TestTaskFlow:
    def test_full_walkthrough(self, client, session, store):
        values = answer_all(client, session, "ann-a")
        assert len(values) == 5
        assert client.get("/api/v1/tasks/next", params={"annotator": "ann-a"}).status_code == 204
        # the other annotator's queue is untouched
        assert client.get("/api/v1/tasks/next", params={"annotator": "ann-b"}).status_code == 200
        assert len(store) == 5

    def test_tasks_served_in_session_order(self, client, session):
        expected = session.tasks_for("ann-a")
        for want in expected:
            got = client.get("/api/v1/tasks/next", params={"annotator": "ann-a"}).json()
            assert got["id"] == want.id
            assert got["payload"]["candidates"] == want.payload["candidates"]
            client.post(
                "/api/v1/judgments",
                json={"task_id": want.id, "annotator_id": "ann-a", "value": "x"},
            )

    def test_payload_has_no_gold(self, client):
        task = client.get("/api/v1/tasks/next", params={"annotator": "ann-a"}).json()
        assert "gold" not in task["payload"]
        assert set(task["payload"]) == {
            "ref", "concept", "source_tokens", "concept_index", "candidates",
        }

    def test_unknown_annotator_404(self, client):
        response = client.get("/api/v1/tasks/next", params={"annotator": "nobody"})
        assert response.status_code == 404
        assert "nobody" in response.json()["detail"]

    def test_unknown_task_404(self, client):
        response = client.post(
            "/api/v1/judgments",
            json={"task_id": "missing::ann-a", "annotator_id": "ann-a", "value": "x"},
        )
        assert response.status_code == 404

    def test_cross_annotator_submission_400(self, client, session):
        task = session.tasks_for("ann-a")[0]
        response = client.post(
            "/api/v1/judgments",
            json={"task_id": task.id, "annotator_id": "ann-b", "value": "x"},
        )
        assert response.status_code == 400
        assert "ann-a" in response.json()["detail"]

    def test_resubmission_updates_not_duplicates(self, client, session, store):
        task = session.tasks_for("ann-a")[0]
        for value in ("first", "second"):
            client.post(
                "/api/v1/judgments",
                json={"task_id": task.id, "annotator_id": "ann-a", "value": value},
            )
        progress = client.get("/api/v1/progress", params={"annotator": "ann-a"}).json()
        assert progress == {"done": 1, "total": 5}
        assert len(store.journal()) == 2
        assert store.latest()[(task.id, "ann-a")].value == "second"

    def test_session_resumes_from_persisted_judgments(self, tmp_path, session):
        """A restart with the same journal file picks up where it left off."""
        path = tmp_path / "judgments.jsonl"
        first_store = JudgmentStore(path)
        first = TestClient(create_app(session, first_store))
        task = first.get("/api/v1/tasks/next", params={"annotator": "ann-a"}).json()
        first.post(
            "/api/v1/judgments",
            json={"task_id": task["id"], "annotator_id": "ann-a", "value": "x"},
        )
        resumed = TestClient(create_app(session, JudgmentStore(path)))
        progress = resumed.get("/api/v1/progress", params={"annotator": "ann-a"}).json()
        assert progress == {"done": 1, "total": 5}
        next_task = resumed.get("/api/v1/tasks/next", params={"annotator": "ann-a"}).json()
        assert next_task["id"] != task["id"]


class TestProgress:
    def test_counts(self, client, session):
        assert client.get("/api/v1/progress", params={"annotator": "ann-a"}).json() == {
            "done": 0,
            "total": 5,
        }
        answer_all(client, session, "ann-a")
        assert client.get("/api/v1/progress", params={"annotator": "ann-a"}).json() == {
            "done": 5,
            "total": 5,
        }

    def test_unknown_annotator_404(self, client):
        assert client.get("/api/v1/progress", params={"annotator": "zz"}).status_code == 404


class TestAgreementEndpoint:
    def test_conflict_before_complete_items(self, client):
        response = client.get("/api/v1/reports/agreement")
        assert response.status_code == 409

    def test_report_after_completion(self, client, session):
        answer_all(client, session, "ann-a", pick=0)
        answer_all(client, session, "ann-b", pick=0)
        response = client.get("/api/v1/reports/agreement")
        assert response.status_code == 200
        body = response.json()
        assert body["n_items"] == 5
        assert body["n_annotators"] == 2
        assert body["annotators"] == list(ANNOTATORS)
        assert len(body["item_refs"]) == 5
        assert body["pabak"] == pytest.approx(2 * body["total_agreement"] - 1)

    def test_disagreeing_annotators(self, client, session):
        fixed = {"ann-a": "cand0", "ann-b": "cand1"}
        for task in session.tasks:
            client.post(
                "/api/v1/judgments",
                json={
                    "task_id": task.id,
                    "annotator_id": task.annotator_id,
                    "value": fixed[task.annotator_id],
                },
            )
        body = client.get("/api/v1/reports/agreement").json()
        assert body["total_agreement"] == 0.0
        assert body["pabak"] == -1.0

    def test_session_id_filter(self, client, session):
        answer_all(client, session, "ann-a")
        answer_all(client, session, "ann-b")
        ok = client.get("/api/v1/reports/agreement", params={"session": session.id})
        assert ok.status_code == 200
        missing = client.get("/api/v1/reports/agreement", params={"session": "other"})
        assert missing.status_code == 404


class TestStatic:
    def test_no_static_dir_no_root_page(self, client):
        assert client.get("/").status_code == 404

    def test_static_dir_served(self, tmp_path, session, store):
        (tmp_path / "index.html").write_text("<h1>annotate</h1>", encoding="utf-8")
        client = TestClient(create_app(session, store, static_dir=tmp_path))
        response = client.get("/")
        assert response.status_code == 200
        assert "annotate" in response.text
        # the API still wins over the static mount
        assert client.get("/api/v1/session").status_code == 200
