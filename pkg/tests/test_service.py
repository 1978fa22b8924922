import json

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from ooprompt.cli import main
from ooprompt.model import PropertySpec
from ooprompt.service import create_app
from ooprompt.workspace import Workspace


@pytest.fixture
def harness(tmp_path):
    ws = Workspace.init(tmp_path / "ws")
    client = TestClient(create_app(ws))
    return ws, client, tmp_path / "ws"


def ok(response, status=200):
    assert response.status_code == status, response.text
    body = response.json()
    assert body["ok"] is True
    return body.get("data")


def err(response, status, code):
    assert response.status_code == status, response.text
    body = response.json()
    assert body["ok"] is False
    assert body["error"]["code"] == code
    return body["error"]


class TestEnvelopes:
    def test_healthz(self, harness):
        _, client, _ = harness
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json() == {"ok": True}

    def test_unknown_entity_404(self, harness):
        _, client, _ = harness
        err(client.get("/objects/po-0404"), 404, "unknown_object")

    def test_validation_400(self, harness):
        _, client, _ = harness
        err(client.post("/objects", json={}), 400, "precondition_violation")

    def test_stale_write_409(self, harness):
        ws, client, _ = harness
        obj = ws.create_object("Trip")
        ws.add_property(obj.id, PropertySpec(name="a", value="1"))
        response = client.patch(
            f"/objects/{obj.id}/properties/pr-0001",
            json={"object_version": 1, "patch": {"value": "2"}},
        )
        error = err(response, 409, "version_conflict")
        assert error["details"]["current"] == 2

    def test_provider_error_502(self, harness, monkeypatch):
        ws, client, _ = harness
        monkeypatch.delenv("OOPROMPT_MOCK", raising=False)
        ws._gateway = None  # force re-read of the env
        obj = ws.create_object("Trip")
        ws.add_property(obj.id, PropertySpec(name="a", value="1"))
        response = client.post("/assist/suggest", json={"object_id": obj.id})
        err(response, 502, "provider_unavailable")


class TestObjectEndpoints:
    def test_create_read_update_delete(self, harness):
        _, client, _ = harness
        created = ok(client.post("/objects", json={"title": "Trip"}))
        oid = created["id"]
        assert ok(client.get("/objects")) == ok(client.get("/objects"))
        got = ok(client.get(f"/objects/{oid}"))
        assert got["title"] == "Trip"
        patched = ok(client.patch(
            f"/objects/{oid}", json={"object_version": 1, "notes": "hello"},
        ))
        assert patched["notes"] == "hello" and patched["version"] == 2
        ok(client.delete(f"/objects/{oid}?object_version=2"))
        err(client.get(f"/objects/{oid}"), 404, "unknown_object")

    def test_property_endpoints(self, harness):
        _, client, _ = harness
        oid = ok(client.post("/objects", json={"title": "Trip"}))["id"]
        after = ok(client.post(
            f"/objects/{oid}/properties",
            json={"object_version": 1,
                  "spec": {"name": "Destination", "value": "LA"}},
        ))
        pid = after["properties"][0]["id"]
        after = ok(client.patch(
            f"/objects/{oid}/properties/{pid}",
            json={"object_version": 2, "patch": {"tier": "wanted"}},
        ))
        assert after["properties"][0]["tier"] == "wanted"
        after = ok(client.delete(
            f"/objects/{oid}/properties/{pid}?object_version=3",
        ))
        assert after["properties"] == []

    def test_nest_endpoint(self, harness):
        _, client, _ = harness
        oid = ok(client.post("/objects", json={"title": "Trip"}))["id"]
        ok(client.post(
            f"/objects/{oid}/properties",
            json={"object_version": 1,
                  "spec": {"name": "Schedule", "value": "plan"}},
        ))
        data = ok(client.post(
            f"/objects/{oid}/nest/pr-0001", json={"object_version": 2},
        ))
        assert data["child"]["title"] == "Schedule"
        assert data["parent"]["properties"][0]["value"]["kind"] == "child"

    def test_render_and_history_and_restore(self, harness):
        _, client, _ = harness
        oid = ok(client.post(
            "/objects", json={"title": "Trip", "template_refs": ["trip-planner"]},
        ))["id"]
        arts = ok(client.post(f"/objects/{oid}/render?format=hybrid"))["artifacts"]
        assert len(arts) == 1 and "```json" in arts[0]["text"]
        ok(client.patch(f"/objects/{oid}", json={"object_version": 1, "notes": "x"}))
        history = ok(client.get(f"/objects/{oid}/history"))
        assert [h["version"] for h in history] == [1, 2]
        restored = ok(client.post(
            f"/objects/{oid}/restore/1", json={"object_version": 2},
        ))
        assert restored["version"] == 3 and restored["notes"] == ""
        delta = ok(client.get(f"/objects/{oid}/diff?a=1&b=3"))
        assert delta["added"] == [] and delta["removed"] == []

    def test_analyze_endpoint(self, harness):
        _, client, _ = harness
        oid = ok(client.post(
            "/objects", json={"title": "Trip", "template_refs": ["trip-planner"]},
        ))["id"]
        report = ok(client.post(f"/objects/{oid}/analyze", json={"format": "nl"}))
        assert report["structural_conflicts"] == []
        assert report["template_similarity"][0]["template_id"] == "trip-planner"


class TestAssistEndpoints:
    def test_extract_fig_flow(self, harness):
        _, client, _ = harness
        data = ok(client.post(
            "/assist/extract", json={"raw_text": "Plan a trip to Los Angeles"},
        ))
        names = [i["spec"]["name"] for i in data["proposal"]["items"]]
        assert "Destination" in names
        oid = data["object"]["id"]
        pid = data["proposal"]["id"]
        applied = ok(client.post(
            f"/proposals/{pid}/apply", json={"object_version": 1},
        ))
        assert applied["object"]["properties"][0]["name"] == "Destination"

    def test_suggest_apply_dismiss(self, harness):
        ws, client, _ = harness
        obj = ws.create_object("Trip")
        for name, value in (("Destination", "LA"), ("Interests", "food"),
                            ("Schedule", "plan")):
            obj = ws.add_property(obj.id, PropertySpec(name=name, value=value))
        proposal = ok(client.post("/assist/suggest", json={"object_id": obj.id}))
        assert [i["spec"]["name"] for i in proposal["items"]] == ["Daily pace"]
        dismissed = ok(client.post(
            f"/proposals/{proposal['id']}/dismiss", json={},
        ))
        assert dismissed["items"][0]["status"] == "dismissed"
        unchanged = ok(client.get(f"/objects/{obj.id}"))
        assert len(unchanged["properties"]) == 3

    def test_candidates_and_examples(self, harness):
        ws, client, _ = harness
        obj = ws.create_object("Trip")
        obj = ws.add_property(obj.id,
                              PropertySpec(name="Destination", value="Los Angeles"))
        data = ok(client.post("/assist/candidates",
                              json={"object_id": obj.id, "prop_id": "pr-0001"}))
        assert data["items"]
        data = ok(client.post("/assist/examples",
                              json={"object_id": obj.id, "prop_id": "pr-0001"}))
        assert data["object_id"] == obj.id

    def test_feedback_endpoint(self, harness):
        ws, client, _ = harness
        obj = ws.create_object("Story")
        obj = ws.add_property(obj.id, PropertySpec(name="tone", value="dark and gritty"))
        obj = ws.add_property(obj.id, PropertySpec(name="audience", value="adults"))
        data = ok(client.post("/assist/feedback", json={
            "object_id": obj.id, "feedback": "make it suitable for children",
        }))
        assert len(data["items"]) == 2


class TestTemplatesAndEval:
    def test_template_endpoints(self, harness):
        _, client, _ = harness
        templates = ok(client.get("/templates"))
        assert any(t["id"] == "trip-planner" for t in templates)
        ranked = ok(client.post("/templates/search",
                                json={"query": "code", "by": "output_type"}))
        assert ranked[0]["id"] == "code-generator"

    def test_eval_run_endpoints(self, harness):
        ws, client, _ = harness
        obj = ws.create_object("Trip")
        ws.add_property(obj.id, PropertySpec(name="city", value="LA",
                                             candidates=["Tokyo"]))
        report = ok(client.post("/eval/runs", json={
            "object_id": obj.id, "variants": 2, "models": ["default"],
        }))
        assert len(report["ranking"]) == 2
        again = ok(client.get(f"/eval/runs/{report['run_id']}"))
        assert again == report


class TestSharedSemantics:
    def test_pure_reads_equal_cli_json_output(self, harness):
        ws, client, root = harness
        obj = ws.create_object("Trip", ["trip-planner"])
        ws.update_property(obj.id, obj.properties[0].id, {"value": "Los Angeles"})

        runner = CliRunner()

        def cli_json(*args):
            result = runner.invoke(main, ["-C", str(root), "--json", *args])
            assert result.exit_code == 0, result.output
            return result.output

        pairs = [
            (f"/objects/{obj.id}", ("show", obj.id)),
            ("/objects", ("list",)),
            ("/templates", ("template", "list")),
            (f"/objects/{obj.id}/history", ("history", "--object", obj.id)),
        ]
        for path, cli_args in pairs:
            http_body = client.get(path).text
            cli_body = cli_json(*cli_args)
            assert json.loads(http_body) == json.loads(cli_body)
            assert http_body.rstrip("\n") == cli_body.rstrip("\n")


class TestAuthToken:
    def test_bearer_token_enforced_when_configured(self, tmp_path):
        ws = Workspace.init(tmp_path / "ws")
        ws.config["auth_token"] = "sesame"
        client = TestClient(create_app(ws))
        assert client.get("/healthz").status_code == 200
        denied = client.get("/objects")
        assert denied.status_code == 401
        assert denied.json()["error"]["code"] == "unauthorized"
        allowed = client.get("/objects", headers={"Authorization": "Bearer sesame"})
        assert allowed.status_code == 200
