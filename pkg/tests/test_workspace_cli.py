import json
import os
from pathlib import Path

import pytest
from click.testing import CliRunner

from ooprompt import errors
from ooprompt.cli import main
from ooprompt.model import PropertySpec, Value
from ooprompt.workspace import Workspace


class TestWorkspaceLifecycle:
    def test_init_installs_seed_assets(self, tmp_path):
        ws = Workspace.init(tmp_path / "ws")
        assert {t.id for t in ws.templates.all()} >= {
            "text-generator", "code-generator", "story-writer",
            "trip-planner", "report-writer",
        }
        root = tmp_path / "ws"
        assert (root / "safety_blocklist.txt").exists()
        assert (root / "criteria.json").exists()
        assert list((root / "fixtures" / "assistants").glob("*/*.json"))

    def test_init_twice_fails(self, tmp_path):
        Workspace.init(tmp_path / "ws")
        with pytest.raises(errors.WorkspaceError):
            Workspace.init(tmp_path / "ws")

    def test_open_missing_workspace(self, tmp_path):
        with pytest.raises(errors.WorkspaceError):
            Workspace.open(tmp_path / "nope")

    def test_mutate_reopen_round_trips(self, tmp_path):
        ws = Workspace.init(tmp_path / "ws")
        obj = ws.create_object("Trip", ["trip-planner"])
        ws.update_property(obj.id, obj.properties[0].id, {"value": "Los Angeles"})
        before = {oid: o.to_dict() for oid, o in ws.objects.items()}
        again = Workspace.open(tmp_path / "ws")
        after = {oid: o.to_dict() for oid, o in again.objects.items()}
        assert before == after

    def test_counters_resume_past_issued_ids(self, tmp_path):
        ws = Workspace.init(tmp_path / "ws")
        first = ws.create_object("One")
        second = ws.create_object("Two")
        assert (first.id, second.id) == ("po-0001", "po-0002")
        ws.add_property(second.id, PropertySpec(name="a", value="1"))
        ws.remove_property(second.id, "pr-0001")
        again = Workspace.open(tmp_path / "ws")
        third = again.create_object("Three")
        assert third.id == "po-0003"
        fresh = again.add_property(third.id, PropertySpec(name="b", value="2"))
        # pr-0001 was issued and deleted; its id must never be reused.
        assert fresh.properties[0].id == "pr-0002"

    def test_truncated_object_file_names_the_file(self, tmp_path):
        ws = Workspace.init(tmp_path / "ws")
        ws.create_object("Trip")
        target = tmp_path / "ws" / "objects" / "po-0001.json"
        target.write_text(target.read_text()[:40], encoding="utf-8")
        with pytest.raises(errors.CorruptFile) as info:
            Workspace.open(tmp_path / "ws")
        assert "po-0001.json" in str(info.value)

    def test_unknown_schema_version_fails_fast(self, tmp_path):
        ws = Workspace.init(tmp_path / "ws")
        ws.create_object("Trip")
        target = tmp_path / "ws" / "objects" / "po-0001.json"
        doc = json.loads(target.read_text())
        doc["schema_version"] = 99
        target.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(errors.SchemaVersionMismatch):
            Workspace.open(tmp_path / "ws")

    def test_atomic_write_leaves_no_partials(self, tmp_path):
        ws = Workspace.init(tmp_path / "ws")
        ws.create_object("Trip")
        leftovers = [p for p in (tmp_path / "ws").rglob("*.tmp")]
        assert leftovers == []

    def test_orphan_flag_lifecycle(self, tmp_path):
        ws = Workspace.init(tmp_path / "ws")
        obj = ws.create_object("Trip")
        obj = ws.add_property(obj.id, PropertySpec(name="Schedule", value="plan"))
        parent, child = ws.nest_child(obj.id, "pr-0001")
        ids_before = {row["id"] for row in ws.list_objects()}
        ws.remove_property(parent.id, "pr-0001")
        rows = {row["id"]: row for row in ws.list_objects()}
        assert rows.keys() == ids_before
        assert rows[child.id]["orphaned"] is True
        again = Workspace.open(tmp_path / "ws")
        assert {r["id"]: r["orphaned"] for r in again.list_objects()}[child.id] is True
        # Restoring the nesting version re-references the child.
        ws.restore(parent.id, 3)
        assert {r["id"]: r["orphaned"] for r in ws.list_objects()}[child.id] is False

    def test_delete_object_refuses_referenced_children(self, ws):
        obj = ws.create_object("Trip")
        ws.add_property(obj.id, PropertySpec(name="Schedule", value="plan"))
        parent, child = ws.nest_child(obj.id, "pr-0001")
        with pytest.raises(errors.InvariantViolation):
            ws.delete_object(child.id)
        ws.remove_property(parent.id, "pr-0001")
        ws.delete_object(child.id)
        with pytest.raises(errors.UnknownObject):
            ws.get_object(child.id)

    def test_create_with_unknown_template(self, ws):
        with pytest.raises(errors.UnknownTemplate):
            ws.create_object("X", ["no-such-template"])

    def test_create_from_template_instantiates_defaults(self, ws):
        obj = ws.create_object("Report", ["text-generator"])
        template = ws.templates.get("text-generator")
        assert obj.property_names() == [d.name for d in template.defaults]
        assert all(p.provenance.value == "template" for p in obj.properties)
        assert obj.version == 1

    def test_stale_version_check(self, ws):
        obj = ws.create_object("Trip")
        ws.add_property(obj.id, PropertySpec(name="a", value="1"))
        with pytest.raises(errors.StaleVersion):
            ws.require_version(obj.id, 1)

    def test_update_patch_to_child_value_requires_existing_target(self, ws):
        obj = ws.create_object("Trip")
        ws.add_property(obj.id, PropertySpec(name="link", value="x"))
        with pytest.raises(errors.InvariantViolation):
            ws.update_property(obj.id, "pr-0001",
                               {"value": Value.child("po-0404")})


class CliEnv:
    def __init__(self, root: Path):
        self.runner = CliRunner()
        self.root = root

    def run(self, *args, input=None, expect=0):
        result = self.runner.invoke(
            main, ["-C", str(self.root), *args], input=input,
            catch_exceptions=False,
        )
        assert result.exit_code == expect, result.output
        return result

    def run_json(self, *args, input=None, expect=0):
        result = self.run("--json", *args, input=input, expect=expect)
        return json.loads(result.output)


@pytest.fixture
def cli(tmp_path):
    env = CliEnv(tmp_path / "ws")
    env.run("init")
    return env


class TestCli:
    def test_every_json_output_is_a_single_document(self, cli):
        cli.run_json("new", "Trip", "-t", "trip-planner")
        docs = [
            cli.run_json("list"),
            cli.run_json("show", "po-0001"),
            cli.run_json("template", "list"),
            cli.run_json("history", "--object", "po-0001"),
            cli.run_json("render", "--object", "po-0001", "--format", "hybrid"),
            cli.run_json("analyze", "--object", "po-0001"),
        ]
        for doc in docs:
            assert doc["ok"] is True

    def test_prop_lifecycle(self, cli):
        cli.run("new", "Trip")
        cli.run("prop", "add", "Destination", "LA", "--object", "po-0001")
        cli.run("prop", "add", "Mood", "calm", "--object", "po-0001",
                "--tier", "wanted")
        cli.run("prop", "tier", "pr-0001", "highly_wanted", "--object", "po-0001")
        cli.run("prop", "exclude", "pr-0002", "--object", "po-0001")
        data = cli.run_json("show", "po-0001")["data"]
        assert data["properties"][0]["tier"] == "highly_wanted"
        assert data["properties"][1]["polarity"] == "exclude"
        cli.run("prop", "reorder", "pr-0002,pr-0001", "--object", "po-0001")
        cli.run("prop", "rm", "pr-0002", "--object", "po-0001")
        data = cli.run_json("show", "po-0001")["data"]
        assert [p["id"] for p in data["properties"]] == ["pr-0001"]

    def test_scripted_walkthrough_session(self, cli):
        out = cli.run_json("extract", "-", input="Plan a trip to Los Angeles")
        assert out["data"]["object"]["id"] == "po-0001"
        cli.run("proposal", "apply", "mp-0001")
        cli.run("prop", "add", "Interests", "Local street food",
                "--object", "po-0001")
        cli.run("suggest", "examples", "--object", "po-0001", "--prop", "pr-0002")
        cli.run("proposal", "apply", "mp-0002")
        cli.run("prop", "add", "Schedule", "day by day plan", "--object", "po-0001")
        cli.run("prop", "nest", "pr-0003", "--object", "po-0001")
        cli.run("suggest", "props", "--object", "po-0001")
        cli.run("proposal", "apply", "mp-0003")
        rendered = cli.run("render", "--object", "po-0001", "--format", "hybrid")
        assert "Los Angeles" in rendered.output
        assert "taco trucks" in rendered.output
        assert "Daily pace" in rendered.output

    def test_render_json_twice_identical_bytes(self, cli):
        cli.run("new", "Trip", "-t", "trip-planner")
        first = cli.run("render", "--object", "po-0001", "--format", "json").output
        second = cli.run("render", "--object", "po-0001", "--format", "json").output
        assert first == second

    def test_restore_after_edits_matches_v1(self, cli):
        cli.run("new", "Trip", "-t", "trip-planner")
        v1 = cli.run_json("show", "po-0001")["data"]
        cli.run("prop", "rm", "pr-0001", "--object", "po-0001")
        cli.run("prop", "add", "extra", "stuff", "--object", "po-0001")
        cli.run("restore", "1", "--object", "po-0001")
        now = cli.run_json("show", "po-0001")["data"]
        assert now["version"] == 4
        strip = lambda d: {k: v for k, v in d.items() if k != "version"}
        assert strip(now) == strip(v1)

    def test_diff_and_history(self, cli):
        cli.run("new", "Trip")
        cli.run("prop", "add", "a", "1", "--object", "po-0001")
        history = cli.run_json("history", "--object", "po-0001")["data"]
        assert [h["version"] for h in history] == [1, 2]
        delta = cli.run_json("diff", "1", "2", "--object", "po-0001")["data"]
        assert len(delta["added"]) == 1

    def test_template_commands(self, cli):
        ranked = cli.run_json("template", "search", "code")["data"]
        assert ranked[0]["id"] == "code-generator"
        cli.run("new", "Poster")
        cli.run("template", "apply", "text-generator", "--object", "po-0001",
                "--select", "tone,audience")
        data = cli.run_json("show", "po-0001")["data"]
        assert [p["name"] for p in data["properties"]] == ["tone", "audience"]
        cli.run("template", "derive", "poster-template", "--object", "po-0001",
                "--output-type", "poster")
        listed = cli.run_json("template", "list")["data"]
        assert any(t["id"] == "poster-template" for t in listed)

    def test_chain_command(self, cli):
        cli.run("new", "Story")
        for i, name in enumerate(("beginning", "events", "ending"), 1):
            cli.run("prop", "add", name, f"part {i}", "--object", "po-0001",
                    "--seq", f"storyline:{i}")
        cli.run("prop", "add", "tone", "warm", "--object", "po-0001")
        steps = cli.run_json("chain", "--object", "po-0001")["data"]
        assert len(steps) == 3
        assert all(any(p["name"] == "tone" for p in s["properties"]) for s in steps)

    def test_feedback_command(self, cli):
        cli.run("new", "Story")
        cli.run("prop", "add", "tone", "dark and gritty", "--object", "po-0001")
        cli.run("prop", "add", "audience", "adults", "--object", "po-0001")
        proposal = cli.run_json("feedback", "make it suitable for children",
                                "--object", "po-0001")["data"]
        assert len(proposal["items"]) == 2

    def test_eval_run_and_show(self, cli):
        cli.run("new", "Trip")
        cli.run("prop", "add", "city", "LA", "--object", "po-0001",
                "--candidate", "Tokyo")
        report = cli.run_json("eval", "run", "--object", "po-0001",
                              "--variants", "2")["data"]
        assert report["run_id"] == "run-0001"
        assert len(report["ranking"]) == 2
        shown = cli.run_json("eval", "show", "run-0001")["data"]
        assert shown == report

    def test_proposal_dismiss(self, cli):
        cli.run_json("extract", "-", input="Plan a trip to Los Angeles")
        cli.run("proposal", "dismiss", "mp-0001")
        data = cli.run_json("proposal", "show", "mp-0001")["data"]
        assert all(i["status"] == "dismissed" for i in data["items"])
        obj = cli.run_json("show", "po-0001")["data"]
        assert obj["properties"] == []

    def test_user_error_exit_code_and_stderr(self, cli):
        result = CliRunner().invoke(main, ["-C", str(cli.root), "show", "po-0404"])
        assert result.exit_code == 1
        assert "po-0404" in result.stderr

    def test_io_error_exit_code(self, tmp_path):
        result = CliRunner().invoke(main, ["-C", str(tmp_path / "missing"), "list"])
        assert result.exit_code == 2

    def test_not_a_workspace_message(self, tmp_path):
        result = CliRunner().invoke(main, ["-C", str(tmp_path), "list"])
        assert result.exit_code == 2
        assert "not a workspace" in result.stderr


def test_offline_invariant_all_commands_succeed_in_mock_mode(tmp_path, monkeypatch):
    """OOPROMPT_MOCK=1 plus no network: every command family still works."""
    monkeypatch.setenv("OOPROMPT_MOCK", "1")
    cli = CliEnv(tmp_path / "ws")
    cli.run("init")
    cli.run_json("extract", "-", input="Plan a trip to Los Angeles")
    cli.run("proposal", "apply", "mp-0001")
    cli.run("prop", "add", "Interests", "Local street food", "--object", "po-0001",
            "--candidate", "regional cuisine")
    cli.run("suggest", "examples", "--object", "po-0001", "--prop", "pr-0002")
    cli.run("suggest", "candidates", "--object", "po-0001", "--prop", "pr-0001")
    cli.run("analyze", "--object", "po-0001")
    cli.run("render", "--object", "po-0001", "--format", "nl", "--variants", "4")
    cli.run("eval", "run", "--object", "po-0001", "--variants", "2")
    cli.run("history", "--object", "po-0001")
    cli.run("restore", "1", "--object", "po-0001")
    cli.run("template", "search", "plan")
    cli.run("feedback", "simplify everything", "--object", "po-0001")
