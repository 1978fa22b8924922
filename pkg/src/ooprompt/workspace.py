"""The on-disk universe: objects, templates, history, proposals, runs, fixtures.

One workspace = one directory. Writes are atomic (temp file + rename) and
serialized through a single writer lock; every committed mutation bumps the
object version by exactly one and appends a history snapshot. Id counters are
restored from the maximum issued ids on open and never reuse an id.

Layout::

    config.json            workspace config (schema_version, orphans, cors, token)
    objects/po-0001.json   one file per prompt object
    templates/<id>.json    template library
    history/po-0001.jsonl  append-only version records
    proposals/mp-0001.json pending/applied suggestion batches
    runs/run-0001/         comparison reports plus raw model outputs
    fixtures/assistants/   mock fixture files, seeded on init
    safety_blocklist.txt   one blocked theme term per line
    criteria.json          default judge criteria (editable seed data)
"""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import model
from .assistants.gateway import Gateway, gateway_from_env
from .assistants.seed_fixtures import write_seed_fixtures
from .errors import (
    CorruptFile,
    DuplicateName,
    InvariantViolation,
    NotNested,
    SchemaVersionMismatch,
    StaleVersion,
    UnknownObject,
    UnknownProposal,
    UnknownRun,
    WorkspaceError,
)
from .evaluation import DEFAULT_CRITERIA, ComparisonReport, Criterion
from .mapping import Mapper, MappingProposal, ProposalItem
from .model import PromptObject, PropertySpec, validate_object
from .templates import Template, TemplateLibrary, merge_templates, seed_templates
from .versioning import HistoryStore
from .wire import canonical_dumps

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
OBJECTS_DIR = "objects"
TEMPLATES_DIR = "templates"
HISTORY_DIR = "history"
PROPOSALS_DIR = "proposals"
RUNS_DIR = "runs"
FIXTURES_DIR = os.path.join("fixtures", "assistants")
BLOCKLIST_FILE = "safety_blocklist.txt"
CRITERIA_FILE = "criteria.json"
LOCK_FILE = ".lock"

_ID_PATTERNS = {
    "object": re.compile(r"^po-(\d+)$"),
    "property": re.compile(r"^pr-(\d+)$"),
    "proposal": re.compile(r"^mp-(\d+)$"),
    "run": re.compile(r"^run-(\d+)$"),
}
_ID_PREFIX = {"object": "po", "property": "pr", "proposal": "mp", "run": "run"}

DEFAULT_BLOCKLIST_TERMS = (
    "horror", "sorrow", "gore", "terror", "violence", "death",
)


def atomic_write(path: Path, text: str) -> None:
    """Write-temp-then-rename so a killed process never leaves half a file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CorruptFile(str(path), str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise CorruptFile(str(path), f"invalid JSON: {exc}") from exc


class Workspace:
    """In-memory registry plus its durable form; the single write path."""

    def __init__(self, root: Path | None) -> None:
        self.root = Path(root).resolve() if root is not None else None
        self.objects: dict[str, PromptObject] = {}
        self.templates = TemplateLibrary()
        self.proposals: dict[str, MappingProposal] = {}
        self.orphans: set[str] = set()
        self.config: dict[str, Any] = {"schema_version": 1}
        self._counters = {"object": 0, "property": 0, "proposal": 0, "run": 0}
        self._memory_runs: dict[str, dict[str, Any]] = {}
        self._gateway: Gateway | None = None
        self._thread_lock = threading.RLock()
        if self.root is not None:
            self.history = HistoryStore(self.root / HISTORY_DIR)
        else:
            self.history = HistoryStore(None)

    # --- lifecycle ---

    @classmethod
    def init(cls, root: Path | str) -> "Workspace":
        """Create a fresh workspace with seed templates, fixtures, blocklist,
        and default criteria installed."""
        root = Path(root).resolve()
        if (root / CONFIG_FILE).exists():
            raise WorkspaceError(f"{root} is already a workspace")
        for sub in (OBJECTS_DIR, TEMPLATES_DIR, HISTORY_DIR, PROPOSALS_DIR, RUNS_DIR):
            (root / sub).mkdir(parents=True, exist_ok=True)
        (root / FIXTURES_DIR).mkdir(parents=True, exist_ok=True)
        config = {
            "schema_version": 1,
            "cors_origins": ["*"],
            "auth_token": None,
            "orphans": [],
        }
        atomic_write(root / CONFIG_FILE, canonical_dumps(config) + "\n")
        for template in seed_templates():
            atomic_write(
                root / TEMPLATES_DIR / f"{template.id}.json",
                canonical_dumps(template.to_dict()) + "\n",
            )
        write_seed_fixtures(root / FIXTURES_DIR)
        atomic_write(root / BLOCKLIST_FILE, "\n".join(DEFAULT_BLOCKLIST_TERMS) + "\n")
        atomic_write(root / CRITERIA_FILE, canonical_dumps(DEFAULT_CRITERIA) + "\n")
        return cls.open(root)

    @classmethod
    def open(cls, root: Path | str) -> "Workspace":
        """Load and validate every entity; counters resume past the maximum
        issued ids."""
        root = Path(root).resolve()
        config_path = root / CONFIG_FILE
        if not config_path.exists():
            raise WorkspaceError(f"{root} is not a workspace (missing {CONFIG_FILE})")
        ws = cls(root)
        config = _read_json(config_path)
        if not isinstance(config, dict):
            raise CorruptFile(str(config_path), "config must be a JSON object")
        if config.get("schema_version") != 1:
            raise SchemaVersionMismatch(
                f"workspace schema_version {config.get('schema_version')!r} unsupported",
            )
        ws.config = config
        ws.orphans = set(config.get("orphans", []))

        for path in sorted((root / TEMPLATES_DIR).glob("*.json")):
            doc = _read_json(path)
            try:
                ws.templates.add(Template.from_dict(doc))
            except (KeyError, ValueError, TypeError) as exc:
                raise CorruptFile(str(path), f"bad template: {exc}") from exc

        for path in sorted((root / OBJECTS_DIR).glob("*.json")):
            doc = _read_json(path)
            try:
                obj = PromptObject.from_dict(doc)
            except (KeyError, ValueError, TypeError) as exc:
                raise CorruptFile(str(path), f"bad prompt object: {exc}") from exc
            if obj.schema_version != model.SCHEMA_VERSION:
                raise SchemaVersionMismatch(
                    f"{path} has schema_version {obj.schema_version}",
                )
            ws.objects[obj.id] = obj

        for obj in ws.objects.values():
            violations = validate_object(obj, ws.objects)
            if violations:
                raise CorruptFile(
                    str(root / OBJECTS_DIR / f"{obj.id}.json"),
                    "; ".join(v.message for v in violations),
                )

        for path in sorted((root / PROPOSALS_DIR).glob("*.json")):
            doc = _read_json(path)
            try:
                proposal = MappingProposal.from_dict(doc)
            except (KeyError, ValueError, TypeError) as exc:
                raise CorruptFile(str(path), f"bad proposal: {exc}") from exc
            ws.proposals[proposal.id] = proposal

        ws._restore_counters()
        return ws

    @classmethod
    def in_memory(cls) -> "Workspace":
        """Disk-free workspace with the seed template library; used by tests
        and by pure model exercises."""
        ws = cls(None)
        for template in seed_templates():
            ws.templates.add(template)
        return ws

    def _restore_counters(self) -> None:
        def bump(kind: str, token: str) -> None:
            match = _ID_PATTERNS[kind].match(token)
            if match:
                self._counters[kind] = max(self._counters[kind], int(match.group(1)))

        for obj in self.objects.values():
            bump("object", obj.id)
            for prop in obj.properties:
                bump("property", prop.id)
        for object_id in self.history.object_ids():
            bump("object", object_id)
            for record in self.history.records(object_id):
                for prop in record.snapshot.get("properties", []):
                    bump("property", prop.get("id", ""))
        for proposal_id in self.proposals:
            bump("proposal", proposal_id)
        if self.root is not None:
            for path in (self.root / RUNS_DIR).glob("run-*"):
                bump("run", path.name)

    # --- ids, locking, persistence ---

    def next_id(self, kind: str) -> str:
        self._counters[kind] += 1
        return f"{_ID_PREFIX[kind]}-{self._counters[kind]:04d}"

    @contextmanager
    def writer(self):
        """Single-writer discipline: file lock on disk, plain lock in memory."""
        with self._thread_lock:
            if self.root is None:
                yield
                return
            from filelock import FileLock

            with FileLock(str(self.root / LOCK_FILE)):
                yield

    def _object_path(self, object_id: str) -> Path:
        assert self.root is not None
        return self.root / OBJECTS_DIR / f"{object_id}.json"

    def _save_object(self, obj: PromptObject) -> None:
        if self.root is not None:
            atomic_write(self._object_path(obj.id), canonical_dumps(obj.to_dict()) + "\n")

    def _save_config(self) -> None:
        self.config["orphans"] = sorted(self.orphans)
        if self.root is not None:
            atomic_write(self.root / CONFIG_FILE, canonical_dumps(self.config) + "\n")

    def _save_template(self, template: Template) -> None:
        if self.root is not None:
            atomic_write(
                self.root / TEMPLATES_DIR / f"{template.id}.json",
                canonical_dumps(template.to_dict()) + "\n",
            )

    def _save_proposal(self, proposal: MappingProposal) -> None:
        if self.root is not None:
            atomic_write(
                self.root / PROPOSALS_DIR / f"{proposal.id}.json",
                canonical_dumps(proposal.to_dict()) + "\n",
            )

    def _commit_locked(self, obj: PromptObject, changelog: str) -> PromptObject:
        old = self.objects.get(obj.id)
        expected = old.version + 1 if old is not None else 1
        if obj.version != expected:
            raise InvariantViolation(
                f"{obj.id} must commit version {expected}, got {obj.version}",
            )
        registry = dict(self.objects)
        registry[obj.id] = obj
        violations = validate_object(obj, registry)
        if violations:
            raise InvariantViolation(
                "; ".join(v.message for v in violations),
                violations=[v.to_dict() for v in violations],
            )
        self.history.append(obj.id, obj.version, obj.to_dict(), changelog)
        self._save_object(obj)
        self.objects[obj.id] = obj
        referenced = set(obj.child_refs())
        if referenced & self.orphans:
            self.orphans -= referenced
            self._save_config()
        return obj

    def commit(self, obj: PromptObject, changelog: str) -> PromptObject:
        with self.writer():
            return self._commit_locked(obj, changelog)

    # --- object registry ---

    def get_object(self, object_id: str) -> PromptObject:
        if object_id not in self.objects:
            raise UnknownObject(f"no object {object_id}", object_id=object_id)
        return self.objects[object_id]

    def require_version(self, object_id: str, object_version: int | None) -> PromptObject:
        obj = self.get_object(object_id)
        if object_version is not None and object_version != obj.version:
            raise StaleVersion(
                f"{object_id} is at version {obj.version}, caller has {object_version}",
                current=obj.version, provided=object_version,
            )
        return obj

    def list_objects(self) -> list[dict[str, Any]]:
        out = []
        for object_id in sorted(self.objects):
            obj = self.objects[object_id]
            out.append({
                "id": obj.id,
                "title": obj.title,
                "version": obj.version,
                "property_count": len(obj.properties),
                "orphaned": obj.id in self.orphans,
            })
        return out

    # --- lifecycle operations ---

    def create_object(self, title: str, template_refs: Sequence[str] = ()) -> PromptObject:
        parents = [self.templates.get(ref) for ref in template_refs]
        specs = merge_templates(parents) if parents else []
        with self.writer():
            obj = PromptObject(
                id=self.next_id("object"),
                title=title,
                template_refs=list(template_refs),
                properties=[spec.build(self.next_id("property")) for spec in specs],
            )
            return self._commit_locked(obj, f"create_object {obj.id}")

    def update_object(
        self, object_id: str, title: str | None = None, notes: str | None = None
    ) -> PromptObject:
        with self.writer():
            obj = self.get_object(object_id)
            new = obj.clone()
            if title is not None:
                new.title = title
            if notes is not None:
                new.notes = notes
            new.version = obj.version + 1
            return self._commit_locked(new, "update_object (title/notes)")

    def add_property(self, object_id: str, spec: PropertySpec) -> PromptObject:
        with self.writer():
            obj = self.get_object(object_id)
            new = model.add_property(obj, spec, self.next_id("property"))
            prop = new.properties[-1]
            return self._commit_locked(new, f"add_property {prop.id} ({prop.name})")

    def update_property(
        self, object_id: str, prop_id: str, patch: Mapping[str, Any]
    ) -> PromptObject:
        with self.writer():
            obj = self.get_object(object_id)
            new = model.update_property(obj, prop_id, patch)
            fields = ",".join(sorted(patch)) or "nothing"
            return self._commit_locked(new, f"update_property {prop_id} ({fields})")

    def remove_property(self, object_id: str, prop_id: str) -> PromptObject:
        with self.writer():
            obj = self.get_object(object_id)
            new, orphan = model.remove_property(obj, prop_id)
            committed = self._commit_locked(new, f"remove_property {prop_id}")
            if orphan is not None and orphan in self.objects:
                self.orphans.add(orphan)
                self._save_config()
            return committed

    def nest_child(self, object_id: str, prop_id: str) -> tuple[PromptObject, PromptObject]:
        with self.writer():
            obj = self.get_object(object_id)
            child_id = self.next_id("object")
            parent, child = model.nest_child(obj, prop_id, child_id)
            child = self._commit_locked(
                child, f"create_object {child_id} (nest_child from {object_id}/{prop_id})",
            )
            parent = self._commit_locked(parent, f"nest_child {prop_id} -> {child_id}")
            return parent, child

    def promote_child(self, object_id: str, prop_id: str) -> PromptObject:
        with self.writer():
            obj = self.get_object(object_id)
            prop = obj.get_property(prop_id)
            if prop.value.kind != "child":
                raise NotNested(f"property {prop_id} has a text value")
            if prop.value.ref not in self.objects:
                raise UnknownObject(f"child {prop.value.ref} does not exist")
            child = self.objects[prop.value.ref]
            new = model.promote_child(obj, prop_id, child)
            committed = self._commit_locked(new, f"promote_child {prop_id}")
            self._delete_unchecked(child.id)
            return committed

    def reorder_properties(self, object_id: str, permutation: Sequence[str]) -> PromptObject:
        with self.writer():
            obj = self.get_object(object_id)
            new = model.reorder_properties(obj, permutation)
            return self._commit_locked(new, "reorder_properties")

    def restore(self, object_id: str, version: int) -> PromptObject:
        """Append a new version whose content deep-equals the target snapshot;
        history is never rewritten."""
        with self.writer():
            current = self.get_object(object_id)
            record = self.history.get(object_id, version)
            restored = PromptObject.from_dict(record.snapshot)
            restored.version = current.version + 1
            return self._commit_locked(restored, f"restore v{version}")

    def delete_object(self, object_id: str) -> None:
        with self.writer():
            self.get_object(object_id)
            holders = [
                f"{other.id}/{prop.id}"
                for other in self.objects.values()
                for prop in other.properties
                if prop.value.kind == "child" and prop.value.ref == object_id
            ]
            if holders:
                raise InvariantViolation(
                    f"{object_id} is referenced by {', '.join(sorted(holders))}",
                )
            self._delete_unchecked(object_id)

    def _delete_unchecked(self, object_id: str) -> None:
        self.objects.pop(object_id, None)
        self.orphans.discard(object_id)
        self._save_config()
        if self.root is not None:
            try:
                self._object_path(object_id).unlink()
            except FileNotFoundError:
                pass

    def apply_template(
        self, object_id: str, template_id: str, selected: Iterable[str] | None = None
    ) -> PromptObject:
        from .templates import instantiate_selective

        template = self.templates.get(template_id)
        specs = instantiate_selective(template, selected)
        with self.writer():
            obj = self.get_object(object_id)
            pairs = [(spec, self.next_id("property")) for spec in specs]
            new = model.extend_properties(obj, pairs)
            if template_id not in new.template_refs:
                new.template_refs = list(new.template_refs) + [template_id]
            return self._commit_locked(
                new, f"apply_template {template_id} ({len(pairs)} properties)",
            )

    def derive_template(
        self,
        object_id: str,
        template_id: str,
        description: str = "",
        output_type: str = "",
        use_cases: Sequence[str] = (),
    ) -> Template:
        from .templates import derive_template

        obj = self.get_object(object_id)
        with self.writer():
            template = derive_template(
                obj, self.templates, template_id, description, output_type, use_cases,
            )
            self._save_template(template)
            return template

    # --- proposals ---

    def register_proposal(
        self, object_id: str, object_version: int, source: str,
        items: list[ProposalItem],
    ) -> MappingProposal:
        with self.writer():
            proposal = MappingProposal(
                id=self.next_id("proposal"),
                object_id=object_id,
                object_version=object_version,
                source=source,
                items=items,
            )
            self.proposals[proposal.id] = proposal
            self._save_proposal(proposal)
            return proposal

    def get_proposal(self, proposal_id: str) -> MappingProposal:
        if proposal_id not in self.proposals:
            raise UnknownProposal(f"no proposal {proposal_id}", proposal_id=proposal_id)
        return self.proposals[proposal_id]

    def list_proposals(self, object_id: str | None = None) -> list[MappingProposal]:
        out = [self.proposals[pid] for pid in sorted(self.proposals)]
        if object_id is not None:
            out = [p for p in out if p.object_id == object_id]
        return out

    def apply_proposal(
        self, proposal_id: str, item_indices: Sequence[int] | None = None
    ) -> tuple[PromptObject | None, MappingProposal, list[dict[str, Any]]]:
        """Apply the selected pending items as one committed mutation.

        Items that no longer apply (name now taken, property gone) are
        reported per item and stay pending; they never poison the rest.
        """
        with self.writer():
            proposal = self.get_proposal(proposal_id)
            obj = self.get_object(proposal.object_id)
            selected = proposal.pending()
            if item_indices is not None:
                wanted = set(item_indices)
                selected = [(i, item) for i, item in selected if i in wanted]
            if not selected:
                return None, proposal, []

            work = [p.clone() for p in obj.properties]
            taken = {model.normalize_name(p.name) for p in work}
            errors: list[dict[str, Any]] = []
            applied: list[int] = []
            orphaned: list[str] = []
            for index, item in selected:
                try:
                    if item.kind == "add":
                        spec = PropertySpec.from_dict(item.spec or {})
                        key = model.normalize_name(spec.name)
                        if not key:
                            raise DuplicateName("empty name")
                        if key in taken:
                            raise DuplicateName(f"property named {spec.name!r} already exists")
                        taken.add(key)
                        work.append(spec.build(self.next_id("property")))
                    elif item.kind == "update":
                        target = _find(work, item.prop_id)
                        for fname, raw in (item.patch or {}).items():
                            if fname not in model.PATCHABLE_FIELDS:
                                raise InvariantViolation(f"unpatchable field {fname!r}")
                            setattr(target, fname, model._coerce_patch_value(fname, raw))
                        taken = {model.normalize_name(p.name) for p in work}
                    else:
                        target = _find(work, item.prop_id)
                        if target.value.kind == "child" and target.value.ref:
                            orphaned.append(target.value.ref)
                        work.remove(target)
                        taken.discard(model.normalize_name(target.name))
                    applied.append(index)
                except Exception as exc:  # noqa: BLE001 - reported per item
                    errors.append({"item": index, "error": str(exc)})

            if not applied:
                return None, proposal, errors
            from dataclasses import replace as dc_replace

            new = dc_replace(obj, properties=work, version=obj.version + 1)
            committed = self._commit_locked(
                new, f"apply_proposal {proposal.id} ({len(applied)} items)",
            )
            for ref in orphaned:
                if ref in self.objects:
                    self.orphans.add(ref)
            if orphaned:
                self._save_config()
            for index in applied:
                proposal.items[index].status = "applied"
            self._save_proposal(proposal)
            return committed, proposal, errors

    def dismiss_proposal(
        self, proposal_id: str, item_indices: Sequence[int] | None = None
    ) -> MappingProposal:
        with self.writer():
            proposal = self.get_proposal(proposal_id)
            for index, item in proposal.pending():
                if item_indices is None or index in item_indices:
                    item.status = "dismissed"
            self._save_proposal(proposal)
            return proposal

    # --- evaluation runs ---

    def save_run(self, report: ComparisonReport, outputs: Mapping[str, str]) -> None:
        if self.root is None:
            self._memory_runs[report.run_id] = {
                "report": report.to_dict(), "outputs": dict(outputs),
            }
            return
        run_dir = self.root / RUNS_DIR / report.run_id
        atomic_write(run_dir / "report.json", canonical_dumps(report.to_dict()) + "\n")
        for key, text in outputs.items():
            safe = re.sub(r"[^A-Za-z0-9._-]+", "_", key)
            atomic_write(run_dir / "outputs" / f"{safe}.txt", text + "\n")

    def load_run(self, run_id: str) -> ComparisonReport:
        if self.root is None:
            if run_id not in self._memory_runs:
                raise UnknownRun(f"no run {run_id}", run_id=run_id)
            return ComparisonReport.from_dict(self._memory_runs[run_id]["report"])
        path = self.root / RUNS_DIR / run_id / "report.json"
        if not path.exists():
            raise UnknownRun(f"no run {run_id}", run_id=run_id)
        return ComparisonReport.from_dict(_read_json(path))

    def list_runs(self) -> list[str]:
        if self.root is None:
            return sorted(self._memory_runs)
        return sorted(p.name for p in (self.root / RUNS_DIR).glob("run-*") if p.is_dir())

    # --- supporting assets ---

    def blocklist(self) -> list[str]:
        if self.root is None:
            return list(DEFAULT_BLOCKLIST_TERMS)
        path = self.root / BLOCKLIST_FILE
        if not path.exists():
            return list(DEFAULT_BLOCKLIST_TERMS)
        return [line.strip() for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()]

    def criteria(self) -> list[Criterion]:
        if self.root is not None and (self.root / CRITERIA_FILE).exists():
            docs = _read_json(self.root / CRITERIA_FILE)
        else:
            docs = DEFAULT_CRITERIA
        return [Criterion.from_dict(doc) for doc in docs]

    def fixture_dirs(self) -> list[Path]:
        if self.root is None:
            return []
        return [self.root / FIXTURES_DIR]

    def gateway(self) -> Gateway:
        if self._gateway is None:
            self._gateway = gateway_from_env(self.fixture_dirs())
        return self._gateway

    def mapper(self, register: bool = True) -> Mapper:
        return Mapper(self.gateway(), self.register_proposal if register else None)


def _find(props: list[model.Property], prop_id: str | None) -> model.Property:
    for prop in props:
        if prop.id == prop_id:
            return prop
    from .errors import UnknownProperty

    raise UnknownProperty(f"no property {prop_id}")

