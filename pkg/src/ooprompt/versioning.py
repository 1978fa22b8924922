"""Snapshot history: append-only version records with diff and restore support.

Every committed mutation appends one full-snapshot record; versions for one
object always form the contiguous sequence 1..current. Records are stored as
one JSON-lines file per object (or kept in memory when the workspace has no
root directory).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Mapping

from .errors import CorruptFile, InvariantViolation, NeverExisted, UnknownVersion
from .model import normalize_name


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class VersionRecord:
    object_id: str
    version: int
    snapshot: dict[str, Any]
    changelog: str
    timestamp: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "object_id": self.object_id,
            "version": self.version,
            "snapshot": self.snapshot,
            "changelog": self.changelog,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "VersionRecord":
        return cls(
            object_id=data["object_id"],
            version=int(data["version"]),
            snapshot=dict(data["snapshot"]),
            changelog=data.get("changelog", ""),
            timestamp=data.get("timestamp", ""),
        )


class HistoryStore:
    """Append-only per-object history, file-backed or in-memory."""

    def __init__(self, root: Path | None, clock: Callable[[], str] = _utc_now) -> None:
        self.root = Path(root) if root is not None else None
        self.clock = clock
        self._memory: dict[str, list[VersionRecord]] = {}
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, object_id: str) -> Path:
        assert self.root is not None
        return self.root / f"{object_id}.jsonl"

    def append(self, object_id: str, version: int, snapshot: Mapping[str, Any],
               changelog: str) -> VersionRecord:
        existing = self.records(object_id)
        expected = existing[-1].version + 1 if existing else 1
        if version != expected:
            raise InvariantViolation(
                f"history for {object_id} expects version {expected}, got {version}",
            )
        record = VersionRecord(
            object_id=object_id,
            version=version,
            snapshot=json.loads(json.dumps(dict(snapshot))),
            changelog=changelog,
            timestamp=self.clock(),
        )
        if self.root is None:
            self._memory.setdefault(object_id, []).append(record)
        else:
            line = json.dumps(record.to_dict(), ensure_ascii=False)
            with open(self._path(object_id), "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return record

    def records(self, object_id: str) -> list[VersionRecord]:
        if self.root is None:
            return list(self._memory.get(object_id, []))
        path = self._path(object_id)
        if not path.exists():
            return []
        out = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                out.append(VersionRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise CorruptFile(str(path), f"line {lineno}: {exc}") from exc
        return out

    def get(self, object_id: str, version: int) -> VersionRecord:
        for record in self.records(object_id):
            if record.version == version:
                return record
        raise UnknownVersion(
            f"{object_id} has no version {version}", object_id=object_id, version=version,
        )

    def object_ids(self) -> list[str]:
        if self.root is None:
            return sorted(self._memory)
        return sorted(p.stem for p in self.root.glob("*.jsonl"))


def _props_by_id(snapshot: Mapping[str, Any]) -> dict[str, dict[str, Any]]:
    return {p["id"]: p for p in snapshot.get("properties", [])}


_OBJECT_FIELDS = ("title", "template_refs", "notes")


def diff_snapshots(a: Mapping[str, Any], b: Mapping[str, Any]) -> dict[str, Any]:
    """Structured diff from snapshot a to snapshot b.

    Anti-symmetric by construction: additions of (a, b) are the removals of
    (b, a), and changed field entries swap their from/to sides.
    """
    props_a, props_b = _props_by_id(a), _props_by_id(b)
    added = [props_b[pid] for pid in props_b if pid not in props_a]
    removed = [props_a[pid] for pid in props_a if pid not in props_b]
    changed = []
    for pid in props_a:
        if pid not in props_b or props_a[pid] == props_b[pid]:
            continue
        fields = {}
        keys = [k for k in props_b[pid] if k != "id"]
        for key in keys:
            if props_a[pid].get(key) != props_b[pid].get(key):
                fields[key] = {"from": props_a[pid].get(key), "to": props_b[pid].get(key)}
        changed.append({"prop_id": pid, "name": props_b[pid]["name"], "fields": fields})
    object_fields = {}
    for key in _OBJECT_FIELDS:
        if a.get(key) != b.get(key):
            object_fields[key] = {"from": a.get(key), "to": b.get(key)}
    return {
        "added": added,
        "removed": removed,
        "changed": changed,
        "object_fields": object_fields,
    }


def is_empty_diff(diff: Mapping[str, Any]) -> bool:
    return not (diff["added"] or diff["removed"] or diff["changed"]
                or diff["object_fields"])


def property_history(
    records: list[VersionRecord], name: str
) -> list[tuple[int, dict[str, Any]]]:
    """Chronological distinct values a named property held across versions.

    Consecutive identical values collapse to one entry (the first version that
    held the value).
    """
    wanted = normalize_name(name)
    out: list[tuple[int, dict[str, Any]]] = []
    appeared = False
    for record in records:
        for prop in record.snapshot.get("properties", []):
            if normalize_name(prop.get("name", "")) != wanted:
                continue
            appeared = True
            value = prop.get("value", {})
            if not out or out[-1][1] != value:
                out.append((record.version, value))
            break
    if not appeared:
        raise NeverExisted(f"property {name!r} never existed", name=name)
    return out
