"""LLM-backed reification of raw intent into properties, plus enrichment.

Nothing in this module mutates a prompt object. Every operation returns a
``MappingProposal``: a reviewable batch of additions, updates, and removals
with per-item pending/applied/dismissed states. Applying a proposal is an
explicit workspace mutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .assistants.gateway import AssistantRequest, Gateway
from .errors import (
    EmptyInput,
    NotTextValued,
    PreconditionViolation,
)
from .model import (
    PromptObject,
    PropertySpec,
    Provenance,
    Relation,
    Value,
    normalize_name,
)

EXAMPLE_TOTAL_CAP = 12
CANDIDATES_PER_CALL = 4


@dataclass
class ProposalItem:
    kind: str  # add | update | remove
    status: str = "pending"
    rationale: str = ""
    spec: dict[str, Any] | None = None
    prop_id: str | None = None
    patch: dict[str, Any] | None = None
    span: list[int] | None = None

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind, "status": self.status,
                               "rationale": self.rationale}
        if self.kind == "add":
            doc["span"] = self.span
            doc["spec"] = self.spec
        elif self.kind == "update":
            doc["prop_id"] = self.prop_id
            doc["patch"] = self.patch
        else:
            doc["prop_id"] = self.prop_id
        return doc

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ProposalItem":
        return cls(
            kind=data["kind"],
            status=data.get("status", "pending"),
            rationale=data.get("rationale", ""),
            spec=data.get("spec"),
            prop_id=data.get("prop_id"),
            patch=data.get("patch"),
            span=list(data["span"]) if data.get("span") is not None else None,
        )


@dataclass
class MappingProposal:
    id: str
    object_id: str
    object_version: int
    source: str
    items: list[ProposalItem] = field(default_factory=list)

    def pending(self) -> list[tuple[int, ProposalItem]]:
        return [(i, item) for i, item in enumerate(self.items)
                if item.status == "pending"]

    def is_empty(self) -> bool:
        return not self.items

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": 1,
            "id": self.id,
            "object_id": self.object_id,
            "object_version": self.object_version,
            "source": self.source,
            "items": [item.to_dict() for item in self.items],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MappingProposal":
        return cls(
            id=data["id"],
            object_id=data.get("object_id", ""),
            object_version=int(data.get("object_version", 0)),
            source=data.get("source", ""),
            items=[ProposalItem.from_dict(i) for i in data.get("items", [])],
        )


Registrar = Callable[[str, int, str, list[ProposalItem]], MappingProposal]


def _unregistered(
    object_id: str, object_version: int, source: str, items: list[ProposalItem]
) -> MappingProposal:
    return MappingProposal("", object_id, object_version, source, items)


def _valid_span(span: Any, length: int) -> bool:
    return (isinstance(span, (list, tuple)) and len(span) == 2
            and all(isinstance(v, int) for v in span)
            and 0 <= span[0] <= span[1] <= length)


def _is_noop_patch(prop, patch: Mapping[str, Any]) -> bool:
    """True when every patched field already holds the proposed value; such
    updates are noise and re-running an op must not re-propose them."""
    current = prop.to_dict()
    for fname, raw in patch.items():
        if fname == "value":
            have = current["value"]
            want = raw if isinstance(raw, Mapping) else {"kind": "text", "text": str(raw)}
            if have != want:
                return False
        elif fname == "relation":
            if current["relation"] != dict(raw):
                return False
        elif current.get(fname) != raw:
            return False
    return True


class Mapper:
    """Turns assistant responses into invariant-safe proposals."""

    def __init__(self, gateway: Gateway, registrar: Registrar | None = None) -> None:
        self.gateway = gateway
        self.registrar = registrar or _unregistered

    def _register(
        self, obj: PromptObject | None, source: str, items: list[ProposalItem]
    ) -> MappingProposal:
        object_id = obj.id if obj is not None else ""
        object_version = obj.version if obj is not None else 0
        return self.registrar(object_id, object_version, source, items)

    def extract_properties(
        self, raw_text: str, obj: PromptObject | None = None
    ) -> MappingProposal:
        """Explicit properties read from free text, each carrying the source
        span of the raw text it was read from."""
        if not raw_text.strip():
            raise EmptyInput("raw text is empty")
        response = self.gateway.complete(AssistantRequest(
            role="extractor", input={"raw_text": raw_text},
        ))
        existing = {normalize_name(n) for n in (obj.property_names() if obj else [])}
        items: list[ProposalItem] = []
        for entry in response.output.get("properties", []):
            name = entry.get("name", "").strip()
            key = normalize_name(name)
            if not key or key in existing:
                continue
            existing.add(key)
            value = str(entry.get("value", ""))
            span = entry.get("span")
            if not _valid_span(span, len(raw_text)):
                start = raw_text.find(value) if value else -1
                span = [start, start + len(value)] if start >= 0 else [0, len(raw_text)]
            spec = PropertySpec(
                name=name, value=Value.of_text(value), provenance=Provenance.EXPLICIT,
            )
            items.append(ProposalItem(
                kind="add",
                rationale="stated in the raw intent text",
                spec=spec.to_dict(),
                span=list(span),
            ))
        return self._register(obj, "extract_properties", items)

    def suggest_implicit_properties(self, obj: PromptObject) -> MappingProposal:
        """Unmentioned-but-relevant properties; values may be placeholders."""
        if not obj.properties:
            raise PreconditionViolation("object has no properties to extrapolate from")
        response = self.gateway.complete(AssistantRequest(
            role="implicit_suggester", input={"object": obj.to_dict()},
        ))
        existing = {normalize_name(n) for n in obj.property_names()}
        items: list[ProposalItem] = []
        for entry in response.output.get("suggestions", []):
            name = entry.get("name", "").strip()
            key = normalize_name(name)
            if not key or key in existing:
                continue
            existing.add(key)
            spec = PropertySpec(
                name=name,
                value=Value.of_text(str(entry.get("value", ""))),
                provenance=Provenance.IMPLICIT,
            )
            items.append(ProposalItem(
                kind="add",
                rationale=entry.get("rationale", ""),
                spec=spec.to_dict(),
            ))
        return self._register(obj, "suggest_implicit_properties", items)

    def detect_relations(self, obj: PromptObject) -> MappingProposal:
        """Relation patches grouping step-like properties into sequential
        groups with orders 1..k."""
        if len(obj.properties) < 2:
            raise PreconditionViolation("relation detection needs at least two properties")
        response = self.gateway.complete(AssistantRequest(
            role="relation_detector", input={"object": obj.to_dict()},
        ))
        by_name = {normalize_name(p.name): p for p in obj.properties}
        items: list[ProposalItem] = []
        for entry in response.output.get("groups", []):
            group = entry.get("group", "").strip() or "steps"
            resolved = [by_name[normalize_name(s)] for s in entry.get("steps", [])
                        if normalize_name(s) in by_name]
            if len(resolved) < 2:
                continue
            for order, prop in enumerate(resolved, 1):
                patch = {"relation": Relation.sequential(group, order).to_dict()}
                if _is_noop_patch(prop, patch):
                    continue
                items.append(ProposalItem(
                    kind="update",
                    rationale=f"step {order} of {group}",
                    prop_id=prop.id,
                    patch=patch,
                ))
        return self._register(obj, "detect_relations", items)

    def generate_candidates(self, obj: PromptObject, prop_id: str) -> MappingProposal:
        """2-4 alternative phrasings appended to the property's candidates."""
        prop = obj.get_property(prop_id)
        if prop.value.kind != "text":
            raise NotTextValued(f"property {prop_id} holds a child object")
        response = self.gateway.complete(AssistantRequest(
            role="candidate_generator",
            input={"name": prop.name, "value": prop.value.text or "",
                   "existing": list(prop.candidates)},
        ))
        taken = {normalize_name(prop.value.text or "")}
        taken.update(normalize_name(c) for c in prop.candidates)
        fresh: list[str] = []
        for candidate in response.output.get("candidates", []):
            key = normalize_name(candidate)
            if not key or key in taken:
                continue
            taken.add(key)
            fresh.append(candidate.strip())
            if len(fresh) >= CANDIDATES_PER_CALL:
                break
        items = []
        if fresh:
            items.append(ProposalItem(
                kind="update",
                rationale="alternative phrasings of the current value",
                prop_id=prop_id,
                patch={"candidates": list(prop.candidates) + fresh},
            ))
        return self._register(obj, "generate_candidates", items)

    def generate_examples(self, obj: PromptObject, prop_id: str) -> MappingProposal:
        """Concrete examples; the property keeps at most 12 in total."""
        prop = obj.get_property(prop_id)
        response = self.gateway.complete(AssistantRequest(
            role="example_generator",
            input={"name": prop.name, "value": prop.value.text or "",
                   "existing": list(prop.examples)},
        ))
        room = EXAMPLE_TOTAL_CAP - len(prop.examples)
        taken = {normalize_name(e) for e in prop.examples}
        fresh: list[str] = []
        for example in response.output.get("examples", []):
            key = normalize_name(example)
            if not key or key in taken or len(fresh) >= room:
                continue
            taken.add(key)
            fresh.append(example.strip())
        items = []
        if fresh:
            items.append(ProposalItem(
                kind="update",
                rationale="concrete examples of this intent",
                prop_id=prop_id,
                patch={"examples": list(prop.examples) + fresh},
            ))
        return self._register(obj, "generate_examples", items)

    def apply_holistic_feedback(self, obj: PromptObject, feedback: str) -> MappingProposal:
        """Turn whole-object free-text feedback into property edits."""
        if not feedback.strip():
            raise EmptyInput("feedback is empty")
        response = self.gateway.complete(AssistantRequest(
            role="feedback_integrator",
            input={"feedback": feedback, "object": obj.to_dict()},
        ))
        by_name = {normalize_name(p.name): p for p in obj.properties}
        existing = set(by_name)
        items: list[ProposalItem] = []
        for entry in response.output.get("additions", []):
            name = entry.get("name", "").strip()
            key = normalize_name(name)
            if not key or key in existing:
                continue
            existing.add(key)
            spec = PropertySpec(
                name=name,
                value=Value.of_text(str(entry.get("value", ""))),
                provenance=Provenance.SUGGESTED,
            )
            items.append(ProposalItem(
                kind="add", rationale=entry.get("rationale", ""), spec=spec.to_dict(),
            ))
        allowed = {"name", "value", "polarity", "tier", "candidates", "examples"}
        for entry in response.output.get("updates", []):
            prop = by_name.get(normalize_name(entry.get("name", "")))
            patch = {k: v for k, v in entry.get("patch", {}).items() if k in allowed}
            if prop is None or not patch or _is_noop_patch(prop, patch):
                continue
            items.append(ProposalItem(
                kind="update", rationale=entry.get("rationale", ""),
                prop_id=prop.id, patch=patch,
            ))
        for entry in response.output.get("removals", []):
            prop = by_name.get(normalize_name(entry.get("name", "")))
            if prop is None:
                continue
            items.append(ProposalItem(
                kind="remove", rationale=entry.get("rationale", ""), prop_id=prop.id,
            ))
        return self._register(obj, "apply_holistic_feedback", items)
