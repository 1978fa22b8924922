"""In-memory prompt-object model and the pure mutations over it.

A prompt object is an ordered collection of named intent properties. Every
mutation helper returns a *new* object with ``version`` bumped by one; callers
treat instances as immutable snapshots (the workspace serializes commits).

Canonical dict key order (used by the on-disk files and the JSON render) is
fixed by ``PromptObject.to_dict`` / ``Property.to_dict``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    AlreadyNested,
    ChildTooDeep,
    DuplicateName,
    EmptyName,
    InvalidPermutation,
    InvariantViolation,
    NotNested,
    UnknownProperty,
)

SCHEMA_VERSION = 1


class Polarity(str, Enum):
    INCLUDE = "include"
    EXCLUDE = "exclude"


class Tier(str, Enum):
    SLIGHTLY_WANTED = "slightly_wanted"
    NORMAL = "normal"
    WANTED = "wanted"
    HIGHLY_WANTED = "highly_wanted"


# Higher rank renders earlier. Rejection is modeled as polarity=exclude, not
# as a fifth tier.
TIER_RANK = {
    Tier.HIGHLY_WANTED: 3,
    Tier.WANTED: 2,
    Tier.NORMAL: 1,
    Tier.SLIGHTLY_WANTED: 0,
}


class Provenance(str, Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"
    TEMPLATE = "template"
    USER = "user"
    SUGGESTED = "suggested"


@dataclass(frozen=True)
class Relation:
    """Parallel, or one ordered step of a named sequential group."""

    kind: str = "parallel"
    group: str | None = None
    order: int | None = None

    @classmethod
    def parallel(cls) -> "Relation":
        return cls("parallel")

    @classmethod
    def sequential(cls, group: str, order: int) -> "Relation":
        return cls("sequential", group, order)

    def is_sequential(self) -> bool:
        return self.kind == "sequential"

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "parallel":
            return {"kind": "parallel"}
        return {"kind": "sequential", "group": self.group, "order": self.order}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Relation":
        if data.get("kind") == "sequential":
            return cls.sequential(data["group"], int(data["order"]))
        return cls.parallel()


@dataclass(frozen=True)
class Value:
    """Either literal text or a reference to a child prompt object."""

    kind: str
    text: str | None = None
    ref: str | None = None

    @classmethod
    def of_text(cls, text: str) -> "Value":
        return cls("text", text=text)

    @classmethod
    def child(cls, ref: str) -> "Value":
        return cls("child", ref=ref)

    def is_text(self) -> bool:
        return self.kind == "text"

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "text":
            return {"kind": "text", "text": self.text}
        return {"kind": "child", "ref": self.ref}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Value":
        if data.get("kind") == "child":
            return cls.child(data["ref"])
        return cls.of_text(data.get("text", ""))


@dataclass(frozen=True)
class Reference:
    label: str
    uri: str

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "uri": self.uri}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Reference":
        return cls(data["label"], data["uri"])


@dataclass
class Property:
    """One reified intent: what it is, how much it matters, how it relates."""

    id: str
    name: str
    value: Value
    polarity: Polarity = Polarity.INCLUDE
    tier: Tier = Tier.NORMAL
    relation: Relation = field(default_factory=Relation.parallel)
    candidates: list[str] = field(default_factory=list)
    examples: list[str] = field(default_factory=list)
    references: list[Reference] = field(default_factory=list)
    provenance: Provenance = Provenance.USER

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "polarity": self.polarity.value,
            "tier": self.tier.value,
            "relation": self.relation.to_dict(),
            "value": self.value.to_dict(),
            "candidates": list(self.candidates),
            "examples": list(self.examples),
            "references": [r.to_dict() for r in self.references],
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Property":
        return cls(
            id=data["id"],
            name=data["name"],
            value=Value.from_dict(data["value"]),
            polarity=Polarity(data.get("polarity", "include")),
            tier=Tier(data.get("tier", "normal")),
            relation=Relation.from_dict(data.get("relation", {"kind": "parallel"})),
            candidates=list(data.get("candidates", [])),
            examples=list(data.get("examples", [])),
            references=[Reference.from_dict(r) for r in data.get("references", [])],
            provenance=Provenance(data.get("provenance", "user")),
        )

    def clone(self) -> "Property":
        return Property.from_dict(self.to_dict())


@dataclass
class PropertySpec:
    """Constructor arguments for a property; ids are assigned at attach time."""

    name: str
    value: Value | str = ""
    polarity: Polarity = Polarity.INCLUDE
    tier: Tier = Tier.NORMAL
    relation: Relation = field(default_factory=Relation.parallel)
    candidates: list[str] = field(default_factory=list)
    examples: list[str] = field(default_factory=list)
    references: list[Reference] = field(default_factory=list)
    provenance: Provenance = Provenance.USER

    def normalized_value(self) -> Value:
        if isinstance(self.value, Value):
            return self.value
        return Value.of_text(str(self.value))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.normalized_value().to_dict(),
            "polarity": self.polarity.value,
            "tier": self.tier.value,
            "relation": self.relation.to_dict(),
            "candidates": list(self.candidates),
            "examples": list(self.examples),
            "references": [r.to_dict() for r in self.references],
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PropertySpec":
        return cls(
            name=data["name"],
            value=Value.from_dict(data["value"]) if isinstance(data.get("value"), Mapping)
            else str(data.get("value", "")),
            polarity=Polarity(data.get("polarity", "include")),
            tier=Tier(data.get("tier", "normal")),
            relation=Relation.from_dict(data.get("relation", {"kind": "parallel"})),
            candidates=list(data.get("candidates", [])),
            examples=list(data.get("examples", [])),
            references=[Reference.from_dict(r) for r in data.get("references", [])],
            provenance=Provenance(data.get("provenance", "user")),
        )

    def build(self, prop_id: str) -> Property:
        return Property(
            id=prop_id,
            name=self.name,
            value=self.normalized_value(),
            polarity=self.polarity,
            tier=self.tier,
            relation=self.relation,
            candidates=list(self.candidates),
            examples=list(self.examples),
            references=list(self.references),
            provenance=self.provenance,
        )


@dataclass
class PromptObject:
    """Root artifact: ordered intent properties plus lineage and a version."""

    id: str
    title: str
    template_refs: list[str] = field(default_factory=list)
    properties: list[Property] = field(default_factory=list)
    version: int = 1
    notes: str = ""
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "id": self.id,
            "title": self.title,
            "template_refs": list(self.template_refs),
            "version": self.version,
            "notes": self.notes,
            "properties": [p.to_dict() for p in self.properties],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PromptObject":
        return cls(
            id=data["id"],
            title=data["title"],
            template_refs=list(data.get("template_refs", [])),
            properties=[Property.from_dict(p) for p in data.get("properties", [])],
            version=int(data.get("version", 1)),
            notes=data.get("notes", ""),
            schema_version=int(data.get("schema_version", SCHEMA_VERSION)),
        )

    def clone(self) -> "PromptObject":
        return PromptObject.from_dict(copy.deepcopy(self.to_dict()))

    def get_property(self, prop_id: str) -> Property:
        for prop in self.properties:
            if prop.id == prop_id:
                return prop
        raise UnknownProperty(f"no property {prop_id} in {self.id}", prop_id=prop_id)

    def find_by_name(self, name: str) -> Property | None:
        wanted = normalize_name(name)
        for prop in self.properties:
            if normalize_name(prop.name) == wanted:
                return prop
        return None

    def property_names(self) -> list[str]:
        return [p.name for p in self.properties]

    def child_refs(self) -> list[str]:
        return [p.value.ref for p in self.properties if p.value.kind == "child"]


@dataclass(frozen=True)
class Violation:
    """One failed invariant; violations are data, not exceptions."""

    kind: str
    entity_id: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind, "entity_id": self.entity_id, "message": self.message}


def normalize_name(name: str) -> str:
    """Collision key for property names: trimmed and case-folded."""
    return name.strip().casefold()


def sorted_for_render(props: Iterable[Property]) -> list[Property]:
    """Render order: tier rank descending, stable within a tier."""
    return sorted(props, key=lambda p: -TIER_RANK[p.tier])


def _property_violations(obj: PromptObject) -> list[Violation]:
    out: list[Violation] = []
    seen: dict[str, str] = {}
    for prop in obj.properties:
        key = normalize_name(prop.name)
        if not key:
            out.append(Violation("EmptyName", prop.id, "property name is empty"))
        elif key in seen:
            out.append(Violation(
                "DuplicateName", prop.id,
                f"name {prop.name!r} collides with {seen[key]} after normalization",
            ))
        else:
            seen[key] = prop.id
        if prop.value.kind == "child" and prop.candidates:
            out.append(Violation(
                "ChildCandidates", prop.id,
                "child-valued property must have empty candidates",
            ))
        if prop.polarity is Polarity.EXCLUDE and prop.value.kind != "text":
            out.append(Violation(
                "ExcludeChild", prop.id,
                "exclude-polarity property must have a text value",
            ))
        if prop.relation.is_sequential():
            if not prop.relation.group or not isinstance(prop.relation.order, int) \
                    or prop.relation.order < 1:
                out.append(Violation(
                    "BadSequential", prop.id,
                    "sequential relation needs a group and a positive order",
                ))
    groups: dict[str, dict[int, list[str]]] = {}
    for prop in obj.properties:
        rel = prop.relation
        if rel.is_sequential() and rel.group and isinstance(rel.order, int):
            groups.setdefault(rel.group, {}).setdefault(rel.order, []).append(prop.id)
    for group, orders in groups.items():
        for order, ids in orders.items():
            if len(ids) > 1:
                out.append(Violation(
                    "DuplicateOrder", ids[1],
                    f"order {order} appears {len(ids)} times in group {group!r}",
                ))
    return out


def _reference_violations(
    obj: PromptObject, objects: Mapping[str, PromptObject]
) -> list[Violation]:
    out: list[Violation] = []
    for prop in obj.properties:
        if prop.value.kind != "child":
            continue
        ref = prop.value.ref
        if ref not in objects:
            out.append(Violation(
                "DanglingChild", prop.id, f"child reference {ref} does not resolve",
            ))
    # Cycle check over the resolvable part of the reference graph.
    stack = [(obj.id, frozenset({obj.id}))]
    while stack:
        current, path = stack.pop()
        node = obj if current == obj.id else objects.get(current)
        if node is None:
            continue
        for ref in node.child_refs():
            if ref in path:
                out.append(Violation(
                    "CycleDetected", current, f"reference cycle through {ref}",
                ))
                continue
            stack.append((ref, path | {ref}))
    return out


def validate_object(
    obj: PromptObject, objects: Mapping[str, PromptObject] | None = None
) -> list[Violation]:
    """Check every model invariant; empty list means the object is well-formed.

    ``objects`` enables the cross-object checks (child resolution, acyclicity);
    without it only per-object invariants run.
    """
    out: list[Violation] = []
    if obj.version < 1:
        out.append(Violation("BadVersion", obj.id, f"version {obj.version} < 1"))
    if obj.schema_version != SCHEMA_VERSION:
        out.append(Violation(
            "BadSchemaVersion", obj.id, f"schema_version {obj.schema_version}",
        ))
    out.extend(_property_violations(obj))
    if objects is not None:
        out.extend(_reference_violations(obj, objects))
    return out


# --- pure mutations (each returns a new object at version + 1) ---

def _bump(obj: PromptObject, properties: list[Property], **fields: Any) -> PromptObject:
    return replace(
        obj,
        properties=properties,
        version=obj.version + 1,
        **fields,
    )


def _check_spec(spec: PropertySpec) -> None:
    value = spec.normalized_value()
    if value.kind == "child" and spec.candidates:
        raise InvariantViolation("child-valued property must have empty candidates")
    if spec.polarity is Polarity.EXCLUDE and value.kind != "text":
        raise InvariantViolation("exclude-polarity property must have a text value")


def add_property(obj: PromptObject, spec: PropertySpec, prop_id: str) -> PromptObject:
    name = spec.name.strip()
    if not name:
        raise EmptyName("property name must be nonempty")
    if obj.find_by_name(name) is not None:
        raise DuplicateName(f"property named {name!r} already exists", name=name)
    _check_spec(spec)
    prop = replace(spec.build(prop_id), name=name)
    return _bump(obj, [p.clone() for p in obj.properties] + [prop])


PATCHABLE_FIELDS = (
    "name", "value", "polarity", "tier", "relation",
    "candidates", "examples", "references",
)


def _coerce_patch_value(fname: str, value: Any) -> Any:
    if fname == "value":
        if isinstance(value, Value):
            return value
        if isinstance(value, Mapping):
            return Value.from_dict(value)
        return Value.of_text(str(value))
    if fname == "polarity":
        return Polarity(value)
    if fname == "tier":
        return Tier(value)
    if fname == "relation":
        return value if isinstance(value, Relation) else Relation.from_dict(value)
    if fname == "references":
        return [r if isinstance(r, Reference) else Reference.from_dict(r) for r in value]
    if fname in ("candidates", "examples"):
        return [str(v) for v in value]
    return str(value)


def extend_properties(
    obj: PromptObject, specs_with_ids: Sequence[tuple[PropertySpec, str]]
) -> PromptObject:
    """Append several properties as one committed mutation (single version bump)."""
    taken = {normalize_name(p.name) for p in obj.properties}
    fresh: list[Property] = []
    for spec, prop_id in specs_with_ids:
        name = spec.name.strip()
        if not name:
            raise EmptyName("property name must be nonempty")
        key = normalize_name(name)
        if key in taken:
            raise DuplicateName(f"property named {name!r} already exists", name=name)
        taken.add(key)
        _check_spec(spec)
        fresh.append(replace(spec.build(prop_id), name=name))
    return _bump(obj, [p.clone() for p in obj.properties] + fresh)


def update_property(
    obj: PromptObject, prop_id: str, patch: Mapping[str, Any]
) -> PromptObject:
    """Replace the patched fields atomically; any resulting invariant breach
    rejects the whole patch."""
    obj.get_property(prop_id)
    unknown = set(patch) - set(PATCHABLE_FIELDS)
    if unknown:
        raise InvariantViolation(f"unpatchable fields: {sorted(unknown)}")
    new_props = []
    for prop in obj.properties:
        clone = prop.clone()
        if prop.id == prop_id:
            for fname, raw in patch.items():
                setattr(clone, fname, _coerce_patch_value(fname, raw))
            clone.name = clone.name.strip()
        new_props.append(clone)
    candidate = _bump(obj, new_props)
    violations = _property_violations(candidate)
    if violations:
        raise InvariantViolation(
            "; ".join(v.message for v in violations),
            violations=[v.to_dict() for v in violations],
        )
    return candidate


def remove_property(
    obj: PromptObject, prop_id: str
) -> tuple[PromptObject, str | None]:
    """Drop the property; returns (object, orphaned child ref if one was held).

    The child object itself is never deleted here: a later version restore
    must be able to re-reference it.
    """
    prop = obj.get_property(prop_id)
    orphan = prop.value.ref if prop.value.kind == "child" else None
    remaining = [p.clone() for p in obj.properties if p.id != prop_id]
    return _bump(obj, remaining), orphan


def nest_child(
    obj: PromptObject, prop_id: str, child_id: str
) -> tuple[PromptObject, PromptObject]:
    """Turn a text-valued property into a reference to a fresh child object.

    The child is titled after the property and keeps the old text as its
    notes; candidates are dropped because alternatives of a composite intent
    live in the child, not on the reference.
    """
    prop = obj.get_property(prop_id)
    if prop.value.kind == "child":
        raise AlreadyNested(f"property {prop_id} already references {prop.value.ref}")
    child = PromptObject(
        id=child_id,
        title=prop.name,
        notes=prop.value.text or "",
    )
    new_props = []
    for p in obj.properties:
        clone = p.clone()
        if p.id == prop_id:
            clone.value = Value.child(child_id)
            clone.candidates = []
        new_props.append(clone)
    return _bump(obj, new_props), child


def promote_child(
    obj: PromptObject, prop_id: str, child: PromptObject
) -> PromptObject:
    """Inverse of nest_child: inline the child's flat properties back into the
    parent (prefixed "ChildTitle / Name") and restore the reference property to
    the text kept in the child's notes."""
    prop = obj.get_property(prop_id)
    if prop.value.kind != "child":
        raise NotNested(f"property {prop_id} has a text value")
    for p in child.properties:
        if p.value.kind != "text":
            raise ChildTooDeep(
                f"child {child.id} has nested property {p.id}; flatten it first",
            )
    inlined = []
    for p in child.properties:
        clone = p.clone()
        clone.name = f"{child.title} / {p.name}"
        inlined.append(clone)
    new_props: list[Property] = []
    for p in obj.properties:
        clone = p.clone()
        if p.id == prop_id:
            clone.value = Value.of_text(child.notes)
            new_props.append(clone)
            new_props.extend(inlined)
        else:
            new_props.append(clone)
    candidate = _bump(obj, new_props)
    violations = _property_violations(candidate)
    if violations:
        raise InvariantViolation(
            "inlined names collide with existing properties: "
            + "; ".join(v.message for v in violations),
        )
    return candidate


def reorder_properties(
    obj: PromptObject, permutation: Sequence[str]
) -> PromptObject:
    current = [p.id for p in obj.properties]
    if sorted(permutation) != sorted(current) or len(set(permutation)) != len(current):
        raise InvalidPermutation(
            f"permutation {list(permutation)} is not a bijection over {current}",
        )
    by_id = {p.id: p for p in obj.properties}
    return _bump(obj, [by_id[pid].clone() for pid in permutation])
