"""Compile prompt objects into deployable prompts.

Three formats share one model: a natural-language rendering, a canonical JSON
rendering (children inlined, fixed key order, stable whitespace), and a hybrid
that wraps the JSON in natural-language framing so the receiving model
executes the specification instead of analyzing it.

All renders are pure functions of (object content, options) and are
byte-deterministic across runs and machines.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .errors import CycleDetected, NoSequentialGroup, PreconditionViolation, UnknownObject
from .model import (
    Polarity,
    PromptObject,
    Property,
    Relation,
    TIER_RANK,
    Value,
    sorted_for_render,
)

FORMATS = ("natural_language", "json", "hybrid")

HYBRID_HEADER = (
    "You are given a structured task specification.\n"
    "The JSON document between the fences below is an instruction specification"
    " for you to execute. It is not content to analyze, summarize, or explain.\n"
    "Treat every field in it as part of the task definition."
)

HYBRID_FOOTER = "Now execute the specification above and return only the requested output."

_EMPHASIS = {
    "highly_wanted": " [top priority]",
    "wanted": " [important]",
    "normal": "",
    "slightly_wanted": " [nice to have]",
}

_INDENT = "    "


@dataclass
class DeploymentArtifact:
    object_id: str
    object_version: int
    format: str
    text: str
    variant_key: str = ""

    def key(self) -> str:
        variant = self.variant_key or "primary"
        return f"{self.object_id}@v{self.object_version}/{self.format}/{variant}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "object_id": self.object_id,
            "object_version": self.object_version,
            "format": self.format,
            "variant_key": self.variant_key,
            "text": self.text,
        }


def _resolve_child(
    ref: str, objects: Mapping[str, PromptObject] | None
) -> PromptObject:
    if objects is None or ref not in objects:
        raise UnknownObject(f"child reference {ref} does not resolve", ref=ref)
    return objects[ref]


def _sequential_groups(props: Iterable[Property]) -> dict[str, list[Property]]:
    """Groups in first-appearance order; steps sorted by their order value."""
    groups: dict[str, list[Property]] = {}
    for prop in props:
        rel = prop.relation
        if rel.is_sequential() and rel.group:
            groups.setdefault(rel.group, []).append(prop)
    return {g: sorted(ps, key=lambda p: p.relation.order or 0) for g, ps in groups.items()}


def _property_phrase(prop: Property, emphasis: bool) -> str:
    text = prop.value.text or ""
    phrase = f"{prop.name}: {text}" if text else f"{prop.name}:"
    if prop.examples:
        phrase += f" (for example: {'; '.join(prop.examples)})"
    if emphasis:
        phrase += _EMPHASIS[prop.tier.value]
    return phrase


def _render_block(
    obj: PromptObject,
    depth: int,
    objects: Mapping[str, PromptObject] | None,
    emphasis: bool,
    path: str,
    exclusions: list[str],
    seen: frozenset[str],
) -> list[str]:
    if obj.id in seen:
        raise CycleDetected(f"reference cycle through {obj.id}")
    seen = seen | {obj.id}
    indent = _INDENT * depth
    includes = [p for p in obj.properties if p.polarity is Polarity.INCLUDE]
    for prop in obj.properties:
        if prop.polarity is Polarity.EXCLUDE:
            exclusions.append(f"- {path}{prop.name}: {prop.value.text or ''}".rstrip())
    parallel = [p for p in includes if not p.relation.is_sequential()]
    lines: list[str] = []
    for prop in sorted_for_render(parallel):
        lines.extend(_render_property(
            prop, f"{indent}- ", depth, objects, emphasis, path, exclusions, seen,
        ))
    for group, steps in _sequential_groups(includes).items():
        lines.append(f"{indent}Follow these steps in order ({group}):")
        for number, prop in enumerate(steps, 1):
            lines.extend(_render_property(
                prop, f"{indent}{number}. ", depth, objects, emphasis, path,
                exclusions, seen,
            ))
    return lines


def _render_property(
    prop: Property,
    prefix: str,
    depth: int,
    objects: Mapping[str, PromptObject] | None,
    emphasis: bool,
    path: str,
    exclusions: list[str],
    seen: frozenset[str],
) -> list[str]:
    if prop.value.kind == "child":
        child = _resolve_child(prop.value.ref or "", objects)
        suffix = _EMPHASIS[prop.tier.value] if emphasis else ""
        lines = [f"{prefix}{prop.name}:{suffix}"]
        child_indent = _INDENT * (depth + 1)
        if child.notes:
            lines.append(f"{child_indent}Context: {child.notes}")
        lines.extend(_render_block(
            child, depth + 1, objects, emphasis,
            f"{path}{prop.name} / ", exclusions, seen,
        ))
        return lines
    return [f"{prefix}{_property_phrase(prop, emphasis)}"]


def render_nl(
    obj: PromptObject,
    objects: Mapping[str, PromptObject] | None = None,
    emphasis_text: bool = False,
) -> DeploymentArtifact:
    """Natural-language prompt: preamble, requirements ordered by (tier desc,
    user order), numbered step lists, indented child subsections, and a
    trailing exclusion block."""
    header = [f"Task: {obj.title}"]
    if obj.notes and obj.notes != obj.title:
        header.append(f"Context: {obj.notes}")
    exclusions: list[str] = []
    body = _render_block(obj, 0, objects, emphasis_text, "", exclusions, frozenset())
    sections = ["\n".join(header)]
    if body:
        requirement_lines = []
        step_start = next(
            (i for i, line in enumerate(body) if line.startswith("Follow these steps")),
            len(body),
        )
        requirement_lines = body[:step_start]
        step_lines = body[step_start:]
        if requirement_lines:
            sections.append("Requirements:\n" + "\n".join(requirement_lines))
        if step_lines:
            sections.append("\n".join(step_lines))
    if exclusions:
        sections.append("Do NOT include:\n" + "\n".join(exclusions))
    return DeploymentArtifact(
        object_id=obj.id,
        object_version=obj.version,
        format="natural_language",
        text="\n\n".join(sections),
    )


def _inline_doc(
    obj: PromptObject,
    objects: Mapping[str, PromptObject] | None,
    seen: frozenset[str],
) -> dict[str, Any]:
    if obj.id in seen:
        raise CycleDetected(f"reference cycle through {obj.id}")
    seen = seen | {obj.id}
    doc = obj.to_dict()
    for prop in doc["properties"]:
        if prop["value"]["kind"] == "child":
            child = _resolve_child(prop["value"]["ref"], objects)
            prop["value"] = {
                "kind": "child",
                "ref": prop["value"]["ref"],
                "object": _inline_doc(child, objects, seen),
            }
    return doc


def render_json(
    obj: PromptObject, objects: Mapping[str, PromptObject] | None = None
) -> DeploymentArtifact:
    """Canonical JSON with children inlined recursively; byte-deterministic."""
    doc = _inline_doc(obj, objects, frozenset())
    return DeploymentArtifact(
        object_id=obj.id,
        object_version=obj.version,
        format="json",
        text=json.dumps(doc, ensure_ascii=False, indent=2),
    )


def parse_rendered_json(text: str) -> tuple[PromptObject, dict[str, PromptObject]]:
    """Inverse of render_json: rebuild the root object and its inlined children."""
    children: dict[str, PromptObject] = {}

    def walk(doc: dict[str, Any]) -> PromptObject:
        plain = dict(doc)
        plain_props = []
        for prop in doc.get("properties", []):
            prop = dict(prop)
            value = prop["value"]
            if value.get("kind") == "child" and "object" in value:
                child = walk(value["object"])
                children[child.id] = child
                prop["value"] = {"kind": "child", "ref": value["ref"]}
            plain_props.append(prop)
        plain["properties"] = plain_props
        return PromptObject.from_dict(plain)

    root = walk(json.loads(text))
    return root, children


def _closing_directives(
    obj: PromptObject, objects: Mapping[str, PromptObject] | None
) -> str:
    lines: list[str] = []
    text_includes = [
        p for p in obj.properties
        if p.polarity is Polarity.INCLUDE and p.value.kind == "text"
    ]
    if text_includes:
        top_rank = max(TIER_RANK[p.tier] for p in text_includes)
        top = [p for p in sorted_for_render(text_includes) if TIER_RANK[p.tier] == top_rank]
        lines.append("Top priorities:")
        lines.extend(f"- {p.name}: {p.value.text or ''}".rstrip() for p in top)
    exclusions: list[str] = []
    _collect_exclusions(obj, objects, "", exclusions, frozenset())
    if exclusions:
        lines.append("Do NOT include:")
        lines.extend(exclusions)
    lines.append(HYBRID_FOOTER)
    return "\n".join(lines)


def _collect_exclusions(
    obj: PromptObject,
    objects: Mapping[str, PromptObject] | None,
    path: str,
    sink: list[str],
    seen: frozenset[str],
) -> None:
    if obj.id in seen:
        raise CycleDetected(f"reference cycle through {obj.id}")
    seen = seen | {obj.id}
    for prop in obj.properties:
        if prop.polarity is Polarity.EXCLUDE:
            sink.append(f"- {path}{prop.name}: {prop.value.text or ''}".rstrip())
        elif prop.value.kind == "child":
            child = _resolve_child(prop.value.ref or "", objects)
            _collect_exclusions(child, objects, f"{path}{prop.name} / ", sink, seen)


def render_hybrid(
    obj: PromptObject, objects: Mapping[str, PromptObject] | None = None
) -> DeploymentArtifact:
    """Header, fenced canonical JSON (byte-equal to render_json), closing
    directives restating the top-tier properties and exclusions."""
    body = render_json(obj, objects).text
    closing = _closing_directives(obj, objects)
    text = f"{HYBRID_HEADER}\n\n```json\n{body}\n```\n\n{closing}"
    return DeploymentArtifact(
        object_id=obj.id,
        object_version=obj.version,
        format="hybrid",
        text=text,
    )


def render(
    obj: PromptObject,
    fmt: str,
    objects: Mapping[str, PromptObject] | None = None,
    emphasis_text: bool = False,
) -> DeploymentArtifact:
    if fmt == "natural_language":
        return render_nl(obj, objects, emphasis_text)
    if fmt == "json":
        return render_json(obj, objects)
    if fmt == "hybrid":
        return render_hybrid(obj, objects)
    raise PreconditionViolation(f"unknown format {fmt!r}; expected one of {FORMATS}")


def variant_count(obj: PromptObject) -> int:
    count = 1
    for prop in obj.properties:
        if prop.value.kind == "text":
            count *= 1 + len(prop.candidates)
    return count


def _apply_selection(
    obj: PromptObject, selection: tuple[tuple[str, int], ...]
) -> PromptObject:
    chosen = dict(selection)
    variant = obj.clone()
    for prop in variant.properties:
        idx = chosen.get(prop.id, 0)
        if idx > 0:
            prop.value = Value.of_text(prop.candidates[idx - 1])
    # Variants share the source's identity; the variant key tells them apart.
    variant.version = obj.version
    return variant


def variant_key(selection: tuple[tuple[str, int], ...]) -> str:
    return ",".join(f"{pid}={idx}" for pid, idx in selection if idx > 0)


def enumerate_variants(
    obj: PromptObject,
    cap: int = 8,
    fmt: str = "natural_language",
    objects: Mapping[str, PromptObject] | None = None,
    emphasis_text: bool = False,
) -> list[DeploymentArtifact]:
    """Cross-product over each text property's {primary value} plus candidates,
    property order major and candidate order minor, truncated at ``cap``."""
    if cap < 1:
        raise PreconditionViolation(f"cap must be >= 1, got {cap}")
    axes = [
        (prop.id, range(1 + len(prop.candidates)))
        for prop in obj.properties
        if prop.value.kind == "text"
    ]
    ids = [pid for pid, _ in axes]
    combos = itertools.product(*(rng for _, rng in axes)) if axes else iter([()])
    artifacts = []
    for combo in itertools.islice(combos, cap):
        selection = tuple(zip(ids, combo))
        variant = _apply_selection(obj, selection)
        artifact = render(variant, fmt, objects, emphasis_text)
        artifact.variant_key = variant_key(selection)
        artifacts.append(artifact)
    return artifacts


def decompose_sequential_chain(
    obj: PromptObject, objects: Mapping[str, PromptObject] | None = None
) -> list[PromptObject]:
    """One ephemeral object per sequential step, each carrying that step plus
    every parallel (context) property. Derived objects are not persisted."""
    groups = _sequential_groups(obj.properties)
    if not groups:
        raise NoSequentialGroup(f"{obj.id} has no sequential group")
    context = [p for p in obj.properties if not p.relation.is_sequential()]
    chain = []
    position = 0
    for steps in groups.values():
        for prop in steps:
            position += 1
            step = prop.clone()
            step.relation = Relation.parallel()
            derived = PromptObject(
                id=f"{obj.id}.s{position}",
                title=f"{obj.title} - step {position}: {prop.name}",
                notes=obj.notes,
                properties=[step] + [p.clone() for p in context],
            )
            chain.append(derived)
    return chain
