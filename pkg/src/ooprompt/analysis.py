"""Static analysis of a prompt object before deployment.

Two tiers: a deterministic rule tier (structural conflicts, token estimate,
template similarity, blocklist safety scan) that never touches the network,
and an advisory assistant tier (semantic conflicts, semantic safety,
completeness suggestions) that degrades to labeled "skipped" sections when no
provider is available.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .assistants.gateway import AssistantRequest, Gateway
from .deployment import DeploymentArtifact
from .errors import EmptyLibrary, OOPromptError
from .mapping import Mapper, MappingProposal
from .model import Polarity, PromptObject, normalize_name
from .templates import TemplateLibrary

DEFAULT_BLOCKLIST = (
    "horror", "sorrow", "gore", "terror", "violence", "death",
)

@dataclass
class StructuralConflict:
    kind: str  # include_exclude | sequential_gap | dangling_child
    prop_ids: list[str]
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "prop_ids": list(self.prop_ids),
                "message": self.message}


@dataclass
class SemanticConflict:
    prop_ids: list[str]
    explanation: str
    suggested_fix: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"prop_ids": list(self.prop_ids), "explanation": self.explanation,
                "suggested_fix": self.suggested_fix}


@dataclass
class SafetyFlag:
    prop_id: str | None  # None means object-level
    category: str
    explanation: str

    def to_dict(self) -> dict[str, Any]:
        return {"prop_id": self.prop_id, "category": self.category,
                "explanation": self.explanation}


@dataclass
class SafetyScan:
    flags: list[SafetyFlag] = field(default_factory=list)
    semantic_skipped: bool = False
    skip_reason: str = ""


@dataclass
class AnalysisReport:
    object_id: str
    object_version: int
    structural_conflicts: list[StructuralConflict] = field(default_factory=list)
    semantic_conflicts: list[SemanticConflict] = field(default_factory=list)
    token_estimate: int = 0
    template_similarity: list[tuple[str, float]] = field(default_factory=list)
    safety_flags: list[SafetyFlag] = field(default_factory=list)
    completeness_suggestions: MappingProposal | None = None
    skipped: list[dict[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "object_id": self.object_id,
            "object_version": self.object_version,
            "structural_conflicts": [c.to_dict() for c in self.structural_conflicts],
            "semantic_conflicts": [c.to_dict() for c in self.semantic_conflicts],
            "token_estimate": self.token_estimate,
            "template_similarity": [
                {"template_id": tid, "score": score}
                for tid, score in self.template_similarity
            ],
            "safety_flags": [f.to_dict() for f in self.safety_flags],
            "completeness_suggestions": (
                self.completeness_suggestions.to_dict()
                if self.completeness_suggestions is not None else None
            ),
            "skipped": list(self.skipped),
        }


def detect_structural_conflicts(
    obj: PromptObject, objects: Mapping[str, PromptObject] | None = None
) -> list[StructuralConflict]:
    """Deterministic, LLM-free conflicts: the same normalized name both wanted
    and unwanted, sequential groups whose orders are not 1..k, and child
    references that do not resolve (when a registry is given)."""
    out: list[StructuralConflict] = []
    by_name: dict[str, dict[Polarity, list[str]]] = {}
    for prop in obj.properties:
        key = normalize_name(prop.name)
        by_name.setdefault(key, {}).setdefault(prop.polarity, []).append(prop.id)
    for key, sides in by_name.items():
        if Polarity.INCLUDE in sides and Polarity.EXCLUDE in sides:
            ids = sides[Polarity.INCLUDE] + sides[Polarity.EXCLUDE]
            out.append(StructuralConflict(
                "include_exclude", ids,
                f"{key!r} is both wanted and unwanted",
            ))
    groups: dict[str, list] = {}
    for prop in obj.properties:
        rel = prop.relation
        if rel.is_sequential() and rel.group and isinstance(rel.order, int):
            groups.setdefault(rel.group, []).append(prop)
    for group, props in sorted(groups.items()):
        orders = sorted(p.relation.order for p in props)
        expected = list(range(1, len(props) + 1))
        if orders != expected:
            out.append(StructuralConflict(
                "sequential_gap", [p.id for p in props],
                f"group {group!r} has orders {orders}, expected {expected}",
            ))
    if objects is not None:
        for prop in obj.properties:
            if prop.value.kind == "child" and prop.value.ref not in objects:
                out.append(StructuralConflict(
                    "dangling_child", [prop.id],
                    f"child reference {prop.value.ref} does not resolve",
                ))
    return out


def detect_semantic_conflicts(
    obj: PromptObject, gateway: Gateway
) -> list[SemanticConflict]:
    """Assistant-judged incompatibility pairs; purely advisory."""
    if len(obj.properties) < 2:
        return []
    response = gateway.complete(AssistantRequest(
        role="conflict_checker", input={"object": obj.to_dict()},
    ))
    by_name = {normalize_name(p.name): p.id for p in obj.properties}
    out = []
    for entry in response.output.get("conflicts", []):
        ids = [by_name[normalize_name(n)] for n in entry.get("properties", [])
               if normalize_name(n) in by_name]
        if not ids:
            continue
        out.append(SemanticConflict(
            prop_ids=ids,
            explanation=entry.get("explanation", ""),
            suggested_fix=entry.get("suggested_fix", ""),
        ))
    return out


def estimate_tokens(artifact: DeploymentArtifact) -> int:
    """Heuristic estimate: ceil(characters / 4). Provider-agnostic; for
    natural-language renders it lands within about +/-25% of a whitespace
    token count converted at the usual four tokens per three words."""
    return math.ceil(len(artifact.text) / 4)


def whitespace_token_count(text: str) -> int:
    """Independent check oracle: whitespace-separated tokens."""
    return len(text.split())


def template_similarity(
    obj: PromptObject, library: TemplateLibrary
) -> list[tuple[str, float]]:
    """Jaccard index between the object's include-property name set and each
    template's default name set, descending, ties broken by template id."""
    if len(library) == 0:
        raise EmptyLibrary("template library is empty")
    names = {
        normalize_name(p.name)
        for p in obj.properties
        if p.polarity is Polarity.INCLUDE
    }
    scored = []
    for template in library.all():
        defaults = {normalize_name(d.name) for d in template.defaults}
        scored.append((template.id, jaccard(names, defaults)))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    union = sa | sb
    return len(sa & sb) / len(union)


def _audience_mentions_children(obj: PromptObject) -> str | None:
    for prop in obj.properties:
        if prop.polarity is not Polarity.INCLUDE:
            continue
        if "audience" not in normalize_name(prop.name):
            continue
        text = normalize_name(prop.value.text or "")
        if "child" in text or "kid" in text:
            return prop.id
    return None


def safety_scan(
    obj: PromptObject,
    blocklist: Iterable[str] = DEFAULT_BLOCKLIST,
    gateway: Gateway | None = None,
) -> SafetyScan:
    """Rule tier: blocklisted theme terms co-occurring with a children
    audience. Semantic tier: the safety_checker assistant, when reachable."""
    scan = SafetyScan()
    audience_prop = _audience_mentions_children(obj)
    if audience_prop is not None:
        terms = [normalize_name(t) for t in blocklist if t.strip()]
        for prop in obj.properties:
            haystack = f"{normalize_name(prop.name)} {normalize_name(prop.value.text or '')}"
            words = set(re.findall(r"[a-z0-9]+", haystack))
            hits = sorted(t for t in terms if t in words)
            if hits:
                scan.flags.append(SafetyFlag(
                    prop_id=prop.id,
                    category="dark_theme_for_children",
                    explanation=(
                        f"{', '.join(hits)} clashes with the children audience"
                    ),
                ))
    if gateway is None:
        scan.semantic_skipped = True
        scan.skip_reason = "no assistant gateway"
        return scan
    try:
        response = gateway.complete(AssistantRequest(
            role="safety_checker", input={"object": obj.to_dict()},
        ))
    except OOPromptError as exc:
        scan.semantic_skipped = True
        scan.skip_reason = exc.code
        return scan
    by_name = {normalize_name(p.name): p.id for p in obj.properties}
    for entry in response.output.get("flags", []):
        prop_id = by_name.get(normalize_name(entry.get("property") or ""))
        flag = SafetyFlag(
            prop_id=prop_id,
            category=entry.get("category", "safety"),
            explanation=entry.get("explanation", ""),
        )
        if flag.to_dict() not in [f.to_dict() for f in scan.flags]:
            scan.flags.append(flag)
    return scan


def build_static_report(
    obj: PromptObject,
    library: TemplateLibrary,
    artifact: DeploymentArtifact,
    gateway: Gateway | None = None,
    mapper: Mapper | None = None,
    objects: Mapping[str, PromptObject] | None = None,
    blocklist: Iterable[str] = DEFAULT_BLOCKLIST,
) -> AnalysisReport:
    """Aggregate every analysis; assistant-backed parts fan out concurrently
    and skipped parts are labeled, never silently empty."""
    report = AnalysisReport(object_id=obj.id, object_version=obj.version)
    report.structural_conflicts = detect_structural_conflicts(obj, objects)
    report.token_estimate = estimate_tokens(artifact)
    try:
        report.template_similarity = template_similarity(obj, library)
    except EmptyLibrary:
        report.skipped.append({"section": "template_similarity",
                               "reason": "empty_library"})

    scan = safety_scan(obj, blocklist, gateway=None)
    report.safety_flags = scan.flags

    if gateway is None:
        for section in ("semantic_conflicts", "semantic_safety",
                        "completeness_suggestions"):
            report.skipped.append({"section": section, "reason": "no_provider"})
        return report

    requests = [
        AssistantRequest(role="conflict_checker", input={"object": obj.to_dict()}),
        AssistantRequest(role="safety_checker", input={"object": obj.to_dict()}),
    ]
    results = gateway.fan_out(requests)
    conflict_result = results[0][1]
    safety_result = results[1][1]

    if isinstance(conflict_result, OOPromptError):
        report.skipped.append({"section": "semantic_conflicts",
                               "reason": conflict_result.code})
    else:
        by_name = {normalize_name(p.name): p.id for p in obj.properties}
        for entry in conflict_result.output.get("conflicts", []):
            ids = [by_name[normalize_name(n)] for n in entry.get("properties", [])
                   if normalize_name(n) in by_name]
            if ids:
                report.semantic_conflicts.append(SemanticConflict(
                    prop_ids=ids,
                    explanation=entry.get("explanation", ""),
                    suggested_fix=entry.get("suggested_fix", ""),
                ))

    if isinstance(safety_result, OOPromptError):
        report.skipped.append({"section": "semantic_safety",
                               "reason": safety_result.code})
    else:
        by_name = {normalize_name(p.name): p.id for p in obj.properties}
        seen = [f.to_dict() for f in report.safety_flags]
        for entry in safety_result.output.get("flags", []):
            flag = SafetyFlag(
                prop_id=by_name.get(normalize_name(entry.get("property") or "")),
                category=entry.get("category", "safety"),
                explanation=entry.get("explanation", ""),
            )
            if flag.to_dict() not in seen:
                report.safety_flags.append(flag)
                seen.append(flag.to_dict())

    if mapper is not None and obj.properties:
        try:
            report.completeness_suggestions = mapper.suggest_implicit_properties(obj)
        except OOPromptError as exc:
            report.skipped.append({"section": "completeness_suggestions",
                                   "reason": exc.code})
    else:
        report.skipped.append({"section": "completeness_suggestions",
                               "reason": "no_mapper" if mapper is None else "empty_object"})

    _check_report_references(report, obj)
    return report


def _check_report_references(report: AnalysisReport, obj: PromptObject) -> None:
    known = {p.id for p in obj.properties}
    for conflict in report.structural_conflicts:
        assert set(conflict.prop_ids) <= known
    for conflict in report.semantic_conflicts:
        assert set(conflict.prop_ids) <= known
    for flag in report.safety_flags:
        assert flag.prop_id is None or flag.prop_id in known
