"""Template library: reusable base templates a prompt object can inherit from.

Supports searching by output type / use case / example, selective
instantiation of a subset of defaults, left-biased multi-parent merging, and
deriving new templates from existing objects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    DuplicateTemplateId,
    EmptyLibrary,
    NestedNotTemplatable,
    PreconditionViolation,
    UnknownDefault,
    UnknownTemplate,
)
from .model import (
    PromptObject,
    PropertySpec,
    Polarity,
    Provenance,
    Reference,
    Tier,
    Value,
    normalize_name,
    validate_object,
)

_WORD = re.compile(r"[a-z0-9]+")


@dataclass
class TemplateDefault:
    name: str
    value: str = ""
    description: str = ""
    tier: Tier = Tier.NORMAL

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "description": self.description,
            "tier": self.tier.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TemplateDefault":
        return cls(
            name=data["name"],
            value=data.get("value", ""),
            description=data.get("description", ""),
            tier=Tier(data.get("tier", "normal")),
        )


@dataclass
class Template:
    id: str
    display_name: str
    description: str = ""
    output_type: str = ""
    use_cases: list[str] = field(default_factory=list)
    defaults: list[TemplateDefault] = field(default_factory=list)
    seed: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": 1,
            "id": self.id,
            "display_name": self.display_name,
            "description": self.description,
            "tags": {"output_type": self.output_type, "use_cases": list(self.use_cases)},
            "defaults": [d.to_dict() for d in self.defaults],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Template":
        tags = data.get("tags", {})
        return cls(
            id=data["id"],
            display_name=data.get("display_name", data["id"]),
            description=data.get("description", ""),
            output_type=tags.get("output_type", ""),
            use_cases=list(tags.get("use_cases", [])),
            defaults=[TemplateDefault.from_dict(d) for d in data.get("defaults", [])],
            seed=bool(data.get("seed", False)),
        )

    def default_names(self) -> list[str]:
        return [d.name for d in self.defaults]


def _tokens(text: str) -> frozenset[str]:
    return frozenset(_WORD.findall(text.casefold()))


def _overlap(query: str, facet: str) -> float:
    q, f = _tokens(query), _tokens(facet)
    if not q or not f:
        return 0.0
    union = q | f
    return len(q & f) / len(union)


class TemplateLibrary:
    """Ordered, id-keyed collection of templates."""

    def __init__(self, templates: Iterable[Template] = ()) -> None:
        self._templates: dict[str, Template] = {}
        for t in templates:
            self.add(t)

    def __len__(self) -> int:
        return len(self._templates)

    def __contains__(self, template_id: str) -> bool:
        return template_id in self._templates

    def all(self) -> list[Template]:
        return list(self._templates.values())

    def get(self, template_id: str) -> Template:
        if template_id not in self._templates:
            raise UnknownTemplate(f"no template {template_id!r}", template_id=template_id)
        return self._templates[template_id]

    def add(self, template: Template) -> None:
        if template.id in self._templates:
            raise DuplicateTemplateId(f"template {template.id!r} already exists")
        self._templates[template.id] = template

    def search(
        self, query: str, by: str = "output_type", gateway: Any | None = None
    ) -> list[Template]:
        """Rank templates by normalized keyword overlap on the chosen facet.

        ``by="example"`` first asks the assistant gateway to classify the
        example into an output type, then matches that; without a gateway the
        raw example text is matched directly.
        """
        if not self._templates:
            raise EmptyLibrary("template library is empty")
        if by not in ("output_type", "use_case", "example"):
            raise PreconditionViolation(f"unknown search facet {by!r}")
        effective = query
        if by == "example":
            effective = self._classify_example(query, gateway)
            by = "output_type"
        scored = []
        for template in self._templates.values():
            if by == "output_type":
                facet = " ".join([template.output_type, template.id, template.display_name])
            else:
                facet = " ".join(template.use_cases + [template.description])
            score = _overlap(effective, facet)
            if score > 0.0:
                scored.append((score, template.id, template))
        scored.sort(key=lambda item: (-item[0], item[1]))
        return [t for _, _, t in scored]

    @staticmethod
    def _classify_example(example: str, gateway: Any | None) -> str:
        from .assistants.gateway import AssistantRequest
        from .errors import ProviderError

        if gateway is None:
            return example
        try:
            response = gateway.complete(
                AssistantRequest(role="extractor", input={"raw_text": example})
            )
        except ProviderError:
            return example
        for item in response.output.get("properties", []):
            if normalize_name(item.get("name", "")) == "output type":
                return str(item.get("value", "")) or example
        return example


def instantiate_selective(
    template: Template, selected: Iterable[str] | None = None
) -> list[PropertySpec]:
    """Materialize the chosen defaults (template order), provenance=template."""
    if selected is None:
        wanted = None
    else:
        wanted = {normalize_name(n) for n in selected}
        known = {normalize_name(d.name) for d in template.defaults}
        for key in wanted - known:
            raise UnknownDefault(
                f"template {template.id!r} has no default named {key!r}", name=key,
            )
    specs = []
    for default in template.defaults:
        if wanted is not None and normalize_name(default.name) not in wanted:
            continue
        specs.append(PropertySpec(
            name=default.name,
            value=Value.of_text(default.value),
            tier=default.tier,
            provenance=Provenance.TEMPLATE,
        ))
    return specs


def merge_templates(
    parents: Sequence[Template],
    selections: Sequence[Iterable[str] | None] | None = None,
) -> list[PropertySpec]:
    """Union of the parents' selected defaults; on a name collision the first
    listed parent wins and the losers are recorded as lineage references."""
    if not parents:
        raise PreconditionViolation("merge requires at least one parent template")
    if selections is None:
        selections = [None] * len(parents)
    if len(selections) != len(parents):
        raise PreconditionViolation("one selection per parent required")
    merged: dict[str, PropertySpec] = {}
    order: list[str] = []
    for parent, selection in zip(parents, selections):
        for spec in instantiate_selective(parent, selection):
            key = normalize_name(spec.name)
            if key in merged:
                merged[key].references.append(
                    Reference("lineage", f"template:{parent.id}")
                )
            else:
                merged[key] = spec
                order.append(key)
    return [merged[key] for key in order]


def derive_template(
    obj: PromptObject,
    library: TemplateLibrary,
    template_id: str,
    description: str = "",
    output_type: str = "",
    use_cases: Sequence[str] = (),
) -> Template:
    """Grow the library from a finished object's include-polarity properties."""
    if template_id in library:
        raise DuplicateTemplateId(f"template {template_id!r} already exists")
    violations = validate_object(obj)
    if violations:
        raise PreconditionViolation(
            "object does not validate cleanly: "
            + "; ".join(v.message for v in violations),
        )
    for prop in obj.properties:
        if prop.value.kind == "child":
            raise NestedNotTemplatable(
                f"property {prop.id} is nested; templates are flat",
            )
    defaults = [
        TemplateDefault(name=p.name, value=p.value.text or "", tier=p.tier)
        for p in obj.properties
        if p.polarity is Polarity.INCLUDE
    ]
    template = Template(
        id=template_id,
        display_name=template_id.replace("-", " ").title(),
        description=description,
        output_type=output_type,
        use_cases=list(use_cases),
        defaults=defaults,
    )
    library.add(template)
    return template


def seed_templates() -> list[Template]:
    """Built-in starter library; editorial content, flagged as seed data."""
    return [
        Template(
            id="text-generator",
            display_name="Text Generator",
            description="General-purpose prose generation with tone and audience controls.",
            output_type="text",
            use_cases=["writing assistance", "drafting", "summaries"],
            seed=True,
            defaults=[
                TemplateDefault("output type", "article", "What kind of text to produce"),
                TemplateDefault("topic", "", "Subject matter of the text"),
                TemplateDefault("tone", "neutral", "Voice and register"),
                TemplateDefault("length", "about 500 words", "Target size"),
                TemplateDefault("audience", "general readers", "Who will read it"),
            ],
        ),
        Template(
            id="code-generator",
            display_name="Code Generator",
            description="Source code generation with language and interface constraints.",
            output_type="code",
            use_cases=["coding", "developing", "automation scripts"],
            seed=True,
            defaults=[
                TemplateDefault("programming language", "Python", "Implementation language"),
                TemplateDefault("task", "", "What the code must do"),
                TemplateDefault("input format", "", "Shape of the inputs"),
                TemplateDefault("output format", "", "Shape of the outputs"),
                TemplateDefault("constraints", "standard library only", "Hard limits"),
            ],
        ),
        Template(
            id="story-writer",
            display_name="Story Writer",
            description="Creative fiction with explicit structure and mood controls.",
            output_type="story",
            use_cases=["creative writing", "bedtime stories", "fiction drafts"],
            seed=True,
            defaults=[
                TemplateDefault("genre", "", "Kind of story"),
                TemplateDefault("characters", "", "Who the story follows"),
                TemplateDefault("setting", "", "Where and when it happens"),
                TemplateDefault("tone", "warm", "Emotional register"),
                TemplateDefault("ending", "", "How it should resolve"),
                TemplateDefault("length", "short story", "Target size"),
            ],
        ),
        Template(
            id="trip-planner",
            display_name="Trip Planner",
            description="Itinerary planning for a destination with interests and pacing.",
            output_type="plan",
            use_cases=["trip planning", "travel", "itineraries"],
            seed=True,
            defaults=[
                TemplateDefault("destination", "", "Where the trip goes", Tier.WANTED),
                TemplateDefault("interests", "", "What to prioritize seeing and doing"),
                TemplateDefault("duration", "three days", "How long the trip lasts"),
                TemplateDefault("budget", "moderate", "Spending level"),
                TemplateDefault("schedule", "", "Day-by-day outline"),
                TemplateDefault("daily pace", "relaxed", "How packed each day should be"),
            ],
        ),
        Template(
            id="report-writer",
            display_name="Report Writer",
            description="Status and analysis reports aimed at a specific audience.",
            output_type="report",
            use_cases=["technical reporting", "status updates", "analysis writeups"],
            seed=True,
            defaults=[
                TemplateDefault("subject", "", "What the report covers"),
                TemplateDefault("audience", "manager", "Who receives the report"),
                TemplateDefault("tone", "professional", "Voice and register"),
                TemplateDefault("key points", "", "Findings that must appear"),
                TemplateDefault("format", "sections with headings", "Document structure"),
                TemplateDefault("deadline", "", "When it is needed"),
            ],
        ),
    ]
