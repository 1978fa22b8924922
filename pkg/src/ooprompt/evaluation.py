"""Dynamic analysis: run artifacts through generation models and judge the
outputs against user-defined criteria.

Reports are advisory and immutable; nothing here touches a prompt object.
In mock mode an entire run is byte-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .assistants.gateway import AssistantRequest, Gateway
from .deployment import DeploymentArtifact
from .errors import OOPromptError, PreconditionViolation
from .mapping import Mapper, MappingProposal
from .model import PromptObject

DEFAULT_CRITERIA = [
    {"id": "length-fit", "description": "The output length suits the request.", "weight": 1},
    {"id": "style-fit", "description": "The style matches the stated tone and audience.", "weight": 1},
    {"id": "cohesiveness", "description": "The output is coherent and self-consistent.", "weight": 1},
]


@dataclass
class Criterion:
    id: str
    description: str
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise PreconditionViolation(f"criterion weight must be positive, got {self.weight}")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "description": self.description, "weight": self.weight}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Criterion":
        return cls(
            id=data["id"],
            description=data.get("description", ""),
            weight=float(data.get("weight", 1)),
        )


@dataclass
class ComparisonReport:
    run_id: str
    artifacts: list[dict[str, Any]]
    criteria: list[dict[str, Any]]
    models: list[str]
    verdicts: list[dict[str, Any]] = field(default_factory=list)
    aggregates: list[dict[str, Any]] = field(default_factory=list)
    pairwise: list[dict[str, Any]] = field(default_factory=list)
    ranking: list[str] = field(default_factory=list)
    errors: list[dict[str, Any]] = field(default_factory=list)
    suggestions: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": 1,
            "run_id": self.run_id,
            "artifacts": self.artifacts,
            "criteria": self.criteria,
            "models": self.models,
            "verdicts": self.verdicts,
            "aggregates": self.aggregates,
            "pairwise": self.pairwise,
            "ranking": self.ranking,
            "errors": self.errors,
            "suggestions": self.suggestions,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ComparisonReport":
        return cls(
            run_id=data["run_id"],
            artifacts=list(data.get("artifacts", [])),
            criteria=list(data.get("criteria", [])),
            models=list(data.get("models", [])),
            verdicts=list(data.get("verdicts", [])),
            aggregates=list(data.get("aggregates", [])),
            pairwise=list(data.get("pairwise", [])),
            ranking=list(data.get("ranking", [])),
            errors=list(data.get("errors", [])),
            suggestions=list(data.get("suggestions", [])),
        )


def _artifact_entry(index: int, artifact: DeploymentArtifact) -> dict[str, Any]:
    return {
        "key": f"a{index}:{artifact.key()}",
        "object_id": artifact.object_id,
        "object_version": artifact.object_version,
        "format": artifact.format,
        "variant_key": artifact.variant_key,
    }


def run_comparison(
    gateway: Gateway,
    run_id: str,
    artifacts: Sequence[DeploymentArtifact],
    criteria: Sequence[Criterion],
    models: Sequence[str],
) -> tuple[ComparisonReport, dict[str, str]]:
    """Send every artifact to every model, judge each output per criterion,
    and aggregate weighted scores into a ranking.

    Returns the report plus the raw generation outputs keyed by
    "artifact_key/model" so the caller can archive them alongside the report.
    A failed generation becomes a per-artifact error entry, not an aborted run.
    """
    if len(artifacts) < 2:
        raise PreconditionViolation("comparison needs at least two artifacts")
    if not criteria:
        raise PreconditionViolation("comparison needs at least one criterion")
    if not models:
        raise PreconditionViolation("comparison needs at least one model")

    entries = [_artifact_entry(i, a) for i, a in enumerate(artifacts)]
    report = ComparisonReport(
        run_id=run_id,
        artifacts=entries,
        criteria=[c.to_dict() for c in criteria],
        models=list(models),
    )

    jobs = [
        (entry, artifact, model)
        for entry, artifact in zip(entries, artifacts)
        for model in models
    ]
    requests = [
        AssistantRequest(role="generator", input={"prompt": artifact.text},
                         model_hint=model)
        for _, artifact, model in jobs
    ]
    generations = gateway.fan_out(requests)

    outputs: dict[str, str] = {}
    generated: list[tuple[dict[str, Any], str, str]] = []
    failed_keys: set[str] = set()
    for (entry, _, model), (_, result) in zip(jobs, generations):
        if isinstance(result, OOPromptError):
            report.errors.append({
                "artifact_key": entry["key"],
                "model": model,
                "code": result.code,
                "message": result.message,
            })
            failed_keys.add(entry["key"])
        else:
            text = result.output.get("text", "")
            outputs[f"{entry['key']}/{model}"] = text
            generated.append((entry, model, text))

    judge_jobs = []
    judge_requests = []
    for entry, model, text in generated:
        for criterion in criteria:
            judge_jobs.append((entry, model, criterion))
            judge_requests.append(AssistantRequest(
                role="judge",
                input={
                    "criterion": {"id": criterion.id,
                                  "description": criterion.description},
                    "output": text,
                },
            ))
    judgements = gateway.fan_out(judge_requests) if judge_requests else []

    scores: dict[str, dict[str, list[float]]] = {}
    for (entry, model, criterion), (_, result) in zip(judge_jobs, judgements):
        key = entry["key"]
        if isinstance(result, OOPromptError):
            report.errors.append({
                "artifact_key": key,
                "model": model,
                "code": result.code,
                "message": f"judge failed for {criterion.id}: {result.message}",
            })
            failed_keys.add(key)
            continue
        score = round(float(result.output["score"]), 6)
        report.verdicts.append({
            "artifact_key": key,
            "model": model,
            "criterion_id": criterion.id,
            "score": score,
            "justification": result.output.get("justification", ""),
        })
        suggestion = result.output.get("suggestion", "").strip()
        if suggestion and suggestion not in report.suggestions:
            report.suggestions.append(suggestion)
        scores.setdefault(key, {}).setdefault(criterion.id, []).append(score)

    weight_total = sum(c.weight for c in criteria)
    ranked: list[tuple[float, int, str]] = []
    for index, entry in enumerate(entries):
        key = entry["key"]
        if key in failed_keys or key not in scores:
            continue
        weighted = sum(
            criterion.weight * (sum(values) / len(values))
            for criterion in criteria
            for values in [scores[key].get(criterion.id, [0.0])]
        )
        aggregate = round(weighted / weight_total, 6)
        report.aggregates.append({"artifact_key": key, "score": aggregate})
        ranked.append((aggregate, index, key))

    # Ties break by artifact order (the documented rule).
    ranked.sort(key=lambda item: (-item[0], item[1]))
    report.ranking = [key for _, _, key in ranked]
    for i in range(len(ranked)):
        for j in range(i + 1, len(ranked)):
            a, b = ranked[i], ranked[j]
            first, second = sorted((a, b), key=lambda item: item[1])
            report.pairwise.append({
                "a": first[2],
                "b": second[2],
                "preferred": a[2],
            })
    return report, outputs


def suggest_from_report(
    mapper: Mapper, report: ComparisonReport, obj: PromptObject
) -> MappingProposal:
    """Turn the judges' free-text suggestions into a pending proposal against
    the source object. Never auto-applies."""
    if not report.ranking and not report.errors:
        raise PreconditionViolation("report is not complete")
    feedback = "\n".join(report.suggestions).strip()
    if not feedback:
        return mapper.registrar(obj.id, obj.version, "suggest_from_report", [])
    proposal = mapper.apply_holistic_feedback(obj, feedback)
    proposal.source = "suggest_from_report"
    return proposal
