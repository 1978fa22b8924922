"""Role payload schemas for assistant requests and responses.

Every assistant role has a strict input shape (validated before dispatch) and
a strict output shape (validated after parsing). Malformed provider output is
surfaced as ``MalformedResponse`` with the raw text preserved, never silently
repaired.

Input shapes
------------
extractor            {"raw_text": str}
implicit_suggester   {"object": <object dict>}
relation_detector    {"object": <object dict>}
candidate_generator  {"name": str, "value": str, "existing": [str]}
example_generator    {"name": str, "value": str, "existing": [str]}
conflict_checker     {"object": <object dict>}
refiner              {"object": <object dict>}
safety_checker       {"object": <object dict>}
generator            {"prompt": str}
judge                {"criterion": {"id": str, "description": str}, "output": str}
feedback_integrator  {"feedback": str, "object": <object dict>}

Output shapes
-------------
extractor            {"properties": [{"name", "value", "span"?: [start, end]}]}
implicit_suggester   {"suggestions": [{"name", "value"?, "rationale"?}]}
relation_detector    {"groups": [{"group", "steps": [property name, ...]}]}
candidate_generator  {"candidates": [str]}
example_generator    {"examples": [str]}
conflict_checker     {"conflicts": [{"properties": [name], "explanation",
                      "suggested_fix"?}]}
refiner              {"updates": [{"name", "new_value", "rationale"?}]}
safety_checker       {"flags": [{"property": str | null, "category",
                      "explanation"}]}
generator            {"text": str}
judge                {"score": float in [0, 1], "justification", "suggestion"?}
feedback_integrator  {"additions": [{"name", "value"?, "rationale"?}],
                      "updates": [{"name", "patch": {...}, "rationale"?}],
                      "removals": [{"name", "rationale"?}]}
"""

from __future__ import annotations

from typing import Any, Callable, Mapping

from ..errors import InvariantViolation, MalformedResponse

ROLES = (
    "extractor",
    "implicit_suggester",
    "relation_detector",
    "candidate_generator",
    "example_generator",
    "conflict_checker",
    "refiner",
    "safety_checker",
    "generator",
    "judge",
    "feedback_integrator",
)


def _need(payload: Mapping[str, Any], key: str, kinds: type | tuple) -> Any:
    if key not in payload:
        raise KeyError(key)
    value = payload[key]
    if not isinstance(value, kinds):
        raise TypeError(f"{key} must be {kinds}")
    return value


def _need_object(payload: Mapping[str, Any]) -> None:
    obj = _need(payload, "object", dict)
    _need(obj, "properties", list)


_INPUT_CHECKS: dict[str, Callable[[Mapping[str, Any]], None]] = {
    "extractor": lambda p: _need(p, "raw_text", str),
    "implicit_suggester": _need_object,
    "relation_detector": _need_object,
    "candidate_generator": lambda p: (_need(p, "name", str), _need(p, "value", str)),
    "example_generator": lambda p: (_need(p, "name", str), _need(p, "value", str)),
    "conflict_checker": _need_object,
    "refiner": _need_object,
    "safety_checker": _need_object,
    "generator": lambda p: _need(p, "prompt", str),
    "judge": lambda p: (_need(p, "criterion", dict), _need(p, "output", str)),
    "feedback_integrator": lambda p: (_need(p, "feedback", str), _need_object(p)),
}


def validate_input(role: str, payload: Mapping[str, Any]) -> None:
    if role not in ROLES:
        raise InvariantViolation(f"unknown assistant role {role!r}")
    try:
        _INPUT_CHECKS[role](payload)
    except (KeyError, TypeError) as exc:
        raise InvariantViolation(f"bad {role} payload: {exc}") from exc


def _check_str_list(items: Any) -> None:
    if not isinstance(items, list) or not all(isinstance(i, str) for i in items):
        raise TypeError("expected a list of strings")


def _check_extractor(out: Mapping[str, Any]) -> None:
    for item in _need(out, "properties", list):
        _need(item, "name", str)
        _need(item, "value", str)
        span = item.get("span")
        if span is not None:
            if (not isinstance(span, list) or len(span) != 2
                    or not all(isinstance(v, int) for v in span)):
                raise TypeError("span must be [start, end]")


def _check_named_items(out: Mapping[str, Any], key: str) -> None:
    for item in _need(out, key, list):
        _need(item, "name", str)


def _check_relations(out: Mapping[str, Any]) -> None:
    for item in _need(out, "groups", list):
        _need(item, "group", str)
        _check_str_list(_need(item, "steps", list))


def _check_conflicts(out: Mapping[str, Any]) -> None:
    for item in _need(out, "conflicts", list):
        _check_str_list(_need(item, "properties", list))
        _need(item, "explanation", str)


def _check_flags(out: Mapping[str, Any]) -> None:
    for item in _need(out, "flags", list):
        _need(item, "category", str)
        _need(item, "explanation", str)


def _check_judge(out: Mapping[str, Any]) -> None:
    score = _need(out, "score", (int, float))
    if not 0.0 <= float(score) <= 1.0:
        raise TypeError(f"score {score} outside [0, 1]")
    _need(out, "justification", str)


def _check_feedback(out: Mapping[str, Any]) -> None:
    _check_named_items(out, "additions")
    _check_named_items(out, "removals")
    for item in _need(out, "updates", list):
        _need(item, "name", str)
        _need(item, "patch", dict)


_OUTPUT_CHECKS: dict[str, Callable[[Mapping[str, Any]], None]] = {
    "extractor": _check_extractor,
    "implicit_suggester": lambda o: _check_named_items(o, "suggestions"),
    "relation_detector": _check_relations,
    "candidate_generator": lambda o: _check_str_list(_need(o, "candidates", list)),
    "example_generator": lambda o: _check_str_list(_need(o, "examples", list)),
    "conflict_checker": _check_conflicts,
    "refiner": lambda o: _check_named_items(o, "updates"),
    "safety_checker": _check_flags,
    "generator": lambda o: _need(o, "text", str),
    "judge": _check_judge,
    "feedback_integrator": _check_feedback,
}


def validate_output(role: str, output: Any, raw_text: str = "") -> dict[str, Any]:
    """Return the output if it matches the role's response schema."""
    if not isinstance(output, dict):
        raise MalformedResponse(f"{role} output is not a JSON object", raw_text)
    try:
        _OUTPUT_CHECKS[role](output)
    except (KeyError, TypeError) as exc:
        raise MalformedResponse(f"bad {role} response: {exc}", raw_text) from exc
    return output
