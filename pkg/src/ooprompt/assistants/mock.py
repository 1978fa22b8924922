"""Deterministic offline assistant provider.

The mock is a pure function of (role, digest of the request input): the input
is reduced to a role-specific projection (so incidental payload details do not
invalidate fixtures), canonically serialized, and hashed. Fixture files under
``fixtures/assistants/<role>/`` are matched by that digest; a fixture may
declare its projection in a ``match`` block instead of encoding the digest in
its filename. Unknown digests fall back to ``default.json`` for the role, then
to a built-in synthesized response, so the mock is total.

Fixture file format::

    {
      "match": {...projection...},   # optional; else filename stem = digest
      "output": {...role response...},
      "delay_ms": 150,               # optional simulated latency
      "error": "timeout"             # optional fault injection; also
    }                                #   "provider_unavailable" | "malformed"
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from pathlib import Path
from typing import Any, Mapping

from ..errors import MalformedResponse, ProviderUnavailable, Timeout
from . import schemas
from .gateway_types import AssistantRequest, AssistantResponse


def canonical_payload(data: Any) -> str:
    return json.dumps(data, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _object_names(payload: Mapping[str, Any]) -> list[str]:
    return [p.get("name", "") for p in payload.get("object", {}).get("properties", [])]


def _object_pairs(payload: Mapping[str, Any]) -> list[list[str]]:
    pairs = []
    for prop in payload.get("object", {}).get("properties", []):
        value = prop.get("value", {})
        text = value.get("text", "") if isinstance(value, Mapping) else str(value)
        pairs.append([prop.get("name", ""), text or ""])
    return sorted(pairs)


def project(role: str, payload: Mapping[str, Any]) -> dict[str, Any]:
    """Digest-relevant projection of a role input."""
    if role == "extractor":
        return {"raw_text": payload.get("raw_text", "")}
    if role in ("implicit_suggester", "relation_detector"):
        return {"properties": _object_names(payload)}
    if role in ("candidate_generator", "example_generator"):
        return {"name": payload.get("name", ""), "value": payload.get("value", "")}
    if role in ("conflict_checker", "safety_checker", "refiner"):
        return {"pairs": _object_pairs(payload)}
    if role == "generator":
        return {"prompt": payload.get("prompt", "")}
    if role == "judge":
        criterion = payload.get("criterion", {})
        return {"criterion": criterion.get("id", ""), "output": payload.get("output", "")}
    if role == "feedback_integrator":
        return {"feedback": payload.get("feedback", ""), "properties": _object_names(payload)}
    return dict(payload)


def digest_of(role: str, payload: Mapping[str, Any]) -> str:
    raw = canonical_payload(project(role, payload))
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:12]


def _estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


def _fallback_output(role: str, payload: Mapping[str, Any], digest: str) -> dict[str, Any]:
    if role == "extractor":
        raw = payload.get("raw_text", "")
        head = raw.strip()[:80]
        return {"properties": [{"name": "goal", "value": head, "span": [0, len(head)]}]}
    if role == "implicit_suggester":
        return {"suggestions": []}
    if role == "relation_detector":
        return {"groups": []}
    if role == "candidate_generator":
        value = payload.get("value", "")
        return {"candidates": [f"{value} (rephrased)", f"more specifically: {value}"]}
    if role == "example_generator":
        return {"examples": []}
    if role == "conflict_checker":
        return {"conflicts": []}
    if role == "refiner":
        return {"updates": []}
    if role == "safety_checker":
        return {"flags": []}
    if role == "generator":
        return {"text": f"[mock {digest}] {payload.get('prompt', '')[:160]}"}
    if role == "judge":
        score = round((int(digest, 16) % 9001) / 9000, 4)
        return {
            "score": score,
            "justification": f"deterministic mock verdict {digest}",
            "suggestion": "",
        }
    if role == "feedback_integrator":
        return {"additions": [], "updates": [], "removals": []}
    return {}


class MockProvider:
    """Fixture-backed provider; responses are byte-stable across runs."""

    def __init__(self, fixture_dirs: list[Path] | None = None) -> None:
        self.fixture_dirs = [Path(d) for d in (fixture_dirs or [])]
        self._cache: dict[str, dict[str, dict[str, Any]]] = {}

    def _load_role(self, role: str) -> dict[str, dict[str, Any]]:
        if role in self._cache:
            return self._cache[role]
        from .seed_fixtures import SEED_FIXTURES

        table: dict[str, dict[str, Any]] = {}
        for entry in SEED_FIXTURES:
            if entry["role"] != role:
                continue
            raw = canonical_payload(entry["match"])
            key = hashlib.sha256(raw.encode("utf-8")).hexdigest()[:12]
            table[key] = {"output": entry["output"]}
        # Later dirs must not shadow earlier ones: first hit wins.
        for root in reversed(self.fixture_dirs):
            role_dir = root / role
            if not role_dir.is_dir():
                continue
            for path in sorted(role_dir.glob("*.json")):
                try:
                    doc = json.loads(path.read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError):
                    continue
                if path.stem == "default":
                    table["default"] = doc
                    continue
                if isinstance(doc, Mapping) and "match" in doc:
                    raw = canonical_payload(doc["match"])
                    key = hashlib.sha256(raw.encode("utf-8")).hexdigest()[:12]
                else:
                    key = path.stem
                table[key] = doc
        self._cache[role] = table
        return table

    def invalidate(self) -> None:
        self._cache.clear()

    def _resolve(self, role: str, digest: str, payload: Mapping[str, Any]) -> dict[str, Any]:
        table = self._load_role(role)
        if digest in table:
            return table[digest]
        if "default" in table:
            return table["default"]
        return {"output": _fallback_output(role, payload, digest)}

    def complete(self, request: AssistantRequest) -> AssistantResponse:
        digest = digest_of(request.role, request.input)
        doc = self._resolve(request.role, digest, request.input)
        if isinstance(doc, Mapping) and "output" in doc:
            output = doc["output"]
            delay_ms = int(doc.get("delay_ms", 0))
            fault = doc.get("error")
        else:
            output, delay_ms, fault = doc, 0, None
        if delay_ms:
            time.sleep(delay_ms / 1000.0)
        if fault == "timeout":
            raise Timeout(f"injected timeout for {request.role}/{digest}")
        if fault == "provider_unavailable":
            raise ProviderUnavailable(f"injected outage for {request.role}/{digest}")
        if fault == "malformed":
            raw = doc.get("raw_text", canonical_payload(output))
            raise MalformedResponse(f"injected malformed response for {request.role}", raw)
        raw_text = canonical_payload(output)
        schemas.validate_output(request.role, output, raw_text)
        return AssistantResponse(
            role=request.role,
            output=json.loads(raw_text),
            raw_text=raw_text,
            usage={
                "input_tokens": _estimate_tokens(canonical_payload(request.input)),
                "output_tokens": _estimate_tokens(raw_text),
            },
            latency_ms=float(delay_ms),
        )


def write_fixture(
    root: Path,
    role: str,
    name: str,
    output: Mapping[str, Any],
    match: Mapping[str, Any] | None = None,
    delay_ms: int = 0,
    error: str | None = None,
) -> Path:
    """Write one fixture file; used by workspace seeding and by tests."""
    role_dir = Path(root) / role
    role_dir.mkdir(parents=True, exist_ok=True)
    doc: dict[str, Any] = {}
    if match is not None:
        doc["match"] = dict(match)
    doc["output"] = dict(output)
    if delay_ms:
        doc["delay_ms"] = delay_ms
    if error:
        doc["error"] = error
    path = role_dir / f"{name}.json"
    path.write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    return path
