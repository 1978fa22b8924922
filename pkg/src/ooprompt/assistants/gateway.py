"""Assistant gateway: role-validated dispatch plus a parallel fan-out primitive.

The gateway never touches prompt objects; every assistant result is returned
to the caller as data and applied only through an explicit mutation elsewhere.

Environment:
    OOPROMPT_MOCK=1      force the deterministic offline mock
    OOPROMPT_API_KEY     bearer token for the live chat-completion endpoint
    OOPROMPT_BASE_URL    endpoint URL (default https://api.openai.com/v1/chat/completions)
    OOPROMPT_MODEL       default model name
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Protocol

from ..errors import (
    MalformedResponse,
    OOPromptError,
    ProviderUnavailable,
    Timeout,
)
from . import schemas
from .gateway_types import AssistantRequest, AssistantResponse

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-4o-mini"
_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)\n\s*```", re.DOTALL)

_SYSTEM_PROMPTS = {
    "extractor": (
        "Extract the discrete intent properties stated in the user's raw text. "
        "Reply with JSON: {\"properties\": [{\"name\", \"value\", \"span\": [start, end]}]}."
    ),
    "implicit_suggester": (
        "Given a structured prompt object, suggest relevant intent properties the "
        "user has not mentioned. Reply with JSON: {\"suggestions\": "
        "[{\"name\", \"value\", \"rationale\"}]}."
    ),
    "relation_detector": (
        "Identify which properties of the prompt object are ordered steps. Reply "
        "with JSON: {\"groups\": [{\"group\", \"steps\": [property names in order]}]}."
    ),
    "candidate_generator": (
        "Propose alternative phrasings for the given property value. Reply with "
        "JSON: {\"candidates\": [string]}."
    ),
    "example_generator": (
        "Propose concrete examples for the given property value. Reply with "
        "JSON: {\"examples\": [string]}."
    ),
    "conflict_checker": (
        "Find pairs of properties with incompatible values. Reply with JSON: "
        "{\"conflicts\": [{\"properties\": [names], \"explanation\", \"suggested_fix\"}]}."
    ),
    "refiner": (
        "Suggest clearer wording for property values. Reply with JSON: "
        "{\"updates\": [{\"name\", \"new_value\", \"rationale\"}]}."
    ),
    "safety_checker": (
        "Flag properties that raise safety concerns for the stated audience. Reply "
        "with JSON: {\"flags\": [{\"property\", \"category\", \"explanation\"}]}."
    ),
    "generator": "Execute the prompt and return only the requested content.",
    "judge": (
        "Score the output against the criterion. Reply with JSON: {\"score\": "
        "number in [0,1], \"justification\", \"suggestion\"}."
    ),
    "feedback_integrator": (
        "Turn the holistic feedback into property edits. Reply with JSON: "
        "{\"additions\": [...], \"updates\": [{\"name\", \"patch\"}], \"removals\": [...]}."
    ),
}


class Provider(Protocol):
    def complete(self, request: AssistantRequest) -> AssistantResponse: ...


class HttpProvider:
    """Chat-completion-style HTTP provider with bearer-token auth.

    One retry on transport failure; none on malformed content.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str,
        model: str = DEFAULT_MODEL,
        timeout: float = 60.0,
        client: "httpx.Client | None" = None,
    ) -> None:
        self.base_url = base_url
        self.api_key = api_key
        self.model = model
        self.timeout = timeout
        self._client = client

    def _post(self, body: dict) -> str:
        import httpx

        poster = self._client.post if self._client is not None else httpx.post
        response = poster(
            self.base_url,
            json=body,
            headers={"Authorization": f"Bearer {self.api_key}"},
            timeout=self.timeout,
        )
        response.raise_for_status()
        payload = response.json()
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(
                f"unexpected completion shape: {exc}", json.dumps(payload)[:2000],
            ) from exc

    def complete(self, request: AssistantRequest) -> AssistantResponse:
        import httpx

        body = {
            "model": request.model_hint or self.model,
            "messages": [
                {"role": "system", "content": _SYSTEM_PROMPTS[request.role]},
                {"role": "user", "content": json.dumps(request.input, ensure_ascii=False)},
            ],
            "temperature": request.temperature,
        }
        started = time.monotonic()
        attempts = 0
        while True:
            attempts += 1
            try:
                text = self._post(body)
                break
            except httpx.TimeoutException as exc:
                if attempts >= 2:
                    raise Timeout(f"{request.role} request timed out") from exc
            except httpx.HTTPError as exc:
                if attempts >= 2:
                    raise ProviderUnavailable(
                        f"{request.role} request failed: {exc}",
                    ) from exc
            logger.warning("retrying %s request after transport failure", request.role)
        latency_ms = (time.monotonic() - started) * 1000.0
        output = _parse_json_reply(request.role, text)
        return AssistantResponse(
            role=request.role,
            output=output,
            raw_text=text,
            usage=None,
            latency_ms=latency_ms,
            model=body["model"],
        )


def _parse_json_reply(role: str, text: str) -> dict:
    candidate = text
    fenced = _FENCE.search(text)
    if fenced:
        candidate = fenced.group(1)
    try:
        output = json.loads(candidate)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"{role} reply is not JSON: {exc}", text) from exc
    return schemas.validate_output(role, output, text)


class Gateway:
    """Validated access to a provider; reentrant and thread-safe."""

    def __init__(self, provider: Provider | None, mode: str = "unconfigured") -> None:
        self.provider = provider
        self.mode = mode

    def complete(self, request: AssistantRequest) -> AssistantResponse:
        schemas.validate_input(request.role, request.input)
        if self.provider is None:
            raise ProviderUnavailable(
                "no assistant provider configured (set OOPROMPT_MOCK=1 or OOPROMPT_API_KEY)",
            )
        return self.provider.complete(request)

    def fan_out(
        self, requests: list[AssistantRequest]
    ) -> list[tuple[int, AssistantResponse | OOPromptError]]:
        """Dispatch all requests concurrently; results come back in request
        order and one failure never cancels the rest."""
        if not requests:
            raise OOPromptError("fan_out requires at least one request")
        if len(requests) == 1:
            return [(0, self._guarded(requests[0]))]
        with ThreadPoolExecutor(max_workers=min(len(requests), 16)) as pool:
            futures = [pool.submit(self._guarded, req) for req in requests]
            return [(i, f.result()) for i, f in enumerate(futures)]

    def _guarded(self, request: AssistantRequest) -> AssistantResponse | OOPromptError:
        try:
            return self.complete(request)
        except OOPromptError as exc:
            return exc


def mock_gateway(fixture_dirs: list[Path] | None = None) -> Gateway:
    from .mock import MockProvider

    return Gateway(MockProvider(fixture_dirs or []), mode="mock")


def gateway_from_env(fixture_dirs: list[Path] | None = None) -> Gateway:
    """Build the gateway the environment asks for; credentials read once."""
    if os.environ.get("OOPROMPT_MOCK") == "1":
        return mock_gateway(fixture_dirs)
    api_key = os.environ.get("OOPROMPT_API_KEY")
    if api_key:
        return Gateway(
            HttpProvider(
                base_url=os.environ.get("OOPROMPT_BASE_URL", DEFAULT_BASE_URL),
                api_key=api_key,
                model=os.environ.get("OOPROMPT_MODEL", DEFAULT_MODEL),
            ),
            mode="live",
        )
    return Gateway(None, mode="unconfigured")
