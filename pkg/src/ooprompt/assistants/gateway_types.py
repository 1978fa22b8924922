"""Request/response records shared by the gateway and its providers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..errors import InvariantViolation


@dataclass
class AssistantRequest:
    role: str
    input: dict[str, Any]
    temperature: float = 0.0
    model_hint: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise InvariantViolation(
                f"temperature {self.temperature} outside [0, 2]",
            )


@dataclass
class AssistantResponse:
    role: str
    output: dict[str, Any]
    raw_text: str
    usage: dict[str, int] | None = None
    latency_ms: float = 0.0
    model: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "role": self.role,
            "output": self.output,
            "raw_text": self.raw_text,
            "usage": self.usage,
            "latency_ms": self.latency_ms,
            "model": self.model,
        }
