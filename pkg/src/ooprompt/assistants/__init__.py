"""Pluggable LLM assistant access: role schemas, gateway, and the offline mock."""

from .gateway import (
    AssistantRequest,
    AssistantResponse,
    Gateway,
    HttpProvider,
    gateway_from_env,
)
from .mock import MockProvider

__all__ = [
    "AssistantRequest",
    "AssistantResponse",
    "Gateway",
    "HttpProvider",
    "MockProvider",
    "gateway_from_env",
]
