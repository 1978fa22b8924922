"""Canonical JSON serialization and the response envelope.

The CLI's ``--json`` output and the HTTP service's bodies go through the same
functions so both surfaces stay byte-compatible for reads.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import OOPromptError


def canonical_dumps(data: Any) -> str:
    """Deterministic pretty JSON: fixed key order comes from the presenters,
    never from sorting."""
    return json.dumps(data, ensure_ascii=False, indent=2)


def envelope_ok(data: Any) -> dict[str, Any]:
    return {"ok": True, "data": data}


def envelope_error(exc: OOPromptError) -> dict[str, Any]:
    return {
        "ok": False,
        "error": {
            "code": exc.code,
            "message": exc.message,
            "details": _plain(exc.details),
        },
    }


def _plain(data: Any) -> Any:
    try:
        json.dumps(data)
        return data
    except (TypeError, ValueError):
        return {k: str(v) for k, v in data.items()} if isinstance(data, dict) else str(data)
