import socket

import pytest

from ooprompt.workspace import Workspace

_real_connect = socket.socket.connect


def _loopback_only(self, address, *args, **kwargs):
    host = address[0] if isinstance(address, tuple) else address
    if isinstance(host, str) and host not in ("127.0.0.1", "::1", "localhost"):
        raise AssertionError(f"network access attempted to {host!r} during tests")
    return _real_connect(self, address, *args, **kwargs)


@pytest.fixture(autouse=True)
def offline_guard(monkeypatch):
    """The whole suite must pass with zero non-loopback network access."""
    monkeypatch.setattr(socket.socket, "connect", _loopback_only)


@pytest.fixture(autouse=True)
def mock_env(monkeypatch):
    monkeypatch.setenv("OOPROMPT_MOCK", "1")
    monkeypatch.delenv("OOPROMPT_API_KEY", raising=False)


@pytest.fixture
def ws():
    return Workspace.in_memory()


@pytest.fixture
def disk_ws(tmp_path):
    return Workspace.init(tmp_path / "ws")
