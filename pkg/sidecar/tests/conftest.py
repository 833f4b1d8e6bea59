import socket
import threading
import time

import pytest
import uvicorn
from starlette.testclient import TestClient

from hmrag_sidecar.app import create_app
from hmrag_sidecar.config import SidecarConfig


@pytest.fixture
def client():
    return TestClient(create_app(SidecarConfig(seed=0)))


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="session")
def live_server():
    """Real uvicorn server in a daemon thread, for clients that speak actual HTTP."""
    port = free_port()
    config = uvicorn.Config(
        create_app(SidecarConfig(seed=0)), host="127.0.0.1", port=port, log_level="error"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("sidecar failed to start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
