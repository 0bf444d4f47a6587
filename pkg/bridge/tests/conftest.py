from __future__ import annotations

import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest
import requests

sys.path.insert(0, str(Path(__file__).parent))

from facegen import write_face_corpus  # noqa: E402


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="session")
def service_url():
    """The real scoring service, launched through its CLI."""
    port = free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "sbiforge.cli", "serve", "--port", str(port)],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
    )
    url = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if requests.get(f"{url}/healthz", timeout=1).status_code == 200:
                    break
            except requests.ConnectionError:
                time.sleep(0.1)
        else:
            raise RuntimeError("scoring service never became healthy")
        yield url
    finally:
        proc.terminate()
        proc.wait(timeout=10)


@pytest.fixture(scope="session")
def corpus_manifest(tmp_path_factory):
    """A dataset generated through the primary CLI, for ground-truth rows."""
    root = tmp_path_factory.mktemp("bridge_corpus")
    images = root / "images"
    landmarks = root / "landmarks"
    write_face_corpus(images, landmarks, count=4)
    config = {
        "images_dir": str(images),
        "landmarks_dir": str(landmarks),
        "output_dir": str(root / "out"),
        "seed": 31,
        "counts": {"real": 3, "fake": 9},
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config))
    proc = subprocess.run(
        [sys.executable, "-m", "sbiforge.cli", "generate", "--config", str(config_path)],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    manifest = Path(proc.stdout.strip().splitlines()[-1])
    assert manifest.exists()
    return manifest
