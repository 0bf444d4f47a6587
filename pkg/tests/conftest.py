from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `synth` importable

from synth import make_face, write_corpus  # noqa: E402


@pytest.fixture(scope="session")
def face_corpus(tmp_path_factory):
    """10 synthetic (image, landmarks) pairs shared across the session."""
    root = tmp_path_factory.mktemp("corpus")
    images, landmarks = write_corpus(root, count=10)
    return {"root": root, "images": images, "landmarks": landmarks}


@pytest.fixture(scope="session")
def one_face():
    """A single in-memory synthetic face: (image array, landmark dict)."""
    return make_face(seed=4242)


@pytest.fixture()
def fixture_landmarks():
    """The checked-in face_001.json landmark fixture."""
    path = Path(__file__).parent / "data" / "face_001.json"
    return json.loads(path.read_text())


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
