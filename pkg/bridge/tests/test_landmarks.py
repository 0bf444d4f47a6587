from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from facegen import draw_face, stub_detector
from sbibridge.landmarks_cli import DetectorError, extract_landmarks, load_detector
from sbibridge.landmarks_cli import main as landmarks_main


@pytest.fixture()
def image_dir(tmp_path):
    images = tmp_path / "imgs"
    images.mkdir()
    for i in range(3):
        Image.fromarray(draw_face(seed=100 + i), "RGB").save(images / f"p{i}.png")
    Image.fromarray(np.full((160, 160, 3), 128, dtype=np.uint8), "RGB").save(
        images / "blank.png"
    )
    return images


def test_extract_writes_valid_landmark_files(image_dir, tmp_path):
    out = tmp_path / "lmk"
    report = extract_landmarks(image_dir, out, stub_detector)
    assert sorted(report["written"]) == ["p0.png", "p1.png", "p2.png"]
    assert report["skipped"] == ["blank.png"]
    for stem in ("p0", "p1", "p2"):
        doc = json.loads((out / f"{stem}.json").read_text())
        assert doc["image"] == f"{stem}.png"
        assert doc["width"] == 160 and doc["height"] == 160
        points = np.array(doc["points"])
        assert points.shape == (81, 2)
        assert (points[:, 0] >= 0).all() and (points[:, 0] < doc["width"]).all()
        assert (points[:, 1] >= 0).all() and (points[:, 1] < doc["height"]).all()
    assert not (out / "blank.json").exists()


def test_skip_report_lists_blank_image(image_dir, tmp_path):
    out = tmp_path / "lmk"
    extract_landmarks(image_dir, out, stub_detector)
    report = json.loads((out / "skip_report.json").read_text())
    assert report["skipped"] == ["blank.png"]


def test_rerun_is_byte_identical(image_dir, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    extract_landmarks(image_dir, out1, stub_detector)
    extract_landmarks(image_dir, out2, stub_detector)
    for path1 in sorted(out1.iterdir()):
        path2 = out2 / path1.name
        assert path1.read_bytes() == path2.read_bytes()


def test_missing_dlib_message_is_actionable():
    with pytest.raises(DetectorError) as err:
        load_detector("dlib")  # dlib is not installed in this environment
    message = str(err.value)
    assert "pip install dlib" in message
    assert "SBI_LANDMARK_MODEL" in message


def test_module_attr_detector_loading():
    detector = load_detector("facegen:stub_detector")
    assert callable(detector)
    with pytest.raises(DetectorError):
        load_detector("facegen:does_not_exist")
    with pytest.raises(DetectorError):
        load_detector("nonsense")


def test_cli_and_primary_consume_the_output(image_dir, tmp_path):
    out = tmp_path / "lmk"
    code = landmarks_main(
        ["--images", str(image_dir), "--out", str(out), "--detector", "facegen:stub_detector"]
    )
    assert code == 0

    # the emitted files must satisfy the generator's landmark input contract
    config = {
        "images_dir": str(image_dir),
        "landmarks_dir": str(out),
        "output_dir": str(tmp_path / "gen"),
        "seed": 5,
        "counts": {"real": 1, "fake": 3},
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))
    proc = subprocess.run(
        [sys.executable, "-m", "sbiforge.cli", "generate", "--config", str(config_path)],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    manifest = proc.stdout.strip().splitlines()[-1]
    check = subprocess.run(
        [sys.executable, "-m", "sbiforge.cli", "validate", manifest],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert check.returncode == 0, check.stdout + check.stderr
