"""Batch landmark extraction: wrap an external 81-point face landmark
detector and emit one JSON file per image in the generator's landmark file
format ``{"image", "width", "height", "points": [[x, y] x 81]}``.

The default detector is dlib with an 81-point shape predictor model; any
callable taking an RGB uint8 array and returning an (81, 2) point array
(or None when no face is found) can be plugged in via ``module:attr``.
"""
from __future__ import annotations

import argparse
import importlib
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

MODEL_ENV = "SBI_LANDMARK_MODEL"
POINT_COUNT = 81

DLIB_INSTALL_HINT = (
    "the default detector needs the optional 'dlib' dependency and an "
    "81-point shape predictor model:\n"
    "  pip install dlib\n"
    f"  export {MODEL_ENV}=/path/to/shape_predictor_81_face_landmarks.dat\n"
    "or pass --detector module:attr to use your own detector callable"
)


class DetectorError(RuntimeError):
    pass


def _dlib_detector(model_path: str | None):
    try:
        import dlib
    except ImportError as exc:
        raise DetectorError(f"cannot import dlib: {exc}\n{DLIB_INSTALL_HINT}") from exc
    model_path = model_path or os.environ.get(MODEL_ENV)
    if not model_path or not os.path.exists(model_path):
        raise DetectorError(f"landmark model file not found: {model_path!r}\n{DLIB_INSTALL_HINT}")
    face_detector = dlib.get_frontal_face_detector()
    predictor = dlib.shape_predictor(model_path)

    def detect(image: np.ndarray):
        faces = face_detector(image, 1)
        if not faces:
            return None
        face = max(faces, key=lambda r: r.width() * r.height())
        shape = predictor(image, face)
        points = np.array([[p.x, p.y] for p in shape.parts()], dtype=np.float64)
        if points.shape != (POINT_COUNT, 2):
            raise DetectorError(
                f"model produced {points.shape[0]} points, need {POINT_COUNT}; "
                "is this the 81-point predictor?"
            )
        return points

    return detect


def load_detector(spec: str = "dlib", model_path: str | None = None):
    if spec == "dlib":
        return _dlib_detector(model_path)
    if ":" in spec:
        module_name, attr = spec.split(":", 1)
        try:
            module = importlib.import_module(module_name)
            detector = getattr(module, attr)
        except (ImportError, AttributeError) as exc:
            raise DetectorError(f"cannot load detector {spec!r}: {exc}") from exc
        if not callable(detector):
            raise DetectorError(f"{spec!r} is not callable")
        return detector
    raise DetectorError(f"unknown detector spec {spec!r}; use 'dlib' or 'module:attr'")


def extract_landmarks(images_dir, output_dir, detector) -> dict:
    """Run the detector over every PNG/JPEG; write landmark files and a skip
    report. Returns {"written": [names], "skipped": [names]}."""
    images_dir = Path(images_dir)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    written, skipped = [], []
    paths = sorted(
        p for p in images_dir.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not paths:
        raise DetectorError(f"no images found in {images_dir}")
    for path in paths:
        image = np.asarray(Image.open(path).convert("RGB"))
        height, width = image.shape[0], image.shape[1]
        points = detector(image)
        if points is None:
            skipped.append(path.name)
            continue
        points = np.asarray(points, dtype=np.float64)
        if points.shape != (POINT_COUNT, 2):
            raise DetectorError(f"{path.name}: detector returned shape {points.shape}")
        # the landmark format requires coordinates inside [0, dim)
        points[:, 0] = np.clip(points[:, 0], 0.0, width - 1.0)
        points[:, 1] = np.clip(points[:, 1], 0.0, height - 1.0)
        doc = {
            "image": path.name,
            "width": width,
            "height": height,
            "points": [[float(x), float(y)] for x, y in points],
        }
        (output_dir / f"{path.stem}.json").write_text(json.dumps(doc))
        written.append(path.name)

    report = {"images_dir": str(images_dir), "written": written, "skipped": skipped}
    (output_dir / "skip_report.json").write_text(json.dumps(report, indent=2))
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sbi-landmarks",
        description="Detect 81-point landmarks for every image in a directory "
        "and write one landmark JSON per detected face.",
    )
    parser.add_argument("--images", required=True, help="directory of face images")
    parser.add_argument("--out", required=True, help="output directory for landmark files")
    parser.add_argument("--detector", default="dlib", help="'dlib' or 'module:attr'")
    parser.add_argument("--model", default=None, help=f"predictor model path (default ${MODEL_ENV})")
    args = parser.parse_args(argv)

    try:
        detector = load_detector(args.detector, args.model)
        report = extract_landmarks(args.images, args.out, detector)
    except DetectorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"{len(report['written'])} landmark files written to {args.out}, "
        f"{len(report['skipped'])} images skipped"
    )
    if report["skipped"]:
        print("skipped (no face):", ", ".join(report["skipped"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
