"""Self-contained test fixtures for the bridge: a drawn synthetic face and
a deterministic stub landmark detector. Kept independent of the primary
package; only the documented landmark file layout (dlib-style 81 points)
is shared knowledge."""
from __future__ import annotations

import math

import numpy as np
from PIL import Image


def face_geometry(width: int, height: int) -> np.ndarray:
    """Canonical centered 81-point layout for a given canvas size:
    jaw 0-16, brows 17-26, nose 27-35, eyes 36-47, mouth 48-67,
    forehead arc 68-80."""
    cx, cy = width * 0.5, height * 0.55
    a, b = width * 0.28, height * 0.33
    eye_dx, eye_y = 0.12 * width, cy - 0.08 * height
    eye_rw, eye_rh = 0.05 * width, 0.032 * height
    brow_y = eye_y - 0.07 * height
    mouth_y = cy + 0.18 * height
    mouth_rw, mouth_rh = 0.0875 * width, 0.0375 * height

    pts = []
    for i in range(17):
        theta = math.pi - i * math.pi / 16.0
        pts.append((cx + a * math.cos(theta), cy + b * math.sin(theta)))
    for side in (-1, 1):
        x0 = cx + side * eye_dx
        for i in range(5):
            t = i / 4.0
            pts.append((x0 + (t - 0.5) * eye_rw * 2.8, brow_y - 3.0 * math.sin(math.pi * t)))
    tip_y = cy + 0.10 * b
    for i in range(4):
        pts.append((cx, eye_y + (tip_y - eye_y) * (i + 1) / 5.0))
    for i in range(5):
        pts.append((cx + (i - 2) * 4.0, tip_y + 3.0 - abs(i - 2) * 0.8))
    for side in (-1, 1):
        ex = cx + side * eye_dx
        for k in range(6):
            ang = k * math.pi / 3.0
            pts.append((ex + eye_rw * math.cos(ang), eye_y + eye_rh * math.sin(ang)))
    for k in range(12):
        ang = k * math.pi / 6.0
        pts.append((cx + mouth_rw * math.cos(ang), mouth_y + mouth_rh * math.sin(ang)))
    for k in range(8):
        ang = k * math.pi / 4.0
        pts.append((cx + mouth_rw * 0.6 * math.cos(ang), mouth_y + mouth_rh * 0.5 * math.sin(ang)))
    for i in range(13):
        theta = math.pi + (i + 1) * math.pi / 14.0
        pts.append((cx + a * math.cos(theta), cy + b * math.sin(theta)))
    points = np.array(pts)
    points[:, 0] = np.clip(points[:, 0], 0, width - 1)
    points[:, 1] = np.clip(points[:, 1], 0, height - 1)
    return points


def draw_face(size: int = 160, seed: int = 0) -> np.ndarray:
    """uint8 RGB face image whose features sit on face_geometry()."""
    rng = np.random.default_rng(seed)
    w = h = size
    cx, cy = w * 0.5, h * 0.55
    a, b = w * 0.28, h * 0.33
    eye_dx, eye_y = 0.12 * w, cy - 0.08 * h
    mouth_y = cy + 0.18 * h

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.empty((h, w, 3))
    img[:] = np.array([0.38, 0.42, 0.5]) * (1 - 0.25 * (yy / h))[..., None]

    face = ((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2 <= 1.0
    rho = np.sqrt(((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2)
    img[face] = (np.array([0.84, 0.66, 0.5]) * (1 - 0.2 * rho)[..., None])[face]

    for ex in (cx - eye_dx, cx + eye_dx):
        eye = ((xx - ex) / (0.05 * w)) ** 2 + ((yy - eye_y) / (0.032 * h)) ** 2 <= 1.0
        img[eye] = np.array([0.3, 0.22, 0.15])
    mouth = ((xx - cx) / (0.0875 * w)) ** 2 + ((yy - mouth_y) / (0.0375 * h)) ** 2 <= 1.0
    img[mouth] = np.array([0.6, 0.28, 0.3])

    img += rng.normal(0, 0.02, img.shape)
    return (np.clip(img, 0, 1) * 255).round().astype(np.uint8)


def stub_detector(image: np.ndarray):
    """Deterministic detector: canonical geometry for any textured image,
    no face on (near-)blank canvases."""
    if image.std() < 5.0:
        return None
    h, w = image.shape[0], image.shape[1]
    return face_geometry(w, h)


def write_face_corpus(images_dir, landmarks_dir, count: int, size: int = 160):
    """PNG images plus landmark JSONs in the documented file format."""
    import json

    images_dir.mkdir(parents=True, exist_ok=True)
    landmarks_dir.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        name = f"bface_{i:03d}"
        img = draw_face(size=size, seed=9000 + i)
        Image.fromarray(img, "RGB").save(images_dir / f"{name}.png")
        points = face_geometry(size, size)
        doc = {
            "image": f"{name}.png",
            "width": size,
            "height": size,
            "points": [[float(x), float(y)] for x, y in points],
        }
        (landmarks_dir / f"{name}.json").write_text(json.dumps(doc))
