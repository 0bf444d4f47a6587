"""Synthetic face fixtures: a procedurally drawn face image plus a matching
81-point landmark set, deterministic per seed. Good enough texture (skin
gradient, features, noise) for every difference measure to have signal."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

SIZE = 160


def _ellipse(xx, yy, cx, cy, rx, ry):
    return ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0


def make_face(seed: int, size: int = SIZE):
    """Returns (image float array (size, size, 3), landmark dict)."""
    rng = np.random.default_rng(seed)
    w = h = size
    cx = w * 0.5 + rng.uniform(-3, 3)
    cy = h * 0.55 + rng.uniform(-3, 3)
    a = w * 0.28 * rng.uniform(0.95, 1.05)
    b = h * 0.33 * rng.uniform(0.95, 1.05)

    eye_dx = 0.12 * w
    eye_y = cy - 0.08 * h
    eye_rw, eye_rh = 0.05 * w, 0.032 * h
    brow_y = eye_y - 0.07 * h
    mouth_y = cy + 0.18 * h
    mouth_rw, mouth_rh = 0.0875 * w, 0.0375 * h

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.empty((h, w, 3))
    grad = (yy / h)[..., None]
    img[:] = np.array([0.35, 0.4, 0.5]) * (1 - 0.3 * grad) + 0.1

    skin = np.array([0.85, 0.65, 0.52]) * rng.uniform(0.92, 1.05)
    face = _ellipse(xx, yy, cx, cy, a, b)
    rho = np.sqrt(((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2)
    shade = np.clip(1.0 - 0.25 * rho, 0, 1)[..., None]
    img[face] = (skin * shade)[face]

    for ex in (cx - eye_dx, cx + eye_dx):
        sclera = _ellipse(xx, yy, ex, eye_y, eye_rw * 1.2, eye_rh * 1.2)
        img[sclera] = np.array([0.92, 0.92, 0.88])
        iris = _ellipse(xx, yy, ex, eye_y, eye_rw * 0.55, eye_rh)
        img[iris] = np.array([0.25, 0.18, 0.12])

    for bx in (cx - eye_dx, cx + eye_dx):
        band = (np.abs(yy - brow_y) < 2.0) & (np.abs(xx - bx) < eye_rw * 1.4)
        img[band] = np.array([0.32, 0.24, 0.16])

    ridge = (np.abs(xx - cx) < 3.5) & (yy > eye_y) & (yy < cy + 0.08 * h)
    img[ridge] = np.clip(img[ridge] * 0.92 + 0.03, 0, 1)

    mouth = _ellipse(xx, yy, cx, mouth_y, mouth_rw, mouth_rh)
    img[mouth] = np.array([0.62, 0.28, 0.3])

    img += rng.normal(0.0, 0.02, img.shape)
    img = np.clip(img, 0.0, 1.0)

    points = _landmarks(cx, cy, a, b, eye_dx, eye_y, eye_rw, eye_rh, brow_y, mouth_y,
                        mouth_rw, mouth_rh)
    points = np.clip(points, 0.0, size - 1.0)
    landmarks = {"width": w, "height": h, "points": [[float(x), float(y)] for x, y in points]}
    return img, landmarks


def _landmarks(cx, cy, a, b, eye_dx, eye_y, eye_rw, eye_rh, brow_y, mouth_y, mouth_rw, mouth_rh):
    pts = []
    # 0-16 jaw: mid-left around the chin to mid-right on the face ellipse
    for i in range(17):
        theta = math.pi - i * math.pi / 16.0
        pts.append((cx + a * math.cos(theta), cy + b * math.sin(theta)))
    # 17-21 right eyebrow (image left), 22-26 left eyebrow
    for side in (-1, 1):
        x0 = cx + side * eye_dx
        for i in range(5):
            t = i / 4.0
            pts.append((x0 + (t - 0.5) * eye_rw * 2.8, brow_y - 3.0 * math.sin(math.pi * t)))
    # 27-30 nose bridge, 31-35 nostril line
    tip_y = cy + 0.10 * b
    for i in range(4):
        pts.append((cx, eye_y + (tip_y - eye_y) * (i + 1) / 5.0))
    for i in range(5):
        pts.append((cx + (i - 2) * 4.0, tip_y + 3.0 - abs(i - 2) * 0.8))
    # 36-41 right eye, 42-47 left eye hexagons
    for side in (-1, 1):
        ex = cx + side * eye_dx
        for k in range(6):
            ang = k * math.pi / 3.0
            pts.append((ex + eye_rw * math.cos(ang), eye_y + eye_rh * math.sin(ang)))
    # 48-59 outer lip ring, 60-67 inner lip ring
    for k in range(12):
        ang = k * math.pi / 6.0
        pts.append((cx + mouth_rw * math.cos(ang), mouth_y + mouth_rh * math.sin(ang)))
    for k in range(8):
        ang = k * math.pi / 4.0
        pts.append((cx + mouth_rw * 0.6 * math.cos(ang), mouth_y + mouth_rh * 0.5 * math.sin(ang)))
    # 68-80 forehead arc over the top of the face ellipse
    for i in range(13):
        theta = math.pi + (i + 1) * math.pi / 14.0
        pts.append((cx + a * math.cos(theta), cy + b * math.sin(theta)))
    assert len(pts) == 81
    return np.array(pts)


def write_fixture(out_images: Path, out_landmarks: Path, name: str, seed: int):
    """Write <name>.png and <name>.json; returns the two paths."""
    from sbiforge.compositor import save_image

    img, landmarks = make_face(seed)
    out_images.mkdir(parents=True, exist_ok=True)
    out_landmarks.mkdir(parents=True, exist_ok=True)
    image_path = out_images / f"{name}.png"
    save_image(img, image_path)
    landmarks["image"] = f"{name}.png"
    landmark_path = out_landmarks / f"{name}.json"
    landmark_path.write_text(json.dumps(landmarks))
    return image_path, landmark_path


def write_corpus(root: Path, count: int, base_seed: int = 7000):
    images = root / "images"
    lmarks = root / "landmarks"
    for i in range(count):
        write_fixture(images, lmarks, f"face_{i:03d}", base_seed + i)
    return images, lmarks
