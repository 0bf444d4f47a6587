from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from sbiforge.errors import ConfigError, DegenerateRegionError, EmptyMaskError
from sbiforge.masks import (
    COMBO_CLASSES,
    LandmarkSet81,
    MaskTransformParams,
    all_region_combos,
    convex_hull,
    disc_structuring_element,
    morph_mask,
    rasterize_mask,
    regions_from_landmarks,
    sample_region_combo,
    sample_transform_params,
    transform_mask,
    REGION_TABLE,
)
from sbiforge.policy import GenerationPolicy


# --- independent oracles -----------------------------------------------------

def pip_oracle(px: float, py: float, poly) -> bool:
    """Classic scalar even-odd ray cast, written independently of the
    vectorized implementation."""
    inside = False
    n = len(poly)
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if (yi > py) != (yj > py) and px < (xj - xi) * (py - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return inside


def hull_vertices_oracle(points) -> set:
    """Brute force O(n^4): a point is a hull vertex iff it lies in no
    triangle (or on no segment) spanned by the other points."""
    pts = [tuple(p) for p in np.unique(np.asarray(points, dtype=float), axis=0)]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def on_segment(p, a, b, eps=1e-9):
        if abs(cross(a, b, p)) > eps:
            return False
        return (
            min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
            and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps
        )

    def in_triangle(p, a, b, c, eps=1e-9):
        d1 = cross(a, b, p)
        d2 = cross(b, c, p)
        d3 = cross(c, a, p)
        has_neg = (d1 < -eps) or (d2 < -eps) or (d3 < -eps)
        has_pos = (d1 > eps) or (d2 > eps) or (d3 > eps)
        return not (has_neg and has_pos)

    vertices = set()
    for k, p in enumerate(pts):
        others = [q for i, q in enumerate(pts) if i != k]
        covered = any(
            on_segment(p, a, b) for a, b in itertools.combinations(others, 2)
        ) or any(
            abs(cross(a, b, c)) > 1e-9 and in_triangle(p, a, b, c)
            for a, b, c in itertools.combinations(others, 3)
        )
        if not covered:
            vertices.add(p)
    return vertices


def morph_oracle(mask: np.ndarray, radius: int, op: str) -> np.ndarray:
    """Brute-force structuring-element sweep; out-of-canvas counts as 0."""
    h, w = mask.shape
    offsets = [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if dy * dy + dx * dx <= radius * radius
    ]
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            vals = []
            for dy, dx in offsets:
                yy, xx = y + dy, x + dx
                vals.append(mask[yy, xx] if 0 <= yy < h and 0 <= xx < w else 0)
            out[y, x] = min(vals) if op == "erode" else max(vals)
    return out


def _circle_landmarks(n=81, size=200):
    pts = [
        (size / 2 + 60 * math.cos(2 * math.pi * i / n), size / 2 + 60 * math.sin(2 * math.pi * i / n))
        for i in range(n)
    ]
    return LandmarkSet81(np.array(pts), size, size)


# --- regions_from_landmarks --------------------------------------------------

def test_full_face_hull_contains_every_point_on_circle():
    landmarks = _circle_landmarks()
    poly = regions_from_landmarks(landmarks, "full_face")
    assert len(poly) >= 3
    for x, y in landmarks.points:
        # nudge toward the centroid so boundary points are strictly inside
        cx, cy = landmarks.points.mean(axis=0)
        assert pip_oracle(x + (cx - x) * 1e-6, y + (cy - y) * 1e-6, poly)


def test_fixture_full_face_contains_all_81(fixture_landmarks):
    landmarks = LandmarkSet81.from_dict(fixture_landmarks)
    poly = regions_from_landmarks(landmarks, "full_face")
    cx, cy = landmarks.points.mean(axis=0)
    for x, y in landmarks.points:
        assert pip_oracle(x + (cx - x) * 1e-9, y + (cy - y) * 1e-9, poly)


def test_nose_polygon_matches_bruteforce_hull(fixture_landmarks):
    landmarks = LandmarkSet81.from_dict(fixture_landmarks)
    poly = regions_from_landmarks(landmarks, "nose")
    nose_points = landmarks.points[REGION_TABLE["regions"]["nose"]]
    expected = hull_vertices_oracle(nose_points)
    assert {tuple(v) for v in poly} == expected


def test_identical_points_degenerate():
    pts = np.tile([50.0, 50.0], (81, 1))
    landmarks = LandmarkSet81(pts, 100, 100)
    with pytest.raises(DegenerateRegionError):
        regions_from_landmarks(landmarks, "full_face")


def test_collinear_subset_degenerate():
    with pytest.raises(DegenerateRegionError):
        convex_hull(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))


def test_unknown_region_rejected(fixture_landmarks):
    landmarks = LandmarkSet81.from_dict(fixture_landmarks)
    with pytest.raises(ConfigError):
        regions_from_landmarks(landmarks, "chin")


def test_landmark_bounds_enforced():
    pts = np.tile([10.0, 10.0], (81, 1))
    pts[3] = [240.0, 10.0]
    with pytest.raises(ConfigError):
        LandmarkSet81(pts, 160, 160)


# --- rasterize_mask ----------------------------------------------------------

def test_left_half_square_on_4x4():
    poly = [(0, 0), (2, 0), (2, 4), (0, 4)]
    mask = rasterize_mask([poly], 4, 4)
    assert mask.sum() == 8
    assert mask[:, :2].all() and not mask[:, 2:].any()


def test_empty_polygon_list_gives_zero_mask():
    mask = rasterize_mask([], 8, 8)
    assert mask.shape == (8, 8) and mask.sum() == 0


def test_disjoint_squares_match_pip_oracle():
    sq1 = [(1, 1), (5, 1), (5, 5), (1, 5)]
    sq2 = [(8, 8), (14, 8), (14, 14), (8, 14)]
    mask = rasterize_mask([sq1, sq2], 16, 16)
    only1 = rasterize_mask([sq1], 16, 16)
    only2 = rasterize_mask([sq2], 16, 16)
    assert mask.sum() == only1.sum() + only2.sum()
    for y in range(16):
        for x in range(16):
            expected = pip_oracle(x + 0.5, y + 0.5, sq1) or pip_oracle(x + 0.5, y + 0.5, sq2)
            assert bool(mask[y, x]) == expected


def test_random_polygon_matches_pip_oracle(rng):
    for _ in range(5):
        n = int(rng.integers(3, 8))
        angles = np.sort(rng.uniform(0, 2 * math.pi, n))
        radii = rng.uniform(3, 10, n)
        poly = [(12 + r * math.cos(a), 12 + r * math.sin(a)) for r, a in zip(radii, angles)]
        mask = rasterize_mask([poly], 24, 24)
        for y in range(24):
            for x in range(24):
                assert bool(mask[y, x]) == pip_oracle(x + 0.5, y + 0.5, poly)


# --- sample_region_combo -----------------------------------------------------

def test_combo_enumeration_is_19():
    combos = all_region_combos()
    assert len(combos) == 19
    assert len({c.key() for c in combos}) == 19
    assert sum(len(m) for m in COMBO_CLASSES.values()) == 19


def test_uniform_sampler_hits_exactly_19(rng):
    policy = GenerationPolicy()
    seen = {sample_region_combo(rng, policy).key() for _ in range(10_000)}
    assert len(seen) == 19


def test_forced_single_combo(rng):
    policy = GenerationPolicy(combo_weights={"nose": 1.0})
    for _ in range(50):
        combo = sample_region_combo(rng, policy)
        assert combo.regions == frozenset({"nose"})


def test_combo_seed_replay():
    policy = GenerationPolicy()
    rng1, rng2 = np.random.default_rng(42), np.random.default_rng(42)
    seq1 = [sample_region_combo(rng1, policy).key() for _ in range(200)]
    seq2 = [sample_region_combo(rng2, policy).key() for _ in range(200)]
    assert seq1 == seq2


# --- morphology --------------------------------------------------------------

def test_radius_zero_is_identity(rng):
    mask = (rng.random((16, 16)) < 0.4).astype(np.uint8)
    out = morph_mask(mask, MaskTransformParams(morph_op="erode", morph_radius=0))
    assert np.array_equal(out, mask)


def test_dilate_single_pixel_is_plus_shape():
    mask = np.zeros((7, 7), dtype=np.uint8)
    mask[3, 3] = 1
    out = morph_mask(mask, MaskTransformParams(morph_op="dilate", morph_radius=1))
    expected = np.zeros((7, 7), dtype=np.uint8)
    for dy, dx in [(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)]:
        expected[3 + dy, 3 + dx] = 1
    assert np.array_equal(out, expected)
    assert out.sum() == 5


def test_erode_full_ones_clears_border():
    mask = np.ones((9, 9), dtype=np.uint8)
    out = morph_mask(mask, MaskTransformParams(morph_op="erode", morph_radius=1))
    expected = np.zeros((9, 9), dtype=np.uint8)
    expected[1:-1, 1:-1] = 1
    assert np.array_equal(out, expected)


def test_morphology_matches_bruteforce_oracle(rng):
    for _ in range(20):
        mask = (rng.random((20, 20)) < rng.uniform(0.2, 0.7)).astype(np.uint8)
        radius = int(rng.integers(1, 4))
        for op in ("erode", "dilate"):
            got = morph_mask(mask, MaskTransformParams(morph_op=op, morph_radius=radius))
            assert np.array_equal(got, morph_oracle(mask, radius, op)), (op, radius)


def test_erode_subset_input_subset_dilate(rng):
    for _ in range(20):
        mask = (rng.random((24, 24)) < 0.5).astype(np.uint8)
        radius = int(rng.integers(0, 4))
        eroded = morph_mask(mask, MaskTransformParams(morph_op="erode", morph_radius=radius))
        dilated = morph_mask(mask, MaskTransformParams(morph_op="dilate", morph_radius=radius))
        assert not (eroded & ~mask).any()
        assert not (mask & ~dilated).any()


def test_disc_element_radius_2():
    disc = disc_structuring_element(2)
    assert disc.shape == (5, 5)
    assert disc.sum() == 13  # 4-connected disc of radius 2


# --- transform_mask ----------------------------------------------------------

def test_identity_transform_returns_input():
    mask = np.zeros((12, 12), dtype=np.uint8)
    mask[4:8, 4:8] = 1
    out = transform_mask(mask, MaskTransformParams())
    assert out.dtype == np.float64
    assert np.array_equal(out, mask.astype(np.float64))


def test_blur_preserves_mass_within_one_percent(rng):
    for _ in range(10):
        mask = (rng.random((32, 32)) < 0.4).astype(np.uint8)
        if not mask.any():
            continue
        sigma = float(rng.uniform(0.5, 3.0))
        out = transform_mask(mask, MaskTransformParams(blur_sigma=sigma))
        assert abs(out.sum() - mask.sum()) <= 0.01 * mask.sum()


def test_transform_output_always_in_unit_interval(rng):
    for _ in range(40):
        mask = (rng.random((24, 24)) < rng.uniform(0.1, 0.9)).astype(np.uint8)
        params = sample_transform_params(rng, {"short_side": 24})
        try:
            out = transform_mask(mask, params)
        except EmptyMaskError:
            continue
        assert out.min() >= 0.0 and out.max() <= 1.0


def test_offcanvas_jitter_raises_empty_mask():
    mask = np.zeros((16, 16), dtype=np.uint8)
    mask[6:10, 6:10] = 1
    with pytest.raises(EmptyMaskError):
        transform_mask(mask, MaskTransformParams(jitter_dx=16.0 * 3, jitter_dy=0.0))


def test_blur_zero_and_identity_jitter_equals_morphed():
    mask = np.zeros((16, 16), dtype=np.uint8)
    mask[4:12, 4:12] = 1
    params = MaskTransformParams(morph_op="erode", morph_radius=2)
    out = transform_mask(mask, params)
    assert np.array_equal(out, morph_mask(mask, params).astype(np.float64))
