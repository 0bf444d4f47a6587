"""Facial region masks: polygons from landmarks, rasterization, morphology,
and the soft transform applied before blending.

Regions are geometric: each one is the convex hull of a fixed landmark index
subset (see ``data/landmark_regions_v1.json``), the forehead is synthesized
by mirroring the brow line upward, and the full face is the hull of all 81
points. Masks are numpy arrays indexed ``[row, col]``; polygons are arrays
of ``(x, y)`` vertices in pixel coordinates.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DegenerateRegionError, EmptyMaskError
from .policy import GenerationPolicy, weighted_choice
from .regions import ORGAN_REGIONS, REGION_IDS


def _load_region_table() -> dict:
    with resources.files("sbiforge.data").joinpath("landmark_regions_v1.json").open() as fh:
        return json.load(fh)


REGION_TABLE = _load_region_table()
POINT_COUNT = REGION_TABLE["point_count"]


@dataclass
class LandmarkSet81:
    """81 facial landmarks in pixel coordinates plus the source image size."""

    points: np.ndarray  # (81, 2) float array of (x, y)
    image_width: int
    image_height: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.validate()

    def validate(self):
        if self.points.shape != (POINT_COUNT, 2):
            raise ConfigError(
                f"expected {POINT_COUNT} landmark points, got shape {self.points.shape}"
            )
        if self.image_width <= 0 or self.image_height <= 0:
            raise ConfigError("landmark image dimensions must be positive")
        xs, ys = self.points[:, 0], self.points[:, 1]
        if (xs < 0).any() or (xs >= self.image_width).any():
            raise ConfigError("landmark x coordinate outside [0, width)")
        if (ys < 0).any() or (ys >= self.image_height).any():
            raise ConfigError("landmark y coordinate outside [0, height)")

    @classmethod
    def from_dict(cls, obj: dict) -> "LandmarkSet81":
        return cls(
            points=np.asarray(obj["points"], dtype=np.float64),
            image_width=int(obj["width"]),
            image_height=int(obj["height"]),
        )

    @classmethod
    def from_file(cls, path) -> "LandmarkSet81":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def face_box_diagonal(self) -> float:
        """Diagonal of the landmark bounding box, the scale for translations."""
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return float(np.hypot(span[0], span[1]))


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull via Andrew's monotone chain, counter-clockwise order."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) < 3:
        raise DegenerateRegionError("fewer than 3 distinct points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateRegionError("points are collinear")
    return hull


def _forehead_polygon(landmarks: LandmarkSet81) -> np.ndarray:
    rule = REGION_TABLE["forehead_rule"]
    base = landmarks.points[rule["base"]]
    chin_y = landmarks.points[rule["chin_index"], 1]
    extent = chin_y - base[:, 1].min()
    if extent <= 0:
        raise DegenerateRegionError("chin does not sit below the brow line")
    mirrored = base.copy()
    mirrored[:, 1] -= rule["mirror_factor"] * extent
    return convex_hull(np.vstack([base, mirrored]))


def regions_from_landmarks(landmarks: LandmarkSet81, region: str) -> np.ndarray:
    """Polygon (vertex array) for one region of the vocabulary."""
    if region not in REGION_IDS:
        raise ConfigError(f"unknown region {region!r}")
    if region == "full_face":
        return convex_hull(landmarks.points)
    if region == "forehead":
        return _forehead_polygon(landmarks)
    indices = REGION_TABLE["regions"][region]
    return convex_hull(landmarks.points[indices])


# --- region combos ---------------------------------------------------------

PREDEFINED_COMBOS = (
    frozenset({"full_face"}),
    frozenset({"left_eyebrow", "right_eyebrow"}),
    frozenset({"forehead"}),
    frozenset({"left_eyebrow", "right_eyebrow", "forehead"}),
)


@dataclass(frozen=True)
class RegionCombo:
    regions: frozenset
    combo_kind: str  # "organ_subset" or "predefined"

    def key(self) -> str:
        return "+".join(sorted(self.regions))

    def to_json(self) -> dict:
        return {"regions": sorted(self.regions), "combo_kind": self.combo_kind}

    @classmethod
    def from_json(cls, obj: dict) -> "RegionCombo":
        return cls(frozenset(obj["regions"]), obj["combo_kind"])


def all_region_combos() -> list[RegionCombo]:
    """The 19 supported combos: 15 organ subsets plus 4 predefined."""
    combos = []
    for k in range(1, len(ORGAN_REGIONS) + 1):
        for subset in itertools.combinations(ORGAN_REGIONS, k):
            combos.append(RegionCombo(frozenset(subset), "organ_subset"))
    for pre in PREDEFINED_COMBOS:
        combos.append(RegionCombo(pre, "predefined"))
    return combos


def _combo_classes() -> dict[str, list[RegionCombo]]:
    classes: dict[str, list[RegionCombo]] = {f"organ_{k}": [] for k in range(1, 5)}
    classes["predefined"] = []
    for combo in all_region_combos():
        if combo.combo_kind == "predefined":
            classes["predefined"].append(combo)
        else:
            classes[f"organ_{len(combo.regions)}"].append(combo)
    for members in classes.values():
        members.sort(key=lambda c: c.key())
    return classes


COMBO_CLASSES = _combo_classes()
COMBO_BY_KEY = {c.key(): c for c in all_region_combos()}


def _expand_combo_weights(combo_weights: dict) -> dict:
    """Per-combo weights from a map whose keys are class names (mass spread
    uniformly over the class) or specific combo keys like 'left_eye+nose'."""
    per_combo: dict[str, float] = {}
    for key, weight in combo_weights.items():
        if weight <= 0:
            continue
        if key in COMBO_CLASSES:
            members = COMBO_CLASSES[key]
            for member in members:
                per_combo[member.key()] = per_combo.get(member.key(), 0.0) + weight / len(members)
        elif key in COMBO_BY_KEY:
            per_combo[key] = per_combo.get(key, 0.0) + weight
        else:
            raise ConfigError(f"unknown combo class or key {key!r}")
    if not per_combo:
        raise ConfigError("combo weights leave nothing to sample")
    return per_combo


def sample_region_combo(rng: np.random.Generator, policy: GenerationPolicy) -> RegionCombo:
    """Draw one of the 19 combos according to the policy's combo weights."""
    per_combo = _expand_combo_weights(policy.combo_weights)
    return COMBO_BY_KEY[weighted_choice(rng, per_combo)]


# --- rasterization ---------------------------------------------------------

def rasterize_mask(polygons, width: int, height: int) -> np.ndarray:
    """Binary mask: pixel centers inside the union of polygons (even-odd)."""
    if width <= 0 or height <= 0:
        raise ConfigError("mask dimensions must be positive")
    mask = np.zeros((height, width), dtype=np.uint8)
    if not polygons:
        return mask
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    px = xs[None, :]
    py = ys[:, None]
    for poly in polygons:
        poly = np.asarray(poly, dtype=np.float64)
        inside = np.zeros((height, width), dtype=bool)
        n = len(poly)
        for i in range(n):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % n]
            crosses = (y1 > py) != (y2 > py)
            denom = y2 - y1
            if denom == 0:
                continue
            x_at = (px - x1) * denom < (x2 - x1) * (py - y1) if denom > 0 else (
                (px - x1) * denom > (x2 - x1) * (py - y1)
            )
            inside ^= crosses & x_at
        mask |= inside.astype(np.uint8)
    return mask


# --- morphology and the soft transform -------------------------------------

@dataclass
class MaskTransformParams:
    """Recipe for turning a binary region mask into its soft blend mask."""

    morph_op: str = "none"  # "erode", "dilate", or "none"
    morph_radius: int = 0
    jitter_dx: float = 0.0
    jitter_dy: float = 0.0
    jitter_scale: float = 1.0
    blur_sigma: float = 0.0

    def __post_init__(self):
        if self.morph_op not in ("erode", "dilate", "none"):
            raise ConfigError(f"unknown morph op {self.morph_op!r}")
        if self.morph_radius < 0:
            raise ConfigError("morph_radius must be >= 0")
        if self.blur_sigma < 0:
            raise ConfigError("blur_sigma must be >= 0")
        if self.jitter_scale <= 0:
            raise ConfigError("jitter_scale must be > 0")

    def to_json(self) -> dict:
        return {
            "morph_op": self.morph_op,
            "morph_radius": self.morph_radius,
            "jitter_dx": self.jitter_dx,
            "jitter_dy": self.jitter_dy,
            "jitter_scale": self.jitter_scale,
            "blur_sigma": self.blur_sigma,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MaskTransformParams":
        return cls(**obj)


def disc_structuring_element(radius: int) -> np.ndarray:
    """Boolean disc: offsets with dx^2 + dy^2 <= radius^2."""
    r = int(radius)
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return (xx * xx + yy * yy) <= r * r


def morph_mask(mask: np.ndarray, params: MaskTransformParams) -> np.ndarray:
    """Erode or dilate a binary mask with a disc structuring element.

    Pixels beyond the canvas count as background for both operations.
    """
    binary = np.asarray(mask) > 0
    if params.morph_op == "none" or params.morph_radius == 0:
        return binary.astype(np.uint8)
    structure = disc_structuring_element(params.morph_radius)
    if params.morph_op == "erode":
        out = ndimage.binary_erosion(binary, structure=structure, border_value=0)
    else:
        out = ndimage.binary_dilation(binary, structure=structure, border_value=0)
    return out.astype(np.uint8)


def _is_identity(params: MaskTransformParams) -> bool:
    return (
        (params.morph_op == "none" or params.morph_radius == 0)
        and params.jitter_dx == 0.0
        and params.jitter_dy == 0.0
        and params.jitter_scale == 1.0
        and params.blur_sigma == 0.0
    )


def transform_mask(mask: np.ndarray, params: MaskTransformParams) -> np.ndarray:
    """Soft blend mask: morph, then affine jitter about the mask centroid,
    then gaussian blur. Output values lie in [0, 1].
    """
    binary = np.asarray(mask) > 0
    if _is_identity(params):
        return binary.astype(np.float64)

    had_support = bool(binary.any())
    soft = morph_mask(binary, params).astype(np.float64)

    if params.jitter_dx != 0.0 or params.jitter_dy != 0.0 or params.jitter_scale != 1.0:
        if soft.any():
            centroid = np.array(np.nonzero(soft)).mean(axis=1)  # (row, col)
        else:
            centroid = np.array([soft.shape[0] / 2.0, soft.shape[1] / 2.0])
        s = params.jitter_scale
        shift = np.array([params.jitter_dy, params.jitter_dx])
        # output[o] = input[(o - centroid - shift) / s + centroid]
        offset = centroid - (centroid + shift) / s
        soft = ndimage.affine_transform(
            soft,
            matrix=np.diag([1.0 / s, 1.0 / s]),
            offset=offset,
            order=1,
            mode="constant",
            cval=0.0,
        )

    if params.blur_sigma > 0:
        soft = ndimage.gaussian_filter(soft, sigma=params.blur_sigma, mode="reflect")

    soft = np.clip(soft, 0.0, 1.0)
    if had_support and soft.max() <= 1e-12:
        raise EmptyMaskError("mask transform moved all support off the canvas")
    return soft


def sample_transform_params(rng: np.random.Generator, spec: dict | None = None) -> MaskTransformParams:
    """Draw the soft-mask recipe for one sample.

    ``spec`` may override: morph_radius range, jitter fraction of the short
    canvas side, scale range, blur sigma range.
    """
    spec = spec or {}
    radius_lo, radius_hi = spec.get("morph_radius", (1, 3))
    scale_lo, scale_hi = spec.get("scale_range", (0.97, 1.03))
    sigma_lo, sigma_hi = spec.get("blur_sigma", (1.0, 3.0))
    jitter_frac = spec.get("jitter_frac", 0.01)
    short_side = spec.get("short_side", 128)

    op = "erode" if rng.random() < 0.5 else "dilate"
    radius = int(rng.integers(radius_lo, radius_hi + 1))
    jitter = jitter_frac * short_side
    return MaskTransformParams(
        morph_op=op,
        morph_radius=radius,
        jitter_dx=float(rng.uniform(-jitter, jitter)),
        jitter_dy=float(rng.uniform(-jitter, jitter)),
        jitter_scale=float(rng.uniform(scale_lo, scale_hi)),
        blur_sigma=float(rng.uniform(sigma_lo, sigma_hi)),
    )
