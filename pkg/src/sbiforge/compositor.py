"""Forged-image composition: sample a perturbation recipe, augment the real
image, and blend the augmented copy back through the soft mask.

Images are float64 arrays shaped (height, width, 3) with values in [0, 1].
Files are 8-bit RGB PNGs; decoding divides by 255 so blending identities
hold exactly in the float domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ConfigError, EmptyPerturbationError, ShapeMismatchError
from .policy import (
    FACTORS,
    SIGNED_FACTORS,
    GenerationPolicy,
    weighted_choice,
)

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


# --- image buffers ----------------------------------------------------------

def load_image(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_image(image: np.ndarray, path) -> None:
    Image.fromarray(to_u8(image), mode="RGB").save(path, format="PNG")


def to_u8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def quantize(image: np.ndarray) -> np.ndarray:
    """Round-trip through 8 bits without touching disk.

    Difference measures are taken on quantized images so that validation,
    which reloads PNGs, reproduces them exactly.
    """
    return to_u8(image).astype(np.float64) / 255.0


def save_mask(mask: np.ndarray, path) -> None:
    Image.fromarray(
        np.clip(np.rint(np.asarray(mask) * 255.0), 0, 255).astype(np.uint8), mode="L"
    ).save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("L"), dtype=np.float64)
    return arr / 255.0


def luminance(image: np.ndarray) -> np.ndarray:
    return np.asarray(image) @ LUMA_WEIGHTS


# --- hue arithmetic ---------------------------------------------------------

def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    v = maxc
    delta = maxc - minc
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    safe = np.where(delta > 0, delta, 1.0)
    h = np.zeros_like(maxc)
    h = np.where(maxc == r, ((g - b) / safe) % 6.0, h)
    h = np.where(maxc == g, (b - r) / safe + 2.0, h)
    h = np.where(maxc == b, (r - g) / safe + 4.0, h)
    h = np.where(delta > 0, h / 6.0, 0.0)
    return np.stack([h % 1.0, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    h6 = (h % 1.0) * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


# --- perturbation recipe ----------------------------------------------------

@dataclass
class FactorSetting:
    """One sampled factor: intensity level, numeric magnitude, and, for
    translation only, the direction angle in radians."""

    intensity: str
    magnitude: float
    angle: float | None = None

    def to_json(self) -> dict:
        obj = {"intensity": self.intensity, "magnitude": self.magnitude}
        if self.angle is not None:
            obj["angle"] = self.angle
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "FactorSetting":
        return cls(obj["intensity"], float(obj["magnitude"]), obj.get("angle"))


@dataclass
class PerturbationParams:
    """The sampled augmentation recipe: factor -> setting."""

    factors: dict[str, FactorSetting] = field(default_factory=dict)

    def __post_init__(self):
        for name in self.factors:
            if name not in FACTORS:
                raise ConfigError(f"unknown perturbation factor {name!r}")

    def intensity_by_factor(self) -> dict[str, str]:
        return {name: s.intensity for name, s in self.factors.items()}

    def to_json(self) -> dict:
        return {name: s.to_json() for name, s in self.factors.items()}

    @classmethod
    def from_json(cls, obj: dict) -> "PerturbationParams":
        return cls({name: FactorSetting.from_json(s) for name, s in obj.items()})


def sample_perturbation(rng: np.random.Generator, policy: GenerationPolicy) -> PerturbationParams:
    """Draw the recipe: how many factors, which ones, at what strength."""
    available = {f: w for f, w in policy.factor_weights.items() if w > 0 and f in FACTORS}
    if not available:
        raise EmptyPerturbationError("policy assigns zero weight to every factor")

    lo, hi = policy.factor_count_range
    lo = max(1, min(lo, len(available)))
    hi = max(lo, min(hi, len(available)))
    count = int(rng.integers(lo, hi + 1))

    remaining = dict(available)
    chosen = []
    for _ in range(count):
        pick = weighted_choice(rng, remaining)
        chosen.append(pick)
        del remaining[pick]

    factors: dict[str, FactorSetting] = {}
    for factor in FACTORS:  # canonical order keeps draw sequences replayable
        if factor not in chosen:
            continue
        intensity = weighted_choice(rng, policy.intensity_weights[factor])
        mag_lo, mag_hi = policy.magnitudes[factor][intensity]
        magnitude = float(rng.uniform(mag_lo, mag_hi))
        if factor in SIGNED_FACTORS and rng.random() < 0.5:
            magnitude = -magnitude
        angle = float(rng.uniform(0.0, 2.0 * math.pi)) if factor == "translation" else None
        factors[factor] = FactorSetting(intensity, magnitude, angle)
    return PerturbationParams(factors)


# --- augmentation -----------------------------------------------------------

def _neutral(factor: str, magnitude: float) -> bool:
    if factor in ("contrast", "scaling"):
        return magnitude == 1.0
    return magnitude == 0.0


def _apply_hue(image, degrees):
    hsv = rgb_to_hsv(image)
    hsv[..., 0] = (hsv[..., 0] + degrees / 360.0) % 1.0
    return np.clip(hsv_to_rgb(hsv), 0.0, 1.0)


def _apply_lighting(image, offset):
    return np.clip(image + offset, 0.0, 1.0)


def _apply_contrast(image, gain):
    means = image.mean(axis=(0, 1), keepdims=True)
    return np.clip(means + gain * (image - means), 0.0, 1.0)


def _apply_clarity(image, magnitude):
    sigma = abs(magnitude)
    blurred = np.stack(
        [ndimage.gaussian_filter(image[..., c], sigma=sigma, mode="reflect") for c in range(3)],
        axis=-1,
    )
    if magnitude >= 0:
        return np.clip(blurred, 0.0, 1.0)
    # negative magnitude sharpens: unsharp mask at unit amount
    return np.clip(image + (image - blurred), 0.0, 1.0)


def canvas_center(shape) -> tuple[float, float]:
    """Scaling pivot in array index coordinates (row, col)."""
    h, w = shape[0], shape[1]
    return ((h - 1) / 2.0, (w - 1) / 2.0)


def _apply_scaling(image, factor):
    center = np.array(canvas_center(image.shape))
    offset = center - center / factor
    out = np.stack(
        [
            ndimage.affine_transform(
                image[..., c],
                matrix=np.diag([1.0 / factor, 1.0 / factor]),
                offset=offset,
                order=1,
                mode="reflect",
            )
            for c in range(3)
        ],
        axis=-1,
    )
    return np.clip(out, 0.0, 1.0)


def translation_offsets(setting: FactorSetting, face_box_diag: float) -> tuple[float, float]:
    """(dx, dy) in pixels for a translation factor setting."""
    angle = setting.angle if setting.angle is not None else 0.0
    dist = setting.magnitude * face_box_diag
    return dist * math.cos(angle), dist * math.sin(angle)


def _apply_translation(image, dx, dy):
    out = np.stack(
        [
            ndimage.shift(image[..., c], shift=(dy, dx), order=1, mode="reflect")
            for c in range(3)
        ],
        axis=-1,
    )
    return np.clip(out, 0.0, 1.0)


def apply_augmentation(
    image: np.ndarray,
    params: PerturbationParams,
    face_box_diag: float | None = None,
) -> np.ndarray:
    """Apply the recipe in the fixed order hue, lighting, contrast, clarity,
    scaling, translation. The output stays on the same canvas; geometric
    factors resample with a reflective border.

    ``face_box_diag`` converts the translation fraction into pixels; it
    defaults to the canvas diagonal when no landmark box is supplied.
    """
    out = np.asarray(image, dtype=np.float64)
    if out.ndim != 3 or out.shape[2] != 3:
        raise ShapeMismatchError(f"expected (h, w, 3) image, got {out.shape}")
    if face_box_diag is None:
        face_box_diag = math.hypot(out.shape[0], out.shape[1])

    for factor in FACTORS:
        setting = params.factors.get(factor)
        if setting is None or _neutral(factor, setting.magnitude):
            continue
        if factor == "hue":
            out = _apply_hue(out, setting.magnitude)
        elif factor == "lighting":
            out = _apply_lighting(out, setting.magnitude)
        elif factor == "contrast":
            out = _apply_contrast(out, setting.magnitude)
        elif factor == "clarity":
            out = _apply_clarity(out, setting.magnitude)
        elif factor == "scaling":
            out = _apply_scaling(out, setting.magnitude)
        elif factor == "translation":
            dx, dy = translation_offsets(setting, face_box_diag)
            if dx != 0.0 or dy != 0.0:
                out = _apply_translation(out, dx, dy)
    return out


# --- blending ---------------------------------------------------------------

@dataclass
class BlendSpec:
    """Blending weight for the forged copy, in (0, 1]."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha {self.alpha} outside (0, 1]")


def sample_alpha(rng: np.random.Generator, policy: GenerationPolicy) -> BlendSpec:
    return BlendSpec(float(weighted_choice(rng, policy.alpha_weights)))


def blend_forgery(
    real: np.ndarray,
    augmented: np.ndarray,
    soft_mask: np.ndarray,
    spec: BlendSpec,
) -> np.ndarray:
    """Per pixel: out = w * augmented + (1 - w) * real with w = alpha * mask.

    The result is clamped into [min(real, aug), max(real, aug)] per element,
    which guards the convexity bound against floating-point rounding without
    disturbing the exact w=0 and w=1 identities.
    """
    real = np.asarray(real, dtype=np.float64)
    augmented = np.asarray(augmented, dtype=np.float64)
    soft_mask = np.asarray(soft_mask, dtype=np.float64)
    if real.shape != augmented.shape:
        raise ShapeMismatchError(
            f"real {real.shape} vs augmented {augmented.shape}"
        )
    if soft_mask.shape != real.shape[:2]:
        raise ShapeMismatchError(
            f"mask {soft_mask.shape} vs image plane {real.shape[:2]}"
        )
    if soft_mask.min() < 0.0 or soft_mask.max() > 1.0:
        raise ConfigError("soft mask values must lie in [0, 1]")

    w = (spec.alpha * soft_mask)[..., None]
    out = w * augmented + (1.0 - w) * real
    lo = np.minimum(real, augmented)
    hi = np.maximum(real, augmented)
    return np.clip(out, lo, hi)
