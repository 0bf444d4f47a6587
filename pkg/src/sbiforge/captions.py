"""Key caption bank: measure real-vs-forged differences per region and pick
ground-truth anomaly keywords whose measured difference clears a threshold.

Difference measures, one scalar per (region, factor):

* hue         mean absolute hue-angle delta in degrees
* lighting    mean absolute luminance delta
* contrast    relative change of the luminance standard deviation
* clarity     relative change of the Laplacian variance (sharpness)
* scaling     mean pixel displacement of the applied resample, in pixels
* translation magnitude of the applied shift, in pixels

Photometric measures come straight from the two images under the region
mask. The geometric ones derive from the recorded recipe: estimating
sub-pixel motion from pixels alone is not robust, while the recipe-based
value is deterministic and can be recomputed bit-exactly at validation time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy import ndimage

from .errors import SubThresholdSample, TableFormatError
from .masks import RegionCombo
from .compositor import canvas_center, luminance, rgb_to_hsv
from .policy import FACTORS, INTENSITIES
from .regions import REGION_IDS

_STD_FLOOR = 1e-6
_LAPVAR_FLOOR = 1e-9
_CHROMA_FLOOR = 0.02  # saturation*value below this leaves hue undefined


# --- measurement ------------------------------------------------------------

@dataclass
class GeometrySpec:
    """The geometric part of an applied recipe, for displacement measures."""

    scale: float = 1.0
    translation: tuple[float, float] = (0.0, 0.0)  # (dx, dy) pixels


@dataclass
class DiffStats:
    """Scalar difference measures keyed by (region, factor)."""

    values: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def get(self, region: str, factor: str) -> float:
        return self.values.get((region, factor), 0.0)

    def set(self, region: str, factor: str, value: float) -> None:
        self.values[(region, factor)] = max(0.0, float(value))


def _hue_delta_degrees(real, forged, support):
    hsv_r = rgb_to_hsv(real[support])
    hsv_f = rgb_to_hsv(forged[support])
    defined = (hsv_r[:, 1] * hsv_r[:, 2] > _CHROMA_FLOOR) & (
        hsv_f[:, 1] * hsv_f[:, 2] > _CHROMA_FLOOR
    )
    dh = np.abs(hsv_f[:, 0] - hsv_r[:, 0]) * 360.0
    dh = np.minimum(dh, 360.0 - dh)
    dh = np.where(defined, dh, 0.0)
    return float(dh.mean())


def measure_region_differences(
    real: np.ndarray,
    forged: np.ndarray,
    mask_by_region: dict,
    geometry: GeometrySpec | None = None,
) -> DiffStats:
    """Per-(region, factor) difference measures over each region's support."""
    real = np.asarray(real, dtype=np.float64)
    forged = np.asarray(forged, dtype=np.float64)
    if real.shape != forged.shape:
        raise ValueError(f"shape mismatch: {real.shape} vs {forged.shape}")

    lum_r = luminance(real)
    lum_f = luminance(forged)
    lap_r = ndimage.laplace(lum_r)
    lap_f = ndimage.laplace(lum_f)

    stats = DiffStats()
    for region, mask in mask_by_region.items():
        support = np.asarray(mask) > 0
        if not support.any():
            stats.warnings.append(f"region {region}: empty mask, skipped")
            continue

        stats.set(region, "hue", _hue_delta_degrees(real, forged, support))
        stats.set(region, "lighting", np.abs(lum_f[support] - lum_r[support]).mean())

        std_r = lum_r[support].std()
        std_f = lum_f[support].std()
        stats.set(region, "contrast", abs(std_f - std_r) / max(std_r, _STD_FLOOR))

        var_r = lap_r[support].var()
        var_f = lap_f[support].var()
        stats.set(region, "clarity", abs(var_f - var_r) / max(var_r, _LAPVAR_FLOOR))

        if geometry is not None and geometry.scale != 1.0:
            cy, cx = canvas_center(real.shape)
            rows, cols = np.nonzero(support)
            dist = np.hypot(rows - cy, cols - cx)
            stats.set(region, "scaling", abs(geometry.scale - 1.0) * dist.mean())
        else:
            stats.set(region, "scaling", 0.0)

        if geometry is not None:
            dx, dy = geometry.translation
            stats.set(region, "translation", float(np.hypot(dx, dy)))
        else:
            stats.set(region, "translation", 0.0)
    return stats


# --- caption table ----------------------------------------------------------

@dataclass
class CaptionEntry:
    region: str  # region id or "*"
    factor: str
    intensity: str  # level or "*"
    threshold: float
    captions: list

    def matches(self, region: str, factor: str, intensity: str | None) -> bool:
        if self.factor != factor:
            return False
        if self.region != "*" and self.region != region:
            return False
        if self.intensity != "*":
            if intensity is None or self.intensity != intensity:
                return False
        return True

    def specificity(self) -> int:
        return (2 if self.region != "*" else 0) + (1 if self.intensity != "*" else 0)


@dataclass
class CaptionTable:
    version: str
    entries: list


def _validate_entry(obj: dict, index: int) -> CaptionEntry:
    def bad(msg):
        raise TableFormatError(f"entry {index}: {msg}", entry_index=index)

    region = obj.get("region", "*")
    if region != "*" and region not in REGION_IDS:
        bad(f"unknown region {region!r}")
    factor = obj.get("factor")
    if factor not in FACTORS:
        bad(f"unknown factor {factor!r}")
    intensity = obj.get("intensity", "*")
    if intensity != "*" and intensity not in INTENSITIES:
        bad(f"unknown intensity {intensity!r}")
    threshold = obj.get("threshold")
    if not isinstance(threshold, (int, float)) or threshold < 0:
        bad(f"threshold must be a non-negative number, got {threshold!r}")
    captions = obj.get("captions")
    if not isinstance(captions, list) or not captions:
        bad("captions must be a non-empty list")
    cleaned = []
    for phrase in captions:
        if not isinstance(phrase, str) or not phrase.strip():
            bad("caption phrases must be non-empty strings")
        if ";" in phrase or "<" in phrase or ">" in phrase:
            bad("caption phrases may not contain ';', '<', or '>'")
        cleaned.append(phrase.strip())
    if len(set(cleaned)) != len(cleaned):
        bad("caption phrases must be unique within an entry")
    return CaptionEntry(region, factor, intensity, float(threshold), cleaned)


def load_caption_table(source) -> CaptionTable:
    """Parse and validate a caption table from a stream, bytes, or str."""
    if hasattr(source, "read"):
        raw = source.read()
    else:
        raw = source
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise TableFormatError(f"not valid JSON: {exc}") from exc

    version = doc.get("caption_table_version")
    if not version:
        raise TableFormatError("missing caption_table_version field")
    raw_entries = doc.get("entries")
    if not isinstance(raw_entries, list) or not raw_entries:
        raise TableFormatError("entries must be a non-empty list")

    entries = [_validate_entry(obj, i) for i, obj in enumerate(raw_entries)]
    covered = {e.factor for e in entries}
    missing = [f for f in FACTORS if f not in covered]
    if missing:
        raise TableFormatError(f"factors without any entry: {missing}")
    return CaptionTable(version=version, entries=entries)


def load_caption_table_file(path) -> CaptionTable:
    with open(path, "rb") as fh:
        return load_caption_table(fh)


def load_default_caption_table() -> CaptionTable:
    with resources.files("sbiforge.data").joinpath("caption_table_v1.json").open("rb") as fh:
        return load_caption_table(fh)


# --- keyword selection ------------------------------------------------------

@dataclass
class KeyCaption:
    region: str
    factor: str
    phrase: str
    measure: float
    threshold: float
    intensity: str | None = None

    def to_json(self) -> dict:
        return {
            "region": self.region,
            "factor": self.factor,
            "phrase": self.phrase,
            "measure": self.measure,
            "threshold": self.threshold,
            "intensity": self.intensity,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "KeyCaption":
        return cls(
            region=obj["region"],
            factor=obj["factor"],
            phrase=obj["phrase"],
            measure=float(obj["measure"]),
            threshold=float(obj["threshold"]),
            intensity=obj.get("intensity"),
        )


@dataclass
class KeyCaptionSet:
    regions: set = field(default_factory=set)
    keywords: list = field(default_factory=list)

    def phrases(self) -> list:
        return [k.phrase for k in self.keywords]

    def to_json(self) -> dict:
        return {
            "regions": sorted(self.regions),
            "keywords": [k.to_json() for k in self.keywords],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "KeyCaptionSet":
        return cls(
            regions=set(obj.get("regions", [])),
            keywords=[KeyCaption.from_json(k) for k in obj.get("keywords", [])],
        )


def _best_entry(table: CaptionTable, region: str, factor: str, intensity: str | None):
    best = None
    best_score = -1
    for entry in table.entries:
        if not entry.matches(region, factor, intensity):
            continue
        score = entry.specificity()
        if score > best_score:
            best, best_score = entry, score
    return best


def select_key_captions(
    stats: DiffStats,
    combo: RegionCombo,
    table: CaptionTable,
    rng: np.random.Generator,
    intensities: dict | None = None,
) -> KeyCaptionSet:
    """Pick one caption per (region, factor) whose measure beats its
    threshold. The most specific table entry wins: exact region and
    intensity, then region wildcard, then full wildcard.

    Raises SubThresholdSample when nothing clears a threshold; the caller
    may resample the recipe.
    """
    result = KeyCaptionSet()
    for region in sorted(combo.regions):
        for factor in FACTORS:
            measure = stats.get(region, factor)
            intensity = intensities.get(factor) if intensities else None
            entry = _best_entry(table, region, factor, intensity)
            if entry is None or measure <= entry.threshold:
                continue
            phrase = entry.captions[int(rng.integers(len(entry.captions)))]
            result.keywords.append(
                KeyCaption(region, factor, phrase, measure, entry.threshold, intensity)
            )
            result.regions.add(region)
    if not result.keywords:
        raise SubThresholdSample("no measured difference cleared its caption threshold")
    return result
