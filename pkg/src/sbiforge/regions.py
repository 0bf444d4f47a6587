"""Closed vocabulary of facial regions and its textual aliases."""
from __future__ import annotations

REGION_IDS = (
    "full_face",
    "left_eye",
    "right_eye",
    "nose",
    "mouth",
    "left_eyebrow",
    "right_eyebrow",
    "forehead",
)

# The four organs that form the 15 single-organ subset combos.
ORGAN_REGIONS = ("left_eye", "right_eye", "nose", "mouth")

# Accepted spellings in free text, mapped to canonical ids. Lookup is done
# on lowercased, whitespace-collapsed names.
REGION_ALIASES = {
    "full face": "full_face",
    "whole face": "full_face",
    "face": "full_face",
    "left eye": "left_eye",
    "right eye": "right_eye",
    "left eyebrow": "left_eyebrow",
    "right eyebrow": "right_eyebrow",
    "eyebrow left": "left_eyebrow",
    "eyebrow right": "right_eyebrow",
    "lips": "mouth",
    "lip": "mouth",
}


def normalize_region(name: str) -> str | None:
    """Map a textual region name to its canonical id, or None if unknown."""
    key = " ".join(name.strip().lower().split())
    if key in REGION_IDS:
        return key
    underscored = key.replace(" ", "_")
    if underscored in REGION_IDS:
        return underscored
    return REGION_ALIASES.get(key)
