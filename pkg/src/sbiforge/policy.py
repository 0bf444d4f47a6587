"""Generation policy: the knobs that control forgery sampling.

A :class:`GenerationPolicy` bundles every distribution the samplers draw
from: blending weights, perturbation factor selection, intensity levels,
per-(factor, intensity) magnitude ranges, and region-combo class weights.
The difficulty controller produces one policy per level; run configs may
override individual tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ConfigError

FACTORS = ("hue", "lighting", "contrast", "clarity", "scaling", "translation")
INTENSITIES = ("mild", "moderate", "severe")

# Ordinal used when reasoning about "expected intensity" monotonicity.
INTENSITY_ORDINAL = {"mild": 1.0, "moderate": 2.0, "severe": 3.0}

# Per-(factor, intensity) magnitude ranges. Values are factor specific:
#   hue          absolute shift in degrees, random sign at sample time
#   lighting     additive luminance offset, random sign
#   contrast     gain applied about the per-channel mean (two-sided range)
#   clarity      gaussian sigma; random sign picks blur (+) vs sharpen (-)
#   scaling      resample factor about the canvas center (two-sided range)
#   translation  shift as a fraction of the face-box diagonal, random angle
DEFAULT_MAGNITUDES = {
    "hue": {"mild": (2.0, 6.0), "moderate": (6.0, 14.0), "severe": (14.0, 30.0)},
    "lighting": {"mild": (0.02, 0.06), "moderate": (0.06, 0.14), "severe": (0.14, 0.30)},
    "contrast": {"mild": (0.95, 1.05), "moderate": (0.85, 1.15), "severe": (0.70, 1.30)},
    "clarity": {"mild": (0.3, 0.8), "moderate": (0.8, 1.6), "severe": (1.6, 3.0)},
    "scaling": {"mild": (0.99, 1.01), "moderate": (0.97, 1.03), "severe": (0.93, 1.07)},
    "translation": {"mild": (0.002, 0.006), "moderate": (0.006, 0.015), "severe": (0.015, 0.04)},
}

# Factors whose magnitude gets a random sign on top of the sampled range.
SIGNED_FACTORS = frozenset({"hue", "lighting", "clarity"})

# Factors whose neutral value is 1.0 instead of 0.0 (multiplicative knobs).
UNIT_NEUTRAL_FACTORS = frozenset({"contrast", "scaling"})

DEFAULT_ALPHAS = (0.25, 0.5, 0.75, 1.0)

# Region-combo classes. Weights equal to the class sizes yield the exact
# uniform distribution over all 19 combos.
COMBO_CLASS_SIZES = {
    "organ_1": 4,
    "organ_2": 6,
    "organ_3": 4,
    "organ_4": 1,
    "predefined": 4,
}


def _check_weights(name: str, weights: dict) -> None:
    if not weights:
        raise ConfigError(f"{name}: weight map is empty")
    total = 0.0
    for key, w in weights.items():
        if w < 0:
            raise ConfigError(f"{name}: negative weight for {key!r}")
        total += w
    if total <= 0:
        raise ConfigError(f"{name}: weights sum to zero")


@dataclass
class GenerationPolicy:
    """Distributions the forgery samplers draw from.

    All weight maps are unnormalized; samplers normalize on use. Invariant:
    every map is non-empty, non-negative, with a positive total.
    """

    alpha_weights: dict[float, float] = field(
        default_factory=lambda: {a: 1.0 for a in DEFAULT_ALPHAS}
    )
    factor_weights: dict[str, float] = field(
        default_factory=lambda: {f: 1.0 for f in FACTORS}
    )
    intensity_weights: dict[str, dict[str, float]] = field(
        default_factory=lambda: {f: {i: 1.0 for i in INTENSITIES} for f in FACTORS}
    )
    factor_count_range: tuple[int, int] = (1, 6)
    combo_weights: dict[str, float] = field(
        default_factory=lambda: dict(COMBO_CLASS_SIZES)
    )
    magnitudes: dict[str, dict[str, tuple[float, float]]] = field(
        default_factory=lambda: {f: dict(t) for f, t in DEFAULT_MAGNITUDES.items()}
    )

    def validate(self) -> "GenerationPolicy":
        _check_weights("alpha_weights", self.alpha_weights)
        _check_weights("factor_weights", self.factor_weights)
        _check_weights("combo_weights", self.combo_weights)
        for factor, table in self.intensity_weights.items():
            _check_weights(f"intensity_weights[{factor}]", table)
        lo, hi = self.factor_count_range
        if not (1 <= lo <= hi):
            raise ConfigError(f"factor_count_range {self.factor_count_range} invalid")
        for alpha in self.alpha_weights:
            if not (0.0 < alpha <= 1.0):
                raise ConfigError(f"alpha {alpha} outside (0, 1]")
        for factor in FACTORS:
            if factor not in self.magnitudes:
                raise ConfigError(f"magnitude table missing factor {factor!r}")
            for level in INTENSITIES:
                if level not in self.magnitudes[factor]:
                    raise ConfigError(f"magnitude table missing {factor}/{level}")
        return self

    def with_overrides(
        self,
        alpha_weights: dict | None = None,
        magnitudes: dict | None = None,
    ) -> "GenerationPolicy":
        """Return a copy with config-supplied tables swapped in."""
        out = replace(self)
        if alpha_weights:
            out.alpha_weights = {float(a): float(w) for a, w in alpha_weights.items()}
        if magnitudes:
            merged = {f: dict(t) for f, t in self.magnitudes.items()}
            for factor, table in magnitudes.items():
                if factor not in merged:
                    raise ConfigError(f"unknown factor {factor!r} in magnitude override")
                for level, rng in table.items():
                    merged[factor][level] = (float(rng[0]), float(rng[1]))
            out.magnitudes = merged
        return out.validate()


def weighted_choice(rng, weights: dict):
    """Draw one key from an unnormalized weight map.

    Keys are sorted before drawing so the result depends only on the map
    contents and the rng state, not on insertion order.
    """
    keys = sorted(weights, key=repr)
    probs = [max(0.0, float(weights[k])) for k in keys]
    total = sum(probs)
    if total <= 0:
        raise ConfigError("weighted_choice: all weights zero")
    r = rng.random() * total
    acc = 0.0
    for key, p in zip(keys, probs):
        acc += p
        if r < acc:
            return key
    return keys[-1]
