"""Dataset generation, manifest validation, and bit-exact replay.

A run turns a directory of real face images plus landmark files into a
JSONL manifest of real and forged samples. Every forged row carries full
provenance (seed, region combo, perturbation recipe, mask recipe, blending
weight, selected captions), which makes two things possible:

* validation can recompute every difference measure from the stored files
  and confirm each caption still clears its threshold, and
* replay can regenerate the forged image and mask from the stored recipe
  and compare them pixel-for-pixel against the files on disk.

The first manifest line is a header object carrying the run metadata and a
timestamp; all other lines are sample records. Re-running with the same
config and seed reproduces every byte below the header, regardless of the
worker count, because sample i draws from its own stream seeded with
``master_seed + i``.
"""
from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__ as GENERATOR_VERSION
from .annotate import (
    AnnotationEndpoint,
    RetryPolicy,
    build_annotation_prompt,
    request_cot,
    template_cot,
)
from .captions import (
    CaptionTable,
    GeometrySpec,
    KeyCaptionSet,
    load_caption_table_file,
    load_default_caption_table,
    measure_region_differences,
    select_key_captions,
)
from .compositor import (
    BlendSpec,
    PerturbationParams,
    apply_augmentation,
    blend_forgery,
    load_image,
    load_mask,
    quantize,
    sample_alpha,
    sample_perturbation,
    save_image,
    save_mask,
    translation_offsets,
)
from .curriculum import D_MAX, policy_for
from .errors import (
    ConfigError,
    EmptyMaskError,
    EndpointUnavailable,
    ParseError,
    SubThresholdSample,
    ValidationExhausted,
)
from .masks import (
    LandmarkSet81,
    MaskTransformParams,
    RegionCombo,
    all_region_combos,
    rasterize_mask,
    regions_from_landmarks,
    sample_region_combo,
    sample_transform_params,
    transform_mask,
)
from .rewards import DEFAULT_KEY_MIX, DEFAULT_LENGTH_BOUNDS, parse_response

logger = logging.getLogger(__name__)

MAX_XI_RESAMPLES = 5
VALID_COMBO_KEYS = {c.key() for c in all_region_combos()}

CONFIG_SCHEMA = {
    "images_dir": "directory of real face PNGs (required)",
    "landmarks_dir": "directory of <image-stem>.json landmark files (required)",
    "output_dir": "where images/, masks/, cot/, manifest.jsonl go (required)",
    "seed": "integer master seed; sample i uses seed + i (required)",
    "counts": {"real": "real rows to emit", "fake": "forged rows to emit"},
    "difficulty_level": f"generation difficulty in [0, {D_MAX}], default 0",
    "workers": "thread pool size for generation, default 1",
    "annotation": {
        "mode": "'template' (offline) or 'endpoint'",
        "timeout_s": "endpoint request timeout, default 60",
        "max_inflight": "concurrent endpoint requests, default 4",
    },
    "alpha_weights": "optional blending-weight table, e.g. {'0.5': 1.0}",
    "magnitude_table": "optional per-(factor, intensity) range overrides",
    "mask_transform": {
        "morph_radius": "[lo, hi] disc radius, default [1, 3]",
        "scale_range": "[lo, hi] jitter scale, default [0.97, 1.03]",
        "blur_sigma": "[lo, hi] boundary blur, default [1.0, 3.0]",
        "jitter_frac": "jitter as a fraction of the short side, default 0.01",
    },
    "caption_table": "optional path to a caption table JSON (default bundled)",
    "reward": {
        "key_mix": f"Jaccard/ROUGE mix weight, default {DEFAULT_KEY_MIX}",
        "length_bounds": f"[min, max] response tokens, default {list(DEFAULT_LENGTH_BOUNDS)}",
    },
    "curriculum": {
        "window": "reward history window, default 20",
        "high": "raise-difficulty mean threshold, default 3.2",
        "low": "lower-difficulty mean threshold, default 2.0",
        "stab_max": "max stddev for a raise, default 0.4",
        "cooldown": "batches between level moves, default 5",
        "invert": "flip the feedback direction, default false",
        "freeze_after_batches": "stop adjusting after N batches, default never",
    },
    "mix": {"plain_fraction": "fraction of rows emitted without CoT, default 0.0"},
}


@dataclass
class RunConfig:
    images_dir: str
    landmarks_dir: str
    output_dir: str
    seed: int
    real_count: int
    fake_count: int
    difficulty_level: int = 0
    workers: int = 1
    annotation_mode: str = "template"
    annotation_timeout_s: float = 60.0
    annotation_max_inflight: int = 4
    alpha_weights: dict | None = None
    magnitude_table: dict | None = None
    mask_transform: dict = field(default_factory=dict)
    caption_table_path: str | None = None
    key_mix: float = DEFAULT_KEY_MIX
    length_bounds: tuple = DEFAULT_LENGTH_BOUNDS
    plain_fraction: float = 0.0

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        try:
            counts = doc.get("counts", {})
            cfg = cls(
                images_dir=doc["images_dir"],
                landmarks_dir=doc["landmarks_dir"],
                output_dir=doc["output_dir"],
                seed=int(doc["seed"]),
                real_count=int(counts.get("real", 0)),
                fake_count=int(counts.get("fake", 0)),
                difficulty_level=int(doc.get("difficulty_level", 0)),
                workers=int(doc.get("workers", 1)),
                annotation_mode=doc.get("annotation", {}).get("mode", "template"),
                annotation_timeout_s=float(doc.get("annotation", {}).get("timeout_s", 60.0)),
                annotation_max_inflight=int(doc.get("annotation", {}).get("max_inflight", 4)),
                alpha_weights=doc.get("alpha_weights"),
                magnitude_table=doc.get("magnitude_table"),
                mask_transform=doc.get("mask_transform", {}),
                caption_table_path=doc.get("caption_table"),
                key_mix=float(doc.get("reward", {}).get("key_mix", DEFAULT_KEY_MIX)),
                length_bounds=tuple(
                    doc.get("reward", {}).get("length_bounds", DEFAULT_LENGTH_BOUNDS)
                ),
                plain_fraction=float(doc.get("mix", {}).get("plain_fraction") or 0.0),
            )
        except KeyError as exc:
            raise ConfigError(f"config missing required field {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def validate(self) -> "RunConfig":
        if self.real_count < 0 or self.fake_count < 0:
            raise ConfigError("sample counts must be >= 0")
        if not (0 <= self.difficulty_level <= D_MAX):
            raise ConfigError(f"difficulty_level outside [0, {D_MAX}]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.annotation_mode not in ("template", "endpoint"):
            raise ConfigError(f"unknown annotation mode {self.annotation_mode!r}")
        if not (0.0 <= self.plain_fraction <= 1.0):
            raise ConfigError("mix.plain_fraction must lie in [0, 1]")
        return self

    def load_caption_table(self) -> CaptionTable:
        if self.caption_table_path:
            return load_caption_table_file(self.caption_table_path)
        return load_default_caption_table()

    def generation_policy(self):
        return policy_for(self.difficulty_level).with_overrides(
            alpha_weights=self.alpha_weights, magnitudes=self.magnitude_table
        )


# --- sample records ----------------------------------------------------------

@dataclass
class SampleRecord:
    id: str
    label: str
    real_image_path: str
    landmarks_path: str
    seed: int
    generator_version: str
    forged_image_path: str | None = None
    mask_path: str | None = None
    combo: RegionCombo | None = None
    xi: PerturbationParams | None = None
    alpha: float | None = None
    mask_params: MaskTransformParams | None = None
    captions: KeyCaptionSet | None = None
    cot_path: str | None = None
    cot_source: str | None = None

    def to_json(self) -> dict:
        obj = {
            "id": self.id,
            "label": self.label,
            "real_image_path": self.real_image_path,
            "landmarks_path": self.landmarks_path,
            "seed": self.seed,
            "generator_version": self.generator_version,
        }
        if self.cot_path is not None:
            obj["cot_path"] = self.cot_path
            obj["cot_source"] = self.cot_source
        if self.label == "fake":
            obj.update(
                {
                    "forged_image_path": self.forged_image_path,
                    "mask_path": self.mask_path,
                    "combo": self.combo.to_json(),
                    "xi": self.xi.to_json(),
                    "alpha": self.alpha,
                    "mask_params": self.mask_params.to_json(),
                    "captions": self.captions.to_json(),
                }
            )
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "SampleRecord":
        rec = cls(
            id=obj["id"],
            label=obj["label"],
            real_image_path=obj["real_image_path"],
            landmarks_path=obj["landmarks_path"],
            seed=int(obj["seed"]),
            generator_version=obj["generator_version"],
            cot_path=obj.get("cot_path"),
            cot_source=obj.get("cot_source"),
        )
        if rec.label == "fake":
            rec.forged_image_path = obj["forged_image_path"]
            rec.mask_path = obj["mask_path"]
            rec.combo = RegionCombo.from_json(obj["combo"])
            rec.xi = PerturbationParams.from_json(obj["xi"])
            rec.alpha = float(obj["alpha"])
            rec.mask_params = MaskTransformParams.from_json(obj["mask_params"])
            rec.captions = KeyCaptionSet.from_json(obj["captions"])
        return rec


def geometry_from_recipe(xi: PerturbationParams, face_box_diag: float) -> GeometrySpec:
    scale = 1.0
    translation = (0.0, 0.0)
    if "scaling" in xi.factors:
        scale = xi.factors["scaling"].magnitude
    if "translation" in xi.factors:
        translation = translation_offsets(xi.factors["translation"], face_box_diag)
    return GeometrySpec(scale=scale, translation=translation)


def synthesize_mask_only(shape, landmarks: LandmarkSet81, combo: RegionCombo,
                         mask_params: MaskTransformParams) -> np.ndarray:
    height, width = shape[0], shape[1]
    union = np.zeros((height, width), dtype=np.uint8)
    for region in sorted(combo.regions):
        union |= rasterize_mask([regions_from_landmarks(landmarks, region)], width, height)
    return transform_mask(union, mask_params)


def synthesize_forgery(
    real: np.ndarray,
    landmarks: LandmarkSet81,
    combo: RegionCombo,
    xi: PerturbationParams,
    alpha: float,
    mask_params: MaskTransformParams,
):
    """Deterministic core: recipe in, quantized forged image and masks out."""
    height, width = real.shape[0], real.shape[1]
    region_masks = {
        region: rasterize_mask(
            [regions_from_landmarks(landmarks, region)], width, height
        )
        for region in sorted(combo.regions)
    }
    union = np.zeros((height, width), dtype=np.uint8)
    for mask in region_masks.values():
        union |= mask
    soft = transform_mask(union, mask_params)
    soft_q = np.clip(np.rint(soft * 255.0), 0, 255) / 255.0

    augmented = apply_augmentation(real, xi, face_box_diag=landmarks.face_box_diagonal())
    forged = blend_forgery(real, augmented, soft_q, BlendSpec(alpha))
    return quantize(forged), soft_q, region_masks


# --- generation ---------------------------------------------------------------

def _discover_sources(config: RunConfig) -> list:
    images_dir = Path(config.images_dir)
    landmarks_dir = Path(config.landmarks_dir)
    if not images_dir.is_dir():
        raise ConfigError(f"images_dir {images_dir} is not a directory")
    if not landmarks_dir.is_dir():
        raise ConfigError(f"landmarks_dir {landmarks_dir} is not a directory")
    sources = []
    for image_path in sorted(images_dir.glob("*.png")):
        landmark_path = landmarks_dir / f"{image_path.stem}.json"
        if not landmark_path.exists():
            logger.warning("no landmark file for %s, skipping image", image_path.name)
            continue
        sources.append((str(image_path.resolve()), str(landmark_path.resolve())))
    if not sources and (config.real_count or config.fake_count):
        raise ConfigError("no usable (image, landmarks) pairs found")
    return sources


@dataclass
class _SampleResult:
    index: int
    record: SampleRecord | None
    skip_reason: str | None = None


class _Annotator:
    """Per-run annotation strategy: template, or endpoint with a bounded
    in-flight limit and a template fallback when the gate gives up."""

    def __init__(self, config: RunConfig, transport=None):
        self.mode = config.annotation_mode
        self.transport = transport
        self.endpoint = None
        self.semaphore = threading.Semaphore(config.annotation_max_inflight)
        if self.mode == "endpoint":
            try:
                self.endpoint = AnnotationEndpoint.from_env()
            except EndpointUnavailable as exc:
                raise ConfigError(f"annotation mode is 'endpoint' but {exc}") from exc
            self.endpoint.timeout_s = config.annotation_timeout_s

    def annotate_fake(self, sample_id, real_path, forged_path, captions):
        if self.mode == "endpoint":
            prompt = build_annotation_prompt(
                SimpleNamespace(real_image_path=real_path, forged_image_path=forged_path),
                captions,
            )
            with self.semaphore:
                try:
                    return request_cot(prompt, self.endpoint, RetryPolicy(), self.transport)
                except (EndpointUnavailable, ValidationExhausted) as exc:
                    logger.warning(
                        "endpoint annotation failed for %s (%s); falling back to template",
                        sample_id,
                        exc,
                    )
        return template_cot(captions, "fake")

    def annotate_real(self):
        return template_cot(None, "real")


def _generate_one(index: int, config: RunConfig, sources, policy, table, out_dir: Path,
                  annotator: _Annotator):
    rng = np.random.default_rng(config.seed + index)
    image_path, landmark_path = sources[index % len(sources)]
    sample_id = f"sample_{index:06d}"
    is_real = index < config.real_count
    plain = config.plain_fraction > 0 and rng.random() < config.plain_fraction

    record = SampleRecord(
        id=sample_id,
        label="real" if is_real else "fake",
        real_image_path=image_path,
        landmarks_path=landmark_path,
        seed=config.seed + index,
        generator_version=GENERATOR_VERSION,
    )

    if is_real:
        if not plain:
            cot = annotator.annotate_real()
            cot_rel = f"cot/{sample_id}.txt"
            (out_dir / cot_rel).write_text(cot.text)
            record.cot_path = cot_rel
            record.cot_source = cot.source
        return _SampleResult(index, record)

    real = load_image(image_path)
    landmarks = LandmarkSet81.from_file(landmark_path)
    if (landmarks.image_width, landmarks.image_height) != (real.shape[1], real.shape[0]):
        return _SampleResult(index, None, "landmark dimensions do not match image")

    combo = sample_region_combo(rng, policy)
    alpha = sample_alpha(rng, policy).alpha
    mask_spec = dict(config.mask_transform)
    mask_spec.setdefault("short_side", min(real.shape[0], real.shape[1]))
    mask_params = sample_transform_params(rng, mask_spec)
    # Thin regions (eyebrows) can vanish under a large erosion radius; back
    # the radius off until the region survives. The effective params are
    # stored in the row, so replay stays bit-exact.
    while mask_params.morph_op == "erode" and mask_params.morph_radius > 0:
        try:
            synthesize_mask_only(real.shape, landmarks, combo, mask_params)
            break
        except EmptyMaskError:
            mask_params = MaskTransformParams(
                morph_op=mask_params.morph_op,
                morph_radius=mask_params.morph_radius - 1,
                jitter_dx=mask_params.jitter_dx,
                jitter_dy=mask_params.jitter_dy,
                jitter_scale=mask_params.jitter_scale,
                blur_sigma=mask_params.blur_sigma,
            )

    captions = None
    outcome = None
    for _ in range(1 + MAX_XI_RESAMPLES):
        xi = sample_perturbation(rng, policy)
        try:
            forged_q, soft_q, region_masks = synthesize_forgery(
                real, landmarks, combo, xi, alpha, mask_params
            )
        except EmptyMaskError as exc:
            return _SampleResult(index, None, str(exc))
        geometry = geometry_from_recipe(xi, landmarks.face_box_diagonal())
        stats = measure_region_differences(real, forged_q, region_masks, geometry)
        try:
            captions = select_key_captions(
                stats, combo, table, rng, xi.intensity_by_factor()
            )
        except SubThresholdSample:
            continue
        outcome = (xi, forged_q, soft_q)
        break
    if outcome is None:
        return _SampleResult(index, None, "all recipes stayed below caption thresholds")

    xi, forged_q, soft_q = outcome
    forged_rel = f"images/{sample_id}_forged.png"
    mask_rel = f"masks/{sample_id}_mask.png"
    save_image(forged_q, out_dir / forged_rel)
    save_mask(soft_q, out_dir / mask_rel)

    record.forged_image_path = forged_rel
    record.mask_path = mask_rel
    record.combo = combo
    record.xi = xi
    record.alpha = alpha
    record.mask_params = mask_params
    record.captions = captions

    if not plain:
        cot = annotator.annotate_fake(
            sample_id, image_path, str(out_dir / forged_rel), captions
        )
        cot_rel = f"cot/{sample_id}.txt"
        (out_dir / cot_rel).write_text(cot.text)
        record.cot_path = cot_rel
        record.cot_source = cot.source
    return _SampleResult(index, record)


def generate_dataset(config: RunConfig, annotation_transport=None) -> Path:
    """Run a full generation pass; returns the manifest path.

    ``annotation_transport`` overrides the endpoint HTTP transport (used by
    tests to mock the external annotator).
    """
    config.validate()
    sources = _discover_sources(config)
    policy = config.generation_policy()
    table = config.load_caption_table()
    annotator = _Annotator(config, transport=annotation_transport)

    out_dir = Path(config.output_dir)
    for sub in ("images", "masks", "cot"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)

    total = config.real_count + config.fake_count
    results: list = [None] * total
    if total:
        def work(i):
            return _generate_one(i, config, sources, policy, table, out_dir, annotator)

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                for res in pool.map(work, range(total)):
                    results[res.index] = res
        else:
            for i in range(total):
                results[i] = work(i)

    produced = {"real": 0, "fake": 0}
    skipped = []
    rows = []
    for res in results:
        if res is None:
            continue
        if res.record is None:
            skipped.append({"index": res.index, "reason": res.skip_reason})
            logger.warning("sample %d skipped: %s", res.index, res.skip_reason)
            continue
        produced[res.record.label] += 1
        rows.append(res.record)

    header = {
        "kind": "header",
        "generator_version": GENERATOR_VERSION,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "seed": config.seed,
        "requested": {"real": config.real_count, "fake": config.fake_count},
        "produced": produced,
        "skipped": skipped,
        "difficulty_level": config.difficulty_level,
    }
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for record in rows:
            fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
    logger.info(
        "wrote %s: %d real, %d fake, %d skipped",
        manifest_path,
        produced["real"],
        produced["fake"],
        len(skipped),
    )
    return manifest_path


# --- validation ---------------------------------------------------------------

@dataclass
class Violation:
    row: int  # 1-based manifest line number
    kind: str
    message: str


@dataclass
class ValidationReport:
    manifest: str
    rows_checked: int = 0
    violations: list = field(default_factory=list)

    def ok(self) -> bool:
        return not self.violations

    def add(self, row: int, kind: str, message: str):
        self.violations.append(Violation(row, kind, message))


def _resolve(base: Path, ref: str) -> Path:
    path = Path(ref)
    return path if path.is_absolute() else base / path


def load_manifest(path):
    """(header, [(line_number, record_dict), ...]) for a manifest file."""
    header = None
    rows = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("kind") == "header":
                header = obj
            else:
                rows.append((line_no, obj))
    return header, rows


def validate_manifest(path, recheck_keywords: bool = True) -> ValidationReport:
    """Schema, file-existence, invariant, and keyword-soundness checks."""
    report = ValidationReport(manifest=str(path))
    base = Path(path).resolve().parent
    try:
        header, rows = load_manifest(path)
    except (OSError, json.JSONDecodeError) as exc:
        report.add(0, "unreadable", str(exc))
        return report
    if header is None:
        report.add(1, "schema", "missing header line")

    for line_no, obj in rows:
        report.rows_checked += 1
        try:
            record = SampleRecord.from_json(obj)
        except (KeyError, ValueError, TypeError) as exc:
            report.add(line_no, "schema", f"bad record: {exc!r}")
            continue

        for ref_name in ("real_image_path", "landmarks_path", "cot_path"):
            ref = getattr(record, ref_name)
            if ref and not _resolve(base, ref).exists():
                report.add(line_no, "missing-file", f"{ref_name}: {ref}")

        if record.label == "real":
            for bad_key in ("forged_image_path", "mask_path", "captions", "xi", "alpha"):
                if obj.get(bad_key) is not None:
                    report.add(line_no, "invariant", f"real row carries {bad_key}")
            continue

        for ref_name in ("forged_image_path", "mask_path"):
            ref = getattr(record, ref_name)
            if not ref:
                report.add(line_no, "schema", f"fake row missing {ref_name}")
            elif not _resolve(base, ref).exists():
                report.add(line_no, "missing-file", f"{ref_name}: {ref}")

        if record.combo and record.combo.key() not in VALID_COMBO_KEYS:
            report.add(line_no, "invariant", f"unknown combo {record.combo.key()}")
        if record.alpha is not None and not (0.0 < record.alpha <= 1.0):
            report.add(line_no, "invariant", f"alpha {record.alpha} outside (0, 1]")
        if record.captions and record.combo:
            extra = record.captions.regions - set(record.combo.regions)
            if extra:
                report.add(line_no, "invariant", f"caption regions outside combo: {sorted(extra)}")

        if recheck_keywords and not any(v.row == line_no for v in report.violations):
            _recheck_keywords(record, base, line_no, report)

        if record.cot_path:
            _recheck_cot(record, base, line_no, report)
    return report


def _recheck_keywords(record: SampleRecord, base: Path, line_no: int, report: ValidationReport):
    try:
        real = load_image(_resolve(base, record.real_image_path))
        forged = load_image(_resolve(base, record.forged_image_path))
        landmarks = LandmarkSet81.from_file(_resolve(base, record.landmarks_path))
        height, width = real.shape[0], real.shape[1]
        masks = {
            region: rasterize_mask(
                [regions_from_landmarks(landmarks, region)], width, height
            )
            for region in sorted(record.combo.regions)
        }
        geometry = geometry_from_recipe(record.xi, landmarks.face_box_diagonal())
        stats = measure_region_differences(real, forged, masks, geometry)
    except Exception as exc:  # any recompute failure is a finding, not a crash
        report.add(line_no, "keyword-recompute", f"{exc!r}")
        return
    for caption in record.captions.keywords:
        measured = stats.get(caption.region, caption.factor)
        if measured <= caption.threshold:
            report.add(
                line_no,
                "keyword-soundness",
                f"({caption.region}, {caption.factor}) measured {measured:.6g} "
                f"<= threshold {caption.threshold:.6g}",
            )


def _recheck_cot(record: SampleRecord, base: Path, line_no: int, report: ValidationReport):
    try:
        text = _resolve(base, record.cot_path).read_text()
    except OSError:
        return  # existence already reported
    try:
        parsed = parse_response(text)
    except ParseError as exc:
        report.add(line_no, "cot-grammar", str(exc))
        return
    expected_label = record.label
    if parsed.answer != expected_label:
        report.add(line_no, "cot-label", f"cot answers {parsed.answer}, row is {expected_label}")
    if record.label == "fake" and record.captions:
        if parsed.regions != set(record.captions.regions):
            report.add(line_no, "cot-regions", "cot regions diverge from stored captions")
        if sorted(parsed.clues) != sorted(record.captions.phrases()):
            report.add(line_no, "cot-clues", "cot clues diverge from stored captions")


# --- replay -------------------------------------------------------------------

@dataclass
class ReplayVerdict:
    row_id: str
    verdict: str  # "identical", "mismatch", or "version_skew"
    detail: str = ""


def replay(manifest_path, row_id: str) -> ReplayVerdict:
    """Regenerate one forged row from its stored recipe and compare."""
    base = Path(manifest_path).resolve().parent
    _, rows = load_manifest(manifest_path)
    record = None
    for _, obj in rows:
        if obj.get("id") == row_id:
            record = SampleRecord.from_json(obj)
            break
    if record is None:
        raise ConfigError(f"row {row_id!r} not found in manifest")
    if record.label != "fake":
        raise ConfigError(f"row {row_id!r} is a real sample; nothing to replay")
    if record.generator_version != GENERATOR_VERSION:
        return ReplayVerdict(
            row_id,
            "version_skew",
            f"row written by {record.generator_version}, current {GENERATOR_VERSION}",
        )

    real = load_image(_resolve(base, record.real_image_path))
    landmarks = LandmarkSet81.from_file(_resolve(base, record.landmarks_path))
    forged_q, soft_q, _ = synthesize_forgery(
        real, landmarks, record.combo, record.xi, record.alpha, record.mask_params
    )
    stored_forged = load_image(_resolve(base, record.forged_image_path))
    stored_mask = load_mask(_resolve(base, record.mask_path))

    diffs = []
    if not np.array_equal(forged_q, stored_forged):
        per_channel = np.abs(forged_q - stored_forged).reshape(-1, 3).max(axis=0)
        diffs.append(f"forged image max diff per channel {per_channel.tolist()}")
    if not np.array_equal(soft_q, stored_mask):
        diffs.append(f"mask max diff {float(np.abs(soft_q - stored_mask).max()):.6g}")
    if diffs:
        return ReplayVerdict(row_id, "mismatch", "; ".join(diffs))
    return ReplayVerdict(row_id, "identical")
