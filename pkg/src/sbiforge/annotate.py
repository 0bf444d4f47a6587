"""CoT annotation: build the prompt around the ground-truth evidence, call
an external multimodal endpoint, and gate every response against that
ground truth. A deterministic template writer covers offline runs and tests.

The gate is strict by design: an accepted record must parse under the
response grammar and echo exactly the ground-truth regions and keywords.
Anything the endpoint hallucinates beyond the supplied evidence is
rejected and retried with a repair instruction.
"""
from __future__ import annotations

import base64
import os
from dataclasses import dataclass, field

import requests

from .captions import KeyCaptionSet
from .errors import EmptyEvidenceError, EndpointUnavailable, ParseError, ValidationExhausted
from .rewards import (
    ANSWER_CLOSE,
    ANSWER_OPEN,
    KEY_CLOSE,
    KEY_OPEN,
    THINK_CLOSE,
    THINK_OPEN,
    parse_response,
)

ENDPOINT_URL_ENV = "ANNOTATE_ENDPOINT_URL"
API_KEY_ENV = "ANNOTATE_API_KEY"
MODEL_NAME_ENV = "ANNOTATE_MODEL_NAME"

FORMAT_DESCRIPTOR = (
    "Respond with exactly one <think>...</think> block, then one "
    "<key>...</key> block whose body reads 'Regions: <comma-separated "
    "region names>; Clues: <semicolon-separated phrases>', then one "
    "<answer>Real</answer> or <answer>Fake</answer> block. No other text."
)

_HUMAN_NAMES = {
    "full_face": "whole face",
    "left_eye": "left eye",
    "right_eye": "right eye",
    "left_eyebrow": "left eyebrow",
    "right_eyebrow": "right eyebrow",
}


def _human(region: str) -> str:
    return _HUMAN_NAMES.get(region, region)


@dataclass
class PromptBundle:
    system_text: str
    user_text: str
    image_refs: list  # [real_path, forged_path]
    required_format: str
    gt_regions: set = field(default_factory=set)
    gt_keywords: list = field(default_factory=list)


@dataclass
class CoTRecord:
    text: str
    regions: set
    keywords: list
    source: str  # "endpoint" or "template"
    attempts: int = 1

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "regions": sorted(self.regions),
            "keywords": list(self.keywords),
            "source": self.source,
            "attempts": self.attempts,
        }


@dataclass
class AnnotationEndpoint:
    url: str
    model_name: str = "annotator"
    api_key: str | None = None
    timeout_s: float = 60.0

    @classmethod
    def from_env(cls) -> "AnnotationEndpoint":
        url = os.environ.get(ENDPOINT_URL_ENV)
        if not url:
            raise EndpointUnavailable(f"{ENDPOINT_URL_ENV} is not set")
        return cls(
            url=url,
            model_name=os.environ.get(MODEL_NAME_ENV, "annotator"),
            api_key=os.environ.get(API_KEY_ENV),
        )


@dataclass
class RetryPolicy:
    max_attempts: int = 3


def build_annotation_prompt(sample, captions: KeyCaptionSet) -> PromptBundle:
    """Prompt for one forged sample. ``sample`` needs ``real_image_path``
    and ``forged_image_path`` attributes; every keyword phrase is embedded
    verbatim so the gate can hold the response to it."""
    if not captions.keywords:
        raise EmptyEvidenceError("forged sample has no key captions to describe")

    region_list = ", ".join(sorted(captions.regions))
    evidence_lines = [
        f"- {_human(k.region)} / {k.factor}: {k.phrase}" for k in captions.keywords
    ]
    user_text = (
        "The first image is the original face; the second is a manipulated "
        "copy of it. The manipulation is confined to these regions: "
        f"{region_list}.\n"
        "Ground-truth anomaly descriptions, one per affected region and factor:\n"
        + "\n".join(evidence_lines)
        + "\n\nWrite a step-by-step visual inspection that notices each listed "
        "anomaly. Select the most contextually appropriate description while "
        "ensuring semantic distinctiveness. In the key block, list the regions "
        "exactly as given above and the clue phrases exactly as listed, "
        "separated by semicolons. Conclude that the image is Fake.\n\n"
        + FORMAT_DESCRIPTOR
    )
    system_text = (
        "You are a forensic face-manipulation analyst. You describe only "
        "evidence you are given, never inventing regions or artifacts."
    )
    return PromptBundle(
        system_text=system_text,
        user_text=user_text,
        image_refs=[sample.real_image_path, sample.forged_image_path],
        required_format=FORMAT_DESCRIPTOR,
        gt_regions=set(captions.regions),
        gt_keywords=[k.phrase for k in captions.keywords],
    )


def _encode_image(path) -> str:
    with open(path, "rb") as fh:
        return base64.b64encode(fh.read()).decode("ascii")


def build_chat_payload(prompt: PromptBundle, endpoint: AnnotationEndpoint) -> dict:
    """Chat-completions style request with base64 PNG attachments."""
    content = [{"type": "text", "text": prompt.user_text}]
    for ref in prompt.image_refs:
        content.append(
            {
                "type": "image_url",
                "image_url": {"url": f"data:image/png;base64,{_encode_image(ref)}"},
            }
        )
    return {
        "model": endpoint.model_name,
        "messages": [
            {"role": "system", "content": prompt.system_text},
            {"role": "user", "content": content},
        ],
    }


def _http_transport(prompt: PromptBundle, endpoint: AnnotationEndpoint) -> str:
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    try:
        resp = requests.post(
            endpoint.url,
            json=build_chat_payload(prompt, endpoint),
            headers=headers,
            timeout=endpoint.timeout_s,
        )
        resp.raise_for_status()
        data = resp.json()
        return data["choices"][0]["message"]["content"]
    except requests.RequestException as exc:
        raise EndpointUnavailable(f"annotation endpoint failed: {exc}") from exc
    except (KeyError, IndexError, ValueError) as exc:
        raise EndpointUnavailable(f"malformed endpoint reply: {exc}") from exc


def _validate(text: str, regions: set, keywords: list) -> tuple:
    parsed = parse_response(text)  # raises ParseError on grammar violations
    if parsed.regions != set(regions):
        raise ParseError(
            f"regions {sorted(parsed.regions)} do not match ground truth {sorted(regions)}"
        )
    if sorted(parsed.clues) != sorted(keywords):
        raise ParseError("clue phrases do not match ground-truth keywords")
    return parsed.regions, parsed.clues


_REPAIR_INSTRUCTION = (
    "\n\nYour previous reply was rejected: {reason}. Reply again, strictly "
    "following the required format, using exactly the ground-truth regions "
    "and clue phrases listed above."
)


def request_cot(
    prompt: PromptBundle,
    endpoint: AnnotationEndpoint,
    retry_policy: RetryPolicy | None = None,
    transport=None,
) -> CoTRecord:
    """Ask the endpoint for a CoT annotation, retrying with a repair
    instruction until the response passes the ground-truth gate."""
    retry_policy = retry_policy or RetryPolicy()
    transport = transport or _http_transport
    attempt_prompt = prompt
    last_error = None
    for attempt in range(1, retry_policy.max_attempts + 1):
        text = transport(attempt_prompt, endpoint)
        try:
            regions, clues = _validate(text, prompt.gt_regions, prompt.gt_keywords)
        except ParseError as err:
            last_error = err
            repaired = prompt.user_text + _REPAIR_INSTRUCTION.format(reason=err)
            attempt_prompt = PromptBundle(
                system_text=prompt.system_text,
                user_text=repaired,
                image_refs=prompt.image_refs,
                required_format=prompt.required_format,
                gt_regions=prompt.gt_regions,
                gt_keywords=prompt.gt_keywords,
            )
            continue
        return CoTRecord(
            text=text,
            regions=regions,
            keywords=clues,
            source="endpoint",
            attempts=attempt,
        )
    raise ValidationExhausted(
        f"no valid annotation after {retry_policy.max_attempts} attempts",
        attempts=retry_policy.max_attempts,
        last_error=last_error,
    )


def template_cot(captions: KeyCaptionSet | None, label: str) -> CoTRecord:
    """Deterministic annotation from the ground truth alone.

    Round-trip safe: parsing the produced text recovers exactly the caption
    regions, phrases, and label.
    """
    if label not in ("real", "fake"):
        raise ValueError(f"label must be real or fake, got {label!r}")
    if label == "fake" and (captions is None or not captions.keywords):
        raise EmptyEvidenceError("fake samples need at least one key caption")

    if label == "real":
        think = (
            "Examining the face for manipulation artifacts: color transitions, "
            "lighting balance, texture sharpness, and feature placement all "
            "look consistent. No region stands out as edited."
        )
        key_body = "Regions: ; Clues: "
        answer = "Real"
        regions: set = set()
        phrases: list = []
    else:
        lines = [
            f"The {_human(k.region)} shows a {k.factor} anomaly: {k.phrase}."
            for k in captions.keywords
        ]
        think = (
            "Examining the face region by region for manipulation artifacts. "
            + " ".join(lines)
            + " Taken together these localized inconsistencies indicate a forgery."
        )
        regions = set(captions.regions)
        phrases = [k.phrase for k in captions.keywords]
        key_body = f"Regions: {', '.join(sorted(regions))}; Clues: {'; '.join(phrases)}"
        answer = "Fake"

    text = (
        f"{THINK_OPEN}{think}{THINK_CLOSE}\n"
        f"{KEY_OPEN}{key_body}{KEY_CLOSE}\n"
        f"{ANSWER_OPEN}{answer}{ANSWER_CLOSE}"
    )
    parsed = parse_response(text)  # template output must always parse
    return CoTRecord(
        text=text,
        regions=parsed.regions,
        keywords=parsed.clues,
        source="template",
    )
