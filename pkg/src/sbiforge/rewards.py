"""Reward scoring for tagged policy responses.

A response must contain exactly one think block, one key block, and one
answer block, in that order, with nothing but whitespace outside them:

    <think>free-form reasoning</think>
    <key>Regions: nose, mouth; Clues: first clue; second clue</key>
    <answer>Fake</answer>

Four components are scored, each in [0, 1]:

* accuracy  the answer label matches the ground truth
* format    the text parses under the grammar
* keyword   a mix of region-set Jaccard overlap and clue ROUGE-L
* length    the whitespace token count sits inside configured bounds

The total is their plain sum. Group-relative advantages normalize a group
of totals to zero mean and unit spread.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import GroupTooSmallError, ParseError
from .regions import normalize_region

THINK_OPEN, THINK_CLOSE = "<think>", "</think>"
KEY_OPEN, KEY_CLOSE = "<key>", "</key>"
ANSWER_OPEN, ANSWER_CLOSE = "<answer>", "</answer>"

_TAG_SEQUENCE = (THINK_OPEN, THINK_CLOSE, KEY_OPEN, KEY_CLOSE, ANSWER_OPEN, ANSWER_CLOSE)

_KEY_BODY_RE = re.compile(r"^\s*Regions\s*:(?P<regions>.*?);\s*Clues\s*:(?P<clues>.*)$", re.DOTALL)

DEFAULT_LENGTH_BOUNDS = (48, 320)
DEFAULT_KEY_MIX = 0.5
ADVANTAGE_EPSILON = 1e-6
DEFAULT_GROUP_SIZE = 8

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def clue_tokens(phrases) -> list:
    """Lowercased alphanumeric tokens of one string or a list of phrases."""
    if isinstance(phrases, str):
        phrases = [phrases]
    tokens = []
    for phrase in phrases:
        tokens.extend(_TOKEN_RE.findall(phrase.lower()))
    return tokens


@dataclass
class ParsedResponse:
    think_text: str
    regions: set
    clues: list
    answer: str  # "real" or "fake"
    token_count: int
    unknown_regions: list = field(default_factory=list)


@dataclass
class GroundTruth:
    label: str  # "real" or "fake"
    regions: set = field(default_factory=set)
    keywords: list = field(default_factory=list)
    length_bounds: tuple = DEFAULT_LENGTH_BOUNDS

    def __post_init__(self):
        if self.label not in ("real", "fake"):
            raise ValueError(f"label must be real or fake, got {self.label!r}")
        if self.label == "real" and (self.regions or self.keywords):
            raise ValueError("real samples carry no regions or keywords")


@dataclass
class RewardBreakdown:
    r_acc: float
    r_format: float
    r_key: float
    r_len: float
    r_total: float

    @classmethod
    def from_components(cls, r_acc, r_format, r_key, r_len) -> "RewardBreakdown":
        return cls(r_acc, r_format, r_key, r_len, r_acc + r_format + r_key + r_len)

    def to_json(self) -> dict:
        return {
            "r_acc": self.r_acc,
            "r_format": self.r_format,
            "r_key": self.r_key,
            "r_len": self.r_len,
            "r_total": self.r_total,
        }


# --- grammar ----------------------------------------------------------------

def _find_tags(text: str) -> list:
    """Positions of the six grammar tags, verifying order and uniqueness."""
    positions = []
    cursor = 0
    for tag in _TAG_SEQUENCE:
        at = text.find(tag, cursor)
        if at < 0:
            anywhere = text.find(tag)
            if anywhere >= 0:
                raise ParseError(f"{tag} out of order", offset=anywhere)
            raise ParseError(f"missing {tag}", offset=len(text))
        positions.append(at)
        cursor = at + len(tag)
    # No tag is a substring of another, so a plain count detects duplicates.
    for tag in _TAG_SEQUENCE:
        if text.count(tag) != 1:
            second = text.find(tag, text.find(tag) + 1)
            raise ParseError(f"duplicate {tag}", offset=second)
    return positions


def parse_response(text: str) -> ParsedResponse:
    """Full parse under the response grammar, or ParseError with an offset."""
    if not isinstance(text, str):
        raise ParseError("response is not text", offset=0)
    positions = _find_tags(text)
    p_think_o, p_think_c, p_key_o, p_key_c, p_ans_o, p_ans_c = positions

    head = text[:p_think_o]
    if head.strip():
        raise ParseError("content before <think>", offset=0)
    between_1 = text[p_think_c + len(THINK_CLOSE) : p_key_o]
    if between_1.strip():
        raise ParseError("content between </think> and <key>", offset=p_think_c + len(THINK_CLOSE))
    between_2 = text[p_key_c + len(KEY_CLOSE) : p_ans_o]
    if between_2.strip():
        raise ParseError("content between </key> and <answer>", offset=p_key_c + len(KEY_CLOSE))
    tail = text[p_ans_c + len(ANSWER_CLOSE) :]
    if tail.strip():
        raise ParseError("content after </answer>", offset=p_ans_c + len(ANSWER_CLOSE))

    think_text = text[p_think_o + len(THINK_OPEN) : p_think_c]
    key_body = text[p_key_o + len(KEY_OPEN) : p_key_c]
    answer_body = text[p_ans_o + len(ANSWER_OPEN) : p_ans_c]

    m = _KEY_BODY_RE.match(key_body)
    if not m:
        raise ParseError(
            "key body must read 'Regions: ...; Clues: ...'", offset=p_key_o + len(KEY_OPEN)
        )
    regions: set = set()
    unknown: list = []
    for raw in m.group("regions").split(","):
        name = raw.strip()
        if not name:
            continue
        canon = normalize_region(name)
        if canon is None:
            unknown.append(name)
        else:
            regions.add(canon)
    clues = [c.strip() for c in m.group("clues").split(";") if c.strip()]

    answer = answer_body.strip().lower()
    if answer not in ("real", "fake"):
        raise ParseError(
            f"answer must be Real or Fake, got {answer_body.strip()!r}",
            offset=p_ans_o + len(ANSWER_OPEN),
        )

    return ParsedResponse(
        think_text=think_text,
        regions=regions,
        clues=clues,
        answer=answer,
        token_count=len(text.split()),
        unknown_regions=unknown,
    )


# --- reward components ------------------------------------------------------

def reward_accuracy(parsed, gt: GroundTruth) -> float:
    """1.0 when the parsed answer matches the label, else 0.0."""
    if not isinstance(parsed, ParsedResponse):
        return 0.0
    return 1.0 if parsed.answer == gt.label else 0.0


def reward_format(text: str) -> float:
    """1.0 iff the text parses fully under the grammar."""
    try:
        parse_response(text)
    except ParseError:
        return 0.0
    return 1.0


def jaccard_regions(pred: set, gt: set) -> float:
    """|pred ∩ gt| / |pred ∪ gt|; two empty sets count as a perfect 1.0."""
    pred, gt = set(pred), set(gt)
    union = pred | gt
    if not union:
        return 1.0
    return len(pred & gt) / len(union)


def _lcs_length(a: list, b: list) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l_f1(pred_tokens: list, gt_tokens: list) -> float:
    """F1 over the longest common subsequence of two token lists."""
    if not pred_tokens and not gt_tokens:
        return 1.0
    if not pred_tokens or not gt_tokens:
        return 0.0
    lcs = _lcs_length(pred_tokens, gt_tokens)
    if lcs == 0:
        return 0.0
    precision = lcs / len(pred_tokens)
    recall = lcs / len(gt_tokens)
    return 2.0 * precision * recall / (precision + recall)


def reward_keyword(parsed, gt: GroundTruth, mix: float = DEFAULT_KEY_MIX) -> float:
    """mix * region Jaccard + (1 - mix) * clue ROUGE-L; 0 for parse failures."""
    if not 0.0 <= mix <= 1.0:
        raise ValueError(f"mix weight {mix} outside [0, 1]")
    if not isinstance(parsed, ParsedResponse):
        return 0.0
    localization = jaccard_regions(parsed.regions, gt.regions)
    overlap = rouge_l_f1(clue_tokens(parsed.clues), clue_tokens(gt.keywords))
    return mix * localization + (1.0 - mix) * overlap


def reward_length(token_count: int, bounds=DEFAULT_LENGTH_BOUNDS) -> float:
    """1.0 inside [lo, hi]; linear ramps of width lo below and hi/2 above."""
    lo, hi = bounds
    if not (0 < lo < hi):
        raise ValueError(f"invalid length bounds {bounds}")
    if token_count < lo:
        return max(0.0, token_count / lo)
    if token_count > hi:
        return max(0.0, 1.0 - (token_count - hi) / (hi / 2.0))
    return 1.0


@dataclass
class RewardConfig:
    key_mix: float = DEFAULT_KEY_MIX


def total_reward(text: str, gt: GroundTruth, config: RewardConfig | None = None) -> RewardBreakdown:
    """Score one response. Unparseable text keeps only the length component,
    computed from the raw whitespace token count."""
    config = config or RewardConfig()
    try:
        parsed = parse_response(text)
    except ParseError as err:
        parsed = err
    if isinstance(parsed, ParsedResponse):
        r_format = 1.0
        token_count = parsed.token_count
    else:
        r_format = 0.0
        token_count = len(text.split()) if isinstance(text, str) else 0
    r_acc = reward_accuracy(parsed, gt)
    r_key = reward_keyword(parsed, gt, config.key_mix)
    r_len = reward_length(token_count, gt.length_bounds)
    return RewardBreakdown.from_components(r_acc, r_format, r_key, r_len)


# --- group-relative advantages ----------------------------------------------

def group_advantages(rewards) -> list:
    """(r_i - mean) / (population std + epsilon) for each group member.

    A zero-variance group yields exactly zero advantages.
    """
    values = [float(r) for r in rewards]
    if len(values) < 2:
        raise GroupTooSmallError(f"need at least 2 rewards, got {len(values)}")
    mean = sum(values) / len(values)
    variance = sum((v - mean) ** 2 for v in values) / len(values)
    std = variance**0.5
    return [(v - mean) / (std + ADVANTAGE_EPSILON) for v in values]
