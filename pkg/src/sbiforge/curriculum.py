"""Reward-feedback curriculum: track batch rewards, assess the window, and
retune generation difficulty.

Higher difficulty means subtler forgeries: lower blending weights, milder
perturbations, fewer factors, smaller regions. When the windowed mean
reward is high and stable the controller raises difficulty; when the mean
drops it backs off. The level-to-policy mapping ships as versioned config
data (``data/difficulty_policies_v1.json``).
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources

from .errors import LevelRangeError, RewardRangeError
from .policy import FACTORS, GenerationPolicy

DEFAULT_WINDOW = 20
DEFAULT_COOLDOWN = 5


def _load_difficulty_table() -> dict:
    with resources.files("sbiforge.data").joinpath("difficulty_policies_v1.json").open() as fh:
        return json.load(fh)


DIFFICULTY_TABLE = _load_difficulty_table()
D_MAX = len(DIFFICULTY_TABLE["levels"]) - 1


@dataclass
class RewardHistory:
    """FIFO window of per-batch mean total rewards."""

    capacity: int = DEFAULT_WINDOW
    entries: list = field(default_factory=list)
    count: int = 0  # batches ever recorded, i.e. the current batch index

    def record(self, batch_mean_reward: float) -> "RewardHistory":
        value = float(batch_mean_reward)
        if not (0.0 <= value <= 4.0):
            raise RewardRangeError(f"batch mean reward {value} outside [0, 4]")
        self.entries.append(value)
        if len(self.entries) > self.capacity:
            del self.entries[0]
        self.count += 1
        return self


def record_batch(history: RewardHistory, batch_mean_reward: float) -> RewardHistory:
    return history.record(batch_mean_reward)


@dataclass
class Assessment:
    mean: float
    stability: float  # population standard deviation over the window
    ready: bool
    count: int


def assess(history: RewardHistory) -> Assessment:
    """Window mean and spread; ready once half the window has filled."""
    n = len(history.entries)
    if n == 0:
        return Assessment(0.0, 0.0, False, history.count)
    mean = sum(history.entries) / n
    var = sum((v - mean) ** 2 for v in history.entries) / n
    ready = 2 * n >= history.capacity
    return Assessment(mean, math.sqrt(var), ready, history.count)


@dataclass
class DifficultyState:
    level: int = 0
    last_change: int = 0  # batch index of the last level move


@dataclass
class CurriculumThresholds:
    high: float = 3.2
    low: float = 2.0
    stab_max: float = 0.4

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("thresholds.low must be below thresholds.high")


def update_difficulty(
    state: DifficultyState,
    assessment: Assessment,
    thresholds: CurriculumThresholds | None = None,
    cooldown: int = DEFAULT_COOLDOWN,
    d_max: int = D_MAX,
    invert: bool = False,
) -> DifficultyState:
    """One control step. High stable rewards push the level up (harder,
    subtler data); low rewards pull it down. ``invert`` flips the direction
    for the opposite reading of the feedback rule.
    """
    if not assessment.ready:
        return state
    if assessment.count - state.last_change < cooldown:
        return state
    thresholds = thresholds or CurriculumThresholds()

    step = 0
    if assessment.mean >= thresholds.high and assessment.stability <= thresholds.stab_max:
        step = 1
    elif assessment.mean <= thresholds.low:
        step = -1
    if invert:
        step = -step
    if step == 0:
        return state

    new_level = min(d_max, max(0, state.level + step))
    if new_level == state.level:
        return state
    return DifficultyState(level=new_level, last_change=assessment.count)


def policy_for(level: int) -> GenerationPolicy:
    """Generation policy for a difficulty level, from the shipped table."""
    if not isinstance(level, int) or isinstance(level, bool):
        raise LevelRangeError(f"level must be an integer, got {level!r}")
    if level < 0 or level > D_MAX:
        raise LevelRangeError(f"level {level} outside [0, {D_MAX}]")
    row = DIFFICULTY_TABLE["levels"][level]
    intensity = {f: dict(row["intensity_weights"]) for f in FACTORS}
    return GenerationPolicy(
        alpha_weights={float(a): float(w) for a, w in row["alpha_weights"].items()},
        intensity_weights=intensity,
        factor_count_range=tuple(row["factor_count_range"]),
        combo_weights=dict(row["combo_weights"]),
    ).validate()


class CurriculumController:
    """Single-writer feedback loop with checkpointing and an audit trail.

    One instance owns the history and difficulty state for a training run.
    Every observed batch is checkpointed to JSON; level transitions are
    appended to a CSV audit log as ``batch,mean,stability,old_level,new_level``.
    """

    def __init__(
        self,
        window: int = DEFAULT_WINDOW,
        thresholds: CurriculumThresholds | None = None,
        cooldown: int = DEFAULT_COOLDOWN,
        d_max: int = D_MAX,
        invert: bool = False,
        freeze_after_batches: int | None = None,
        checkpoint_path=None,
        audit_path=None,
    ):
        if d_max > D_MAX:
            raise LevelRangeError(f"d_max {d_max} exceeds shipped table maximum {D_MAX}")
        self.history = RewardHistory(capacity=window)
        self.state = DifficultyState()
        self.thresholds = thresholds or CurriculumThresholds()
        self.cooldown = cooldown
        self.d_max = d_max
        self.invert = invert
        self.freeze_after_batches = freeze_after_batches
        self.checkpoint_path = checkpoint_path
        self.audit_path = audit_path

    def observe_batch(self, batch_mean_reward: float) -> DifficultyState:
        self.history.record(batch_mean_reward)
        assessment = assess(self.history)
        frozen = (
            self.freeze_after_batches is not None
            and self.history.count > self.freeze_after_batches
        )
        if not frozen:
            new_state = update_difficulty(
                self.state,
                assessment,
                self.thresholds,
                self.cooldown,
                self.d_max,
                self.invert,
            )
            if new_state.level != self.state.level:
                self._audit(assessment, self.state.level, new_state.level)
            self.state = new_state
        self._checkpoint()
        return self.state

    def policy(self) -> GenerationPolicy:
        return policy_for(self.state.level)

    def _audit(self, assessment: Assessment, old_level: int, new_level: int) -> None:
        if self.audit_path is None:
            return
        new_file = not os.path.exists(self.audit_path)
        with open(self.audit_path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if new_file:
                writer.writerow(["batch", "mean", "stability", "old_level", "new_level"])
            writer.writerow(
                [assessment.count, assessment.mean, assessment.stability, old_level, new_level]
            )

    def _checkpoint(self) -> None:
        if self.checkpoint_path is None:
            return
        snapshot = {
            "level": self.state.level,
            "last_change": self.state.last_change,
            "window": list(self.history.entries),
            "count": self.history.count,
            "capacity": self.history.capacity,
        }
        tmp = f"{self.checkpoint_path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(snapshot, fh)
        os.replace(tmp, self.checkpoint_path)

    @classmethod
    def resume(cls, checkpoint_path, **kwargs) -> "CurriculumController":
        with open(checkpoint_path) as fh:
            snapshot = json.load(fh)
        controller = cls(
            window=snapshot.get("capacity", DEFAULT_WINDOW),
            checkpoint_path=checkpoint_path,
            **kwargs,
        )
        controller.history.entries = [float(v) for v in snapshot["window"]]
        controller.history.count = int(snapshot["count"])
        controller.state = DifficultyState(
            level=int(snapshot["level"]), last_change=int(snapshot["last_change"])
        )
        return controller
