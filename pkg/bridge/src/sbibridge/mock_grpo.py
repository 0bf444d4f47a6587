"""Mock GRPO loop: a scripted policy rolls out response groups against
ground truth sampled from a generated manifest, the scoring service grades
them, and the per-step mean rewards land in a trajectory CSV whose last
column feeds straight into ``sbiforge curriculum-sim --rewards``.

No gradients anywhere: this harness exists to drive the reward service and
the curriculum loop end to end with a controllable skill curve.
"""
from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from dataclasses import dataclass

from .client import DEFAULT_LENGTH_BOUNDS, ScoreClient, ScoreClientError, make_payload

DEFAULT_GROUP_SIZE = 8


@dataclass
class GroundTruthRow:
    """The scoring-relevant slice of one manifest row."""

    row_id: str
    label: str
    regions: list
    keywords: list

    @classmethod
    def from_manifest_obj(cls, obj: dict) -> "GroundTruthRow":
        captions = obj.get("captions") or {}
        return cls(
            row_id=obj["id"],
            label=obj["label"],
            regions=sorted(captions.get("regions", [])),
            keywords=[k["phrase"] for k in captions.get("keywords", [])],
        )


def load_ground_truth(manifest_path) -> list:
    rows = []
    with open(manifest_path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("kind") == "header":
                continue
            rows.append(GroundTruthRow.from_manifest_obj(obj))
    if not rows:
        raise ValueError(f"manifest {manifest_path} carries no sample rows")
    return rows


@dataclass
class MockPolicy:
    """Scripted stand-in for a policy model.

    ``skill`` is the probability of emitting a perfect response (correct
    format, label, regions, clues, in-bounds length); misses degrade one
    facet at a time. Skill never decreases while ``improvement_rate`` > 0.
    """

    skill: float = 0.2
    improvement_rate: float = 0.0
    length_bounds: tuple = DEFAULT_LENGTH_BOUNDS

    def emit(self, gt: GroundTruthRow, rng: random.Random) -> str:
        if rng.random() < self.skill:
            return self.perfect_response(gt)
        mode = rng.randrange(4)
        if mode == 0:  # wrong verdict
            flipped = "Real" if gt.label == "fake" else "Fake"
            return self._tagged(gt.regions, gt.keywords, flipped, pad=True)
        if mode == 1:  # broken tags
            return "I think this image might be edited somewhere around the face."
        if mode == 2:  # hallucinated localization
            wrong_regions = ["forehead"] if "forehead" not in gt.regions else ["mouth"]
            return self._tagged(wrong_regions, ["something feels off"], gt.label, pad=True)
        return self._tagged(gt.regions, gt.keywords, gt.label, pad=False)  # too short

    def perfect_response(self, gt: GroundTruthRow) -> str:
        return self._tagged(gt.regions, gt.keywords, gt.label, pad=True)

    def _tagged(self, regions, keywords, answer, pad: bool) -> str:
        key = f"Regions: {', '.join(regions)}; Clues: {'; '.join(keywords)}"
        think = "Scanning each facial region for blending or color artifacts."
        text = f"<think>{think}</think>\n<key>{key}</key>\n<answer>{answer}</answer>"
        if pad:
            lo, _ = self.length_bounds
            missing = lo - len(text.split())
            if missing > 0:
                filler = " ".join(["checking"] * (missing + 4))
                text = text.replace("</think>", f" {filler}</think>", 1)
        return text

    def step(self) -> None:
        self.skill = min(1.0, self.skill + self.improvement_rate)


def run_mock_grpo(
    steps: int,
    policy: MockPolicy,
    client: ScoreClient,
    manifest_path,
    group_size: int = DEFAULT_GROUP_SIZE,
    seed: int = 0,
    out_csv=None,
) -> list:
    """Returns one dict per step: step, skill, adv_abs_max, mean_r_total."""
    ground_truth = load_ground_truth(manifest_path)
    rng = random.Random(seed)
    trajectory = []
    for step in range(steps):
        gt = ground_truth[rng.randrange(len(ground_truth))]
        items = [
            make_payload(
                f"step{step}_g{k}",
                policy.emit(gt, rng),
                gt.label,
                gt.regions,
                gt.keywords,
                policy.length_bounds,
            )
            for k in range(group_size)
        ]
        reply = client.score_group(items, group_id=f"step{step}")
        totals = [r["r_total"] for r in reply["results"]]
        advantages = reply["advantages"]
        trajectory.append(
            {
                "step": step,
                "skill": round(policy.skill, 6),
                "adv_abs_max": max(abs(a) for a in advantages),
                "mean_r_total": sum(totals) / len(totals),
            }
        )
        policy.step()

    if out_csv:
        with open(out_csv, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["step", "skill", "adv_abs_max", "mean_r_total"]
            )
            writer.writeheader()
            writer.writerows(trajectory)
    return trajectory


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sbi-mock-grpo",
        description="Roll out a scripted policy against the scoring service and "
        "record the reward trajectory.",
    )
    parser.add_argument("--manifest", required=True, help="generated manifest.jsonl")
    parser.add_argument("--url", default=None, help="scoring service URL")
    parser.add_argument("--steps", type=int, default=50)
    parser.add_argument("--group-size", type=int, default=DEFAULT_GROUP_SIZE)
    parser.add_argument("--skill", type=float, default=0.2)
    parser.add_argument("--improve", type=float, default=0.016, help="skill gain per step")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="mock_grpo_trajectory.csv")
    args = parser.parse_args(argv)

    try:
        client = ScoreClient.from_env(args.url)
        client.health()
        policy = MockPolicy(skill=args.skill, improvement_rate=args.improve)
        trajectory = run_mock_grpo(
            args.steps, policy, client, args.manifest,
            group_size=args.group_size, seed=args.seed, out_csv=args.out,
        )
    except (ScoreClientError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    first = trajectory[0]["mean_r_total"]
    last = trajectory[-1]["mean_r_total"]
    print(f"wrote {args.out}: {args.steps} steps, mean reward {first:.3f} -> {last:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
