"""Bridge acceptance: client/service equivalence and the end-to-end mock
GRPO trend, each printed as one [PASS]/[FAIL] line (visible with -s)."""
from __future__ import annotations

import random
import time
from contextlib import contextmanager

from sbibridge.client import ScoreClient
from sbibridge.mock_grpo import MockPolicy, run_mock_grpo

from test_client import random_payload


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"[FAIL] {name}")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, f"{name}: {elapsed:.2f}s exceeds {budget_s}s budget"
    print(f"[PASS] {name} ({elapsed:.2f}s)")


def test_client_service_equivalence_100_fixtures(service_url):
    with criterion("client/service equivalence (100 fixtures, 1e-9)", 120.0):
        from sbiforge.rewards import GroundTruth, total_reward  # oracle only

        client = ScoreClient.from_env(service_url)
        rnd = random.Random(2025)
        for k in range(100):
            payload = random_payload(rnd, f"acc{k}")
            reply = client.score(payload)
            expected = total_reward(
                payload["response_text"],
                GroundTruth(
                    label=payload["gt_label"],
                    regions=set(payload["gt_regions"]),
                    keywords=payload["gt_keywords"],
                    length_bounds=tuple(payload["length_bounds"]),
                ),
            ).to_json()
            for field in ("r_acc", "r_format", "r_key", "r_len", "r_total"):
                assert abs(reply[field] - expected[field]) <= 1e-9, (field, payload["id"])


def test_mock_grpo_improving_trend(service_url, corpus_manifest, tmp_path):
    with criterion("mock GRPO 50 steps: final decile beats first decile", 120.0):
        client = ScoreClient.from_env(service_url)
        policy = MockPolicy(skill=0.2, improvement_rate=0.016)
        trajectory = run_mock_grpo(
            50,
            policy,
            client,
            corpus_manifest,
            group_size=8,
            seed=2025,
            out_csv=tmp_path / "acceptance_trajectory.csv",
        )
        first_decile = [t["mean_r_total"] for t in trajectory[:5]]
        final_decile = [t["mean_r_total"] for t in trajectory[-5:]]
        assert sum(final_decile) / 5 > sum(first_decile) / 5
        assert (tmp_path / "acceptance_trajectory.csv").exists()
