"""Client for the scoring service wire protocol.

Speaks the documented payload shape over HTTP (POST /score, /score_group)
or over line-delimited JSON streams. Never reimplements reward math; every
number comes back from the service.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import requests

SCORE_URL_ENV = "SCORE_ENDPOINT_URL"
DEFAULT_LENGTH_BOUNDS = (48, 320)


class ScoreClientError(RuntimeError):
    pass


class ReplyMismatch(ScoreClientError):
    """The service echoed a different id than the request carried."""


def make_payload(req_id, response_text, gt_label, gt_regions=(), gt_keywords=(),
                 length_bounds=DEFAULT_LENGTH_BOUNDS) -> dict:
    return {
        "id": req_id,
        "response_text": response_text,
        "gt_label": gt_label,
        "gt_regions": sorted(gt_regions),
        "gt_keywords": list(gt_keywords),
        "length_bounds": list(length_bounds),
    }


@dataclass
class ScoreClient:
    """HTTP client with id checking and bounded retries."""

    base_url: str
    timeout_s: float = 30.0
    retries: int = 2
    backoff_s: float = 0.2

    @classmethod
    def from_env(cls, url: str | None = None, **kwargs) -> "ScoreClient":
        base = url or os.environ.get(SCORE_URL_ENV)
        if not base:
            raise ScoreClientError(
                f"no service URL: pass --url or set {SCORE_URL_ENV}"
            )
        return cls(base_url=base.rstrip("/"), **kwargs)

    def _post(self, path: str, payload: dict) -> dict:
        last_exc = None
        for attempt in range(self.retries + 1):
            try:
                resp = requests.post(
                    f"{self.base_url}{path}", json=payload, timeout=self.timeout_s
                )
                if resp.status_code != 200:
                    raise ScoreClientError(
                        f"{path} returned {resp.status_code}: {resp.text[:200]}"
                    )
                return resp.json()
            except (requests.Timeout, requests.ConnectionError) as exc:
                last_exc = exc
                if attempt < self.retries:
                    time.sleep(self.backoff_s * (attempt + 1))
        raise ScoreClientError(f"service unreachable after {self.retries + 1} attempts: {last_exc}")

    def score(self, payload: dict) -> dict:
        reply = self._post("/score", payload)
        if reply.get("id") != payload.get("id"):
            raise ReplyMismatch(f"sent id {payload.get('id')!r}, got {reply.get('id')!r}")
        return reply

    def score_group(self, items: list, group_id="group") -> dict:
        payload = {"id": group_id, "items": items}
        reply = self._post("/score_group", payload)
        if reply.get("id") != group_id:
            raise ReplyMismatch(f"sent id {group_id!r}, got {reply.get('id')!r}")
        for item, result in zip(items, reply.get("results", [])):
            if result.get("id") != item.get("id"):
                raise ReplyMismatch(
                    f"group item id {item.get('id')!r} came back as {result.get('id')!r}"
                )
        return reply

    def health(self) -> dict:
        resp = requests.get(f"{self.base_url}/healthz", timeout=self.timeout_s)
        resp.raise_for_status()
        return resp.json()


class StreamScoreClient:
    """Same protocol over line-delimited JSON streams (e.g. a --stdio child)."""

    def __init__(self, writer, reader):
        self.writer = writer
        self.reader = reader

    def _roundtrip(self, payload: dict) -> dict:
        self.writer.write(json.dumps(payload) + "\n")
        self.writer.flush()
        line = self.reader.readline()
        if not line:
            raise ScoreClientError("stream closed by service")
        reply = json.loads(line)
        if reply.get("id") != payload.get("id"):
            raise ReplyMismatch(f"sent id {payload.get('id')!r}, got {reply.get('id')!r}")
        return reply

    def score(self, payload: dict) -> dict:
        return self._roundtrip(payload)

    def score_group(self, items: list, group_id="group") -> dict:
        return self._roundtrip({"id": group_id, "items": items})


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sbi-score",
        description="Score one response payload (JSON on stdin or --payload file) "
        "against the scoring service.",
    )
    parser.add_argument("--url", default=None, help=f"service URL (default ${SCORE_URL_ENV})")
    parser.add_argument("--payload", default=None, help="payload JSON file (default stdin)")
    parser.add_argument("--timeout", type=float, default=30.0)
    args = parser.parse_args(argv)

    if args.payload:
        with open(args.payload) as fh:
            raw = fh.read()
    else:
        raw = sys.stdin.read()
    payload = json.loads(raw)
    try:
        client = ScoreClient.from_env(args.url, timeout_s=args.timeout)
        reply = client.score_group(payload["items"], payload.get("id", "group")) \
            if "items" in payload else client.score(payload)
    except ScoreClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(reply, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
