"""Scoring service: the reward engine behind a wire protocol.

One request shape everywhere: a JSON object with ``id``, ``response_text``,
``gt_label``, ``gt_regions``, ``gt_keywords``, and ``length_bounds``. The
reply echoes the id and adds the five reward fields. A group request wraps
item objects under ``items`` and the reply adds group-relative advantages.

The same payloads are served two ways: line-delimited JSON over standard
streams, and HTTP POST /score and /score_group (plus GET /healthz). Scoring
is pure, so requests are handled concurrently with no shared state.
"""
from __future__ import annotations

import json
import sys
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import __version__
from .errors import BindError, GroupTooSmallError
from .rewards import (
    DEFAULT_KEY_MIX,
    DEFAULT_LENGTH_BOUNDS,
    GroundTruth,
    RewardConfig,
    group_advantages,
    total_reward,
)


class PayloadError(ValueError):
    pass


def _ground_truth(payload: dict) -> GroundTruth:
    label = payload.get("gt_label")
    if label not in ("real", "fake"):
        raise PayloadError(f"gt_label must be 'real' or 'fake', got {label!r}")
    bounds = payload.get("length_bounds") or list(DEFAULT_LENGTH_BOUNDS)
    try:
        return GroundTruth(
            label=label,
            regions=set(payload.get("gt_regions") or []),
            keywords=list(payload.get("gt_keywords") or []),
            length_bounds=(int(bounds[0]), int(bounds[1])),
        )
    except (ValueError, TypeError, IndexError) as exc:
        raise PayloadError(str(exc)) from exc


def score_payload(payload: dict, key_mix: float = DEFAULT_KEY_MIX) -> dict:
    """Score one request object into its reply object."""
    if "response_text" not in payload:
        raise PayloadError("missing response_text")
    gt = _ground_truth(payload)
    breakdown = total_reward(
        payload["response_text"], gt, RewardConfig(key_mix=key_mix)
    )
    reply = {"id": payload.get("id")}
    reply.update(breakdown.to_json())
    return reply


def score_group_payload(payload: dict, key_mix: float = DEFAULT_KEY_MIX) -> dict:
    items = payload.get("items")
    if not isinstance(items, list):
        raise PayloadError("group request needs an 'items' list")
    if len(items) < 2:
        raise PayloadError("group requests need at least 2 items")
    results = [score_payload(item, key_mix) for item in items]
    try:
        advantages = group_advantages([r["r_total"] for r in results])
    except GroupTooSmallError as exc:
        raise PayloadError(str(exc)) from exc
    return {"id": payload.get("id"), "results": results, "advantages": advantages}


def handle_payload(payload: dict, key_mix: float = DEFAULT_KEY_MIX) -> dict:
    """Dispatch one decoded request object (stdio and HTTP share this)."""
    if "items" in payload:
        return score_group_payload(payload, key_mix)
    return score_payload(payload, key_mix)


# --- HTTP ---------------------------------------------------------------------

def make_server(host: str = "127.0.0.1", port: int = 0, key_mix: float = DEFAULT_KEY_MIX):
    """Build (but do not run) the HTTP server; port 0 picks a free port."""
    started = time.monotonic()

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, status: int, obj: dict):
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/healthz":
                self._send_json(
                    200,
                    {
                        "status": "ok",
                        "version": __version__,
                        "uptime_s": time.monotonic() - started,
                    },
                )
            else:
                self._send_json(404, {"error": f"no such path {self.path}"})

        def do_POST(self):
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length)
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError as exc:
                self._send_json(400, {"error": f"bad JSON: {exc}"})
                return
            try:
                if self.path == "/score":
                    self._send_json(200, score_payload(payload, key_mix))
                elif self.path == "/score_group":
                    self._send_json(200, score_group_payload(payload, key_mix))
                else:
                    self._send_json(404, {"error": f"no such path {self.path}"})
            except PayloadError as exc:
                self._send_json(400, {"id": payload.get("id"), "error": str(exc)})

    try:
        return ThreadingHTTPServer((host, port), Handler)
    except OSError as exc:
        raise BindError(f"cannot bind {host}:{port}: {exc}") from exc


def serve_http(host: str, port: int, key_mix: float = DEFAULT_KEY_MIX):
    """Run the HTTP service until interrupted; in-flight requests finish."""
    server = make_server(host, port, key_mix)
    bound = server.server_address
    print(f"scoring service on http://{bound[0]}:{bound[1]} (POST /score, /score_group)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()


# --- stdio --------------------------------------------------------------------

def serve_stdio(stdin=None, stdout=None, key_mix: float = DEFAULT_KEY_MIX) -> int:
    """Line-delimited JSON over standard streams; one reply per line."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            stdout.write(json.dumps({"error": f"bad JSON: {exc}"}) + "\n")
            stdout.flush()
            continue
        try:
            reply = handle_payload(payload, key_mix)
        except PayloadError as exc:
            reply = {"id": payload.get("id"), "error": str(exc)}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
    return 0
