"""Pluggable multimodal completion backends.

The mock backend is a pure function of the request and carries enough of the
bundle in its template for end-to-end assertions. The HTTP backend posts the
serialized bundle to a hosted chat-completion endpoint. Every transport
failure degrades to a fallback message built from the bundle's own findings;
the chat user never sees a raw error.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass

import httpx

from .prompts import PromptBundle

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 30.0
FALLBACK_PREFIX = (
    "The assistant is temporarily unavailable; here are the system's own findings:"
)


@dataclass
class CompletionRequest:
    bundle: PromptBundle
    model: str = "default"
    timeout_s: float = DEFAULT_TIMEOUT_S


@dataclass
class CompletionResponse:
    text: str
    latency_s: float
    backend: str
    degraded: bool = False


def fallback_response(req: CompletionRequest, backend: str, latency_s: float) -> CompletionResponse:
    lines = [FALLBACK_PREFIX]
    lines.extend(req.bundle.qualitative_facts)
    return CompletionResponse(
        text="\n".join(lines), latency_s=latency_s, backend=backend, degraded=True
    )


class MockGateway:
    """Deterministic template backend for tests and offline runs."""

    backend_id = "mock"

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        b = req.bundle
        text = (
            f"[tone={b.tone}] [attachments={len(b.attachments)}] "
            f"[facts={len(b.qualitative_facts)}] {b.user_message}"
        )
        return CompletionResponse(text=text, latency_s=0.0, backend=self.backend_id)


class HttpGateway:
    """Client for a hosted chat-completion service accepting text+image input."""

    backend_id = "http"

    def __init__(self, url: str, api_key: str = "", retry: int = 1):
        self.url = url
        self.api_key = api_key
        self.retry = retry

    def _post(self, req: CompletionRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = req.bundle.to_request_payload(req.model)
        resp = httpx.post(self.url, json=payload, headers=headers, timeout=req.timeout_s)
        resp.raise_for_status()
        body = resp.json()
        if isinstance(body, dict):
            if isinstance(body.get("text"), str) and body["text"]:
                return body["text"]
            choices = body.get("choices")
            if choices:
                content = choices[0].get("message", {}).get("content")
                if isinstance(content, str) and content:
                    return content
        raise ValueError("malformed completion response")

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        start = time.monotonic()
        attempts = 1 + max(0, self.retry)
        for attempt in range(attempts):
            try:
                text = self._post(req)
                return CompletionResponse(
                    text=text, latency_s=time.monotonic() - start, backend=self.backend_id
                )
            except Exception as exc:  # timeout, transport, malformed body
                logger.warning("completion attempt %d failed: %s", attempt + 1, exc)
                if attempt + 1 < attempts:
                    time.sleep(0.1 + random.random() * 0.2)
        return fallback_response(req, self.backend_id, time.monotonic() - start)


def gateway_from_config(cfg: dict):
    """Build the backend selected by gateway.* configuration keys."""
    if cfg.get("mock", True):
        return MockGateway()
    url = cfg.get("url", "")
    if not url:
        logger.warning("gateway.mock is false but gateway.url is empty; using mock")
        return MockGateway()
    return HttpGateway(url=url, api_key=cfg.get("key", ""))
