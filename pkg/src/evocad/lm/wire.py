"""HTTP client for chat-completion endpoints.

Requests go to base_url + /chat/completions with the usual JSON body:
{model, temperature, messages: [{role, content: [{type: "text", text},
{type: "image", media_type, data}]}]}, images inline as base64 PNG.
Bearer auth comes from the EVOCAD_API_KEY environment variable when set.
Transport failures and retryable statuses back off exponentially up to
max_retries; malformed response bodies fail immediately.
"""

from __future__ import annotations

import base64
import os
import time

import requests

from ..errors import BackendError
from ..render import encode_png
from .base import Backend, ChatMessage, ModelRoleConfig

API_KEY_ENV = "EVOCAD_API_KEY"

_RETRY_STATUSES = {429, 500, 502, 503, 504}
_BACKOFF_BASE_S = 0.5


def build_request_body(messages: list[ChatMessage], config: ModelRoleConfig) -> dict:
    """The JSON payload for one completion call."""
    payload = []
    for msg in messages:
        content = []
        if msg.text:
            content.append({"type": "text", "text": msg.text})
        for img in msg.images:
            content.append({
                "type": "image",
                "media_type": "image/png",
                "data": base64.b64encode(encode_png(img)).decode("ascii"),
            })
        payload.append({"role": msg.role, "content": content})
    return {
        "model": config.model_name,
        "temperature": config.temperature,
        "messages": payload,
    }


def _reply_text(response) -> str:
    """Pull the assistant text out of a completion response."""
    try:
        body = response.json()
    except ValueError as exc:
        raise BackendError(f"endpoint returned unparseable JSON: {exc}") from exc
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"completion response missing content: {exc}") from exc
    if isinstance(content, str):
        return content
    if isinstance(content, list):
        texts = [part.get("text", "") for part in content if isinstance(part, dict)]
        return "".join(texts)
    raise BackendError(f"unexpected content payload of type {type(content).__name__}")


class WireBackend(Backend):
    """Talks to any chat-completions compatible service."""

    def __init__(self, base_url: str, session=None, sleeper=time.sleep):
        if not base_url:
            raise ValueError("base_url is required")
        self._base = base_url.rstrip("/")
        self._session = session if session is not None else requests.Session()
        self._sleep = sleeper
        self.identity = f"wire({self._base})"

    def complete(self, messages: list[ChatMessage], config: ModelRoleConfig) -> str:
        url = self._base + "/chat/completions"
        body = build_request_body(messages, config)
        headers = {}
        key = os.environ.get(API_KEY_ENV)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last = "no attempt made"
        for attempt in range(config.max_retries + 1):
            if attempt:
                self._sleep(_BACKOFF_BASE_S * 2 ** (attempt - 1))
            try:
                response = self._session.post(
                    url, json=body, headers=headers, timeout=config.timeout_s
                )
            except requests.RequestException as exc:
                last = f"transport failure: {exc}"
                continue
            if response.status_code in _RETRY_STATUSES:
                last = f"status {response.status_code}"
                continue
            if response.status_code != 200:
                raise BackendError(f"endpoint returned status {response.status_code}")
            return _reply_text(response)
        raise BackendError(
            f"gave up after {config.max_retries + 1} attempts; last error: {last}"
        )
