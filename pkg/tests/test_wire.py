import base64
import json

import pytest
import requests
from jsonschema import validate

from evocad.csg import compile_source
from evocad.errors import BackendError
from evocad.lm import ChatMessage, ModelRoleConfig, WireBackend, build_request_body
from evocad.render import render_multiview

GEN = ModelRoleConfig("generator", model_name="coder-1", max_retries=2, timeout_s=5.0)

BODY_SCHEMA = {
    "type": "object",
    "required": ["model", "temperature", "messages"],
    "additionalProperties": False,
    "properties": {
        "model": {"type": "string"},
        "temperature": {"type": "number", "minimum": 0, "maximum": 2},
        "messages": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["role", "content"],
                "additionalProperties": False,
                "properties": {
                    "role": {"enum": ["system", "user", "assistant"]},
                    "content": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "oneOf": [
                                {
                                    "type": "object",
                                    "required": ["type", "text"],
                                    "additionalProperties": False,
                                    "properties": {
                                        "type": {"const": "text"},
                                        "text": {"type": "string"},
                                    },
                                },
                                {
                                    "type": "object",
                                    "required": ["type", "media_type", "data"],
                                    "additionalProperties": False,
                                    "properties": {
                                        "type": {"const": "image"},
                                        "media_type": {"const": "image/png"},
                                        "data": {"type": "string"},
                                    },
                                },
                            ]
                        },
                    },
                },
            },
        },
    },
}


class FakeResponse:
    def __init__(self, status_code=200, payload=None, bad_json=False):
        self.status_code = status_code
        self._payload = payload
        self._bad_json = bad_json

    def json(self):
        if self._bad_json:
            raise ValueError("not json")
        return self._payload


class FakeSession:
    """Returns queued responses; an exception instance is raised instead."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.requests = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.requests.append({"url": url, "body": json, "headers": headers, "timeout": timeout})
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


def reply(text):
    return FakeResponse(payload={"choices": [{"message": {"content": text}}]})


def make_backend(outcomes, sleeps=None):
    session = FakeSession(outcomes)
    backend = WireBackend(
        "http://unit.test/v1/", session=session,
        sleeper=(sleeps.append if sleeps is not None else (lambda s: None)),
    )
    return backend, session


def test_request_body_matches_schema():
    img = render_multiview(compile_source("part z 0 1 { rect 2 2 }"), 64)
    messages = [
        ChatMessage("system", "rules"),
        ChatMessage("user", "look at this", images=(img,)),
    ]
    body = build_request_body(messages, GEN)
    validate(body, BODY_SCHEMA)
    assert body["model"] == "coder-1"
    assert body["temperature"] == 0.5
    image_part = body["messages"][1]["content"][1]
    png = base64.b64decode(image_part["data"])
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    json.dumps(body)


def test_complete_posts_once_and_returns_text(monkeypatch):
    monkeypatch.delenv("EVOCAD_API_KEY", raising=False)
    backend, session = make_backend([reply("hello")])
    out = backend.complete([ChatMessage("user", "hi")], GEN)
    assert out == "hello"
    assert len(session.requests) == 1
    req = session.requests[0]
    assert req["url"] == "http://unit.test/v1/chat/completions"
    assert req["timeout"] == 5.0
    assert "Authorization" not in req["headers"]


def test_bearer_token_from_environment(monkeypatch):
    monkeypatch.setenv("EVOCAD_API_KEY", "sk-unit")
    backend, session = make_backend([reply("ok")])
    backend.complete([ChatMessage("user", "hi")], GEN)
    assert session.requests[0]["headers"]["Authorization"] == "Bearer sk-unit"


def test_transport_error_retries_with_backoff():
    sleeps = []
    backend, session = make_backend(
        [requests.ConnectionError("down"), requests.Timeout("slow"), reply("ok")],
        sleeps=sleeps,
    )
    assert backend.complete([ChatMessage("user", "hi")], GEN) == "ok"
    assert len(session.requests) == 3
    assert sleeps == [0.5, 1.0]


def test_retries_exhausted_raises():
    sleeps = []
    backend, session = make_backend(
        [requests.ConnectionError("down")] * 3, sleeps=sleeps
    )
    with pytest.raises(BackendError):
        backend.complete([ChatMessage("user", "hi")], GEN)
    assert len(session.requests) == 3
    assert sleeps == [0.5, 1.0]


def test_retryable_status_then_success():
    backend, session = make_backend([FakeResponse(status_code=503), reply("ok")])
    assert backend.complete([ChatMessage("user", "hi")], GEN) == "ok"
    assert len(session.requests) == 2


def test_client_error_fails_immediately():
    backend, session = make_backend([FakeResponse(status_code=400)])
    with pytest.raises(BackendError):
        backend.complete([ChatMessage("user", "hi")], GEN)
    assert len(session.requests) == 1


def test_parse_errors_never_retry():
    backend, session = make_backend([FakeResponse(bad_json=True), reply("never")])
    with pytest.raises(BackendError):
        backend.complete([ChatMessage("user", "hi")], GEN)
    assert len(session.requests) == 1

    backend, session = make_backend([FakeResponse(payload={"choices": []}), reply("never")])
    with pytest.raises(BackendError):
        backend.complete([ChatMessage("user", "hi")], GEN)
    assert len(session.requests) == 1


def test_content_given_as_part_list():
    payload = {
        "choices": [
            {
                "message": {
                    "content": [
                        {"type": "text", "text": "part "},
                        {"type": "text", "text": "two"},
                    ]
                }
            }
        ]
    }
    backend, _ = make_backend([FakeResponse(payload=payload)])
    assert backend.complete([ChatMessage("user", "hi")], GEN) == "part two"


def test_base_url_required():
    with pytest.raises(ValueError):
        WireBackend("")
