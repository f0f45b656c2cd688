"""Backend contract shared by every model role.

A Backend turns a chat transcript into one assistant reply.  Three roles
use it: a generator that writes CAD code, a describer that looks at
rendered images, and a ranker that orders candidates.  Implementations
must be safe to call from several threads at once.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from ..render import Image

ROLES = ("generator", "describer", "ranker")

_MESSAGE_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    """One conversation turn: text, images or both."""

    role: str
    text: str = ""
    images: tuple[Image, ...] = ()

    def __post_init__(self):
        if self.role not in _MESSAGE_ROLES:
            raise ValueError(f"unknown message role {self.role!r}")
        object.__setattr__(self, "images", tuple(self.images))
        if not self.text and not self.images:
            raise ValueError("a message needs text or at least one image")


@dataclass(frozen=True)
class ModelRoleConfig:
    """How to call the model serving one role."""

    role: str
    model_name: str = "default"
    temperature: float = 0.5
    max_retries: int = 2
    timeout_s: float = 60.0

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown model role {self.role!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")


def default_role_configs(model_name: str = "default") -> dict[str, ModelRoleConfig]:
    """Code generation runs warm, evaluation roles run cool."""
    return {
        "generator": ModelRoleConfig("generator", model_name, temperature=0.5),
        "describer": ModelRoleConfig("describer", model_name, temperature=0.2),
        "ranker": ModelRoleConfig("ranker", model_name, temperature=0.2),
    }


class Backend:
    """Completion provider.  Subclasses implement complete()."""

    identity = "backend"

    def complete(self, messages: list[ChatMessage], config: ModelRoleConfig) -> str:
        raise NotImplementedError


class Gateway(Backend):
    """Caps how many completions run at once across threads."""

    def __init__(self, inner: Backend, max_in_flight: int = 4):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be positive")
        self._inner = inner
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.identity = f"gateway({inner.identity})"

    def complete(self, messages, config):
        with self._slots:
            return self._inner.complete(messages, config)
