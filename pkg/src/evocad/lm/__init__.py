"""Model-call layer: message types, prompt builders, parsing, backends."""

from .base import Backend, ChatMessage, Gateway, ModelRoleConfig, default_role_configs
from .fewshot import FewShotStore
from .mock import MockBackend
from .prompts import (
    TEMPLATE_VERSION,
    build_crossover_prompt,
    build_describe_prompt,
    build_init_prompt,
    build_mutation_prompt,
    build_rank_prompt,
    build_selfdebug_prompt,
)
from .ranking import Ranking, average_rankings, extract_code, rank_once
from .wire import WireBackend, build_request_body

__all__ = [
    "Backend",
    "ChatMessage",
    "FewShotStore",
    "Gateway",
    "MockBackend",
    "ModelRoleConfig",
    "Ranking",
    "TEMPLATE_VERSION",
    "WireBackend",
    "average_rankings",
    "build_crossover_prompt",
    "build_describe_prompt",
    "build_init_prompt",
    "build_mutation_prompt",
    "build_rank_prompt",
    "build_request_body",
    "build_selfdebug_prompt",
    "default_role_configs",
    "extract_code",
    "rank_once",
]
