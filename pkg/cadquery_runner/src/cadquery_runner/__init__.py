"""Executor for generated CAD scripts behind a line-oriented JSON protocol."""

from .executor import DEFAULT_TIMEOUT_S, execute, path_policy_violation

__all__ = ["DEFAULT_TIMEOUT_S", "execute", "path_policy_violation"]
