"""HTTP chat-completion backend for the agent roles."""

from .agents import HttpDecider, HttpOrchestrator, HttpPerceiver, http_backends, load_prompt, render_prompt
from .client import ROLES, ChatClient, EndpointConfig, Message
from .structured import StructuredOutputError, extract_json, neutral_default, parse_structured

__all__ = [
    "ROLES",
    "ChatClient",
    "EndpointConfig",
    "HttpDecider",
    "HttpOrchestrator",
    "HttpPerceiver",
    "Message",
    "StructuredOutputError",
    "extract_json",
    "http_backends",
    "load_prompt",
    "neutral_default",
    "parse_structured",
    "render_prompt",
]
