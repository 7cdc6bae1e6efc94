"""Chat-model endpoint: configuration, message assembly, HTTP transport.

The wire protocol is a single POST of {model, messages, temperature}
returning {content}. Credentials come from an environment variable named
in the config, never from flags or config values, so keys stay out of
shell history and manifests.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol, Sequence

import requests

from lexsel.errors import EndpointError

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 60.0
DEFAULT_MAX_RETRIES = 2


@dataclass(frozen=True)
class ModelEndpoint:
    """Endpoint configuration. temperature stays 0 for replication runs."""

    base_url: str
    model_name: str
    temperature: float = 0.0
    max_retries: int = DEFAULT_MAX_RETRIES
    timeout: float = DEFAULT_TIMEOUT
    supports_system_role: bool = True
    api_key_env: str = "LEXSEL_API_KEY"


class ChatClient(Protocol):
    config: ModelEndpoint

    def complete(self, messages: Sequence[dict]) -> str: ...


def assemble_messages(
    system_text: str, user_text: str, supports_system_role: bool = True
) -> list[dict]:
    """Chat messages for a (system, user) pair. Models without a system
    role get the system text prepended to the user message instead."""
    if system_text and supports_system_role:
        return [
            {"role": "system", "content": system_text},
            {"role": "user", "content": user_text},
        ]
    if system_text:
        return [{"role": "user", "content": system_text + "\n\n" + user_text}]
    return [{"role": "user", "content": user_text}]


class HttpChatEndpoint:
    """Blocking HTTP client with bounded retries and exponential backoff."""

    def __init__(self, config: ModelEndpoint, backoff: float = 0.5):
        self.config = config
        self._backoff = backoff
        self._session = requests.Session()

    def complete(self, messages: Sequence[dict]) -> str:
        payload = {
            "model": self.config.model_name,
            "messages": list(messages),
            "temperature": self.config.temperature,
        }
        headers = {}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self._backoff * (2 ** (attempt - 1)))
            try:
                resp = self._session.post(
                    self.config.base_url,
                    json=payload,
                    headers=headers,
                    timeout=self.config.timeout,
                )
                resp.raise_for_status()
                body = resp.json()
                if "content" not in body:
                    raise EndpointError(
                        f"endpoint response missing 'content' key: {sorted(body)}"
                    )
                return body["content"]
            except (requests.RequestException, ValueError) as e:
                last_error = e
                log.warning(
                    "endpoint request failed", extra={"attempt": attempt, "error": str(e)}
                )
        raise EndpointError(
            f"endpoint {self.config.base_url} failed after "
            f"{self.config.max_retries + 1} attempts: {last_error}"
        )


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def parse_config_text(text: str) -> dict:
    """key=value lines; blank lines and #-comments ignored."""
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_endpoint_config(path: str | Path, **overrides) -> ModelEndpoint:
    raw = parse_config_text(Path(path).read_text(encoding="utf-8"))
    kwargs = {}
    if "base_url" in raw:
        kwargs["base_url"] = raw["base_url"]
    if "model" in raw or "model_name" in raw:
        kwargs["model_name"] = raw.get("model_name", raw.get("model"))
    if "temperature" in raw:
        kwargs["temperature"] = float(raw["temperature"])
    if "max_retries" in raw:
        kwargs["max_retries"] = int(raw["max_retries"])
    if "timeout" in raw:
        kwargs["timeout"] = float(raw["timeout"])
    if "supports_system_role" in raw:
        value = raw["supports_system_role"].lower()
        if value not in _BOOL:
            raise ValueError(f"supports_system_role: expected true/false, got {value!r}")
        kwargs["supports_system_role"] = _BOOL[value]
    if "api_key_env" in raw:
        kwargs["api_key_env"] = raw["api_key_env"]
    missing = {"base_url", "model_name"} - set(kwargs)
    if missing:
        raise ValueError(f"endpoint config {path}: missing {sorted(missing)}")
    config = ModelEndpoint(**kwargs)
    return replace(config, **overrides) if overrides else config
