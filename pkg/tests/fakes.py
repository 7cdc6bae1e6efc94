"""Deterministic chat-endpoint doubles for pipeline tests. No network."""

import re
import threading

from lexsel.endpoint import ModelEndpoint


class ScriptedClient:
    """In-memory stand-in for a chat endpoint.

    Replies come from an ordered script or from a function of the message
    list; every call is recorded for assertions. Thread-safe so it can sit
    behind the concurrent evaluation and generation paths.
    """

    def __init__(
        self,
        responses=None,
        reply_fn=None,
        model_name="mock-model",
        supports_system_role=True,
    ):
        self.config = ModelEndpoint(
            base_url="inproc://test",
            model_name=model_name,
            supports_system_role=supports_system_role,
        )
        self._responses = list(responses or [])
        self._reply_fn = reply_fn
        self._lock = threading.Lock()
        self.calls: list[list[dict]] = []

    def complete(self, messages):
        with self._lock:
            self.calls.append(messages)
            if self._reply_fn is not None:
                return self._reply_fn(messages)
            if not self._responses:
                raise AssertionError("scripted client ran out of responses")
            return self._responses.pop(0)


_LIST_RE = re.compile(r"from the following list: (.+?)\.\n")


def listed_candidates(user_text: str) -> list[str]:
    """Candidates as presented in a selection prompt, in presented order."""
    match = _LIST_RE.search(user_text)
    assert match, "prompt does not carry a candidate list"
    return re.findall(r'"([^"]+)"', match.group(1))


def gold_client(items, **kwargs) -> ScriptedClient:
    """Always answers the gold variation, located via the quoted source text."""
    by_source = {item.source_text: item.gold for item in items}

    def reply(messages):
        user = messages[-1]["content"]
        for source, gold in by_source.items():
            if f'in "{source}"' in user:
                return f"The context settles it.\n```{gold}```"
        raise AssertionError("no fixture item matches the prompt")

    return ScriptedClient(reply_fn=reply, **kwargs)


def first_position_client(**kwargs) -> ScriptedClient:
    """Always answers whichever candidate was presented first."""

    def reply(messages):
        first = listed_candidates(messages[-1]["content"])[0]
        return f"```{first}```"

    return ScriptedClient(reply_fn=reply, **kwargs)


def no_backticks_client(text="I decline to use fences.", **kwargs) -> ScriptedClient:
    """Never fences an answer, so parsing fails on both attempts."""
    return ScriptedClient(reply_fn=lambda messages: text, **kwargs)
