"""Model-provider plumbing: chat completion and text embedding.

Every provider call is content-addressed so runs can be recorded once and
replayed offline byte-for-byte. A transcript is a directory of JSON files
keyed by the sha256 of the canonical request; replay mode never touches
the network and fails loudly on a miss.
"""

from __future__ import annotations

import hashlib
import json
import os
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, runtime_checkable


class ProviderError(RuntimeError):
    """A provider could not produce a response."""


@runtime_checkable
class ChatClient(Protocol):
    def complete(self, prompt: str) -> str: ...


@runtime_checkable
class TextVectorProvider(Protocol):
    def embed(self, text: str) -> list: ...


def request_key(kind: str, model: str, payload: str) -> str:
    """Stable address of one request: sha256 over canonical JSON."""
    body_field = "prompt" if kind == "chat" else "text"
    canonical = json.dumps(
        {"kind": kind, "model": model, body_field: payload},
        sort_keys=True, separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class TranscriptStore:
    directory: Path

    def __post_init__(self):
        self.directory = Path(self.directory)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str):
        path = self._path(key)
        if not path.exists():
            return None
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)

    def put(self, key: str, request: dict, response) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        with self._path(key).open("w", encoding="utf-8") as fh:
            json.dump({"request": request, "response": response}, fh,
                      sort_keys=True, indent=1)
            fh.write("\n")


@dataclass
class ReplayChatClient:
    store: TranscriptStore
    model: str = "replay"

    def complete(self, prompt: str) -> str:
        key = request_key("chat", self.model, prompt)
        record = self.store.get(key)
        if record is None:
            raise ProviderError(
                f"no recorded chat response for key {key[:12]}... "
                f"(prompt starts {prompt[:60]!r})"
            )
        return record["response"]


@dataclass
class ReplayTextVectorProvider:
    store: TranscriptStore
    model: str = "replay"

    def embed(self, text: str) -> list:
        key = request_key("embed", self.model, text)
        record = self.store.get(key)
        if record is None:
            raise ProviderError(
                f"no recorded embedding for key {key[:12]}... (text {text[:60]!r})"
            )
        return record["response"]


@dataclass
class RecordingChatClient:
    """Wraps a live client and writes every exchange into the store."""
    inner: ChatClient
    store: TranscriptStore
    model: str = "recorded"

    def complete(self, prompt: str) -> str:
        key = request_key("chat", self.model, prompt)
        cached = self.store.get(key)
        if cached is not None:
            return cached["response"]
        response = self.inner.complete(prompt)
        self.store.put(key, {"kind": "chat", "model": self.model, "prompt": prompt}, response)
        return response


@dataclass
class RecordingTextVectorProvider:
    inner: TextVectorProvider
    store: TranscriptStore
    model: str = "recorded"

    def embed(self, text: str) -> list:
        key = request_key("embed", self.model, text)
        cached = self.store.get(key)
        if cached is not None:
            return cached["response"]
        response = list(self.inner.embed(text))
        self.store.put(key, {"kind": "embed", "model": self.model, "text": text}, response)
        return response


@dataclass
class ScriptedChatClient:
    """Deterministic stand-in for tests: answers from a queue or a mapping.

    With a ``script`` list, responses are consumed in call order. With a
    ``by_prompt`` mapping, the prompt (or any key found as a substring of
    it) selects the response.
    """
    script: list = field(default_factory=list)
    by_prompt: dict = field(default_factory=dict)
    calls: list = field(default_factory=list)

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if self.by_prompt:
            if prompt in self.by_prompt:
                return self.by_prompt[prompt]
            for key, value in self.by_prompt.items():
                if key in prompt:
                    return value
            raise ProviderError(f"no scripted response matches prompt {prompt[:60]!r}")
        if not self.script:
            raise ProviderError("scripted responses exhausted")
        return self.script.pop(0)


@dataclass
class HttpChatClient:
    """Minimal OpenAI-style chat endpoint client over stdlib urllib."""
    base_url: str
    model: str
    auth_env: str | None = None
    timeout: float = 60.0

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env)
            if not token:
                raise ProviderError(f"auth variable {self.auth_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        body = json.dumps({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        }).encode("utf-8")
        req = urllib.request.Request(
            self.base_url.rstrip("/") + "/chat/completions",
            data=body, headers=headers, method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                doc = json.loads(resp.read().decode("utf-8"))
        except OSError as exc:
            raise ProviderError(f"chat request failed: {exc}") from exc
        try:
            return doc["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected chat response shape: {doc!r}") from exc


@dataclass
class HttpTextVectorProvider:
    base_url: str
    model: str
    auth_env: str | None = None
    timeout: float = 60.0

    def embed(self, text: str) -> list:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env)
            if not token:
                raise ProviderError(f"auth variable {self.auth_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        body = json.dumps({"model": self.model, "input": text}).encode("utf-8")
        req = urllib.request.Request(
            self.base_url.rstrip("/") + "/embeddings",
            data=body, headers=headers, method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                doc = json.loads(resp.read().decode("utf-8"))
        except OSError as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        try:
            return list(doc["data"][0]["embedding"])
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected embedding response shape: {doc!r}") from exc


VALID_MODES = ("replay", "record", "live")


def load_provider_config(path):
    """Build (chat_client, embed_provider) from a JSON config file.

    Shape: {"mode": "replay"|"record"|"live", "transcript_dir": "...",
    "chat": {"base_url", "model", "auth_env"?}, "embed": {...}}.
    Replay needs only transcript_dir; record wraps live clients with a
    recorder; either section may be omitted (its client is then None).
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        config = json.load(fh)
    mode = config.get("mode", "replay")
    if mode not in VALID_MODES:
        raise ValueError(f"{path}: mode must be one of {VALID_MODES}, got {mode!r}")
    store = None
    if "transcript_dir" in config:
        transcript_dir = Path(config["transcript_dir"])
        if not transcript_dir.is_absolute():
            transcript_dir = path.parent / transcript_dir
        store = TranscriptStore(transcript_dir)
    if mode in ("replay", "record") and store is None:
        raise ValueError(f"{path}: mode {mode!r} requires transcript_dir")

    def build(kind: str):
        section = config.get(kind)
        if mode == "replay":
            if store is None:
                return None
            model = (section or {}).get("model", "replay")
            return (ReplayChatClient(store, model=model) if kind == "chat"
                    else ReplayTextVectorProvider(store, model=model))
        if section is None:
            return None
        live_cls = HttpChatClient if kind == "chat" else HttpTextVectorProvider
        live = live_cls(base_url=section["base_url"], model=section["model"],
                        auth_env=section.get("auth_env"))
        if mode == "live":
            return live
        wrapper = RecordingChatClient if kind == "chat" else RecordingTextVectorProvider
        return wrapper(live, store, model=section["model"])

    return build("chat"), build("embed")
