"""Completion transports: an HTTP client for real endpoints and an offline mock."""
from __future__ import annotations

import abc
import json
import os
import random
import re
import threading
import time
import zlib
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import httpx

from ..corpus import (AnnotatedSentence, AnnotationError, Edit, Fluent, Token,
                      parse_annotated, render_annotated, strip_to_fluent)
from .. import heuristic

DEFAULT_API_KEY_ENV = "DISFL_API_KEY"

# (prompt, completion) pairs sent earlier in the same conversation
Context = Sequence[tuple[str, str]]


class TransportError(RuntimeError):
    pass


class MissingCredentials(TransportError):
    pass


@dataclass(frozen=True)
class SamplingParams:
    model: str = "gpt-3.5-turbo-instruct"
    temperature: float = 0.7
    max_tokens: int = 512


class LlmTransport(abc.ABC):
    """prompt + conversation context + sampling params -> completion text.

    Implementations must be safe to share between concurrent sessions.
    """

    name = "abstract"

    @abc.abstractmethod
    def complete(self, prompt: str, context: Context, params: SamplingParams) -> str:
        ...


def flatten_context(prompt: str, context: Context) -> str:
    """Render a conversation as one completion-style prompt."""
    parts = []
    for p, c in context:
        parts.append(p)
        parts.append(c)
    parts.append(prompt)
    return "\n\n".join(parts)


class HttpTransport(LlmTransport):
    """OpenAI-compatible ``/completions`` client with retry on 429/5xx and network errors."""

    name = "http"

    def __init__(self, url: str = "https://api.openai.com/v1/completions", api_key: str | None = None,
                 api_key_env: str = DEFAULT_API_KEY_ENV, retries: int = 3, backoff: float = 1.0,
                 timeout: float = 60.0, client: httpx.Client | None = None, audit_path=None,
                 sleep: Callable[[float], None] = time.sleep):
        self.url = url
        self.api_key = api_key or os.environ.get(api_key_env)
        if not self.api_key:
            raise MissingCredentials(f"no API key: set ${api_key_env} or use the mock transport")
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.client = client or httpx.Client()
        self.audit_path = audit_path
        self._sleep = sleep
        self._lock = threading.Lock()

    def _audit(self, request: dict, response: dict | None, error: str | None):
        if not self.audit_path:
            return
        line = json.dumps({"time": time.time(), "request": request, "response": response,
                           "error": error}, ensure_ascii=False)
        with self._lock, open(self.audit_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def complete(self, prompt, context, params):
        payload = {"model": params.model, "prompt": flatten_context(prompt, context),
                   "temperature": params.temperature, "max_tokens": params.max_tokens}
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post(self.url, json=payload, headers=headers, timeout=self.timeout)
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                self._audit(payload, None, last_error)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                self._audit(payload, None, last_error)
                continue
            if resp.status_code >= 400:
                self._audit(payload, None, f"HTTP {resp.status_code}")
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                body = resp.json()
                choice = body["choices"][0]
                text = choice["text"] if "text" in choice else choice["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                self._audit(payload, None, f"bad response: {exc}")
                raise TransportError(f"unexpected response shape: {exc}") from None
            self._audit(payload, body, None)
            return text
        raise TransportError(f"giving up after {self.retries + 1} attempts ({last_error})")


Responder = Callable[[str, Context, SamplingParams], str]


class MockTransport(LlmTransport):
    """Offline transport driven by a pure responder function.

    Determinism comes from the responder depending only on its arguments; the
    transport itself keeps nothing but a call log.
    """

    name = "mock"

    def __init__(self, responder: Responder | None = None):
        self.responder = responder or perturbing_responder()
        self.calls: list[dict] = []
        self._lock = threading.Lock()

    @classmethod
    def fixed(cls, generation_reply: str, description_reply: str = "OK.") -> "MockTransport":
        def respond(prompt, context, params):
            return generation_reply if _example_lines(prompt) else description_reply
        return cls(respond)

    def complete(self, prompt, context, params):
        with self._lock:
            self.calls.append({"prompt": prompt, "context_len": len(context),
                               "params": asdict(params)})
        return self.responder(prompt, context, params)


class FlakyTransport(LlmTransport):
    """Wraps another transport and raises TransportError on selected call numbers (1-based)."""

    name = "flaky"

    def __init__(self, inner: LlmTransport, fail_calls):
        self.inner = inner
        self.fail_calls = set(fail_calls)
        self.n = 0
        self._lock = threading.Lock()

    def complete(self, prompt, context, params):
        with self._lock:
            self.n += 1
            n = self.n
        if n in self.fail_calls:
            raise TransportError(f"injected failure on call {n}")
        return self.inner.complete(prompt, context, params)


def _example_lines(prompt: str) -> list[str]:
    out = []
    for line in prompt.splitlines():
        if "[" not in line and "{" not in line:
            continue
        try:
            parse_annotated(line)
        except AnnotationError:
            continue
        out.append(line)
    return out


def _substitute(rng: random.Random, sent: AnnotatedSentence, by_pos, rate: float):
    """Swap one reparandum word of some repetitions for another word with the same tag."""
    chunks = []
    for c in sent.chunks:
        if (isinstance(c, Edit) and c.repair and len(c.reparandum) == 1
                and isinstance(c.reparandum[0], Fluent) and rng.random() < rate):
            toks = list(c.reparandum[0].tokens)
            k = rng.randrange(len(toks))
            alts = sorted(set(by_pos.get(toks[k].pos, ())) - {toks[k].surface})
            if alts:
                toks[k] = Token(rng.choice(alts), toks[k].pos)
                c = Edit([Fluent(toks)], c.interregnum, c.repair)
        chunks.append(c)
    return AnnotatedSentence(chunks, sent.terminated)


def perturbing_responder(seed: int = 0, per_example: int = 2, malformed_rate: float = 0.0) -> Responder:
    """Fake LLM that rewrites the prompt's example sentences.

    Each example's fluent reading gets fresh heuristic disfluencies, so replies
    keep POS tags and look like the seed data. The RNG is keyed on a checksum of
    the prompt and the context length, so replies are reproducible.
    """

    def respond(prompt, context, params):
        examples = _example_lines(prompt)
        if not examples:
            return "OK, I understand the annotation format."
        rng = random.Random(seed ^ zlib.crc32(prompt.encode("utf-8")) ^ (len(context) << 20))
        sources = [strip_to_fluent(parse_annotated(e)) for e in examples]
        by_pos: dict[str, list[str]] = {}
        for src in sources:
            for t in src:
                by_pos.setdefault(t.pos, []).append(t.surface)
        lines = []
        for src in sources:
            for _ in range(per_example):
                cfg = heuristic.HeuristicConfig(rng_seed=rng.getrandbits(32),
                                                max_ngram=3, edits_per_sentence=rng.choice([1, 1, 2]))
                sent = heuristic.generate_batch([src], cfg)[0]
                sent = _substitute(rng, sent, by_pos, rate=0.5)
                text = render_annotated(sent)
                if rng.random() < malformed_rate:
                    text = re.sub(r" \+ ", " ", text, count=1)
                lines.append(f"{len(lines) + 1}. {text}")
        return "\n".join(lines)

    return respond
