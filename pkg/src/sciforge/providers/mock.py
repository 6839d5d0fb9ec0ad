"""First-class scripted mock providers.

Every test tier below "live" runs on these. Text and image mocks are keyed
by cache key / prompt; the VQA mock is keyed by (image filename, question)
so fixtures can be authored without knowing image bytes. Scripted failure
budgets allow retry-path testing. All mocks count outbound calls so cache
behaviour is observable.
"""

from __future__ import annotations

import hashlib
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import TransportError
from .base import (
    EmbedProvider,
    ImageGenProvider,
    TextProvider,
    TextRequest,
    VqaProvider,
)


def fixture_png(seed_text: str, size: tuple[int, int] = (64, 64)) -> bytes:
    """Deterministic solid-colour PNG derived from a text hash."""
    r, g, b = hashlib.sha256(seed_text.encode("utf-8")).digest()[:3]
    buf = io.BytesIO()
    Image.new("RGB", size, (r, g, b)).save(buf, format="PNG")
    return buf.getvalue()


class MockTextProvider(TextProvider):
    def __init__(
        self,
        provider_id: str = "mock-text",
        *,
        script: dict[str, str] | None = None,
        default_reply: str | None = None,
        **kw,
    ):
        kw.setdefault("max_attempts", 1)
        kw.setdefault("backoff_base", 0.0)
        super().__init__(provider_id, **kw)
        self.script: dict[str, str] = dict(script or {})
        self.default_reply = default_reply
        self.fail_counts: dict[str, int] = {}
        self.calls = 0

    def script_reply(self, request: TextRequest, reply: str) -> str:
        """Register a reply for the request's cache key; returns the key."""
        key = self.cache_key(request)
        self.script[key] = reply
        return key

    def script_failures(self, request: TextRequest, count: int) -> None:
        self.fail_counts[self.cache_key(request)] = count

    def _call(self, request: TextRequest) -> str:
        self.calls += 1
        key = self.cache_key(request)
        remaining = self.fail_counts.get(key, 0)
        if remaining > 0:
            self.fail_counts[key] = remaining - 1
            raise TransportError("scripted transport failure")
        if key in self.script:
            return self.script[key]
        if self.default_reply is not None:
            return self.default_reply
        raise TransportError(f"unscripted request (key {key[:12]}…)")


class MockVqaProvider(VqaProvider):
    def __init__(
        self,
        provider_id: str = "mock-vqa",
        *,
        script: dict[tuple[str, str], str] | None = None,
        default_answer: str | None = None,
        **kw,
    ):
        kw.setdefault("max_attempts", 1)
        kw.setdefault("backoff_base", 0.0)
        super().__init__(provider_id, **kw)
        self.script: dict[tuple, str] = dict(script or {})
        self.default_answer = default_answer
        self.fail_counts: dict[tuple, int] = {}
        self.calls = 0

    def script_answer(
        self,
        image_name: str | Path,
        question: str,
        answer: str,
        *,
        variant: int | None = None,
    ) -> None:
        name = Path(image_name).name
        if variant is None:
            self.script[(name, question)] = answer
        else:
            self.script[(name, question, variant)] = answer

    def _call(
        self, image_path: Path, image_bytes: bytes, question: str, variant: int
    ) -> str:
        self.calls += 1
        name = image_path.name
        for lookup in ((name, question, variant), (name, question)):
            remaining = self.fail_counts.get(lookup, 0)
            if remaining > 0:
                self.fail_counts[lookup] = remaining - 1
                raise TransportError("scripted transport failure")
            if lookup in self.script:
                return self.script[lookup]
        if self.default_answer is not None:
            return self.default_answer
        raise TransportError(f"unscripted VQA request ({name}, {question[:40]!r})")


class MockImageProvider(ImageGenProvider):
    """Returns a deterministic fixture PNG for each scripted prompt."""

    def __init__(
        self,
        provider_id: str = "mock-image",
        *,
        script: dict[str, bytes | None] | None = None,
        allow_any: bool = False,
        size: tuple[int, int] = (64, 64),
        **kw,
    ):
        kw.setdefault("max_attempts", 1)
        kw.setdefault("backoff_base", 0.0)
        super().__init__(provider_id, size=size, **kw)
        self.script: dict[str, bytes | None] = dict(script or {})
        self.allow_any = allow_any
        self.fail_counts: dict[str, int] = {}
        self.calls = 0

    def script_prompt(
        self, prompt: str, data: bytes | None = None, *, variant: int | None = None
    ) -> None:
        key = prompt if variant is None else (prompt, variant)
        self.script[key] = data

    def script_failures(self, prompt: str, count: int) -> None:
        self.fail_counts[prompt] = count

    def _call(self, prompt: str, variant: int) -> bytes:
        self.calls += 1
        remaining = self.fail_counts.get(prompt, 0)
        if remaining > 0:
            self.fail_counts[prompt] = remaining - 1
            raise TransportError("scripted transport failure")
        for key in ((prompt, variant), prompt):
            if key in self.script:
                data = self.script[key]
                return data if data is not None else fixture_png(f"{prompt}#{variant}", self.size)
        if self.allow_any:
            return fixture_png(f"{prompt}#{variant}", self.size)
        raise TransportError(f"unscripted prompt ({prompt[:40]!r})")


class ByteHistogramEmbedder(EmbedProvider):
    """Deterministic embedding: normalized histogram over payload bytes.

    Byte value b lands in bin ``b * dim // 256``; the vector sums to 1 for
    any non-empty payload. Useful as an oracle-friendly stand-in for a real
    embedding model.
    """

    def __init__(self, provider_id: str = "mock-embed", *, dim: int = 256, **kw):
        kw.setdefault("max_attempts", 1)
        kw.setdefault("backoff_base", 0.0)
        super().__init__(provider_id, dim=dim, **kw)
        self.calls = 0

    def _call(self, payload: bytes) -> list[float]:
        self.calls += 1
        values = np.frombuffer(payload, dtype=np.uint8)
        bins = (values.astype(np.int64) * self.dim) // 256
        counts = np.bincount(bins, minlength=self.dim).astype(np.float64)
        return (counts / counts.sum()).tolist()


def load_text_script(path: str | Path) -> dict[str, str]:
    """Load a {cache_key: reply} script file for MockTextProvider."""
    return json.loads(Path(path).read_text("utf-8"))


def load_vqa_script(path: str | Path) -> dict[tuple, str]:
    """Load a list of [image_name, question, answer] triples."""
    entries = json.loads(Path(path).read_text("utf-8"))
    return {(name, question): answer for name, question, answer in entries}


def load_image_script(path: str | Path) -> dict[str, None]:
    """Load a list of allowed prompts (fixture PNGs are auto-derived)."""
    prompts = json.loads(Path(path).read_text("utf-8"))
    return {prompt: None for prompt in prompts}
