"""Provider base classes: caching, retry with backoff, concurrency bounds.

A provider wraps one remote (or mock) model endpoint. All four kinds share
the same call discipline: compute a content-addressed cache key, serve from
cache when possible, otherwise call the backend under a per-provider
semaphore with exponential backoff on transport errors.

Requests carry a ``variant`` salt. Deliberate resampling (render retries,
blind-solver trials) bumps the salt so each sample gets its own cache slot;
a rerun with a warm cache then replays every sample without touching the
backend.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import logging
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from ..errors import (
    DimMismatchError,
    ImageDecodeError,
    RateLimited,
    TransportError,
)
from .cache import ResponseCache

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TextRequest:
    prompt: str
    temperature: float = 0.6
    max_output: int = 4096
    model_id: str = ""
    variant: int = 0

    def validate(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0,2]")
        if self.max_output <= 0:
            raise ValueError("max_output must be positive")


@dataclass
class ProviderResponse:
    payload: str | bytes
    latency_s: float
    from_cache: bool

    @property
    def text(self) -> str:
        if isinstance(self.payload, bytes):
            return self.payload.decode("utf-8")
        return self.payload


@dataclass
class EmbeddingVector:
    values: list[float]
    dim: int

    def validate(self) -> None:
        if self.dim <= 0:
            raise DimMismatchError(f"dim must be positive, got {self.dim}")
        if len(self.values) != self.dim:
            raise DimMismatchError(
                f"vector length {len(self.values)} != dim {self.dim}"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise DimMismatchError("vector contains non-finite entries")


def digest_key(*parts: str | bytes | int | float) -> str:
    """Stable hex key over heterogeneous parts (length-prefixed, typed)."""
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            tag, data = b"b", part
        elif isinstance(part, bool):
            tag, data = b"i", str(int(part)).encode()
        elif isinstance(part, int):
            tag, data = b"i", str(part).encode()
        elif isinstance(part, float):
            tag, data = b"f", repr(part).encode()
        else:
            tag, data = b"s", str(part).encode("utf-8")
        h.update(tag)
        h.update(str(len(data)).encode())
        h.update(b":")
        h.update(data)
    return h.hexdigest()


def read_png_bytes(image_path: str | Path) -> bytes:
    """Read and verify a PNG file; ImageDecodeError if missing or invalid."""
    path = Path(image_path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageDecodeError(f"cannot read image {path}: {exc}") from exc
    try:
        with Image.open(io.BytesIO(data)) as img:
            if img.format != "PNG":
                raise ImageDecodeError(f"{path} is {img.format}, expected PNG")
            img.verify()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(f"{path} does not decode as PNG: {exc}") from exc
    return data


class BaseProvider:
    """Shared retry/cache/concurrency plumbing for all provider kinds."""

    kind = "base"

    def __init__(
        self,
        provider_id: str,
        *,
        model_id: str = "",
        cache: ResponseCache | None = None,
        max_attempts: int = 3,
        backoff_base: float = 0.05,
        backoff_factor: float = 2.0,
        max_concurrency: int = 4,
        default_temperature: float | None = None,
    ):
        self.provider_id = provider_id
        self.model_id = model_id
        self.cache = cache
        self.max_attempts = max(1, int(max_attempts))
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.default_temperature = default_temperature
        self._semaphore = threading.BoundedSemaphore(max(1, int(max_concurrency)))

    def _with_retry(self, fn):
        delay = self.backoff_base
        last_error: TransportError | None = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                with self._semaphore:
                    return fn()
            except RateLimited as exc:
                last_error = exc
                log.warning(
                    "provider %s attempt %d/%d rate limited: %s",
                    self.provider_id, attempt, self.max_attempts, exc,
                )
                if attempt < self.max_attempts:
                    time.sleep(exc.retry_after)
            except TransportError as exc:
                last_error = exc
                log.warning(
                    "provider %s attempt %d/%d failed: %s",
                    self.provider_id, attempt, self.max_attempts, exc,
                )
                if attempt < self.max_attempts:
                    time.sleep(delay)
                    delay *= self.backoff_factor
        assert last_error is not None
        raise last_error


class TextProvider(BaseProvider):
    kind = "text"

    def _effective(self, request: TextRequest) -> TextRequest:
        if request.model_id or not self.model_id:
            return request
        return dataclasses.replace(request, model_id=self.model_id)

    def cache_key(self, request: TextRequest) -> str:
        req = self._effective(request)
        return digest_key(
            "text",
            self.provider_id,
            req.model_id,
            req.prompt,
            float(req.temperature),
            req.max_output,
            req.variant,
        )

    def complete(self, request: TextRequest) -> ProviderResponse:
        request.validate()
        req = self._effective(request)
        key = self.cache_key(req)
        start = time.perf_counter()
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return ProviderResponse(
                    cached.decode("utf-8"), time.perf_counter() - start, True
                )
        text = self._with_retry(lambda: self._call(req))
        if not text:
            raise TransportError(f"provider {self.provider_id} returned empty payload")
        if self.cache is not None:
            self.cache.put(key, text.encode("utf-8"))
        return ProviderResponse(text, time.perf_counter() - start, False)

    def _call(self, request: TextRequest) -> str:
        raise NotImplementedError


class VqaProvider(BaseProvider):
    kind = "vqa"

    def cache_key(self, image_bytes: bytes, question: str, variant: int = 0) -> str:
        return digest_key(
            "vqa", self.provider_id, self.model_id, image_bytes, question, variant
        )

    def answer(self, image_path: str | Path, question: str, *, variant: int = 0) -> str:
        image_bytes = read_png_bytes(image_path)
        key = self.cache_key(image_bytes, question, variant)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return cached.decode("utf-8")
        text = self._with_retry(
            lambda: self._call(Path(image_path), image_bytes, question, variant)
        )
        if not text:
            raise TransportError(f"provider {self.provider_id} returned empty payload")
        if self.cache is not None:
            self.cache.put(key, text.encode("utf-8"))
        return text

    def _call(
        self, image_path: Path, image_bytes: bytes, question: str, variant: int
    ) -> str:
        raise NotImplementedError


class ImageGenProvider(BaseProvider):
    kind = "image"

    def __init__(self, provider_id: str, *, size: tuple[int, int] = (1024, 1024), **kw):
        super().__init__(provider_id, **kw)
        self.size = size

    def cache_key(self, prompt: str, variant: int = 0) -> str:
        return digest_key(
            "image", self.provider_id, self.model_id, prompt, variant,
            self.size[0], self.size[1],
        )

    def generate(self, prompt: str, *, variant: int = 0) -> bytes:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        key = self.cache_key(prompt, variant)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return cached
        data = self._with_retry(lambda: self._call(prompt, variant))
        if not data:
            raise TransportError(f"provider {self.provider_id} returned empty payload")
        if self.cache is not None:
            self.cache.put(key, data)
        return data

    def _call(self, prompt: str, variant: int) -> bytes:
        raise NotImplementedError


class EmbedProvider(BaseProvider):
    kind = "embed"

    def __init__(self, provider_id: str, *, dim: int = 512, **kw):
        super().__init__(provider_id, **kw)
        self.dim = dim

    def cache_key(self, payload: bytes) -> str:
        return digest_key("embed", self.provider_id, self.model_id, payload, self.dim)

    def embed(self, payload: bytes | str) -> EmbeddingVector:
        raw = payload.encode("utf-8") if isinstance(payload, str) else payload
        if not raw:
            raise ValueError("payload must be non-empty")
        key = self.cache_key(raw)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                values = json.loads(cached.decode("utf-8"))
                vector = EmbeddingVector(values=values, dim=self.dim)
                vector.validate()
                return vector
        values = self._with_retry(lambda: self._call(raw))
        values = [float(v) for v in values]
        if len(values) != self.dim:
            raise DimMismatchError(
                f"provider {self.provider_id} returned length {len(values)}, "
                f"configured dim {self.dim}"
            )
        vector = EmbeddingVector(values=values, dim=self.dim)
        vector.validate()
        if self.cache is not None:
            self.cache.put(key, json.dumps(values).encode("utf-8"))
        return vector

    def _call(self, payload: bytes) -> list[float]:
        raise NotImplementedError
