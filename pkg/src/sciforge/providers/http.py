"""Thin HTTP adapters for OpenAI-compatible endpoints.

These back the optional "live" tier; all other tests use the mocks. Each
adapter maps one provider kind onto the corresponding JSON body shape and
translates HTTP failures into the retryable error family. Credentials come
only from the environment variable named in the provider config.
"""

from __future__ import annotations

import base64
import os
from pathlib import Path

import requests

from ..errors import RateLimited, TransportError
from .base import ImageGenProvider, TextProvider, TextRequest, VqaProvider, EmbedProvider


class _HttpMixin:
    def __init__(self, *args, endpoint: str = "", api_key_env: str = "", timeout_s: float = 120.0, **kw):
        super().__init__(*args, **kw)
        self.endpoint = endpoint.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if not key:
                raise TransportError(
                    f"environment variable {self.api_key_env} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, path: str, body: dict) -> dict:
        try:
            resp = requests.post(
                f"{self.endpoint}{path}",
                json=body,
                headers=self._headers(),
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimited(
                "rate limited",
                retry_after=float(resp.headers.get("Retry-After", "1")),
            )
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise TransportError(f"non-JSON response: {exc}") from exc


class HttpTextProvider(_HttpMixin, TextProvider):
    def _call(self, request: TextRequest) -> str:
        body = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output,
        }
        data = self._post("/chat/completions", body)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response shape: {exc}") from exc


class HttpVqaProvider(_HttpMixin, VqaProvider):
    def _call(self, image_path: Path, image_bytes: bytes, question: str, variant: int) -> str:
        image_b64 = base64.b64encode(image_bytes).decode("ascii")
        body = {
            "model": self.model_id,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": question},
                        {
                            "type": "image_url",
                            "image_url": {"url": f"data:image/png;base64,{image_b64}"},
                        },
                    ],
                }
            ],
        }
        data = self._post("/chat/completions", body)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response shape: {exc}") from exc


class HttpImageProvider(_HttpMixin, ImageGenProvider):
    def __init__(self, *args, prompt_rewriting: bool = False, **kw):
        super().__init__(*args, **kw)
        # Provider-side prompt rewriting is an adapter flag; the body field
        # below is ignored by providers that do not support it.
        self.prompt_rewriting = prompt_rewriting

    def _call(self, prompt: str, variant: int) -> bytes:
        body = {
            "model": self.model_id,
            "prompt": prompt,
            "size": f"{self.size[0]}x{self.size[1]}",
            "response_format": "b64_json",
        }
        if self.prompt_rewriting:
            body["prompt_rewriting"] = True
        data = self._post("/images/generations", body)
        try:
            return base64.b64decode(data["data"][0]["b64_json"])
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"unexpected response shape: {exc}") from exc


class HttpEmbedProvider(_HttpMixin, EmbedProvider):
    def _call(self, payload: bytes) -> list[float]:
        try:
            text = payload.decode("utf-8")
        except UnicodeDecodeError:
            text = base64.b64encode(payload).decode("ascii")
        body = {"model": self.model_id, "input": text}
        data = self._post("/embeddings", body)
        try:
            return [float(v) for v in data["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"unexpected response shape: {exc}") from exc
