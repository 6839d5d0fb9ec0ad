"""Uniform, mockable interfaces to text, image, VQA, and embedding models."""

from __future__ import annotations

from pathlib import Path

from .base import (
    BaseProvider,
    EmbedProvider,
    EmbeddingVector,
    ImageGenProvider,
    ProviderResponse,
    TextProvider,
    TextRequest,
    VqaProvider,
    digest_key,
    read_png_bytes,
)
from .cache import ResponseCache
from .mock import (
    ByteHistogramEmbedder,
    MockImageProvider,
    MockTextProvider,
    MockVqaProvider,
    fixture_png,
    load_image_script,
    load_text_script,
    load_vqa_script,
)

__all__ = [
    "BaseProvider",
    "ByteHistogramEmbedder",
    "EmbedProvider",
    "EmbeddingVector",
    "ImageGenProvider",
    "MockImageProvider",
    "MockTextProvider",
    "MockVqaProvider",
    "ProviderResponse",
    "ResponseCache",
    "TextProvider",
    "TextRequest",
    "VqaProvider",
    "answer_visual_question",
    "cache_key",
    "complete_text",
    "digest_key",
    "embed",
    "fixture_png",
    "generate_image",
    "load_image_script",
    "load_text_script",
    "load_vqa_script",
    "read_png_bytes",
]


def complete_text(provider: TextProvider, request: TextRequest) -> ProviderResponse:
    return provider.complete(request)


def answer_visual_question(
    provider: VqaProvider, image_path: str | Path, question: str
) -> str:
    return provider.answer(image_path, question)


def generate_image(provider: ImageGenProvider, prompt: str) -> bytes:
    return provider.generate(prompt)


def embed(provider: EmbedProvider, payload: bytes | str) -> EmbeddingVector:
    return provider.embed(payload)


def cache_key(provider: TextProvider, request: TextRequest) -> str:
    return provider.cache_key(request)
