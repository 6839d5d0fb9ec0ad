"""Pipeline configuration: TOML file -> provider registry + executor.

Providers are declared as an array of tables; credentials are named by
environment variable, never stored. Mock providers may point at script
files so scripted runs are reproducible from config alone.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .executor import ScriptedExecutor, ShimExecutor
from .providers import ResponseCache
from .providers.http import (
    HttpEmbedProvider,
    HttpImageProvider,
    HttpTextProvider,
    HttpVqaProvider,
)
from .providers.mock import (
    ByteHistogramEmbedder,
    MockImageProvider,
    MockTextProvider,
    MockVqaProvider,
    load_image_script,
    load_text_script,
    load_vqa_script,
)

PROVIDER_KINDS = ("text", "vqa", "image", "embed")


@dataclass
class ProviderSpec:
    id: str
    kind: str
    impl: str = "mock"
    model_id: str = ""
    endpoint: str = ""
    api_key_env: str = ""
    max_concurrency: int = 4
    max_attempts: int = 3
    temperature: float | None = None
    dim: int = 256
    size: tuple[int, int] = (1024, 1024)
    script: str = ""
    allow_any: bool = False
    prompt_rewriting: bool = False


@dataclass
class ExecutorConfig:
    kind: str = "fake"  # fake | shim
    shim_cmd: list[str] = field(default_factory=lambda: ["render-shim"])
    timeout_s: float = 60.0
    render_parallelism: int = 0  # 0 -> cpu count


@dataclass
class PipelineConfig:
    providers: dict[str, ProviderSpec] = field(default_factory=dict)
    executor: ExecutorConfig = field(default_factory=ExecutorConfig)
    cache_dir: str = "cache"
    artifacts_dir: str = "artifacts"
    seed: int = 0
    concurrency: int = 1
    blind_trials: int = 4
    k_per_type: int = 2
    analysis_size: int = 256
    base_dir: Path = field(default_factory=Path.cwd)

    def resolve(self, path: str | Path) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text("utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc

    config = PipelineConfig(base_dir=path.parent.resolve())
    for key in ("cache_dir", "artifacts_dir"):
        if key in raw:
            setattr(config, key, str(raw[key]))
    for key in ("seed", "concurrency", "blind_trials", "k_per_type", "analysis_size"):
        if key in raw:
            setattr(config, key, int(raw[key]))

    if "executor" in raw:
        ex = raw["executor"]
        config.executor = ExecutorConfig(
            kind=ex.get("kind", "fake"),
            shim_cmd=[str(p) for p in ex.get("shim_cmd", ["render-shim"])],
            timeout_s=float(ex.get("timeout_s", 60.0)),
            render_parallelism=int(ex.get("render_parallelism", 0)),
        )
        if config.executor.kind not in ("fake", "shim"):
            raise ConfigError(f"executor.kind must be fake|shim, got {config.executor.kind!r}")

    for entry in raw.get("providers", []):
        try:
            spec = ProviderSpec(
                id=entry["id"],
                kind=entry["kind"],
                impl=entry.get("impl", "mock"),
                model_id=entry.get("model_id", ""),
                endpoint=entry.get("endpoint", ""),
                api_key_env=entry.get("api_key_env", ""),
                max_concurrency=int(entry.get("max_concurrency", 4)),
                max_attempts=int(entry.get("max_attempts", 3)),
                temperature=entry.get("temperature"),
                dim=int(entry.get("dim", 256)),
                size=tuple(entry.get("size", (1024, 1024))),
                script=entry.get("script", ""),
                allow_any=bool(entry.get("allow_any", False)),
                prompt_rewriting=bool(entry.get("prompt_rewriting", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"provider entry missing field {exc}") from exc
        if spec.kind not in PROVIDER_KINDS:
            raise ConfigError(f"provider {spec.id!r}: unknown kind {spec.kind!r}")
        if spec.id in config.providers:
            raise ConfigError(f"duplicate provider id {spec.id!r}")
        config.providers[spec.id] = spec
    return config


def build_provider(spec: ProviderSpec, config: PipelineConfig, cache: ResponseCache | None):
    common = dict(
        model_id=spec.model_id,
        cache=cache,
        max_attempts=spec.max_attempts,
        max_concurrency=spec.max_concurrency,
        default_temperature=spec.temperature,
    )
    if spec.impl == "mock":
        if spec.kind == "text":
            script = load_text_script(config.resolve(spec.script)) if spec.script else {}
            return MockTextProvider(spec.id, script=script, **common)
        if spec.kind == "vqa":
            script = load_vqa_script(config.resolve(spec.script)) if spec.script else {}
            return MockVqaProvider(spec.id, script=script, **common)
        if spec.kind == "image":
            script = load_image_script(config.resolve(spec.script)) if spec.script else {}
            return MockImageProvider(
                spec.id, script=script, allow_any=spec.allow_any, size=spec.size, **common
            )
        if spec.kind == "embed":
            return ByteHistogramEmbedder(spec.id, dim=spec.dim, **common)
    if spec.impl == "histogram" and spec.kind == "embed":
        return ByteHistogramEmbedder(spec.id, dim=spec.dim, **common)
    if spec.impl == "http":
        http_common = dict(common, endpoint=spec.endpoint, api_key_env=spec.api_key_env)
        if spec.kind == "text":
            return HttpTextProvider(spec.id, **http_common)
        if spec.kind == "vqa":
            return HttpVqaProvider(spec.id, **http_common)
        if spec.kind == "image":
            return HttpImageProvider(
                spec.id, size=spec.size, prompt_rewriting=spec.prompt_rewriting, **http_common
            )
        if spec.kind == "embed":
            return HttpEmbedProvider(spec.id, dim=spec.dim, **http_common)
    raise ConfigError(
        f"provider {spec.id!r}: unsupported (impl={spec.impl!r}, kind={spec.kind!r})"
    )


def build_providers(config: PipelineConfig, cache: ResponseCache | None) -> dict[str, object]:
    return {
        spec_id: build_provider(spec, config, cache)
        for spec_id, spec in config.providers.items()
    }


def build_executor(config: PipelineConfig):
    artifacts_root = config.resolve(config.artifacts_dir)
    if config.executor.kind == "fake":
        return ScriptedExecutor(artifacts_root=artifacts_root)
    parallelism = config.executor.render_parallelism or (os.cpu_count() or 1)
    return ShimExecutor(
        config.executor.shim_cmd,
        artifacts_root=artifacts_root,
        parallelism=parallelism,
    )
