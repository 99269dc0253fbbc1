"""Evaluation configuration: weights, toolchain, backend, vocabularies.

Configuration is plain JSON.  Every knob has a sensible default so an
empty config (or none at all) runs the hermetic pipeline end to end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .compile_check import CompileConfig
from .metrics import ClauseWeightTable, MetricWeights
from .similarity import (
    BagOfTokensBackend,
    FallbackBackend,
    RemoteEmbeddingBackend,
    SimilarityBackend,
)


class ConfigError(ValueError):
    """The configuration is invalid; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "bag_of_tokens"
    endpoint: str | None = None
    model_id: str | None = None
    timeout: float = 30.0
    fallback: str | None = None  # "bag_of_tokens" to tolerate remote failures

    def __post_init__(self) -> None:
        if self.kind not in ("bag_of_tokens", "remote_embedding"):
            raise ConfigError(f"unknown similarity backend: {self.kind!r}")
        if self.kind == "remote_embedding" and not (self.endpoint and self.model_id):
            raise ConfigError("remote_embedding backend needs endpoint and model_id")
        if self.fallback not in (None, "bag_of_tokens"):
            raise ConfigError(f"unknown fallback backend: {self.fallback!r}")


@dataclass(frozen=True)
class EvalConfig:
    weights: MetricWeights = field(default_factory=MetricWeights)
    clause_weights: ClauseWeightTable = field(default_factory=ClauseWeightTable)
    backend: BackendSpec = field(default_factory=BackendSpec)
    compile: CompileConfig = field(default_factory=CompileConfig)
    compile_enabled: bool = True
    clause_vocabulary_path: str | None = None
    tag_vocabulary_path: str | None = None

    def make_backend(self) -> SimilarityBackend:
        if self.backend.kind == "remote_embedding":
            remote = RemoteEmbeddingBackend(
                endpoint=self.backend.endpoint or "",
                model_id=self.backend.model_id or "",
                timeout=self.backend.timeout,
            )
            if self.backend.fallback == "bag_of_tokens":
                return FallbackBackend(remote, BagOfTokensBackend())
            return remote
        return BagOfTokensBackend()

    def echo(self) -> dict:
        """JSON-serializable view of the effective configuration."""
        return {
            "weights": {
                "wc": self.weights.wc,
                "vu": self.weights.vu,
                "is": self.weights.is_,
                "or": self.weights.or_,
                "rc": self.weights.rc,
                "cc": self.weights.cc,
                "pl": self.weights.pl,
                "compile": self.weights.compile_,
                "is_blend_alpha": self.weights.is_blend_alpha,
            },
            "clause_weights": {
                "table": dict(sorted(self.clause_weights.weights.items())),
                "default": self.clause_weights.default_weight,
            },
            "backend": {"kind": self.backend.kind, "model_id": self.backend.model_id},
            "compile": {
                "command": list(self.compile.compiler_command or []),
                "extra_flags": list(self.compile.extra_flags),
                "mode": self.compile.mode,
                "enabled": self.compile_enabled,
            },
        }


def _build_weights(raw: dict) -> MetricWeights:
    mapping = {
        "wc": "wc",
        "vu": "vu",
        "is": "is_",
        "or": "or_",
        "rc": "rc",
        "cc": "cc",
        "pl": "pl",
        "compile": "compile_",
        "is_blend_alpha": "is_blend_alpha",
    }
    kwargs = {}
    for key, value in raw.items():
        if key not in mapping:
            raise ConfigError(f"unknown weight key: {key!r}")
        kwargs[mapping[key]] = float(value)
    try:
        return MetricWeights(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_clause_weights(raw: dict) -> ClauseWeightTable:
    table = {str(k): float(v) for k, v in raw.get("table", {}).items()}
    if not table and raw and "table" not in raw and "default" not in raw:
        # allow the flat form {"reduction": 5, ...}
        table = {str(k): float(v) for k, v in raw.items()}
    try:
        return ClauseWeightTable(
            weights=table or {"reduction": 5.0},
            default_weight=float(raw.get("default", 1.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_compile(raw: dict) -> CompileConfig:
    command = raw.get("command")
    try:
        return CompileConfig(
            compiler_command=tuple(command) if command else None,
            extra_flags=tuple(raw.get("extra_flags", ())),
            mode=raw.get("mode", "syntax_only"),
            timeout=float(raw.get("timeout", 30.0)),
            wrap_snippets=bool(raw.get("wrap_snippets", True)),
            cache_dir=raw.get("cache_dir"),
            timeout_as_failure=bool(raw.get("timeout_as_failure", False)),
            language=raw.get("language", "c++"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> EvalConfig:
    """Load and validate a JSON config; None yields the defaults."""
    if path is None:
        return EvalConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    known = {
        "weights",
        "clause_weights",
        "backend",
        "compile",
        "compile_enabled",
        "clause_vocabulary",
        "tag_vocabulary",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    backend_raw = raw.get("backend", {})
    try:
        backend = BackendSpec(
            kind=backend_raw.get("kind", "bag_of_tokens"),
            endpoint=backend_raw.get("endpoint"),
            model_id=backend_raw.get("model_id"),
            timeout=float(backend_raw.get("timeout", 30.0)),
            fallback=backend_raw.get("fallback"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return EvalConfig(
        weights=_build_weights(raw.get("weights", {})),
        clause_weights=_build_clause_weights(raw.get("clause_weights", {})),
        backend=backend,
        compile=_build_compile(raw.get("compile", {})),
        compile_enabled=bool(raw.get("compile_enabled", True)),
        clause_vocabulary_path=raw.get("clause_vocabulary"),
        tag_vocabulary_path=raw.get("tag_vocabulary"),
    )
