"""Kernel configuration and the ML-library registry."""

from __future__ import annotations

import dataclasses
import json
import os
import types
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

CONFIG_ENV = "MLZERO_CONFIG"
FALLBACK_TOOL = "machine learning"
EPISODIC_MODES = ("default", "without_fix", "without_both", "multi_turn")
INDEX_MODES = ("by_summary", "by_title_only")


class ConfigError(ValueError):
    """Invalid configuration or registry content."""


@dataclass
class RoleConfig:
    provider: str = "bedrock"
    model: str = "us.anthropic.claude-3-7-sonnet-20250219-v1:0"
    max_tokens: int = 65536
    proxy_url: str | None = None
    temperature: float = 0.0
    verbose: bool = True
    multi_turn: bool = False
    base_url: str | None = None
    script_path: str | None = None
    top_p: float | None = None
    max_stdout_length: int | None = None
    max_stderr_length: int | None = None
    details: bool | None = None


# keys each role adds on top of the shared llm block
ROLE_EXTRAS: dict[str, dict[str, Any]] = {
    "coder": {"temperature": 0.5, "top_p": 1.0},
    "planner": {"max_stdout_length": 8192, "max_stderr_length": 2048},
    "file_reader": {"details": False},
}


@dataclass
class PerceptionConfig:
    group_delta: int = 5
    always_generate_readers: bool = False
    max_workers: int = 4


@dataclass
class SemanticMemoryConfig:
    enabled: bool = True
    index_mode: str = "by_summary"
    chunk_size: int = 8192
    kb_path: str | None = None


@dataclass
class EpisodicMemoryConfig:
    mode: str = "default"


@dataclass
class SandboxConfig:
    command_prefix: str | None = None
    kill_grace_seconds: float = 10.0


@dataclass
class KernelConfig:
    stream_output: bool = True
    per_execution_timeout: int = 10800
    max_chars_per_file: int = 1024
    max_num_tutorials: int = 5
    max_user_input_length: int = 2048
    max_error_message_length: int = 2048
    max_tutorial_length: int = 8192
    create_venv: bool = False
    condense_tutorials: bool = True
    max_iterations: int = 5
    install_packages: bool = False
    llm: RoleConfig = field(default_factory=RoleConfig)
    coder: RoleConfig = field(default_factory=lambda: RoleConfig(**ROLE_EXTRAS["coder"]))
    planner: RoleConfig = field(default_factory=lambda: RoleConfig(**ROLE_EXTRAS["planner"]))
    file_reader: RoleConfig = field(default_factory=lambda: RoleConfig(**ROLE_EXTRAS["file_reader"]))
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    semantic_memory: SemanticMemoryConfig = field(default_factory=SemanticMemoryConfig)
    episodic_memory: EpisodicMemoryConfig = field(default_factory=EpisodicMemoryConfig)
    sandbox: SandboxConfig = field(default_factory=SandboxConfig)

    # stdout/stderr caps live in the planner block of the config file
    @property
    def max_stdout_length(self) -> int:
        return self.planner.max_stdout_length

    @property
    def max_stderr_length(self) -> int:
        return self.planner.max_stderr_length

    def to_dict(self) -> dict[str, Any]:
        return _to_plain(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _to_plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        out = {}
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if value is None and isinstance(obj, RoleConfig) and f.name in _ROLE_OPTIONAL:
                continue
            out[f.name] = _to_plain(value)
        return out
    return obj


_ROLE_OPTIONAL = {"top_p", "max_stdout_length", "max_stderr_length", "details", "base_url", "script_path"}
_ROLE_NAMES = ("coder", "planner", "file_reader")


def _check_scalar(name: str, value: Any, annotation: Any) -> Any:
    allowed = typing.get_args(annotation) if isinstance(annotation, types.UnionType) else (annotation,)
    if value is None:
        if type(None) in allowed:
            return None
        raise ConfigError(f"{name}: null is not allowed")
    for kind in allowed:
        if kind is bool and isinstance(value, bool):
            return value
        if kind is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if kind is str and isinstance(value, str):
            return value
    names = " or ".join(getattr(k, "__name__", str(k)) for k in allowed)
    raise ConfigError(f"{name}: expected {names}, got {type(value).__name__} {value!r}")


def _apply(target: Any, data: dict[str, Any], prefix: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected a mapping")
    hints = typing.get_type_hints(type(target))
    known = {f.name for f in dataclasses.fields(target)}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if key == "<<":
            continue
        if key not in known:
            raise ConfigError(f"unknown config key: {name}")
        current = getattr(target, key)
        if dataclasses.is_dataclass(current):
            _apply(current, value, name + ".")
        else:
            setattr(target, key, _check_scalar(name, value, hints[key]))


def _validate(cfg: KernelConfig) -> None:
    positive = [
        "per_execution_timeout",
        "max_chars_per_file",
        "max_user_input_length",
        "max_error_message_length",
        "max_tutorial_length",
        "max_iterations",
    ]
    for key in positive:
        if getattr(cfg, key) <= 0:
            raise ConfigError(f"{key} must be positive")
    if cfg.max_num_tutorials < 0:
        raise ConfigError("max_num_tutorials must be nonnegative")
    if cfg.max_error_message_length < 2:
        raise ConfigError("max_error_message_length must be at least 2")
    for role in ("llm",) + _ROLE_NAMES:
        block: RoleConfig = getattr(cfg, role)
        if not 0.0 <= block.temperature <= 1.0:
            raise ConfigError(f"{role}.temperature must be within [0, 1]")
        if block.max_tokens <= 0:
            raise ConfigError(f"{role}.max_tokens must be positive")
    for key in ("max_stdout_length", "max_stderr_length"):
        value = getattr(cfg.planner, key)
        if value is None or value < 2:
            raise ConfigError(f"planner.{key} must be at least 2")
    if cfg.episodic_memory.mode not in EPISODIC_MODES:
        raise ConfigError(f"episodic_memory.mode must be one of {EPISODIC_MODES}")
    if cfg.semantic_memory.index_mode not in INDEX_MODES:
        raise ConfigError(f"semantic_memory.index_mode must be one of {INDEX_MODES}")
    if cfg.semantic_memory.chunk_size <= 0:
        raise ConfigError("semantic_memory.chunk_size must be positive")
    if cfg.perception.group_delta < 1 or cfg.perception.max_workers < 1:
        raise ConfigError("perception.group_delta and perception.max_workers must be >= 1")


def config_from_dict(data: dict[str, Any] | None) -> KernelConfig:
    """Merge ``data`` over the defaults.

    Role blocks start from the shared ``llm`` block, add their role defaults
    (coder temperature 0.5 and so on), then apply their own overrides.
    """
    data = dict(data or {})
    cfg = KernelConfig()
    llm_data = data.pop("llm", None) or {}
    _apply(cfg.llm, llm_data, "llm.")
    role_data = {role: data.pop(role, None) or {} for role in _ROLE_NAMES}
    _apply(cfg, data, "")
    for role in _ROLE_NAMES:
        block = dataclasses.replace(cfg.llm)
        for key, value in ROLE_EXTRAS[role].items():
            setattr(block, key, value)
        _apply(block, role_data[role], f"{role}.")
        setattr(cfg, role, block)
    _validate(cfg)
    return cfg


def load_config(path: str | Path | None = None) -> KernelConfig:
    """Load a YAML config file (anchors and merge keys allowed) over defaults."""
    if path is None:
        return config_from_dict(None)
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)


def resolve_config_path(cli_value: str | None) -> str | None:
    return cli_value or os.environ.get(CONFIG_ENV) or None


@dataclass(frozen=True)
class ToolSpec:
    name: str
    version: str
    description: str
    features: tuple[str, ...] = ()
    requirements: tuple[str, ...] = ()
    prompt_template: tuple[str, ...] = ()

    @property
    def tool_prompt(self) -> str:
        return "\n".join(self.prompt_template)


def _string_list(record: dict, key: str, where: str) -> tuple[str, ...]:
    value = record.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{where}: {key} must be a list of strings")
    return tuple(value)


def parse_tool_registry(records: Any, where: str = "registry") -> list[ToolSpec]:
    if not isinstance(records, list) or not records:
        raise ConfigError(f"{where}: expected a nonempty list of tool records")
    tools: list[ToolSpec] = []
    seen: set[str] = set()
    allowed = {"name", "version", "description", "features", "requirements", "prompt_template"}
    for i, record in enumerate(records):
        label = f"{where}[{i}]"
        if not isinstance(record, dict):
            raise ConfigError(f"{label}: expected a mapping")
        extra = set(record) - allowed
        if extra:
            raise ConfigError(f"{label}: unknown field(s) {sorted(extra)}")
        for key in ("name", "version", "description"):
            if not isinstance(record.get(key), str) or not record[key]:
                raise ConfigError(f"{label}: missing or empty {key}")
        name = record["name"]
        if name in seen:
            raise ConfigError(f"duplicate tool name in {where}: {name!r}")
        seen.add(name)
        tools.append(
            ToolSpec(
                name=name,
                version=record["version"],
                description=record["description"],
                features=_string_list(record, "features", label),
                requirements=_string_list(record, "requirements", label),
                prompt_template=_string_list(record, "prompt_template", label),
            )
        )
    if FALLBACK_TOOL not in seen:
        raise ConfigError(f"{where}: missing the generic fallback entry {FALLBACK_TOOL!r}")
    return tools


def load_tool_registry(path: str | Path | None = None) -> list[ToolSpec]:
    """Load and validate a registry file; the shipped registry when ``path`` is None."""
    if path is None:
        text = resources.files("automl_agent").joinpath("data/registry.json").read_text()
        where = "default registry"
    else:
        text = Path(path).read_text()
        where = str(path)
    try:
        records = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}: invalid JSON: {exc}") from exc
    return parse_tool_registry(records, where)
