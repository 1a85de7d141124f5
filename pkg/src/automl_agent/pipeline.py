"""End-to-end run: perception, knowledge lookup, then the coding loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .coding import LoopConfig, RunOutcome, run_iterative_loop
from .config import ConfigError, KernelConfig, RoleConfig, ToolSpec
from .llm import Gateway, HttpChatBackend, LlmBackend, RoleSettings, RoutingBackend, ScriptedBackend
from .perception import PerceptionResult, perceive
from .sandbox import prepare_workspace
from .semantic import load_knowledge_base

log = logging.getLogger(__name__)


def backend_for(block: RoleConfig, role: str) -> LlmBackend:
    if block.provider == "scripted":
        if not block.script_path:
            raise ConfigError(f"{role}.script_path is required for the scripted provider")
        return ScriptedBackend.from_file(block.script_path)
    if block.provider in ("openai", "http"):
        if not block.base_url:
            raise ConfigError(f"{role}.base_url is required for provider {block.provider!r}")
        return HttpChatBackend(block.base_url, block.model, proxy_url=block.proxy_url)
    raise ConfigError(
        f"{role}.provider {block.provider!r} is not supported; use 'openai' with base_url "
        "(any OpenAI-compatible endpoint) or 'scripted' with script_path"
    )


def build_gateway(cfg: KernelConfig) -> Gateway:
    """One backend per distinct provider block, routed by role."""
    cache: dict[tuple, LlmBackend] = {}
    by_role: dict[str, LlmBackend] = {}
    settings: dict[str, RoleSettings] = {}
    for role in ("coder", "planner", "file_reader"):
        block: RoleConfig = getattr(cfg, role)
        key = (block.provider, block.base_url, block.model, block.proxy_url, block.script_path)
        if key not in cache:
            cache[key] = backend_for(block, role)
        by_role[role] = cache[key]
        settings[role] = RoleSettings(
            model=block.model,
            temperature=block.temperature,
            max_tokens=block.max_tokens,
            top_p=block.top_p,
            multi_turn=block.multi_turn,
        )
    return Gateway(RoutingBackend(by_role), settings)


@dataclass
class PipelineResult:
    perception: PerceptionResult
    outcome: RunOutcome


def run_pipeline(
    input_dir: str | Path,
    output_dir: str | Path,
    cfg: KernelConfig,
    registry: Sequence[ToolSpec],
    llm: Gateway,
    *,
    user_input: str = "",
    user_input_provider: Callable[[int], str] | None = None,
    kb_root: str | Path | None = None,
    wall_limit_seconds: float | None = None,
) -> PipelineResult:
    workspace = prepare_workspace(output_dir)
    perception = perceive(input_dir, llm, registry, cfg, workspace)
    ctx = perception.context
    (workspace.root / "perception.txt").write_text(render_context(ctx))

    kb_root = kb_root or cfg.semantic_memory.kb_path
    kb = load_knowledge_base(kb_root, ctx.selected_tool.name) if cfg.semantic_memory.enabled else []
    log.info("selected %s; %d knowledge documents", ctx.selected_tool.name, len(kb))

    outcome = run_iterative_loop(
        ctx,
        kb,
        LoopConfig.from_kernel(cfg),
        llm,
        workspace.root,
        user_input=user_input,
        user_input_provider=user_input_provider,
        wall_limit_seconds=wall_limit_seconds,
    )
    return PipelineResult(perception, outcome)


def render_context(ctx) -> str:
    files = "\n".join(ctx.description_files) or "(none)"
    return (
        f"Selected tool: {ctx.selected_tool.name}\n"
        f"Selection explanation: {ctx.selection_explanation}\n"
        f"Description files:\n{files}\n\n"
        f"Task description:\n{ctx.task_description}\n\n"
        f"Data prompt:\n{ctx.data_prompt}\n"
    )
