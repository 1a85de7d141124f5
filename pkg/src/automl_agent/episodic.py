"""Episodic memory: the per-run iteration log and the error analyzer."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .llm import Gateway
from .parsing import TRUNCATION_MARKER, ParseError, parse_labeled_fields, truncate_middle

log = logging.getLogger(__name__)

SUMMARY_LABEL = "ERROR SUMMARY:"
FIX_LABEL = "SUGGESTED FIX:"


@dataclass(frozen=True)
class ErrorContext:
    error_summary: str
    suggested_fix: str = ""

    def render(self, max_length: int, include_fix: bool = True) -> str:
        """Labelled block for prompt injection, at most ``max_length`` chars
        whenever the cap leaves room for the labels."""
        summary = self.error_summary
        fix = self.suggested_fix if include_fix else ""
        summary_head = f"{SUMMARY_LABEL} "
        fix_head = f"\n\n{FIX_LABEL} " if fix else ""
        budget = max(0, max_length - len(summary_head) - len(fix_head))
        if len(summary) + len(fix) > budget:
            if not fix:
                summary = _fit(summary, budget)
            else:
                # split the room, handing any unused share of the shorter field to the other
                half = budget // 2
                if len(summary) <= half:
                    summary_room = len(summary)
                elif len(fix) <= budget - half:
                    summary_room = budget - len(fix)
                else:
                    summary_room = half
                summary = _fit(summary, summary_room)
                fix = _fit(fix, budget - summary_room)
        block = summary_head + summary
        if fix:
            block += fix_head + fix
        return block


def _fit(text: str, room: int) -> str:
    """``text`` in at most ``room`` chars, middle-truncated when the marker fits."""
    if len(text) <= room:
        return text
    if room >= len(TRUNCATION_MARKER) + 2:
        return truncate_middle(text, room - len(TRUNCATION_MARKER))
    return text[:room]


@dataclass(frozen=True)
class IterationRecord:
    index: int
    solution_code: str
    shell_script: str
    stdout: str
    stderr: str
    return_code: int
    wall_seconds: float
    retrieved_titles: tuple[str, ...] = ()
    error_context: ErrorContext | None = None
    executer_analysis: str = ""
    verdict: str = ""
    code_path: str = ""
    script_path: str = ""
    stdout_path: str = ""
    stderr_path: str = ""

    def to_json(self) -> dict:
        data = {
            "t": self.index,
            "code_path": self.code_path,
            "script_path": self.script_path,
            "stdout_path": self.stdout_path,
            "stderr_path": self.stderr_path,
            "return_code": self.return_code,
            "wall_seconds": round(self.wall_seconds, 3),
            "retrieved_titles": list(self.retrieved_titles),
        }
        if self.error_context is not None:
            data["error_summary"] = self.error_context.error_summary
            if self.error_context.suggested_fix:
                data["suggested_fix"] = self.error_context.suggested_fix
        data["executer_analysis"] = self.executer_analysis
        return data


class EpisodeIndexError(ValueError):
    """A record's index does not extend the store contiguously."""


@dataclass
class EpisodicStore:
    records: list[IterationRecord] = field(default_factory=list)
    path: Path | None = None

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, t: int) -> IterationRecord:
        return self.records[t]

    def serialize(self) -> str:
        return "".join(json.dumps(r.to_json()) + "\n" for r in self.records)


def record_iteration(store: EpisodicStore, record: IterationRecord) -> EpisodicStore:
    """Append ``record``; its index must equal the current store length."""
    if record.index != len(store.records):
        kind = "duplicate" if record.index < len(store.records) else "gap"
        raise EpisodeIndexError(
            f"index {kind}: got t={record.index}, expected t={len(store.records)}"
        )
    store.records.append(record)
    if store.path is not None:
        with open(store.path, "a") as handle:
            handle.write(json.dumps(record.to_json()) + "\n")
    return store


def analyze_error(
    task_prompt: str,
    data_prompt: str,
    user_prompt: str,
    code: str,
    shell_script: str,
    retrieved_text: str,
    error_message: str,
    llm: Gateway,
    *,
    mode: str = "default",
) -> ErrorContext:
    """Ask for an ERROR SUMMARY / SUGGESTED FIX pair, retrying once on bad format."""
    if not error_message.strip():
        raise ValueError("error_message is empty")
    prompt = prompts.error_analysis_prompt(
        task_prompt, data_prompt, user_prompt, code, shell_script, retrieved_text, error_message
    )
    labels = [SUMMARY_LABEL, FIX_LABEL]
    response = llm.ask("error_analyzer", "planner", prompt)
    try:
        fields = parse_labeled_fields(response, labels)
    except ParseError:
        response = llm.ask("error_analyzer", "planner", prompt + prompts.FORMAT_REMINDER)
        fields = parse_labeled_fields(response, labels)
    summary, fix = fields[SUMMARY_LABEL], fields[FIX_LABEL]
    if not summary or not fix:
        raise ParseError("error analysis returned an empty field")
    if mode == "without_fix":
        fix = ""
    return ErrorContext(summary, fix)


def raw_error_block(error_message: str, executer_analysis: str, max_length: int) -> str:
    """Truncated raw error plus the executer's note, used when R_t is ablated."""
    body = error_message.strip()
    if executer_analysis.strip():
        body = f"{body}\n\nExecuter analysis: {executer_analysis.strip()}" if body else executer_analysis.strip()
    return truncate_middle(body, max_length)


def error_context_for(
    store: EpisodicStore, t: int, mode: str = "default", max_length: int = 2048
) -> str:
    """Text block describing iteration t-1's failure, or "" at t=0."""
    if t == 0:
        return ""
    previous = store[t - 1]
    if mode in ("default", "without_fix") and previous.error_context is not None:
        return previous.error_context.render(max_length, include_fix=mode == "default")
    if mode == "multi_turn":
        return ""
    return raw_error_block(previous.stderr, previous.executer_analysis, max_length)
