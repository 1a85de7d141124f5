"""Turn a raw data folder into a data prompt, task description and library choice."""

from __future__ import annotations

import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Iterable, Sequence

from . import prompts
from .config import FALLBACK_TOOL, KernelConfig, ToolSpec
from .llm import Gateway
from .parsing import ParseError, extract_fenced_block, parse_labeled_fields
from .sandbox import Workspace, execute_shell_script

log = logging.getLogger(__name__)

SECTION_RULE = "----------"
WILDCARD = "*"


@dataclass(frozen=True)
class FileGroup:
    pattern: tuple[str, ...]
    members: tuple[str, ...]

    @property
    def example_member(self) -> str:
        return min(self.members)

    @property
    def pattern_text(self) -> str:
        """Display form, e.g. ``a/*/*.tiff``."""
        return "/".join(self.pattern[:-1] + (WILDCARD + self.pattern[-1],))


def _split(path: str) -> tuple[list[str], str]:
    parts = PurePosixPath(path).parts
    if not path or path.endswith("/") or not parts:
        raise ValueError(f"path has no filename component: {path!r}")
    return list(parts[:-1]), parts[-1]


def _extension(filename: str) -> str:
    return PurePosixPath(filename).suffix


def group_files(files: Sequence[str], delta: int = 5) -> list[FileGroup]:
    """Bucket relative paths by folder pattern.

    Folder levels that have more than ``delta`` distinct names across all
    files become wildcards; the file extension closes each pattern.
    """
    if delta < 1:
        raise ValueError("delta must be >= 1")
    split = [(path, *_split(path)) for path in files]

    names_at_depth: dict[int, set[str]] = {}
    for _, folders, _ in split:
        for depth, name in enumerate(folders):
            names_at_depth.setdefault(depth, set()).add(name)

    buckets: dict[tuple[str, ...], list[str]] = {}
    for path, folders, filename in split:
        pattern = tuple(
            name if len(names_at_depth[depth]) <= delta else WILDCARD
            for depth, name in enumerate(folders)
        ) + (_extension(filename),)
        buckets.setdefault(pattern, []).append(path)

    groups = [FileGroup(pattern, tuple(sorted(members))) for pattern, members in buckets.items()]
    return sorted(groups, key=lambda g: (g.pattern_text, g.members[0]))


def select_representatives(group: FileGroup, delta: int = 5) -> list[str]:
    if len(group.members) <= delta:
        return list(group.members)
    return [group.example_member]


@dataclass(frozen=True)
class FilePerceptionReport:
    file_path: str
    report_text: str
    produced_by: str  # "builtin_reader" or "generated_reader"
    failed: bool = False


def _size_line(path: Path) -> str:
    size = path.stat().st_size
    return f"File Size: {size / (1024 * 1024):.2f} MB ({size} bytes)"


def _read_table(path: Path, sep: str, max_chars: int) -> str:
    import pandas as pd

    df = pd.read_csv(path, sep=sep, nrows=3)
    columns = list(df.columns)
    if len(columns) > 20:
        shown = f"{columns[:10]} ... {columns[-10:]} ({len(columns)} columns)"
    else:
        shown = str(columns)
    with pd.option_context("display.max_colwidth", 30, "display.width", 200):
        rows = df.head(3).to_string()
    return f"Column names: {shown}\nFirst rows:\n{rows}"


def _read_text(path: Path, max_chars: int) -> str:
    with open(path, encoding="utf-8", errors="replace") as handle:
        head = handle.read(max_chars)
    return f"First few lines (up to {max_chars} characters):\n{head}"


def _read_jsonl(path: Path, max_chars: int) -> str:
    lines = []
    with open(path, encoding="utf-8", errors="replace") as handle:
        for line in handle:
            if len(lines) == 3:
                break
            if line.strip():
                lines.append(line.rstrip("\n"))
    keys: list[str] = []
    try:
        first = json.loads(lines[0]) if lines else {}
        if isinstance(first, dict):
            keys = list(first)
    except json.JSONDecodeError:
        pass
    head = "\n".join(lines)
    return f"Record keys: {keys}\nFirst records:\n{head}"


def _read_image(path: Path, max_chars: int) -> str:
    from PIL import Image

    with Image.open(path) as image:
        return f"Image Format: {image.format}\nImage Mode: {image.mode}\nImage Size: {image.size}"


_BUILTIN_READERS = {
    ".csv": lambda p, n: _read_table(p, ",", n),
    ".tsv": lambda p, n: _read_table(p, "\t", n),
    ".txt": _read_text,
    ".md": _read_text,
    ".json": _read_text,
    ".jsonl": _read_jsonl,
    ".png": _read_image,
    ".jpg": _read_image,
    ".jpeg": _read_image,
    ".tif": _read_image,
    ".tiff": _read_image,
    ".bmp": _read_image,
    ".gif": _read_image,
}


def has_builtin_reader(path: str | Path) -> bool:
    return Path(path).suffix.lower() in _BUILTIN_READERS


def _builtin_report(path: Path, max_chars: int) -> str:
    size = _size_line(path)
    if path.name.startswith(".") or path.stat().st_size == 0:
        return size
    body = _BUILTIN_READERS[path.suffix.lower()](path, max_chars)
    return f"{size}\n{body}"


def perceive_file(
    path: str | Path,
    llm: Gateway,
    workspace: Workspace,
    cfg: KernelConfig,
    *,
    timeout_seconds: float | None = None,
) -> FilePerceptionReport:
    """Describe one file, with a builtin reader or LLM-written reader code."""
    path = Path(path)
    max_chars = cfg.max_chars_per_file
    hidden_or_empty = path.name.startswith(".") or path.stat().st_size == 0
    use_builtin = not cfg.perception.always_generate_readers and (hidden_or_empty or has_builtin_reader(path))
    if use_builtin:
        try:
            text = _builtin_report(path, max_chars)
            return FilePerceptionReport(str(path), text[:max_chars], "builtin_reader")
        except Exception as exc:  # unreadable as its extension claims; let generated code try
            log.info("builtin reader failed on %s (%s); generating a reader", path, exc)

    prompt = prompts.file_reader_prompt(str(path), max_chars, bool(cfg.file_reader.details))
    response = llm.ask("file_reader", "file_reader", prompt)
    try:
        code = extract_fenced_block(response, "python")
    except ParseError:
        code = response.strip()

    with tempfile.TemporaryDirectory(dir=workspace.root, prefix=".reader_") as tmp:
        scratch = Workspace(Path(tmp))
        reader = scratch.root / "reader.py"
        reader.write_text(code + "\n")
        result = execute_shell_script(
            f'exec "{sys.executable}" "{reader}"\n',
            scratch,
            timeout_seconds or cfg.per_execution_timeout,
            name="read.sh",
            max_stdout_length=max_chars,
            max_stderr_length=max_chars,
            kill_grace_seconds=cfg.sandbox.kill_grace_seconds,
        )
    if result.return_code != 0:
        text = result.stderr or f"reader exited with code {result.return_code}"
        return FilePerceptionReport(str(path), text[:max_chars], "generated_reader", failed=True)
    return FilePerceptionReport(str(path), result.stdout.strip()[:max_chars], "generated_reader")


def _clean_path_line(line: str) -> str:
    line = line.strip().strip("`").strip()
    for bullet in ("- ", "* ", "+ "):
        if line.startswith(bullet):
            line = line[len(bullet):].strip()
    if line[:1].isdigit() and ". " in line[:5]:
        line = line.split(". ", 1)[1].strip()
    return line.strip("[]'\"` ,")


def find_description_files(data_prompt: str, llm: Gateway) -> tuple[list[str], str]:
    """Ask which files describe the task; keep only paths that exist."""
    if not data_prompt.strip():
        raise ValueError("data_prompt is empty")
    response = llm.ask("description_finder", "planner", prompts.description_files_prompt(data_prompt))
    labels = ["Description Files:", "Explanation:"]
    fields = parse_labeled_fields(response, labels, required=[])
    if not fields:
        raise ParseError("description-file response has neither expected label")
    explanation = fields.get("Explanation:", "")
    raw = fields.get("Description Files:", "")

    paths: list[str] = []
    for line in raw.replace(",", "\n").splitlines():
        candidate = _clean_path_line(line)
        if not candidate or candidate.lower() in {"none", "n/a"}:
            continue
        if not Path(candidate).is_file():
            log.warning("description file %s does not exist; ignoring it", candidate)
            continue
        if candidate not in paths:
            paths.append(candidate)
    return paths, explanation


def read_description_files(paths: Iterable[str], max_chars: int) -> str:
    sections = []
    for path in paths:
        with open(path, encoding="utf-8", errors="replace") as handle:
            sections.append(f"File: {path}\nContent: {handle.read(max_chars)}")
    return "\n".join(sections)


def generate_task_description(
    data_prompt: str, description_analysis: str, description_contents: str, llm: Gateway
) -> str:
    prompt = prompts.task_description_prompt(data_prompt, description_analysis, description_contents)
    return llm.ask("task_describer", "planner", prompt)


def resolve_tool(answer: str, registry: Sequence[ToolSpec]) -> ToolSpec | None:
    """Map a free-text tool name onto a registry entry."""
    answer = answer.strip().strip("`'\"").strip()
    by_name = {tool.name: tool for tool in registry}
    if answer in by_name:
        return by_name[answer]
    lowered = answer.lower()
    for tool in registry:
        if tool.name.lower() == lowered:
            return tool
    # a registry name inside the answer ("AutoGluon.Tabular v1.2"); longest name wins
    contained = [t for t in registry if t.name.lower() in lowered]
    if contained:
        return max(contained, key=lambda t: len(t.name))
    # the answer inside a registry name, only when that is unambiguous
    containing = [t for t in registry if lowered and lowered in t.name.lower()]
    if len(containing) == 1:
        return containing[0]
    return None


def select_library(
    data_prompt: str, task_description: str, registry: Sequence[ToolSpec], llm: Gateway
) -> tuple[ToolSpec, str]:
    if not registry:
        raise ValueError("registry is empty")
    response = llm.ask("tool_selector", "planner", prompts.tool_selection_prompt(data_prompt, task_description, registry))
    try:
        fields = parse_labeled_fields(response, ["Selected Tool:", "Explanation:"], required=["Selected Tool:"])
        answer = fields["Selected Tool:"].splitlines()[0] if fields["Selected Tool:"] else ""
        explanation = fields.get("Explanation:", "")
    except ParseError:
        answer, explanation = response.strip(), ""
    if len(registry) == 1:
        return registry[0], explanation
    tool = resolve_tool(answer, registry)
    if tool is not None:
        return tool, explanation
    fallback = next((t for t in registry if t.name == FALLBACK_TOOL), None)
    if fallback is None:
        raise ValueError(f"could not resolve tool {answer!r} and the registry has no {FALLBACK_TOOL!r} entry")
    log.warning("could not resolve selected tool %r; using %r", answer, FALLBACK_TOOL)
    return fallback, explanation


@dataclass(frozen=True)
class PerceptionContext:
    data_prompt: str
    task_description: str
    selected_tool: ToolSpec
    selection_explanation: str = ""
    description_files: tuple[str, ...] = ()

    @property
    def task_prompt(self) -> str:
        return self.task_description


def render_data_prompt(
    reports: Iterable[FilePerceptionReport], groups: Sequence[FileGroup], delta: int = 5, root: str | Path | None = None
) -> str:
    """Lay out per-file sections, then one section per large group."""
    by_path = {report.file_path: report for report in reports}

    def shown(rel: str) -> str:
        return str(Path(root) / rel) if root is not None else rel

    def report_for(rel: str) -> str:
        report = by_path.get(shown(rel)) or by_path.get(rel)
        return report.report_text if report is not None else ""

    singles = sorted(m for g in groups if len(g.members) <= delta for m in g.members)
    large = sorted((g for g in groups if len(g.members) > delta), key=lambda g: g.pattern_text)

    sections = [f"{shown(path)}\nContent:\n{report_for(path)}" for path in singles]
    for group in large:
        example = group.example_member
        sections.append(
            f"Group pattern: {shown(group.pattern_text)} (total {len(group.members)} files)\n"
            f"Example file:\n{shown(example)}\nContent:\n{report_for(example)}"
        )
    return "".join(f"{SECTION_RULE}\n{section}\n" for section in sections) + SECTION_RULE


def assemble_perception_context(
    reports: Iterable[FilePerceptionReport],
    groups: Sequence[FileGroup],
    task_description: str,
    tool: ToolSpec,
    explanation: str,
    *,
    delta: int = 5,
    root: str | Path | None = None,
    description_files: Sequence[str] = (),
) -> PerceptionContext:
    return PerceptionContext(
        data_prompt=render_data_prompt(reports, groups, delta, root),
        task_description=task_description,
        selected_tool=tool,
        selection_explanation=explanation,
        description_files=tuple(description_files),
    )


def list_data_files(root: str | Path) -> list[str]:
    """All files under ``root`` (hidden ones too) as sorted relative posix paths."""
    root = Path(root)
    found = []
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            found.append((Path(dirpath) / name).relative_to(root).as_posix())
    return sorted(found)


@dataclass
class PerceptionResult:
    context: PerceptionContext
    groups: list[FileGroup] = field(default_factory=list)
    reports: list[FilePerceptionReport] = field(default_factory=list)


def perceive(
    data_dir: str | Path,
    llm: Gateway,
    registry: Sequence[ToolSpec],
    cfg: KernelConfig,
    workspace: Workspace,
) -> PerceptionResult:
    """Run file perception, task perception and library selection."""
    root = Path(data_dir).resolve()
    files = list_data_files(root)
    if not files:
        raise ValueError(f"no files found under {root}")
    delta = cfg.perception.group_delta
    groups = group_files(files, delta)
    targets = [str(root / rel) for g in groups for rel in select_representatives(g, delta)]

    with ThreadPoolExecutor(max_workers=cfg.perception.max_workers) as pool:
        reports = list(pool.map(lambda p: perceive_file(p, llm, workspace, cfg), targets))

    data_prompt = render_data_prompt(reports, groups, delta, root)
    description_files, analysis = find_description_files(data_prompt, llm)
    contents = read_description_files(description_files, cfg.max_chars_per_file)
    task_description = generate_task_description(data_prompt, analysis, contents, llm)
    tool, explanation = select_library(data_prompt, task_description, registry, llm)
    context = assemble_perception_context(
        reports, groups, task_description, tool, explanation,
        delta=delta, root=root, description_files=description_files,
    )
    return PerceptionResult(context, groups, reports)
