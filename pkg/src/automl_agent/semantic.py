"""Semantic memory: condensed tutorials with short summaries, chosen by an LLM."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import prompts
from .config import KernelConfig
from .llm import Gateway
from .parsing import ParseError

log = logging.getLogger(__name__)

SUMMARY_PREFIX = "Summary: "
SUMMARY_WORD_LIMIT = 100


@dataclass(frozen=True)
class KnowledgeDocument:
    tool_name: str
    title: str
    summary: str
    condensed_body: str
    source_path: str = ""


@dataclass(frozen=True)
class RetrievalQuery:
    task_prompt: str
    data_prompt: str
    user_prompt: str = ""
    error_prompt: str = ""
    max_num_tutorials: int = 5


def split_into_chunks(text: str, chunk_size: int) -> list[str]:
    """Greedy packing of blank-line separated paragraphs into chunks.

    A paragraph longer than ``chunk_size`` is hard-split.
    """
    if chunk_size <= 0:
        raise ValueError("chunk_size must be positive")
    paragraphs = re.split(r"\n[ \t]*\n", text)
    chunks: list[str] = []
    current = ""
    for paragraph in paragraphs:
        pieces = [paragraph[i:i + chunk_size] for i in range(0, len(paragraph), chunk_size)] or [""]
        for piece in pieces:
            candidate = f"{current}\n\n{piece}" if current else piece
            if len(candidate) <= chunk_size:
                current = candidate
            else:
                if current:
                    chunks.append(current)
                current = piece
    if current.strip():
        chunks.append(current)
    return chunks or [text[:chunk_size]]


_HEADING = re.compile(r"^#{1,6}(?:[ \t]|$)", re.MULTILINE)


def truncate_at_section_boundary(text: str, max_len: int) -> str:
    """Cut before the last markdown heading that keeps the text within ``max_len``."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if len(text) <= max_len:
        return text
    cut = None
    for match in _HEADING.finditer(text):
        if 0 < match.start() <= max_len:
            cut = match.start()
    if cut is None:
        return text[:max_len]
    return text[:cut]


def title_from_markdown(text: str, fallback: str) -> str:
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            title = stripped.lstrip("#").strip()
            if title:
                return title
    return fallback


def _words(text: str) -> list[str]:
    return text.split()


def _summarize(condensed: str, llm: Gateway) -> str:
    summary = llm.ask("summarizer", "planner", prompts.summarize_prompt(condensed)).strip()
    if summary.startswith(SUMMARY_PREFIX) and len(_words(summary)) <= SUMMARY_WORD_LIMIT:
        return " ".join(summary.split())
    summary = llm.ask("summarizer", "planner", prompts.summary_repair_prompt(condensed, summary)).strip()
    if not summary.startswith(SUMMARY_PREFIX):
        raise ParseError(f'summary does not start with "{SUMMARY_PREFIX}" after a repair attempt')
    return " ".join(_words(summary)[:SUMMARY_WORD_LIMIT])


def build_knowledge_document(
    raw_tutorial: str,
    title: str,
    tool_name: str,
    llm: Gateway,
    cfg: KernelConfig,
    source_path: str = "",
) -> KnowledgeDocument:
    """Condense a tutorial chunk by chunk, cap its length, then summarize it."""
    if not raw_tutorial.strip():
        raise ValueError("tutorial is empty")
    if cfg.condense_tutorials:
        chunks = split_into_chunks(raw_tutorial, cfg.semantic_memory.chunk_size)
        condensed = [
            llm.ask("condenser", "planner", prompts.condense_prompt(chunk, i, len(chunks))).strip()
            for i, chunk in enumerate(chunks)
        ]
        body = "\n\n".join(condensed)
    else:
        body = raw_tutorial
    body = truncate_at_section_boundary(body, cfg.max_tutorial_length)
    summary = _summarize(body, llm)
    return KnowledgeDocument(tool_name, title, summary, body, source_path)


def format_tutorial_index(kb: Sequence[KnowledgeDocument], index_mode: str = "by_summary") -> str:
    if index_mode == "by_title_only":
        return "\n".join(f"{i}. {doc.title}" for i, doc in enumerate(kb, 1))
    return "\n".join(f"{i}. {doc.title}\n{doc.summary}" for i, doc in enumerate(kb, 1))


def parse_selection(response: str, count: int) -> list[int]:
    """Zero-based indices named in ``response``; out-of-range ones are dropped."""
    numbers = [int(n) for n in re.findall(r"-?\d+", response)]
    if not numbers:
        raise ParseError(f"no tutorial numbers in retrieval response {response!r}")
    picked: list[int] = []
    for number in numbers:
        if not 1 <= number <= count:
            log.warning("retrieval index %d out of range 1..%d; dropped", number, count)
            continue
        if number - 1 not in picked:
            picked.append(number - 1)
    return picked


def retrieve_documents(
    query: RetrievalQuery,
    kb: Sequence[KnowledgeDocument],
    llm: Gateway,
    index_mode: str = "by_summary",
) -> list[KnowledgeDocument]:
    if not kb or query.max_num_tutorials <= 0:
        return []
    prompt = prompts.retrieval_prompt(
        query.task_prompt,
        query.data_prompt,
        query.user_prompt,
        query.error_prompt,
        format_tutorial_index(kb, index_mode),
        query.max_num_tutorials,
    )
    response = llm.ask("retriever", "planner", prompt)
    picked = parse_selection(response, len(kb))
    return [kb[i] for i in picked[: query.max_num_tutorials]]


def render_retrieved(docs: Sequence[KnowledgeDocument]) -> str:
    if not docs:
        return ""
    blocks = [f"### {doc.title}\n{doc.condensed_body}" for doc in docs]
    return "Relevant Tutorials:\n\n" + "\n\n".join(blocks)


def slugify(title: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", title.lower()).strip("-")
    return slug or "document"


def save_document(doc: KnowledgeDocument, kb_root: str | Path, slug: str | None = None) -> Path:
    folder = Path(kb_root) / doc.tool_name
    folder.mkdir(parents=True, exist_ok=True)
    path = folder / f"{slug or slugify(doc.title)}.md"
    title = " ".join(doc.title.split())
    summary = " ".join(doc.summary.split())
    path.write_text(f"TITLE: {title}\nSUMMARY: {summary}\n\n{doc.condensed_body}\n")
    return path


def load_document(path: str | Path, tool_name: str) -> KnowledgeDocument:
    text = Path(path).read_text()
    header, _, body = text.partition("\n\n")
    fields = {}
    for line in header.splitlines():
        key, sep, value = line.partition(": ")
        if sep:
            fields[key] = value
    if "TITLE" not in fields or "SUMMARY" not in fields:
        raise ValueError(f"{path}: missing TITLE/SUMMARY header")
    return KnowledgeDocument(tool_name, fields["TITLE"], fields["SUMMARY"], body.rstrip("\n"), str(path))


def load_knowledge_base(kb_root: str | Path | None, tool_name: str) -> list[KnowledgeDocument]:
    """Documents stored for ``tool_name``, sorted by file name; empty if none."""
    if kb_root is None:
        return []
    folder = Path(kb_root) / tool_name
    if not folder.is_dir():
        return []
    return [load_document(path, tool_name) for path in sorted(folder.glob("*.md"))]


def build_knowledge_base(
    src: str | Path, tool_name: str, out: str | Path, llm: Gateway, cfg: KernelConfig
) -> list[Path]:
    """Condense every markdown/text tutorial under ``src`` into ``out/<tool>/``."""
    written = []
    used: set[str] = set()
    sources = sorted(p for p in Path(src).rglob("*") if p.is_file() and p.suffix.lower() in {".md", ".txt"})
    for source in sources:
        raw = source.read_text(errors="replace")
        if not raw.strip():
            log.warning("skipping empty tutorial %s", source)
            continue
        title = title_from_markdown(raw, source.stem)
        doc = build_knowledge_document(raw, title, tool_name, llm, cfg, str(source))
        slug, n = slugify(title), 2
        while slug in used:
            slug, n = f"{slugify(title)}-{n}", n + 1
        used.add(slug)
        written.append(save_document(doc, out, slug))
    return written
