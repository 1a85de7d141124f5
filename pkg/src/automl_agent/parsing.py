"""Response parsing helpers shared by every agent, plus middle truncation."""

from __future__ import annotations

import re

TRUNCATION_MARKER = "\n...(truncated)\n"


class ParseError(ValueError):
    """Raised when an LLM response does not follow the requested format."""


def extract_fenced_block(text: str, tag: str) -> str:
    """Return the body of the last ```<tag> fenced block in ``text``.

    Leading and trailing newlines inside the block are trimmed. An opening
    fence that is never closed is accepted only if it is the last one.
    """
    if not tag or not tag.strip():
        raise ValueError("tag must be a nonempty token")
    opener = re.compile(rf"^[ \t]*```[ \t]*{re.escape(tag)}[ \t]*\r?$", re.IGNORECASE | re.MULTILINE)
    closer = re.compile(r"^[ \t]*```[ \t]*\r?$", re.MULTILINE)

    blocks: list[str] = []
    pos = 0
    while True:
        start = opener.search(text, pos)
        if start is None:
            break
        body_start = start.end() + 1 if text[start.end():start.end() + 1] == "\n" else start.end()
        end = closer.search(text, body_start)
        if end is None:
            blocks.append(text[body_start:])
            break
        blocks.append(text[body_start:end.start()])
        pos = end.end()
    if not blocks:
        raise ParseError(f"no ```{tag} block found in response")
    return blocks[-1].strip("\r\n")


_WRAP = r"(?:\*\*|__)?"


def _label_pattern(label: str) -> re.Pattern[str]:
    name = label.strip().rstrip(":").strip()
    words = r"[ \t]+".join(re.escape(w) for w in name.split())
    # optional bullet/quote/heading markers, optional bold around the name or the colon
    return re.compile(
        rf"^[ \t]*(?:[-*+>#]+[ \t]+)*{_WRAP}[ \t]*{words}[ \t]*{_WRAP}[ \t]*:[ \t]*{_WRAP}",
        re.IGNORECASE | re.MULTILINE,
    )


def _strip_value(value: str) -> str:
    value = value.strip()
    for marker in ("**", "__"):
        if value.endswith(marker) and not value.startswith(marker):
            value = value[: -len(marker)].rstrip()
    if len(value) >= 2 and value[0] == "[" and value[-1] == "]":
        value = value[1:-1].strip()
    return value


def parse_labeled_fields(
    text: str, labels: list[str], required: list[str] | None = None
) -> dict[str, str]:
    """Split ``text`` into the values that follow each label.

    Each value runs from the end of its label to the start of the next label
    found (in text order) or to the end of input. Matching is case-insensitive
    and labels must begin a line. Keys of the result are the labels exactly
    as passed in; labels absent from the text are omitted unless required,
    in which case ``ParseError`` is raised. ``required`` defaults to all.
    """
    if not labels:
        raise ValueError("labels must be nonempty")
    required = list(labels) if required is None else required

    hits: list[tuple[int, int, str]] = []
    for label in labels:
        match = _label_pattern(label).search(text)
        if match is not None:
            hits.append((match.start(), match.end(), label))
    found = {label for _, _, label in hits}
    missing = [label for label in required if label not in found]
    if missing:
        raise ParseError(f"missing label(s) {missing} in response")

    hits.sort()
    fields: dict[str, str] = {}
    for i, (_, end, label) in enumerate(hits):
        stop = hits[i + 1][0] if i + 1 < len(hits) else len(text)
        fields[label] = _strip_value(text[end:stop])
    return fields


def truncate_middle(message: str, max_len: int) -> str:
    """Keep the head and tail of ``message`` around a truncation marker."""
    if max_len < 2:
        raise ValueError("max_len must be at least 2")
    if len(message) <= max_len:
        return message
    return message[: max_len // 2] + TRUNCATION_MARKER + message[-max_len // 2 :]
