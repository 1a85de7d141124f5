from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from automl_agent.parsing import (
    TRUNCATION_MARKER,
    ParseError,
    extract_fenced_block,
    parse_labeled_fields,
    truncate_middle,
)


def test_last_fenced_block_wins():
    text = "intro\n```python\nprint(1)\n```\nmore\n```python\nprint(2)\n```\n"
    assert extract_fenced_block(text, "python") == "print(2)"


def test_unclosed_final_block_is_accepted():
    assert extract_fenced_block("```bash\necho hi\n", "bash") == "echo hi"


def test_other_tags_are_ignored():
    with pytest.raises(ParseError):
        extract_fenced_block("```bash\necho hi\n```", "python")


def test_tag_is_case_insensitive_and_crlf_trimmed():
    assert extract_fenced_block("```Python\r\nx = 1\r\n```", "python") == "x = 1"


def test_labeled_fields_in_text_order():
    text = "DECISION: FIX\nANALYSIS: the model\nnever trained\n"
    fields = parse_labeled_fields(text, ["ANALYSIS:", "DECISION:"])
    assert fields == {"DECISION:": "FIX", "ANALYSIS:": "the model\nnever trained"}


def test_labeled_fields_tolerate_markdown():
    text = "- **ERROR SUMMARY:** missing column\n**SUGGESTED FIX**: rename it\n"
    fields = parse_labeled_fields(text, ["ERROR SUMMARY:", "SUGGESTED FIX:"])
    assert fields == {"ERROR SUMMARY:": "missing column", "SUGGESTED FIX:": "rename it"}


def test_labeled_fields_strip_brackets_and_use_first_occurrence():
    assert parse_labeled_fields("Selected Tool: [autogluon.tabular]\n", ["Selected Tool:"]) == {
        "Selected Tool:": "autogluon.tabular"
    }
    fields = parse_labeled_fields("Selected Tool: a\nSelected Tool: b\n", ["Selected Tool:"])
    assert fields["Selected Tool:"].splitlines()[0] == "a"


def test_missing_required_label():
    with pytest.raises(ParseError, match="ANALYSIS"):
        parse_labeled_fields("DECISION: FINISH", ["DECISION:", "ANALYSIS:"])
    assert parse_labeled_fields("DECISION: FINISH", ["DECISION:", "ANALYSIS:"], required=["DECISION:"]) == {
        "DECISION:": "FINISH"
    }


def test_label_must_start_a_line():
    with pytest.raises(ParseError):
        parse_labeled_fields("the DECISION: FINISH", ["DECISION:"])


@pytest.mark.parametrize(
    "message, cap, expected",
    [
        ("abcdef", 10, "abcdef"),
        ("abcdefghij", 4, "ab" + TRUNCATION_MARKER + "ij"),
        ("abcdefghij", 5, "ab" + TRUNCATION_MARKER + "hij"),
    ],
)
def test_truncate_middle_examples(message, cap, expected):
    assert truncate_middle(message, cap) == expected


@given(st.text(max_size=400), st.integers(2, 300))
def test_truncate_middle_properties(message, cap):
    out = truncate_middle(message, cap)
    if len(message) <= cap:
        assert out == message
    else:
        assert len(out) == cap + len(TRUNCATION_MARKER)
        assert out.startswith(message[: cap // 2]) and out.endswith(message[-cap // 2:])
    assert truncate_middle(message, max(cap, len(message))) == message


@given(st.text(alphabet=st.characters(blacklist_characters="`\r\n"), max_size=80))
def test_fenced_block_round_trip(body):
    body = body.strip()
    wrapped = f"Here you go:\n```python\n{body}\n```\nDone."
    assert extract_fenced_block(wrapped, "python") == body
