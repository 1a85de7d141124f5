from __future__ import annotations

import logging
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from automl_agent.config import ToolSpec, config_from_dict, load_tool_registry
from automl_agent.perception import (
    FileGroup,
    FilePerceptionReport,
    assemble_perception_context,
    find_description_files,
    group_files,
    list_data_files,
    perceive,
    perceive_file,
    render_data_prompt,
    resolve_tool,
    select_library,
    select_representatives,
)
from automl_agent.sandbox import prepare_workspace
from grouping_oracle import oracle_groups

EXTENSIONS = [".csv", ".png", ".txt", "", ".tar.gz"]


def random_tree(rng: random.Random) -> list[str]:
    depth = rng.randint(0, 4)
    vocab = [[f"d{level}_{i}" for i in range(rng.randint(1, 12))] for level in range(depth)]
    files = set()
    for _ in range(rng.randint(1, 500)):
        levels = rng.randint(0, depth)
        folders = [rng.choice(vocab[level]) for level in range(levels)]
        files.add("/".join(folders + [f"f{rng.randint(0, 50)}{rng.choice(EXTENSIONS)}"]))
    return sorted(files)


def as_mapping(groups: list[FileGroup]) -> dict[str, frozenset[str]]:
    return {g.pattern_text: frozenset(g.members) for g in groups}


def test_grouping_matches_oracle_on_random_trees():
    rng = random.Random(20250101)
    for _ in range(1000):
        files = random_tree(rng)
        delta = rng.randint(1, 8)
        assert as_mapping(group_files(files, delta)) == oracle_groups(files, delta)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.sampled_from("abcdefgh"), min_size=0, max_size=4), min_size=1, max_size=60),
       st.integers(1, 6))
def test_grouping_partitions_and_respects_depth_counts(folder_lists, delta):
    files = sorted({"/".join(folders + [f"file{i}.csv"]) for i, folders in enumerate(folder_lists)})
    groups = group_files(files, delta)
    members = [m for g in groups for m in g.members]
    assert sorted(members) == files
    for g in groups:
        for depth, name in enumerate(g.pattern[:-1]):
            distinct = {f.split("/")[depth] for f in files if f.count("/") > depth}
            assert (name == "*") == (len(distinct) > delta)


def rvl_tree() -> list[str]:
    rng = random.Random(7)
    letters = "abcdefghijklmnopqrstuvwxyz"
    files = []
    for i in range(400000):
        a, b, c = rng.choice(letters), rng.choice(letters), rng.choice(letters)
        folder = f"images{a}/{a}/{b}/{c}/{a}{b}{c}{i % 97:02d}a00"
        files.append(f"rvl_cdip/training/images/{folder}/{80000000 + i}.tiff")
    return files + ["rvl_cdip/training/train.txt", "rvl_cdip/training/val.txt", "rvl_cdip/training/readme.txt"]


def test_rvl_shaped_tree_yields_one_wildcard_group():
    groups = group_files(rvl_tree(), 5)
    images = [g for g in groups if g.pattern[-1] == ".tiff"]
    assert len(images) == 1
    assert images[0].pattern_text == "rvl_cdip/training/images/*/*/*/*/*/*.tiff"
    assert len(images[0].members) == 400000
    assert images[0].pattern_text.count("*") == 6


def test_grouping_small_cases():
    assert [g.pattern for g in group_files(["a/b.csv"], 5)] == [("a", ".csv")]
    assert group_files([], 5) == []
    with pytest.raises(ValueError):
        group_files(["a/"], 5)
    with pytest.raises(ValueError):
        group_files(["a.csv"], 0)


def test_representatives():
    small = FileGroup(("x", ".csv"), ("x/a.csv", "x/b.csv", "x/c.csv"))
    assert select_representatives(small, 5) == ["x/a.csv", "x/b.csv", "x/c.csv"]
    big = FileGroup(("*", ".png"), tuple(sorted(f"{i:03d}/img.png" for i in range(100))))
    assert select_representatives(big, 5) == ["000/img.png"]


@pytest.fixture
def ws(tmp_path):
    return prepare_workspace(tmp_path / "ws")


@pytest.fixture
def cfg():
    return config_from_dict({"sandbox": {"kill_grace_seconds": 1}})


def test_builtin_csv_reader(tmp_path, ws, cfg, scripted):
    path = tmp_path / "test.csv"
    header = "Sex,Length,Diameter,Height,Whole_weight,Shucked_weight,Viscera_weight,Shell_weight,Class_number_of_rings"
    path.write_text(header + "\nM,0.455,0.365,0.095,0.514,0.2245,0.101,0.15,15\n")
    report = perceive_file(path, scripted([]), ws, cfg)
    assert report.produced_by == "builtin_reader"
    assert "Column names: ['Sex', 'Length'" in report.report_text
    assert "File Size:" in report.report_text


def test_empty_and_large_text_files(tmp_path, ws, cfg, scripted):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    report = perceive_file(empty, scripted([]), ws, cfg)
    assert report.report_text == "File Size: 0.00 MB (0 bytes)"
    big = tmp_path / "big.txt"
    big.write_text("word " * 2000)
    assert len(perceive_file(big, scripted([]), ws, cfg).report_text) <= 1024


def test_image_reader(tmp_path, ws, cfg, scripted):
    path = tmp_path / "page.tiff"
    Image.new("L", (754, 1000)).save(path)
    report = perceive_file(path, scripted([]), ws, cfg).report_text
    assert "Image Format: TIFF" in report and "Image Size: (754, 1000)" in report


def test_generated_reader_runs_in_sandbox(tmp_path, ws, cfg, scripted):
    path = tmp_path / "weights.bin"
    path.write_bytes(b"\x00\x01" * 10)
    code = f"```python\nimport os\nprint('bytes:', os.path.getsize({str(path)!r}))\n```"
    llm = scripted({"file_reader": [code]})
    report = perceive_file(path, llm, ws, cfg)
    assert report == FilePerceptionReport(str(path), "bytes: 20", "generated_reader")
    assert str(path) in llm.prompts_for("file_reader")[0]


def test_crashing_generated_reader_is_flagged(tmp_path, ws, cfg, scripted):
    path = tmp_path / "weights.bin"
    path.write_bytes(b"\x00")
    report = perceive_file(path, scripted({"file_reader": ["```python\nraise SystemExit('boom')\n```"]}), ws, cfg)
    assert report.failed and "boom" in report.report_text


def test_description_files(tmp_path, scripted, caplog):
    real = tmp_path / "descriptions.txt"
    real.write_text("Regression on rings.")
    missing = tmp_path / "nope.txt"
    llm = scripted([
        f"Description Files:\n{real}\n{missing}\nExplanation: the readme",
        "Description Files: [none]\nExplanation: nothing fits",
    ])
    with caplog.at_level(logging.WARNING):
        paths, explanation = find_description_files("data", llm)
    assert paths == [str(real)] and explanation == "the readme"
    assert any("nope.txt" in r.message for r in caplog.records)
    assert find_description_files("data", llm) == ([], "nothing fits")


def _tool(name):
    return ToolSpec(name, "1", "d")


@pytest.mark.parametrize(
    "answer, expected",
    [
        ("autogluon.tabular", "autogluon.tabular"),
        ("AutoGluon.Tabular", "autogluon.tabular"),
        ("AutoGluon.Tabular v1.2", "autogluon.tabular"),
        ("`autogluon.timeseries`", "autogluon.timeseries"),
        ("timeseries", "autogluon.timeseries"),
        ("autogluon", None),
        ("pytorch", None),
    ],
)
def test_tool_resolution(answer, expected):
    registry = [_tool("autogluon.tabular"), _tool("autogluon.timeseries"), _tool("machine learning")]
    tool = resolve_tool(answer, registry)
    assert (tool.name if tool else None) == expected


def test_library_selection_fallbacks(scripted):
    registry = load_tool_registry()
    llm = scripted(["Selected Tool: AutoGluon.Tabular v1.2\nExplanation: tabular regression",
                    "Selected Tool: sklearn-ish\nExplanation: ?"])
    tool, explanation = select_library("data", "task", registry, llm)
    assert tool.name == "autogluon.tabular" and explanation == "tabular regression"
    assert select_library("data", "task", registry, llm)[0].name == "machine learning"
    only = [registry[0]]
    assert select_library("data", "task", only, scripted(["anything"]))[0] == registry[0]


def test_assembly_is_deterministic(tool):
    files = ["data/train.csv", "data/test.csv"] + [f"data/img/{i}/x.png" for i in range(8)]
    groups = group_files(files, 5)
    reports = [FilePerceptionReport(f, f"report of {f}", "builtin_reader") for f in files]
    first = assemble_perception_context(reports, groups, "task", tool, "why")
    second = assemble_perception_context(list(reversed(reports)), list(reversed(groups)), "task", tool, "why")
    assert first == second
    assert first.data_prompt == (
        "----------\ndata/test.csv\nContent:\nreport of data/test.csv\n"
        "----------\ndata/train.csv\nContent:\nreport of data/train.csv\n"
        "----------\nGroup pattern: data/img/*/*.png (total 8 files)\nExample file:\ndata/img/0/x.png\n"
        "Content:\nreport of data/img/0/x.png\n----------"
    )


def test_single_file_has_no_group_section():
    groups = group_files(["a.csv"], 5)
    prompt = render_data_prompt([FilePerceptionReport("a.csv", "r", "builtin_reader")], groups)
    assert prompt == "----------\na.csv\nContent:\nr\n----------"


def test_perceive_end_to_end(tmp_path, ws, cfg, scripted):
    data = tmp_path / "abalone"
    data.mkdir()
    (data / "train.csv").write_text("Sex,Length,Class_number_of_rings\nM,0.4,15\n")
    (data / "descriptions.txt").write_text("Regression on Class_number_of_rings. Eval metric is RMSE.")
    llm = scripted({
        "description_finder": [f"Description Files:\n{data / 'descriptions.txt'}\nExplanation: task file"],
        "task_describer": ["Predict rings; RMSE."],
        "tool_selector": ["Selected Tool: autogluon.tabular\nExplanation: tabular"],
    })
    result = perceive(data, llm, load_tool_registry(), cfg, ws)
    ctx = result.context
    assert ctx.selected_tool.name == "autogluon.tabular"
    assert ctx.task_description == "Predict rings; RMSE."
    assert ctx.description_files == (str(data / "descriptions.txt"),)
    assert f"{data / 'train.csv'}\nContent:\nFile Size:" in ctx.data_prompt
    assert "Regression on Class_number_of_rings" in llm.prompts_for("task_describer")[0]
    assert list_data_files(data) == ["descriptions.txt", "train.csv"]
