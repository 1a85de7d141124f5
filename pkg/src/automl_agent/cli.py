"""Command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config, load_tool_registry, resolve_config_path

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_EXHAUSTED = 2
EXIT_CONFIG = 3
EXIT_FORMAT = 4

log = logging.getLogger("automl_agent")


def _read_user_input(path: str | None) -> str:
    return Path(path).read_text() if path else ""


def _stdin_provider(t: int) -> str:
    print(f"[iteration {t}] optional instructions (empty line to skip): ", end="", file=sys.stderr, flush=True)
    line = sys.stdin.readline()
    return line.strip()


def cmd_run(args: argparse.Namespace) -> int:
    from .pipeline import build_gateway, run_pipeline

    cfg = load_config(resolve_config_path(args.config))
    if args.max_iter is not None:
        if args.max_iter < 1:
            raise ConfigError("--max-iter must be >= 1")
        cfg.max_iterations = args.max_iter
    registry = load_tool_registry(args.registry)
    llm = build_gateway(cfg)
    result = run_pipeline(
        args.input,
        args.output,
        cfg,
        registry,
        llm,
        user_input=_read_user_input(args.user_input),
        user_input_provider=_stdin_provider if args.interactive else None,
        kb_root=args.kb,
        wall_limit_seconds=args.wall_limit,
    )
    outcome = result.outcome
    print(f"tool: {result.perception.context.selected_tool.name}")
    print(f"success: {outcome.success}")
    print(f"iterations: {outcome.iterations_used}")
    print(f"results: {outcome.results_path or '-'}")
    print(f"llm calls: {llm.usage.calls}, tokens in/out: {llm.usage.input_tokens}/{llm.usage.output_tokens}")
    return EXIT_OK if outcome.success else EXIT_EXHAUSTED


def cmd_perceive(args: argparse.Namespace) -> int:
    from .perception import perceive
    from .pipeline import build_gateway, render_context
    from .sandbox import prepare_workspace

    cfg = load_config(resolve_config_path(args.config))
    registry = load_tool_registry(args.registry)
    llm = build_gateway(cfg)
    scratch = prepare_workspace(args.scratch or Path(args.input).resolve().parent / ".perception")
    result = perceive(args.input, llm, registry, cfg, scratch)
    print(render_context(result.context))
    return EXIT_OK


def cmd_build_kb(args: argparse.Namespace) -> int:
    from .pipeline import build_gateway
    from .semantic import build_knowledge_base

    cfg = load_config(resolve_config_path(args.config))
    llm = build_gateway(cfg)
    written = build_knowledge_base(args.src, args.tool, args.out, llm, cfg)
    for path in written:
        print(path)
    print(f"{len(written)} documents written", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    from .evaluation.metrics import summary_table
    from .evaluation.records import MAAB_AGENTS, REFERENCE_AGENT, load_dataset_directions, load_run_records
    from .evaluation.report import render_text_table, write_report

    directions = load_dataset_directions(args.datasets)
    records = load_run_records(args.fixtures, directions)
    present = {r.agent for r in records}
    agents = args.agents.split(",") if args.agents else [a for a in MAAB_AGENTS if a in present]
    if not agents:
        agents = sorted(present)
    reference = args.reference or (REFERENCE_AGENT if REFERENCE_AGENT in present else agents[0])
    rows = summary_table(
        records, agents, reference, invalid_policy=args.invalid_policy, decimals=args.rank_decimals
    )
    print(render_text_table(rows))
    if args.report:
        for path in write_report(rows, args.report):
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    from .evaluation.scoring import DatasetMetadata, FormatError, UnsupportedMetricError, score_predictions

    try:
        meta = DatasetMetadata.from_json(args.meta)
        value = score_predictions(args.results, args.truth, meta)
    except (FormatError, UnsupportedMetricError, ValueError) as exc:
        print(f"evaluation failed: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    print(f"{meta.metric_name},{value:.6g}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for an exhausted loop
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="automl-agent", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML config (defaults to $MLZERO_CONFIG, then built-in defaults)")

    run = sub.add_parser("run", help="perceive a data folder and iterate on a solution")
    run.add_argument("--input", required=True, help="data folder")
    run.add_argument("--output", required=True, help="working/output folder")
    common(run)
    run.add_argument("--user-input", help="file with optional instructions")
    run.add_argument("--max-iter", type=int, help="override max_iterations")
    run.add_argument("--kb", help="knowledge-base root (kb/<tool>/<doc>.md)")
    run.add_argument("--registry", help="tool registry JSON (defaults to the shipped one)")
    run.add_argument("--wall-limit", type=float, help="overall time budget in seconds")
    run.add_argument("--interactive", action="store_true", help="prompt for instructions every iteration")
    run.set_defaults(func=cmd_run)

    perceive = sub.add_parser("perceive", help="print the perception context for a data folder")
    perceive.add_argument("--input", required=True)
    perceive.add_argument("--scratch", help="folder for reader scripts")
    perceive.add_argument("--registry")
    common(perceive)
    perceive.set_defaults(func=cmd_perceive)

    kb = sub.add_parser("build-kb", help="condense and summarize tutorials into a knowledge base")
    kb.add_argument("--tool", required=True)
    kb.add_argument("--src", required=True)
    kb.add_argument("--out", required=True)
    common(kb)
    kb.set_defaults(func=cmd_build_kb)

    ev = sub.add_parser("evaluate", help="success / average rank / relative time from run records")
    ev.add_argument("--fixtures", help="run-record CSV (defaults to the shipped benchmark tables)")
    ev.add_argument("--datasets", help="CSV of dataset,metric,higher_is_better")
    ev.add_argument("--report", help="folder for summary.csv and figures")
    ev.add_argument("--agents", help="comma-separated agent list")
    ev.add_argument("--reference", help="reference agent for relative time")
    ev.add_argument("--invalid-policy", choices=["tie_average", "worst"], default="tie_average")
    ev.add_argument("--rank-decimals", type=int, default=2, help="round mean scores before ranking")
    ev.set_defaults(func=cmd_evaluate)

    score = sub.add_parser("score", help="score a results file against ground truth")
    score.add_argument("--results", required=True)
    score.add_argument("--truth", required=True)
    score.add_argument("--meta", required=True, help="metadata.json")
    score.set_defaults(func=cmd_score)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # surface a one-line error and a nonzero code to scripts
        log.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
