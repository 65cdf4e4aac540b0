"""Command-line surface over one run directory.

  init <brief>           brief (file path or text) → snapshot 0
  generate               storygen cycles from the last committed chapter
  write --genre G        prose for every committed chapter, then export
  evaluate               score a chapter directory, report file next to it
  export                 re-export written texts as chapter files
  inspect chapter N      snapshot summary
  inspect character ID   limited view of one character
  inspect usage          token usage by stage and chapter

Exit codes: 0 on success, 1 on an engine error (one line on stderr:
`error: <ExceptionName>: <message>`), 2 on a usage error.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

from . import storage
from .agents import Agents
from .hnes import report_path, run_hnes
from .llm import Gateway, LLMError, create_backend
from .pipeline import (
    GenreSpec,
    NonEmptyPrototype,
    export_story,
    extract_config,
    materialize,
    run_story,
    write_story,
)
from .prototype import (
    StoryPrototype,
    UnknownCharacter,
    describe_view,
    get_snapshot,
    limited_view,
    summarize_snapshot,
)
from .templates import load_templates

logger = logging.getLogger(__name__)

DEFAULT_RUN_DIR = Path("run")


# ── Setup ────────────────────────────────────────────────


def build_agents(config: storage.RunConfig) -> Agents:
    backend = create_backend(config.backend, storage.run_dir())
    gateway = Gateway(
        backend,
        retries=config.backend.retries,
        backoff_s=config.backend.backoff_s,
        transcript=config.transcript_path,
        temperatures=config.temperatures,
        max_tokens=config.max_tokens,
        concurrency=config.concurrency,
    )
    return Agents(gateway, load_templates(config.prompts, storage.run_dir()))


def _load_config(args: argparse.Namespace) -> storage.RunConfig:
    return storage.load_config(args.config)


def _genre(config: storage.RunConfig, name: str | None) -> GenreSpec:
    if not name:
        return config.genre
    return GenreSpec(genre=name, style_notes=config.genre.style_notes, target_words=config.genre.target_words)


def _read_brief(value: str) -> str:
    path = Path(value)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    return value


# ── Commands ─────────────────────────────────────────────


def cmd_init(args: argparse.Namespace) -> None:
    brief = _read_brief(args.brief)
    with storage.run_lock():
        config_file = Path(args.config) if args.config else storage.config_path()
        if config_file.is_file():
            config = storage.load_config(config_file)
        else:
            config = storage.RunConfig()
            storage.save_config(config, config_file)
            logger.info(f"Wrote default configuration to {config_file}")
        if config.prototype_path.is_file():
            raise NonEmptyPrototype(f"{config.prototype_path} already holds a story")

        proto = StoryPrototype()
        setup = asyncio.run(extract_config(brief, build_agents(config)))
        materialize(setup, proto)
        storage.save_prototype(proto, config.prototype_path)

        manifest = storage.new_manifest(config)
        storage.advance_stage(manifest, 0, storage.Stage.generated)
        storage.save_manifest(manifest)
    print(f"Initialized '{proto.meta.title}' with {len(proto.characters)} characters")


def cmd_generate(args: argparse.Namespace) -> None:
    config = _load_config(args)
    with storage.run_lock():
        manifest = storage.load_manifest()
        proto = storage.load_prototype(config.prototype_path)
        storage.reconcile(manifest, proto.head_chapter)
        continuation = storage.resume_run(manifest, config, force=args.force)
        if continuation.finished:
            storage.save_manifest(manifest)
            reason = manifest.exit_reason or "max_chapters"
            print(f"Nothing to generate: finished at chapter {proto.head_chapter} ({reason})")
            return

        def persist(p: StoryPrototype, chapter: int) -> None:
            storage.save_prototype(p, config.prototype_path)
            storage.advance_stage(manifest, chapter, storage.Stage.generated)
            storage.save_manifest(manifest)

        logger.info(f"Generating from chapter {continuation.next_chapter}")
        summary = asyncio.run(
            run_story(proto, config.generation_settings(), build_agents(config), on_commit=persist)
        )
        manifest.exit_reason = summary.exit_reason
        storage.save_manifest(manifest)
    print(
        f"Generated {summary.chapters_produced} chapters; head chapter {summary.head_chapter} "
        f"({summary.exit_reason})"
    )


def cmd_write(args: argparse.Namespace) -> None:
    config = _load_config(args)
    genre = _genre(config, args.genre)
    with storage.run_lock():
        manifest = storage.load_manifest()
        proto = storage.load_prototype(config.prototype_path)
        texts = storage.load_texts(genre.genre)
        pending = [n for n in range(1, proto.head_chapter + 1) if args.force or n not in texts]
        if pending:
            written = asyncio.run(write_story(
                proto,
                pending,
                genre,
                build_agents(config),
                window=config.window,
                lookahead=config.lookahead,
                planned=config.planned(),
            ))
            for text in written:
                texts[text.chapter] = text
            storage.save_texts(genre.genre, texts)

        exported = export_story(list(texts.values()), config.chapters_dir(genre.genre), genre.label)
        for chapter in texts:
            if manifest.stages.get(chapter, storage.Stage.generated) < storage.Stage.written:
                storage.advance_stage(manifest, chapter, storage.Stage.written)
        storage.save_manifest(manifest)
    print(
        f"Wrote {len(pending)} chapters; exported {exported.total_chapters} "
        f"({exported.total_words} words) to {config.chapters_dir(genre.genre)}"
    )


def _mark_evaluated(chapters: list[int]) -> None:
    """Record evaluated chapters in the manifest, unless another command owns the run."""
    if not storage.manifest_path().is_file():
        return
    try:
        with storage.run_lock():
            manifest = storage.load_manifest()
            for chapter in chapters:
                if manifest.stages.get(chapter) == storage.Stage.written:
                    storage.advance_stage(manifest, chapter, storage.Stage.evaluated)
            storage.save_manifest(manifest)
    except storage.RunLocked:
        logger.warning("Run directory is locked; evaluated stages not recorded")


def cmd_evaluate(args: argparse.Namespace) -> None:
    config = _load_config(args)
    genre = _genre(config, args.genre)
    chap_dir = Path(args.chapters_dir) if args.chapters_dir else config.chapters_dir(genre.genre)
    report = asyncio.run(run_hnes(
        chap_dir,
        build_agents(config),
        interval=args.interval or config.evaluation.interval,
        start_idx=args.start_idx,
        end_idx=args.end_idx,
        c_baseline=args.c_baseline or config.evaluation.c_baseline,
        human_scores_file=args.human_scores,
    ))
    if not args.chapters_dir:
        _mark_evaluated([r.index for r in report.records if r.scored])
    print(f"S_q {report.s_q:.2f}  S_l {report.s_l:.2f}  QLS {report.qls:.2f}  → {report_path(chap_dir)}")


def cmd_export(args: argparse.Namespace) -> None:
    config = _load_config(args)
    genre = _genre(config, args.genre)
    with storage.run_lock():
        texts = storage.load_texts(genre.genre)
        if not texts:
            raise storage.StorageError(f"No written {genre.genre} chapters; run write first")
        out = Path(args.out) if args.out else config.chapters_dir(genre.genre)
        exported = export_story(list(texts.values()), out, genre.label)
    print(f"Exported {exported.total_chapters} chapters ({exported.total_words} words) to {out}")


def cmd_inspect(args: argparse.Namespace) -> None:
    config = _load_config(args)
    if args.what == "usage":
        _print_usage(storage.usage_summary(config.transcript_path, args.price or config.price_per_1k_tokens))
        return

    proto = storage.load_prototype(config.prototype_path)
    if args.what == "chapter":
        number = int(args.target)
        print(summarize_snapshot(get_snapshot(proto, number), number))
        return

    char = proto.character(args.target) or proto.character_by_name(args.target)
    if char is None:
        raise UnknownCharacter(f"Unknown character: {args.target}")
    chapter = proto.head_chapter if args.chapter is None else args.chapter
    print(describe_view(limited_view(proto, char.id, chapter), config.view_event_limit))


def _print_usage(summary: storage.UsageSummary) -> None:
    print(f"{'':12} {'calls':>7} {'prompt':>10} {'completion':>11} {'minutes':>8}")
    for stage, count in sorted(summary.by_stage.items()):
        print(f"{stage:12} {count.calls:>7} {count.prompt:>10} {count.completion:>11} {count.minutes:>8.2f}")
    total = summary.total
    print(f"{'total':12} {total.calls:>7} {total.prompt:>10} {total.completion:>11} {total.minutes:>8.2f}")
    if summary.by_chapter:
        print()
        for chapter, count in sorted(summary.by_chapter.items()):
            print(f"chapter {chapter:<4} {count.calls:>7} {count.prompt:>10} {count.completion:>11} {count.minutes:>8.2f}")
    if summary.per_chapter:
        print(f"\n{'per chapter':12} {'chapters':>8} {'USD':>10} {'minutes':>8}")
        for stage in (*storage.PER_CHAPTER_STAGES, storage.PER_CHAPTER_ALL):
            cost = summary.per_chapter.get(stage)
            if cost is None:
                continue
            usd = "-" if cost.usd is None else f"{cost.usd:.4f}"
            print(f"{stage:12} {cost.chapters:>8} {usd:>10} {cost.minutes:>8.2f}")


# ── Parser ───────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storyengine", description="Story Prototype engine")
    parser.add_argument("--run-dir", type=Path, default=DEFAULT_RUN_DIR,
                        help="Run directory (default: ./run)")
    parser.add_argument("--config", type=Path, default=None,
                        help="Run configuration file (default: <run-dir>/config.json)")
    level = parser.add_mutually_exclusive_group()
    level.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    level.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="Build snapshot 0 from a story brief")
    p.add_argument("brief", help="Brief text, or a path to a file holding it")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("generate", help="Run storygen cycles until an exit condition holds")
    p.add_argument("--force", action="store_true", help="Continue even if the configuration changed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("write", help="Write committed chapters as genre text and export them")
    p.add_argument("--genre", default=None, help="novel, screenplay or other:<name> (default: from config)")
    p.add_argument("--force", action="store_true", help="Rewrite chapters that already have text")
    p.set_defaults(func=cmd_write)

    p = sub.add_parser("evaluate", help="Score a chapter directory chapter by chapter and per interval")
    p.add_argument("--genre", default=None, help="Evaluate this genre's exported chapters")
    p.add_argument("--chapters-dir", type=Path, default=None, help="Evaluate any directory of chapter files")
    p.add_argument("--interval", type=int, default=None, help="Chapters per global evaluation (default 10)")
    p.add_argument("--start-idx", type=int, default=None, help="First chapter number to include")
    p.add_argument("--end-idx", type=int, default=None, help="Last chapter number to include")
    p.add_argument("--c-baseline", type=int, default=None, help="Chapter-count baseline for S_l (default 10)")
    p.add_argument("--human-scores", type=Path, default=None, help="JSON array of per-rater dimension scores")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export", help="Write chapter files from stored texts")
    p.add_argument("--genre", default=None)
    p.add_argument("--out", type=Path, default=None, help="Output directory (default: <run-dir>/chapters/<genre>)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("inspect", help="Read-only prototype and transcript queries")
    p.add_argument("what", choices=["chapter", "character", "usage"])
    p.add_argument("target", nargs="?", default=None, help="Chapter number or character id/name")
    p.add_argument("--chapter", type=int, default=None, help="Snapshot for a character view (default: head)")
    p.add_argument("--price", type=float, default=None, help="Price per 1000 tokens for the USD per chapter column")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    if args.command == "inspect" and args.what != "usage" and args.target is None:
        parser.print_usage(sys.stderr)
        print(f"storyengine inspect: error: {args.what} needs a target", file=sys.stderr)
        return 2

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    storage.init_storage(args.run_dir)
    load_dotenv(args.run_dir / ".env")
    try:
        args.func(args)
    except (ValueError, LLMError, OSError) as e:
        message = " ".join(str(e).split())
        print(f"error: {type(e).__name__}: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
